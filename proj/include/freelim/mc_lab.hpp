#pragma once

#include "freelim/spectra.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

namespace freelim {

// Matrix ensemble descriptor. Variance normalization is exactly 1/N (rows)
// throughout, matching the asymptotic-law preconditions.
struct EnsembleSpec {
    enum class Kind {
        iid_gaussian,
        iid_pm1,
        wigner_sym,
        haar_unitary,
        variance_profile,
        product_chain,
        block_gaussian,
    };

    Kind kind = Kind::iid_gaussian;
    int rows = 0;
    int cols = 0;
    bool complex_field = true;
    std::uint64_t seed = 0;

    // variance_profile
    std::function<double(double, double)> profile;
    // product_chain: dimensions K_0..K_N (M_n is K_n x K_{n-1}, var 1/K_n)
    std::vector<int> chain_dims;
    // block_gaussian: a x b blocks of size n, covariance tau(i,k;j,l)
    int block_a = 0, block_b = 0, block_n = 0;
    std::vector<double> tau;

    static EnsembleSpec iid_gaussian(int n, int k, std::uint64_t seed,
                                     bool complex_field = true);
    static EnsembleSpec iid_pm1(int n, int k, std::uint64_t seed);
    static EnsembleSpec wigner_sym(int n, std::uint64_t seed);
    static EnsembleSpec haar_unitary(int n, std::uint64_t seed);
    static EnsembleSpec variance_profile(int n, int k,
                                         std::function<double(double, double)> w,
                                         std::uint64_t seed);
    static EnsembleSpec product_chain(std::vector<int> dims, std::uint64_t seed);
    static EnsembleSpec block_gaussian(int a, int b, int n, std::vector<double> tau,
                                       std::uint64_t seed);
};

// Reproducible draw: same spec (including seed) gives the same matrix.
Eigen::MatrixXcd sample(const EnsembleSpec& spec);

enum class SpectrumMode { eig_hermitian, singular_sq, eig_complex };

struct EmpiricalSpectrum {
    std::vector<double> values;              // sorted ascending (real modes)
    std::vector<std::complex<double>> cvalues;  // eig_complex
    int n = 0;
    bool is_complex = false;
};

EmpiricalSpectrum spectrum(const Eigen::MatrixXcd& m, SpectrumMode mode);

// sup_x |F_emp(x) - F_law(x)| for real spectra against a real-line law.
double ks_distance(const EmpiricalSpectrum& emp, const SpectralLaw& law);

// KS of |lambda| against the radial CDF of a planar law.
double radial_ks(const EmpiricalSpectrum& emp, const SpectralLaw& law);

// KS of eigenvalue phases against uniform on [0, 2 pi).
double phase_ks(const EmpiricalSpectrum& emp);

// Eigenvector law of large numbers: max_t |sum_{k <= t K} y_k^2 - t| for
// y = U x, rows of U the eigenvectors of H^T H (real iid H). The optional
// weights alpha_k generalize the statement to
// sum alpha_k y_k^2 -> lim (1/K) sum_{k <= tK} alpha_k.
double eigenvector_lln_deviation(int n, int k, const Eigen::VectorXd& x,
                                 std::uint64_t seed,
                                 const std::vector<double>& t_grid,
                                 const std::vector<double>& weights = {});

// k-th empirical moment (1/n) sum lambda^k.
double empirical_moment(const EmpiricalSpectrum& emp, int k);

}  // namespace freelim
