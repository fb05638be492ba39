#pragma once

#include "freelim/spectra.hpp"
#include "freelim/transforms.hpp"

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <vector>

namespace freelim {

struct FixedPointConfig {
    double tol = 1e-10;        // successive-iterate sup norm
    double damping = 0.5;      // in (0, 1]
    int max_iter = 10000;
    std::vector<double> starts;  // optional multi-start seeds
};

// Density sampled on a grid plus point masses; the working currency of the
// convolution and solver outputs.
struct SampledDensity {
    std::vector<double> grid;
    std::vector<double> values;
    std::vector<Atom> atoms;

    double trapezoid_mass() const;
    // Rescales the continuous part so total mass is 1. Throws precision_error
    // if the deficit before rescaling exceeds 1e-3.
    void normalize();
    // Trapezoid L1 distance of the continuous parts over this grid.
    double l1_distance_to(const SpectralLaw& law) const;
    double moment(int k) const;  // trapezoid + atoms
};

// Uniform grid on [lo, hi] plus geometric refinement toward each listed edge
// (down to |x - edge| ~ 1e-9), so trapezoid masses survive 1/sqrt edge
// divergences. Result is sorted and deduplicated.
std::vector<double> refined_grid(double lo, double hi, int n_core,
                                 const std::vector<double>& edges = {},
                                 int n_edge = 96);

// Additive free convolution via R-transform summation and Stieltjes inversion.
SampledDensity add_free_convolve(const SpectralLaw& a, const SpectralLaw& b,
                                 const std::vector<double>& grid);

// Multiplicative free convolution via S-transform product.
SampledDensity mul_free_convolve(const SpectralLaw& a, const SpectralLaw& b,
                                 const std::vector<double>& grid);

// Law of n^{-1/2}(X_1 + ... + X_n) for free copies of a zero-mean unit-variance
// law, via the R-transform scaling.
SampledDensity free_clt(const SpectralLaw& law, int n, const std::vector<double>& grid);

// Closed-form density of the n-fold normalized free sum of symmetric binary
// variables; support |x| < 2 sqrt(1 - 1/n).
double free_clt_binary_density(int n, double x);

// G_P(s) for P = H H' X: Silverstein's equation solved by damped fixed point;
// H is N x (beta N) with variance 1/N entries, X has law p_x. The returned
// transform is normalized over the N-side (matches (1/N) tr (H H' X - sI)^{-1}).
cplx silverstein_product(const SpectralLaw& p_x, double beta, cplx s,
                         const FixedPointConfig& cfg = {});

// G_S(s) for S = X + H Y H' (Silverstein-Bai).
cplx silverstein_bai_sum(const std::function<cplx(cplx)>& G_x, const SpectralLaw& p_y,
                         double beta, cplx s, const FixedPointConfig& cfg = {});

struct VarianceProfile {
    std::function<double(double, double)> w;  // on [0,1] x [0,beta]
    double beta = 1.0;
    int grid_x = 64;
    int grid_y = 64;
};

struct GirkoSolution {
    std::vector<double> x_nodes;
    std::vector<cplx> u;
    cplx G;
};

// Girko's coupled fixed point for variance-profiled matrices, midpoint
// discretization, damped iteration on the nonnegative-imaginary branch.
GirkoSolution girko_profile_solve(const VarianceProfile& profile, cplx s,
                                  const FixedPointConfig& cfg = {});

// Resource-pooling fixed point for Kronecker-column ensembles.
cplx kronecker_pooling(const SpectralLaw& p_y, double beta, int antennas, cplx s,
                       const FixedPointConfig& cfg = {});

// S-transform of a chain product C_N = (M_N ... M_1)(M_N ... M_1)':
// S(z) = prod_n rho_n / (z + rho_{n-1}); rho has entries rho_0..rho_N, rho_N = 1.
cplx product_chain_s(const std::vector<double>& rho, cplx z);

// Stieltjes transform of the chain law from the degree-(N+1) polynomial in G;
// the branch is selected by homotopy in s from the -1/s asymptote.
cplx product_chain_stieltjes(const std::vector<double>& rho, cplx s);

// Free log-MGF (Harish-Chandra / Itzykson-Zuber) value
// sum_k int_0^{lambda_k} R_J(w) dw for the nonzero eigenvalues of Q.
double free_log_mgf(const std::vector<double>& q_eigs,
                    const std::function<double(double)>& r_j);

// Operator-valued fixed point z G1 = I_a + eta1((I_b - eta2(G1))^{-1}).
// tau is indexed tau[((i*b + k)*a + j)*b + l] for tau(i,k;j,l).
struct OperatorValuedResult {
    Eigen::MatrixXcd G1;  // the theorem's object, z G1 -> I at infinity
    // normalized trace of G1 converted to the int dP/(x - s) convention used
    // everywhere else (Im G >= 0 on the upper half plane)
    cplx G;
};

OperatorValuedResult operator_valued_mimo(const std::vector<double>& tau, int a, int b,
                                          cplx z, const FixedPointConfig& cfg = {});

double& tau_at(std::vector<double>& tau, int a, int b, int i, int k, int j, int l);
double tau_get(const std::vector<double>& tau, int a, int b, int i, int k, int j, int l);

// Density of an R-diagonal matrix at a complex point, from the S-transform of
// H H' via the radial map f(s) = 1/sqrt(S(s-1)) on [0, 1].
double rdiagonal_density(const std::function<double(double)>& s_hhd, cplx z);

}  // namespace freelim
