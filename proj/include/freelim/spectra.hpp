#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace freelim {

// Exact Catalan number C_n = binom(2n, n)/(n+1). Throws std::overflow_error
// once the value leaves the 64-bit range (n > 35).
std::uint64_t catalan(int n);

enum class LawKind {
    semicircle,
    quarter_circle,
    full_circle,
    marchenko_pastur,
    haar_circle,
    inverse_semicircle,
    ginibre_product,
    custom,
};

std::string law_kind_name(LawKind kind);

struct Atom {
    double location;
    double mass;
};

struct Interval {
    double lo;
    double hi;
};

// Asymptotic spectral law: continuous density on support intervals plus point
// masses. Real-line laws evaluate density(x); planar (complex-eigenvalue) laws
// evaluate density(z) and expose the pdf/cdf of |z| instead of a real CDF.
class SpectralLaw {
public:
    static SpectralLaw semicircle();
    static SpectralLaw quarter_circle();
    static SpectralLaw full_circle();
    static SpectralLaw marchenko_pastur(double beta);
    static SpectralLaw haar_circle();
    static SpectralLaw inverse_semicircle();
    static SpectralLaw ginibre_product(int factors);
    static SpectralLaw point_mass(double location);
    static SpectralLaw from_atoms(std::vector<Atom> atoms);
    static SpectralLaw binary_symmetric();  // (delta_{-1} + delta_{+1})/2
    static SpectralLaw custom(std::vector<Interval> support,
                              std::function<double(double)> density,
                              std::vector<Atom> atoms = {});

    // Law of alpha * X for alpha > 0 (kind becomes custom unless discrete).
    SpectralLaw scaled(double alpha) const;

    LawKind kind() const { return kind_; }
    double beta() const { return beta_; }
    int factors() const { return factors_; }
    bool planar() const { return planar_; }
    const std::vector<Interval>& support() const { return support_; }
    const std::vector<Atom>& atoms() const { return atoms_; }

    // Continuous density; atoms are never folded in. Real laws only.
    double density(double x) const;
    // Planar density at a complex point; real laws only accept real z.
    double density(std::complex<double> z) const;
    // pdf of |z| for planar laws.
    double radial_density(double r) const;

    // k-th moment (k >= 1), closed-form. For planar laws this is E|z|^k.
    double moment(int k) const;
    double mean() const { return moment_or_zero(1); }

    // Integral of the continuous density plus atom masses (quadrature; ~1e-12).
    double total_mass() const;
    // P(X <= x) for real laws: continuous part by quadrature plus atoms.
    double cdf(double x) const;
    // P(|z| <= r) for planar laws.
    double radial_cdf(double r) const;

    std::string descriptor_json() const;

private:
    SpectralLaw() = default;
    double moment_or_zero(int k) const;
    void build_cdf_table() const;

    LawKind kind_ = LawKind::custom;
    bool planar_ = false;
    double beta_ = 0.0;
    int factors_ = 0;
    std::vector<Interval> support_;
    std::vector<Atom> atoms_;
    std::function<double(double)> density_;         // real laws
    std::function<double(double)> radial_density_;  // planar laws, pdf of |z|

    // lazily built monotone table for cdf queries
    mutable std::vector<double> cdf_x_, cdf_v_;
};

struct MomentSequence {
    std::vector<double> values;  // values[i] is m_{i+1}

    double m(int k) const { return values.at(static_cast<std::size_t>(k) - 1); }
    int max_order() const { return static_cast<int>(values.size()); }
};

// Moment-problem consistency: the Hankel matrices [m_{i+j}] (with m_0 = 1)
// must be positive semidefinite for a law on the real line.
bool hankel_psd(const MomentSequence& moments, double tol = 1e-9);

MomentSequence law_moments(const SpectralLaw& law, int k_max);

}  // namespace freelim
