#pragma once

#include "freelim/spectra.hpp"

#include <complex>
#include <functional>
#include <string>
#include <vector>

namespace freelim {

using cplx = std::complex<double>;

// A complex-to-complex transform of a spectral law together with its domain
// constraint and the rule that resolves multivalued points.
struct AnalyticTransform {
    enum class Kind { stieltjes, r_transform, s_transform, upsilon };
    Kind kind;
    std::function<cplx(cplx)> eval;
    std::string domain;
    std::string branch_rule;
    double validity_radius = 0.0;  // 0 means unrestricted
};

// G(s) = int dP(x)/(x - s). Closed table entry when the kind has one, else
// edge-substituted quadrature plus atom terms. Valid for Im s > 0 and for real
// s outside the support; real s inside the support is a boundary error.
cplx stieltjes_of_law(const SpectralLaw& law, cplx s);

AnalyticTransform stieltjes_transform(const SpectralLaw& law);

struct StieltjesInversion {
    std::vector<double> grid;
    std::vector<double> density;
    std::vector<unsigned char> clipped;  // negative estimates zeroed
    std::vector<Atom> detected_atoms;
};

inline std::vector<double> default_eps_schedule() {
    return {1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
}

// Richardson-extrapolated boundary values of (1/pi) Im G(x + i eps). Throws
// solver_error when the last two extrapolants disagree beyond stability_tol.
StieltjesInversion density_from_stieltjes(
    const std::function<cplx(cplx)>& G, const std::vector<double>& grid,
    std::vector<double> eps_schedule = default_eps_schedule(),
    double stability_tol = 1e-3);

// R(w) = G^{-1}(-w) - 1/w by damped Newton with homotopy continuation from
// small |w| where the asymptotic seed s = 1/w + m1 is exact.
cplx r_from_stieltjes(const std::function<cplx(cplx)>& G, cplx w,
                      int max_iter = 200);

// Y(s) = -G(1/s)/s - 1 inverted numerically; S(z) = (1+z)/z * Y^{-1}(z).
// Throws unsupported_error for mean-zero laws.
cplx s_from_stieltjes(const std::function<cplx(cplx)>& G, cplx z,
                      int max_iter = 200);

// Closed-form R/S transforms where the law kind has a table entry, numeric
// inversion otherwise.
cplx law_r_transform(const SpectralLaw& law, cplx w);
cplx law_s_transform(const SpectralLaw& law, cplx z);
cplx law_upsilon(const SpectralLaw& law, cplx s);

// |S(z) R(z S(z)) - 1|; < 1e-8 on table laws.
double r_s_duality_check(const SpectralLaw& law, cplx z);

// Solves G_{X'X} from G_{XX'}(s) = beta G_{X'X}(s) + (beta - 1)/s.
cplx xhx_from_xxh(cplx G_xxh, double beta, cplx s);

// Mean of the law a transform G describes, read off the 1/s^2 coefficient.
double mean_from_stieltjes(const std::function<cplx(cplx)>& G);

}  // namespace freelim
