#pragma once

#include "freelim/free_calc.hpp"
#include "freelim/spectra.hpp"

#include <cstdint>
#include <vector>

namespace freelim {

struct CsProblem {
    double beta = 1.0;       // K/N
    double sigma0_sq = 0.0;  // true noise variance
    double gamma = 1.0;      // algorithm parameter
    // signal prior: atom at 0 with mass 1-rho plus Gaussian N(0, signal_var)
    double rho = 0.1;
    double signal_var = 1.0;
    // scale prior over s_j: point masses only (default s = 1)
    std::vector<Atom> scale_atoms = {{1.0, 1.0}};
};

struct CsState {
    double sigma_eff_sq = 0.0;
    double gamma_p = 0.0;
    double mse = 0.0;  // E |x - xhat|^2
    bool converged = false;
    double residual = 0.0;
};

// Hard threshold: z if |z| > sqrt(2 lambda) (strict), else 0.
double scalar_map_l0(double z, double lambda);

// Joint fixed point of the effective-noise equations; all distinct converged
// branches are returned (no selection rule is applied), ascending sigma_eff^2.
// Throws solver_error when beta Pr(|z| > sqrt(2 lambda_p)) >= 1 at every start
// (divergent gamma_p equation: phase-boundary indicator).
std::vector<CsState> l0_state_evolution(const CsProblem& prob,
                                        const FixedPointConfig& cfg = {});

enum class CoherenceRegime { subexp, transitional, proportional, superexp };

// Limiting CDF of the centered/scaled coherence statistic in each regime.
// param is alpha for transitional, c for proportional, unused otherwise.
double coherence_law_cdf(CoherenceRegime regime, double param, double y);

// Centered/scaled coherence statistic for the subexponential regime:
// N log(1 - L^2) + 4 log K - log log K.
double coherence_statistic_subexp(double coherence, int n, int k);

// Sparsity bound s < (1/4) sqrt(N / log K).
double sparsity_bound(int n, int k);

// Covariance-based coherences (largest |off-diagonal| of the normalized Gram
// matrix) of spherical-column Gaussian matrices, one sample per trial.
std::vector<double> coherence_mc(int k, int n, int trials, std::uint64_t seed);

}  // namespace freelim
