#pragma once

#include "freelim/free_calc.hpp"
#include "freelim/spectra.hpp"

#include <optional>
#include <vector>

namespace freelim {

// Macroscopic order parameters of the replica-symmetric saddle point.
struct ReplicaState {
    double E = 0.0, F = 0.0, G = 0.0, G0 = 0.0;
    double m = 0.0, q = 0.0, p = 0.0, p0 = 0.0;
    double free_energy = 0.0;  // per user, nats
    bool converged = false;
    double residual = 0.0;
};

struct ReplicaProblem {
    enum class Prior { gaussian, binary_uniform, custom };

    double beta = 1.0;       // load K/N
    double sigma_sq = 1.0;   // assumed noise variance
    double sigma0_sq = 1.0;  // true noise variance
    Prior prior = Prior::gaussian;

    // custom priors: atoms plus an optional standard-Gaussian continuous part
    // with the given weight. Normalization is checked to 1e-8.
    struct ScalarPrior {
        std::vector<Atom> atoms;
        double gaussian_weight = 0.0;

        double second_moment() const;
        void check_normalized() const;
    };
    ScalarPrior true_prior;
    ScalarPrior assumed_prior;

    static ReplicaProblem gaussian(double beta, double sigma_sq, double sigma0_sq);
    static ReplicaProblem binary(double beta, double sigma_sq, double sigma0_sq);
    static ReplicaProblem custom(double beta, double sigma_sq, double sigma0_sq,
                                 ScalarPrior true_p, ScalarPrior assumed_p);
};

// Gaussian-prior RS fixed point (also covers binary-true/Gaussian-assumed,
// i.e. linear MMSE detection). Damped alternating iteration on (E, F).
ReplicaState rs_fixed_point_gaussian(const ReplicaProblem& prob,
                                     const FixedPointConfig& cfg = {});

// Binary-prior RS fixed points; all solutions found by multi-start, deduped by
// E, each carrying its free energy. Order: ascending E.
std::vector<ReplicaState> rs_fixed_point_binary(const ReplicaProblem& prob,
                                                const FixedPointConfig& cfg = {});

// Arbitrary true/assumed scalar priors by nested quadrature.
ReplicaState rs_fixed_point_arbitrary(const ReplicaProblem& prob,
                                      const FixedPointConfig& cfg = {});

// I/K = F/K - 1/(2 beta), nats per user.
double mutual_information_per_user(const ReplicaState& state, double beta);

// P(error) = Q(sqrt(E)) for the binary-prior detector.
double ber_from_state(const ReplicaState& state);

struct SweepPoint {
    double beta = 0.0;
    std::vector<ReplicaState> branches;  // ascending E
    int selected = 0;                    // branch minimizing free energy
};

struct PhaseTransitionReport {
    std::vector<SweepPoint> points;
    std::optional<double> window_lo, window_hi;  // multi-solution interval
    std::optional<double> beta_star;             // free-energy branch switch
};

// Matched binary sweep over beta; refines the window edges and the
// thermodynamic transition by bisection between sweep points.
PhaseTransitionReport phase_transition_sweep(double sigma0_sq,
                                             const std::vector<double>& betas,
                                             const FixedPointConfig& cfg = {});

}  // namespace freelim
