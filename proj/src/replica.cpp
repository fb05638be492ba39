#include "freelim/replica.hpp"

#include "freelim/errors.hpp"
#include "freelim/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace freelim {

namespace {

double q_tail(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double phi_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

// E f(z) under the standard normal measure. tanh-type integrands put poles
// pi/(2 sqrt F) off the axis, which breaks fixed Gauss-Hermite rules in the
// regime of interest; adaptive panels hold 1e-12 there.
double normal_expectation(const std::function<double(double)>& f) {
    return integrate_adaptive([&](double z) { return f(z) * phi_pdf(z); }, -13.0,
                              13.0, 1e-12, 28);
}

// E and F from the saddle equations given (m, q, p, p0).
void update_ef(const ReplicaProblem& prob, double m, double q, double p, double p0,
               double& e_out, double& f_out) {
    double denom = prob.sigma_sq + prob.beta * (p - q);
    e_out = 1.0 / denom;
    f_out = (prob.sigma0_sq + prob.beta * (p0 - 2.0 * m + q)) / (denom * denom);
}

struct BinaryMoments {
    double m, q;
};

BinaryMoments binary_moments(double e, double f) {
    double sf = std::sqrt(std::max(f, 0.0));
    double m = normal_expectation([&](double z) { return std::tanh(z * sf + e); });
    double q =
        normal_expectation([&](double z) { double t = std::tanh(z * sf + e); return t * t; });
    return {m, q};
}

double binary_logcosh_integral(double e, double f) {
    double sf = std::sqrt(std::max(f, 0.0));
    return normal_expectation([&](double z) {
        // log cosh u = |u| + log1p(exp(-2|u|)) - log 2, overflow-safe
        double a = std::abs(z * sf + e);
        return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
    });
}

double binary_free_energy(const ReplicaProblem& prob, double e, double f, double m,
                          double q) {
    // Binary specialization of the general-prior free energy. The dedicated
    // binary formula in the source carries a spurious extra -F; this form is
    // the one whose beta->0 mutual information reduces to the BPSK capacity
    // E - E_z log cosh(E + sqrt(E) z) and whose branch selection reproduces
    // the thermodynamic transition location.
    double b = prob.beta;
    double bracket = std::log1p(b * (1.0 - q) / prob.sigma_sq) + f / e +
                     b * e * (2.0 * m - 1.0) + b * f * (1.0 - q);
    return bracket / (2.0 * b) + e / 2.0 - binary_logcosh_integral(e, f);
}

double gaussian_free_energy(const ReplicaProblem& prob, double e, double f, double m,
                            double q, double p) {
    double b = prob.beta;
    double bracket = std::log1p(b * (p - q) / prob.sigma_sq) + f / e +
                     b * e * (2.0 * m - p) + b * f * (p - q);
    return bracket / (2.0 * b) + 0.5 * std::log1p(e) -
           (e * e + f) / (2.0 * (1.0 + e));
}

}  // namespace

double ReplicaProblem::ScalarPrior::second_moment() const {
    double acc = gaussian_weight;  // standard normal contributes 1
    for (const auto& a : atoms) acc += a.mass * a.location * a.location;
    return acc;
}

void ReplicaProblem::ScalarPrior::check_normalized() const {
    double mass = gaussian_weight;
    for (const auto& a : atoms) mass += a.mass;
    if (std::abs(mass - 1.0) > 1e-8)
        throw std::domain_error("ScalarPrior: mass must be 1 to 1e-8");
}

ReplicaProblem ReplicaProblem::gaussian(double beta, double sigma_sq,
                                        double sigma0_sq) {
    if (beta < 0.0 || sigma_sq <= 0.0 || sigma0_sq <= 0.0)
        throw std::domain_error("ReplicaProblem: variances must be positive");
    ReplicaProblem p;
    p.beta = beta;
    p.sigma_sq = sigma_sq;
    p.sigma0_sq = sigma0_sq;
    p.prior = Prior::gaussian;
    return p;
}

ReplicaProblem ReplicaProblem::binary(double beta, double sigma_sq, double sigma0_sq) {
    ReplicaProblem p = gaussian(beta, sigma_sq, sigma0_sq);
    p.prior = Prior::binary_uniform;
    return p;
}

ReplicaProblem ReplicaProblem::custom(double beta, double sigma_sq, double sigma0_sq,
                                      ScalarPrior true_p, ScalarPrior assumed_p) {
    ReplicaProblem p = gaussian(beta, sigma_sq, sigma0_sq);
    p.prior = Prior::custom;
    true_p.check_normalized();
    assumed_p.check_normalized();
    p.true_prior = std::move(true_p);
    p.assumed_prior = std::move(assumed_p);
    return p;
}

ReplicaState rs_fixed_point_gaussian(const ReplicaProblem& prob,
                                     const FixedPointConfig& cfg) {
    double e = 1.0 / prob.sigma_sq, f = e;
    double m = 0.0, q = 0.0, p = 1.0;
    const double p0 = 1.0;
    double err = 1.0;
    for (int it = 0; it < cfg.max_iter; ++it) {
        m = e / (1.0 + e);
        q = (e * e + f) / ((1.0 + e) * (1.0 + e));
        p = (e * e + e + f + 1.0) / ((1.0 + e) * (1.0 + e));
        double en, fn;
        update_ef(prob, m, q, p, p0, en, fn);
        double e2 = cfg.damping * en + (1.0 - cfg.damping) * e;
        double f2 = cfg.damping * fn + (1.0 - cfg.damping) * f;
        err = std::max(std::abs(e2 - e), std::abs(f2 - f));
        e = e2;
        f = f2;
        if (err < cfg.tol) break;
    }
    ReplicaState st;
    st.E = e;
    st.F = f;
    st.G = f - e;
    st.G0 = 0.0;
    st.m = e / (1.0 + e);
    st.q = (e * e + f) / ((1.0 + e) * (1.0 + e));
    st.p = (e * e + e + f + 1.0) / ((1.0 + e) * (1.0 + e));
    st.p0 = p0;
    double en, fn;
    update_ef(prob, st.m, st.q, st.p, st.p0, en, fn);
    st.residual = std::max(std::abs(en - e), std::abs(fn - f));
    st.converged = st.residual < 10.0 * cfg.tol;
    st.free_energy = gaussian_free_energy(prob, st.E, st.F, st.m, st.q, st.p);
    return st;
}

namespace {

ReplicaState binary_solve_from(const ReplicaProblem& prob, double e0,
                               const FixedPointConfig& cfg) {
    double e = e0, f = e0;
    double err = 1.0;
    for (int it = 0; it < cfg.max_iter; ++it) {
        auto mom = binary_moments(e, f);
        double en, fn;
        update_ef(prob, mom.m, mom.q, 1.0, 1.0, en, fn);
        double e2 = cfg.damping * en + (1.0 - cfg.damping) * e;
        double f2 = cfg.damping * fn + (1.0 - cfg.damping) * f;
        err = std::max(std::abs(e2 - e), std::abs(f2 - f));
        e = e2;
        f = f2;
        if (err < cfg.tol) break;
    }
    auto mom = binary_moments(e, f);

    ReplicaState st;
    st.E = e;
    st.F = f;
    st.G = f - e;
    st.G0 = 0.0;
    st.m = mom.m;
    st.q = mom.q;
    st.p = st.p0 = 1.0;
    double en, fn;
    update_ef(prob, mom.m, mom.q, 1.0, 1.0, en, fn);
    st.residual = std::max(std::abs(en - e), std::abs(fn - f));
    st.converged = st.residual < 10.0 * cfg.tol && err < cfg.tol;
    st.free_energy = binary_free_energy(prob, e, f, mom.m, mom.q);
    return st;
}

}  // namespace

namespace {

// Matched case: the Nishimori identity makes m = q hold identically on the
// F = E slice, so every solution solves the scalar equation
// E = 1/(sigma0^2 + beta (1 - q(E))). Scan + bisection finds them all,
// including the unstable middle branch that damped iteration cannot reach.
std::vector<ReplicaState> binary_matched_solutions(const ReplicaProblem& prob,
                                                   const FixedPointConfig& cfg) {
    auto resid = [&](double e) {
        auto mom = binary_moments(e, e);
        return 1.0 / (prob.sigma0_sq + prob.beta * (1.0 - mom.q)) - e;
    };
    std::vector<double> roots;
    double e_prev = 1e-3, r_prev = resid(e_prev);
    for (double e = e_prev * 1.05; e <= 2e3; e *= 1.05) {
        double r = resid(e);
        if (r * r_prev < 0.0) {
            double a = e_prev, b = e;
            double ra = r_prev;
            for (int it = 0; it < 80; ++it) {
                double mid = 0.5 * (a + b);
                double rm = resid(mid);
                if (rm * ra <= 0.0)
                    b = mid;
                else {
                    a = mid;
                    ra = rm;
                }
            }
            roots.push_back(0.5 * (a + b));
        }
        e_prev = e;
        r_prev = r;
    }
    std::vector<ReplicaState> out;
    for (double e : roots) {
        auto mom = binary_moments(e, e);
        ReplicaState st;
        st.E = st.F = e;
        st.G = 0.0;
        st.G0 = 0.0;
        st.m = mom.m;
        st.q = mom.q;
        st.p = st.p0 = 1.0;
        st.residual = std::abs(resid(e));
        st.converged = st.residual < 10.0 * std::max(cfg.tol, 1e-12) * std::max(1.0, e);
        st.free_energy = binary_free_energy(prob, e, e, mom.m, mom.q);
        out.push_back(st);
    }
    return out;
}

}  // namespace

std::vector<ReplicaState> rs_fixed_point_binary(const ReplicaProblem& prob,
                                                const FixedPointConfig& cfg) {
    if (prob.prior != ReplicaProblem::Prior::binary_uniform &&
        prob.prior != ReplicaProblem::Prior::gaussian)
        throw std::domain_error("rs_fixed_point_binary: binary prior expected");
    if (std::abs(prob.sigma_sq - prob.sigma0_sq) < 1e-14)
        return binary_matched_solutions(prob, cfg);
    std::vector<double> starts = cfg.starts;
    if (starts.empty()) {
        for (double x = 1e-3; x <= 1.001e3; x *= std::pow(10.0, 0.25))
            starts.push_back(x);
    }
    std::vector<ReplicaState> found;
    for (double s : starts) {
        ReplicaState st;
        try {
            st = binary_solve_from(prob, s, cfg);
        } catch (const precision_error&) {
            continue;
        }
        if (!st.converged) continue;
        bool dup = false;
        for (const auto& other : found)
            if (std::abs(other.E - st.E) < 1e-6 * std::max(1.0, std::abs(other.E)))
                dup = true;
        if (!dup) found.push_back(st);
    }
    std::sort(found.begin(), found.end(),
              [](const ReplicaState& a, const ReplicaState& b) { return a.E < b.E; });
    return found;
}

namespace {

// Everything under the replica integrals depends on (x, z) only through the
// effective field c = E x + sqrt(F) z, so all expectations reduce to 1-D.
// The assumed prior enters through ratios of
//   I_r(c) = int xh^r exp(c xh - E xh^2/2) dPa(xh), r = 0, 1, 2;
// atoms are sums and the standard-normal component is a closed Gaussian
// integral. Log-sum-exp keeps large fields finite.
struct InnerRatios {
    double f1, f2;   // I1/I0, I2/I0
    double log_i0;
};

InnerRatios inner_ratios(const ReplicaProblem::ScalarPrior& assumed, double e,
                         double c) {
    std::vector<double> logs, v1, v2;
    for (const auto& a : assumed.atoms) {
        double xh = a.location;
        logs.push_back(std::log(a.mass) + c * xh - 0.5 * e * xh * xh);
        v1.push_back(xh);
        v2.push_back(xh * xh);
    }
    if (assumed.gaussian_weight > 0.0) {
        double prec = 1.0 + e;
        double mu = c / prec;
        logs.push_back(std::log(assumed.gaussian_weight) + 0.5 * c * c / prec -
                       0.5 * std::log(prec));
        v1.push_back(mu);
        v2.push_back(mu * mu + 1.0 / prec);
    }
    double mx = *std::max_element(logs.begin(), logs.end());
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < logs.size(); ++i) {
        double w = std::exp(logs[i] - mx);
        s0 += w;
        s1 += w * v1[i];
        s2 += w * v2[i];
    }
    if (s0 <= 0.0 || !std::isfinite(s0))
        throw precision_error("rs_fixed_point_arbitrary: inner integral underflow");
    return {s1 / s0, s2 / s0, std::log(s0) + mx};
}

struct ArbitraryMoments {
    double m, q, p;
    double log_term;  // E_{x,z} log I0 for the free energy
};

ArbitraryMoments arbitrary_moments(const ReplicaProblem& prob, double e, double f) {
    double sf = std::sqrt(std::max(f, 0.0));
    ArbitraryMoments out{0.0, 0.0, 0.0, 0.0};
    // true-prior atoms: c = E x + sf z, z standard normal
    for (const auto& a : prob.true_prior.atoms) {
        double x = a.location;
        out.m += a.mass * x * normal_expectation([&](double z) {
            return inner_ratios(prob.assumed_prior, e, e * x + sf * z).f1;
        });
        out.q += a.mass * normal_expectation([&](double z) {
            double f1 = inner_ratios(prob.assumed_prior, e, e * x + sf * z).f1;
            return f1 * f1;
        });
        out.p += a.mass * normal_expectation([&](double z) {
            return inner_ratios(prob.assumed_prior, e, e * x + sf * z).f2;
        });
        out.log_term += a.mass * normal_expectation([&](double z) {
            return inner_ratios(prob.assumed_prior, e, e * x + sf * z).log_i0;
        });
    }
    // standard-normal true component: c is N(0, E^2 + F); E[x g(c)] reduces
    // by the Gaussian projection x = (E / Var c) c + noise
    double w = prob.true_prior.gaussian_weight;
    if (w > 0.0) {
        double var_c = e * e + f;
        double sc = std::sqrt(var_c);
        out.m += w * (e / var_c) * sc * normal_expectation([&](double u) {
            return u * inner_ratios(prob.assumed_prior, e, sc * u).f1;
        });
        out.q += w * normal_expectation([&](double u) {
            double f1 = inner_ratios(prob.assumed_prior, e, sc * u).f1;
            return f1 * f1;
        });
        out.p += w * normal_expectation([&](double u) {
            return inner_ratios(prob.assumed_prior, e, sc * u).f2;
        });
        out.log_term += w * normal_expectation([&](double u) {
            return inner_ratios(prob.assumed_prior, e, sc * u).log_i0;
        });
    }
    return out;
}

}  // namespace

ReplicaState rs_fixed_point_arbitrary(const ReplicaProblem& prob,
                                      const FixedPointConfig& cfg) {
    if (prob.prior != ReplicaProblem::Prior::custom)
        throw std::domain_error("rs_fixed_point_arbitrary: custom priors expected");
    const double p0 = prob.true_prior.second_moment();

    std::vector<double> starts = cfg.starts;
    if (starts.empty()) {
        for (double x = 1e-3; x <= 1.001e3; x *= std::pow(10.0, 0.5))
            starts.push_back(x);
    }
    ReplicaState best;
    bool have = false;
    for (double s : starts) {
        double e = s, f = s;
        double err = 1.0;
        bool failed = false;
        ArbitraryMoments mom{};
        for (int it = 0; it < cfg.max_iter; ++it) {
            try {
                mom = arbitrary_moments(prob, e, f);
            } catch (const precision_error&) {
                failed = true;
                break;
            }
            double en, fn;
            update_ef(prob, mom.m, mom.q, mom.p, p0, en, fn);
            double e2 = cfg.damping * en + (1.0 - cfg.damping) * e;
            double f2 = cfg.damping * fn + (1.0 - cfg.damping) * f;
            err = std::max(std::abs(e2 - e), std::abs(f2 - f));
            e = e2;
            f = f2;
            if (err < cfg.tol) break;
        }
        if (failed || err >= cfg.tol) continue;
        mom = arbitrary_moments(prob, e, f);
        double en, fn;
        update_ef(prob, mom.m, mom.q, mom.p, p0, en, fn);
        ReplicaState st;
        st.E = e;
        st.F = f;
        st.G = f - e;
        st.G0 = 0.0;
        st.m = mom.m;
        st.q = mom.q;
        st.p = mom.p;
        st.p0 = p0;
        st.residual = std::max(std::abs(en - e), std::abs(fn - f));
        st.converged = st.residual < 10.0 * cfg.tol;
        double bracket = std::log1p(prob.beta * (mom.p - mom.q) / prob.sigma_sq) +
                         f / e + prob.beta * e * (2.0 * mom.m - mom.p) +
                         prob.beta * f * (mom.p - mom.q);
        st.free_energy = bracket / (2.0 * prob.beta) - mom.log_term;
        if (!have || st.free_energy < best.free_energy) {
            best = st;
            have = true;
        }
    }
    if (!have) {
        ReplicaState st;
        st.converged = false;
        st.residual = std::numeric_limits<double>::infinity();
        return st;
    }
    return best;
}

double mutual_information_per_user(const ReplicaState& state, double beta) {
    if (!state.converged)
        throw solver_error("mutual_information_per_user: unconverged state",
                           state.residual);
    return state.free_energy - 1.0 / (2.0 * beta);
}

double ber_from_state(const ReplicaState& state) { return q_tail(std::sqrt(state.E)); }

namespace {

int argmin_free_energy(const std::vector<ReplicaState>& branches) {
    int best = 0;
    for (std::size_t i = 1; i < branches.size(); ++i)
        if (branches[i].free_energy < branches[static_cast<std::size_t>(best)].free_energy)
            best = static_cast<int>(i);
    return best;
}

SweepPoint solve_point(double beta, double sigma0_sq, const FixedPointConfig& cfg) {
    SweepPoint pt;
    pt.beta = beta;
    auto prob = ReplicaProblem::binary(beta, sigma0_sq, sigma0_sq);
    pt.branches = rs_fixed_point_binary(prob, cfg);
    if (!pt.branches.empty()) pt.selected = argmin_free_energy(pt.branches);
    return pt;
}

}  // namespace

PhaseTransitionReport phase_transition_sweep(double sigma0_sq,
                                             const std::vector<double>& betas,
                                             const FixedPointConfig& cfg) {
    PhaseTransitionReport rep;
    for (double b : betas) rep.points.push_back(solve_point(b, sigma0_sq, cfg));

    auto multi = [](const SweepPoint& p) { return p.branches.size() > 1; };
    auto selected_e = [](const SweepPoint& p) {
        return p.branches.empty()
                   ? 0.0
                   : p.branches[static_cast<std::size_t>(p.selected)].E;
    };

    // bisect a predicate flip between two betas
    auto bisect = [&](double lo, double hi, auto pred) {
        bool at_lo = pred(solve_point(lo, sigma0_sq, cfg));
        for (int it = 0; it < 30; ++it) {
            double mid = 0.5 * (lo + hi);
            if (pred(solve_point(mid, sigma0_sq, cfg)) == at_lo)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    };

    for (std::size_t i = 1; i < rep.points.size(); ++i) {
        const auto& prev = rep.points[i - 1];
        const auto& cur = rep.points[i];
        if (!multi(prev) && multi(cur) && !rep.window_lo)
            rep.window_lo = bisect(prev.beta, cur.beta, multi);
        if (multi(prev) && !multi(cur))
            rep.window_hi = bisect(prev.beta, cur.beta, multi);
        // thermodynamic transition: selected branch jumps in E
        if (!prev.branches.empty() && !cur.branches.empty() && !rep.beta_star) {
            double e0 = selected_e(prev), e1 = selected_e(cur);
            if (std::abs(e1 - e0) > 0.5 * std::max(e0, e1) && multi(prev) && multi(cur)) {
                double ref = 0.5 * (e0 + e1);
                rep.beta_star = bisect(prev.beta, cur.beta, [&](const SweepPoint& p) {
                    return selected_e(p) > ref;
                });
            }
        }
    }
    return rep;
}

}  // namespace freelim
