#include "freelim/cs_replica.hpp"

#include "freelim/errors.hpp"
#include "freelim/quadrature.hpp"
#include "freelim/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace freelim {

namespace {

double phi_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double phi_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

struct ThresholdStats {
    double err_sq;    // E_v |x - xhat|^2 for fixed x
    double outside;   // Pr(|z| > T) for fixed x
};

// z = x + sqrt(mu) v, xhat = z 1{|z| > T}; closed Gaussian-tail pieces.
ThresholdStats threshold_stats(double x, double mu, double t) {
    double smu = std::sqrt(mu);
    double a = (-t - x) / smu, b = (t - x) / smu;
    double p_in = phi_cdf(b) - phi_cdf(a);
    // int_a^b v^2 phi(v) dv = Phi(b) - Phi(a) + a phi(a) - b phi(b)
    double v2_in = p_in + a * phi_pdf(a) - b * phi_pdf(b);
    ThresholdStats st;
    st.err_sq = x * x * p_in + mu * (1.0 - v2_in);
    st.outside = 1.0 - p_in;
    return st;
}

struct Expectations {
    double weighted_err;  // E[s |x - xhat|^2]
    double mse;           // E[|x - xhat|^2]
    double p_outside;     // E Pr(|z| > sqrt(2 lambda_p))
};

Expectations expectations(const CsProblem& prob, double sigma_eff_sq, double gamma_p,
                          int gh_order = 61) {
    const auto& gh = gauss_hermite_probabilist(gh_order);
    Expectations out{0.0, 0.0, 0.0};
    double sx = std::sqrt(prob.signal_var);
    for (const auto& sa : prob.scale_atoms) {
        double s = sa.location, ws = sa.mass;
        if (s <= 0.0) throw std::domain_error("l0_state_evolution: scales must be > 0");
        double mu = sigma_eff_sq / s;
        double t = std::sqrt(2.0 * gamma_p / s);
        // atom of the signal prior at zero
        {
            auto st = threshold_stats(0.0, mu, t);
            double w = ws * (1.0 - prob.rho);
            out.weighted_err += w * s * st.err_sq;
            out.mse += w * st.err_sq;
            out.p_outside += w * st.outside;
        }
        // Gaussian component
        if (prob.rho > 0.0) {
            for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
                double x = sx * gh.nodes[i];
                auto st = threshold_stats(x, mu, t);
                double w = ws * prob.rho * gh.weights[i];
                out.weighted_err += w * s * st.err_sq;
                out.mse += w * st.err_sq;
                out.p_outside += w * st.outside;
            }
        }
    }
    return out;
}

}  // namespace

double scalar_map_l0(double z, double lambda) {
    if (lambda <= 0.0) throw std::domain_error("scalar_map_l0: lambda must be positive");
    return std::abs(z) > std::sqrt(2.0 * lambda) ? z : 0.0;
}

std::vector<CsState> l0_state_evolution(const CsProblem& prob,
                                        const FixedPointConfig& cfg) {
    if (prob.gamma <= 0.0) throw std::domain_error("l0_state_evolution: gamma > 0");
    if (prob.rho < 0.0 || prob.rho > 1.0)
        throw std::domain_error("l0_state_evolution: rho in [0, 1]");

    std::vector<std::pair<double, double>> starts;
    double base_sigma = std::max(prob.sigma0_sq, 1e-8);
    for (double fs : {1.0, 4.0, 16.0, 256.0})
        for (double fg : {1.0, 10.0, 100.0})
            starts.push_back({base_sigma * fs, prob.gamma * fg});

    std::vector<CsState> found;
    int divergent = 0;
    for (auto [s0, g0] : starts) {
        double sig = s0, gp = g0;
        double err = 1.0;
        bool diverged = false;
        for (int it = 0; it < cfg.max_iter; ++it) {
            auto ex = expectations(prob, sig, gp);
            if (prob.beta * ex.p_outside >= 1.0 && it > 50) {
                diverged = true;
                break;
            }
            double gp_next = prob.gamma + prob.beta * gp * ex.p_outside;
            double sig_next = prob.sigma0_sq + prob.beta * ex.weighted_err;
            double gp2 = cfg.damping * gp_next + (1.0 - cfg.damping) * gp;
            double sig2 = cfg.damping * sig_next + (1.0 - cfg.damping) * sig;
            err = std::max(std::abs(gp2 - gp) / std::max(1.0, gp),
                           std::abs(sig2 - sig) / std::max(1.0, sig));
            gp = gp2;
            sig = sig2;
            if (!std::isfinite(gp) || !std::isfinite(sig) || gp > 1e12) {
                diverged = true;
                break;
            }
            if (err < cfg.tol) break;
        }
        if (diverged) {
            ++divergent;
            continue;
        }
        if (err >= cfg.tol) continue;
        auto ex = expectations(prob, sig, gp);
        CsState st;
        st.sigma_eff_sq = sig;
        st.gamma_p = gp;
        st.mse = ex.mse;
        st.residual = std::max(
            std::abs(prob.gamma + prob.beta * gp * ex.p_outside - gp),
            std::abs(prob.sigma0_sq + prob.beta * ex.weighted_err - sig));
        st.converged = st.residual < 10.0 * cfg.tol * std::max(1.0, gp);
        if (!st.converged) continue;
        bool dup = false;
        for (const auto& other : found)
            if (std::abs(other.sigma_eff_sq - st.sigma_eff_sq) <
                    1e-6 * std::max(1.0, other.sigma_eff_sq) &&
                std::abs(other.gamma_p - st.gamma_p) <
                    1e-6 * std::max(1.0, other.gamma_p))
                dup = true;
        if (!dup) found.push_back(st);
    }
    if (found.empty()) {
        if (divergent > 0)
            throw solver_error(
                "l0_state_evolution: gamma_p equation divergent "
                "(beta Pr(|z|>threshold) >= 1, phase boundary)",
                static_cast<double>(divergent));
        throw solver_error("l0_state_evolution: no converged fixed point", 0.0);
    }
    std::sort(found.begin(), found.end(), [](const CsState& a, const CsState& b) {
        return a.sigma_eff_sq < b.sigma_eff_sq;
    });
    return found;
}

double coherence_law_cdf(CoherenceRegime regime, double param, double y) {
    const double s8p = std::sqrt(8.0 * std::numbers::pi);
    switch (regime) {
        case CoherenceRegime::subexp:
            return 1.0 - std::exp(-std::exp(y / 2.0) / s8p);
        case CoherenceRegime::transitional: {
            if (param < 0.0)
                throw std::domain_error("coherence_law_cdf: alpha must be >= 0");
            double a2 = param * param;
            return std::exp(-std::exp(-(y + 8.0 * a2) / 2.0) / s8p);
        }
        case CoherenceRegime::proportional: {
            if (param <= 0.0)
                throw std::domain_error("coherence_law_cdf: c must be > 0");
            double c = param;
            double coeff = std::sqrt(c / (2.0 * std::numbers::pi *
                                          (1.0 - std::exp(-4.0 * c))));
            return 1.0 - std::exp(-coeff * std::exp((y + 8.0 * c) / 2.0));
        }
        case CoherenceRegime::superexp:
            // printed with a sign that is not a CDF; the negative exponent is
            // the distribution-function reading
            return 1.0 - std::exp(-std::exp(y / 2.0) / std::sqrt(2.0 * std::numbers::pi));
    }
    throw std::domain_error("coherence_law_cdf: unknown regime");
}

double coherence_statistic_subexp(double coherence, int n, int k) {
    double t = std::log1p(-coherence * coherence);
    return n * t + 4.0 * std::log(static_cast<double>(k)) -
           std::log(std::log(static_cast<double>(k)));
}

double sparsity_bound(int n, int k) {
    if (k < 2) throw std::domain_error("sparsity_bound: K >= 2");
    return 0.25 * std::sqrt(static_cast<double>(n) / std::log(static_cast<double>(k)));
}

std::vector<double> coherence_mc(int k, int n, int trials, std::uint64_t seed) {
    if (k > 2000 || n > 2000)
        throw std::domain_error("coherence_mc: dimensions capped at 2000");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(trials));
    for (int t = 0; t < trials; ++t) {
        Philox rng(seed, static_cast<std::uint64_t>(t) + 1);
        Eigen::MatrixXd h(n, k);
        for (int j = 0; j < k; ++j)
            for (int i = 0; i < n; ++i) h(i, j) = rng.normal();
        for (int j = 0; j < k; ++j) h.col(j).normalize();
        Eigen::MatrixXd gram = h.transpose() * h;
        double best = 0.0;
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j) best = std::max(best, std::abs(gram(i, j)));
        out.push_back(best);
    }
    return out;
}

}  // namespace freelim
