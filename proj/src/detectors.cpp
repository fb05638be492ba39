#include "freelim/detectors.hpp"

#include "freelim/errors.hpp"
#include "freelim/quadrature.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace freelim {

double mmse_sinr_direct(const Eigen::MatrixXd& h, int k, double power,
                        double sigma0_sq) {
    const int n = static_cast<int>(h.rows());
    const int users = static_cast<int>(h.cols());
    if (k < 0 || k >= users) throw std::out_of_range("mmse_sinr: bad user index");
    Eigen::VectorXd hk = h.col(k);
    Eigen::MatrixXd cov = sigma0_sq * Eigen::MatrixXd::Identity(n, n) +
                          power * (h * h.transpose()) -
                          power * (hk * hk.transpose());
    Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        throw std::runtime_error("mmse_sinr: interference covariance is singular");
    return power * hk.dot(ldlt.solve(hk));
}

double mmse_sinr_eigenform(const Eigen::MatrixXd& h, int k, double power,
                           double sigma0_sq) {
    const int users = static_cast<int>(h.cols());
    if (k < 0 || k >= users) throw std::out_of_range("mmse_sinr: bad user index");
    Eigen::MatrixXd hth = h.transpose() * h;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hth);
    // the k-th column of the paper's U is the k-th row of the eigenvector matrix
    Eigen::VectorXd uk = es.eigenvectors().row(k);
    double q = 0.0;
    for (int i = 0; i < users; ++i) {
        double lam = std::max(es.eigenvalues()(i), 0.0);
        // P u^2 lambda / (sigma0^2 + P lambda): zero eigenvalues drop out
        q += uk(i) * uk(i) * power * lam / (sigma0_sq + power * lam);
    }
    if (q >= 1.0) throw std::runtime_error("mmse_sinr: eigenform denominator vanished");
    return 1.0 / (1.0 - q) - 1.0;
}

double mmse_sinr_finite(const Eigen::MatrixXd& h, int k, double power,
                        double sigma0_sq) {
    double direct = mmse_sinr_direct(h, k, power, sigma0_sq);
    double eigen = mmse_sinr_eigenform(h, k, power, sigma0_sq);
    if (std::abs(direct - eigen) > 1e-8 * std::max(1.0, std::abs(direct)))
        throw precision_error("mmse_sinr: direct and eigen forms disagree by " +
                              std::to_string(std::abs(direct - eigen)));
    return direct;
}

double mmse_sinr_asymptotic_equal_power(double beta, double power, double sigma0_sq) {
    if (power <= 0.0 || sigma0_sq <= 0.0 || beta < 0.0)
        throw std::domain_error("mmse_sinr_asymptotic: parameters must be positive");
    double a = (1.0 - beta) * power / (2.0 * sigma0_sq);
    return a - 0.5 +
           std::sqrt(a * a + (1.0 + beta) * power / (2.0 * sigma0_sq) + 0.25);
}

double tse_hanly_eta(const ChannelParams& params, const FixedPointConfig& cfg) {
    const auto& dist = params.power_dist;
    auto interference = [&](double eta) {
        double acc = 0.0;
        for (const auto& a : dist.atoms())
            acc += a.mass * a.location / (1.0 + a.location * eta);
        for (const auto& iv : dist.support()) {
            acc += integrate_edge(
                [&](double p) { return dist.density(p) * p / (1.0 + p * eta); },
                iv.lo, iv.hi, 64, 8);
        }
        return acc;
    };
    double eta = 1.0 / params.sigma0_sq;
    for (int it = 0; it < cfg.max_iter; ++it) {
        double next = 1.0 / (params.sigma0_sq + params.beta * interference(eta));
        double mixed = cfg.damping * next + (1.0 - cfg.damping) * eta;
        double err = std::abs(mixed - eta);
        eta = mixed;
        if (err < cfg.tol) break;
    }
    return eta;
}

double gauss_seidel_alpha_bound(double beta, double power, double sigma0_sq) {
    double edge = 1.0 + std::sqrt(beta);
    return 2.0 / (sigma0_sq + power * edge * edge);
}

Eigen::MatrixXd gauss_seidel_inverse(const Eigen::MatrixXd& x, double alpha,
                                     int iters) {
    const int n = static_cast<int>(x.rows());
    Eigen::MatrixXd s = alpha * Eigen::MatrixXd::Identity(n, n);
    double best = std::numeric_limits<double>::infinity();
    for (int it = 0; it < iters; ++it) {
        Eigen::MatrixXd resid = Eigen::MatrixXd::Identity(n, n) - x * s;
        double r = resid.norm();
        best = std::min(best, r);
        if (r > 10.0 * best && r > 1.0)
            throw solver_error("gauss_seidel_inverse: divergence detected", r);
        s += alpha * resid;
    }
    return s;
}

namespace {

using MatrixXld = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using VectorXld = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

std::vector<double> solve_yule_walker(const VectorXld& m_ld, double sigma0_sq,
                                      int degree) {
    const int d1 = degree + 1;
    auto m = [&](int k) { return m_ld(k - 1); };
    MatrixXld a(d1, d1);
    VectorXld b(d1);
    for (int r = 1; r <= d1; ++r) {
        b(r - 1) = m(r);
        for (int c = 1; c <= d1; ++c)
            a(r - 1, c - 1) = m(r + c) + (long double)sigma0_sq * m(r + c - 1);
    }
    Eigen::PartialPivLU<MatrixXld> lu(a);
    VectorXld w = lu.solve(b);
    if ((double)(a * w - b).norm() > 1e-6 * std::max(1.0, (double)b.norm()))
        throw solver_error("pe_weights: Yule-Walker system is singular",
                           (double)(a * w - b).norm());
    std::vector<double> out(static_cast<std::size_t>(d1));
    for (int i = 0; i < d1; ++i) out[static_cast<std::size_t>(i)] = (double)w(i);
    return out;
}

}  // namespace

std::vector<double> pe_weights(const MomentSequence& moments, double sigma0_sq,
                               int degree) {
    if (moments.max_order() < 2 * degree + 2)
        throw std::invalid_argument("pe_weights: need moments up to 2D+2");
    VectorXld m(moments.max_order());
    for (int k = 1; k <= moments.max_order(); ++k) m(k - 1) = moments.m(k);
    return solve_yule_walker(m, sigma0_sq, degree);
}

std::vector<double> pe_weights_from_gram(const Eigen::MatrixXd& gram,
                                         double sigma0_sq, int degree) {
    const int k = static_cast<int>(gram.rows());
    MatrixXld r = gram.cast<long double>();
    MatrixXld p = MatrixXld::Identity(k, k);
    VectorXld m(2 * degree + 2);
    for (int kk = 1; kk <= 2 * degree + 2; ++kk) {
        p = p * r;
        m(kk - 1) = p.trace() / k;
    }
    return solve_yule_walker(m, sigma0_sq, degree);
}

double pe_sinr_recursion(double beta, double power, double sigma0_sq, int degree) {
    if (degree < 1) throw std::domain_error("pe_sinr_recursion: D >= 1");
    double sinr = 0.0;
    for (int d = 1; d <= degree; ++d)
        sinr = power / (sigma0_sq + beta * power / (1.0 + sinr));
    return sinr;
}

double capacity_per_dim(const SpectralLaw& law, double power, double sigma0_sq) {
    if (power <= 0.0 || sigma0_sq <= 0.0)
        throw std::domain_error("capacity_per_dim: P and sigma0^2 must be positive");
    double snr = power / sigma0_sq;
    double acc = 0.0;
    for (const auto& a : law.atoms()) {
        if (a.location < 0.0)
            throw std::domain_error("capacity_per_dim: law must live on lambda >= 0");
        acc += a.mass * std::log1p(snr * a.location);
    }
    for (const auto& iv : law.support()) {
        if (iv.lo < -1e-12)
            throw std::domain_error("capacity_per_dim: law must live on lambda >= 0");
        acc += integrate_edge(
            [&](double x) { return law.density(x) * std::log1p(snr * x); }, iv.lo,
            iv.hi, 96, 8);
    }
    return acc;
}

double bsc_capacity(double crossover) {
    if (crossover < 0.0 || crossover > 1.0)
        throw std::domain_error("bsc_capacity: crossover must be in [0, 1]");
    auto term = [](double p) { return p > 0.0 ? p * std::log2(p) : 0.0; };
    return 1.0 + term(crossover) + term(1.0 - crossover);
}

Eigen::VectorXd mpm_bruteforce(const Eigen::MatrixXd& h, const Eigen::VectorXd& y,
                               double sigma, double prior_plus) {
    const int users = static_cast<int>(h.cols());
    if (users > 16)
        throw std::length_error("mpm_bruteforce: enumeration over 2^K capped at K=16");
    if (sigma <= 0.0) throw std::domain_error("mpm_bruteforce: sigma must be positive");
    const double log_p = std::log(prior_plus), log_q = std::log1p(-prior_plus);

    const std::uint32_t total = 1u << users;
    std::vector<double> logw(total);
    double max_logw = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd x(users);
    for (std::uint32_t mask = 0; mask < total; ++mask) {
        double prior = 0.0;
        for (int k = 0; k < users; ++k) {
            bool plus = mask & (1u << k);
            x(k) = plus ? 1.0 : -1.0;
            prior += plus ? log_p : log_q;
        }
        double dist = (y - h * x).squaredNorm();
        logw[mask] = -dist / (2.0 * sigma * sigma) + prior;
        max_logw = std::max(max_logw, logw[mask]);
    }
    Eigen::VectorXd decisions(users);
    for (int k = 0; k < users; ++k) {
        double plus = 0.0, minus = 0.0;
        for (std::uint32_t mask = 0; mask < total; ++mask) {
            double w = std::exp(logw[mask] - max_logw);
            if (mask & (1u << k))
                plus += w;
            else
                minus += w;
        }
        decisions(k) = plus >= minus ? 1.0 : -1.0;
    }
    return decisions;
}

}  // namespace freelim
