#include "freelim/quadrature.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace freelim {

namespace {

// Newton iteration on Legendre polynomials; standard Golub-ish construction
// without the matrix eigenproblem (cheap and accurate to ~1e-15).
GaussLegendreRule make_gauss_legendre(int n) {
    GaussLegendreRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        // Tricomi initial guess for the i-th root of P_n.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

// Golub-Welsch on the Jacobi matrix of probabilists' Hermite polynomials:
// recurrence x He_k = He_{k+1} + k He_{k-1}, off-diagonals sqrt(k).
GaussHermiteRule make_gauss_hermite(int n) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        double b = std::sqrt(static_cast<double>(k));
        J(k, k - 1) = b;
        J(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    GaussHermiteRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = es.eigenvalues()(i);
        double v0 = es.eigenvectors()(0, i);
        rule.weights[i] = v0 * v0;  // total measure is 1
    }
    return rule;
}

std::mutex cache_mutex;

}  // namespace

const GaussLegendreRule& gauss_legendre(int order) {
    static std::map<int, GaussLegendreRule> cache;
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, make_gauss_legendre(order)).first;
    return it->second;
}

const GaussHermiteRule& gauss_hermite_probabilist(int order) {
    static std::map<int, GaussHermiteRule> cache;
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, make_gauss_hermite(order)).first;
    return it->second;
}

double integrate_gl(const std::function<double(double)>& f, double a, double b,
                    int order) {
    const auto& rule = gauss_legendre(order);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double acc = 0.0;
    for (int i = 0; i < order; ++i) acc += rule.weights[i] * f(mid + half * rule.nodes[i]);
    return acc * half;
}

std::complex<double> integrate_gl_c(
    const std::function<std::complex<double>(double)>& f, double a, double b,
    int order) {
    const auto& rule = gauss_legendre(order);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    std::complex<double> acc = 0.0;
    for (int i = 0; i < order; ++i) acc += rule.weights[i] * f(mid + half * rule.nodes[i]);
    return acc * half;
}

namespace {

double adaptive_impl(const std::function<double(double)>& f, double a, double b,
                     double tol, int depth, double whole) {
    double mid = 0.5 * (a + b);
    double left = integrate_gl(f, a, mid, 16);
    double right = integrate_gl(f, mid, b, 16);
    if (depth <= 0 || std::abs(left + right - whole) < tol) return left + right;
    return adaptive_impl(f, a, mid, tol * 0.5, depth - 1, left) +
           adaptive_impl(f, mid, b, tol * 0.5, depth - 1, right);
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double abs_tol, int max_depth) {
    double whole = integrate_gl(f, a, b, 16);
    return adaptive_impl(f, a, b, abs_tol, max_depth, whole);
}

double integrate_edge(const std::function<double(double)>& f, double a, double b,
                      int order, int panels) {
    const double len = b - a;
    if (len <= 0.0) return 0.0;
    // x = a + len sin^2 t, dx = len sin(2t) dt on t in [0, pi/2]
    auto g = [&](double t) {
        double s = std::sin(t);
        double x = a + len * s * s;
        return f(x) * len * std::sin(2.0 * t);
    };
    double acc = 0.0;
    const double h = (std::numbers::pi / 2) / panels;
    for (int p = 0; p < panels; ++p) acc += integrate_gl(g, p * h, (p + 1) * h, order);
    return acc;
}

std::complex<double> integrate_edge_c(
    const std::function<std::complex<double>(double)>& f, double a, double b,
    int order, int panels) {
    const double len = b - a;
    if (len <= 0.0) return 0.0;
    auto g = [&](double t) {
        double s = std::sin(t);
        double x = a + len * s * s;
        return f(x) * (len * std::sin(2.0 * t));
    };
    std::complex<double> acc = 0.0;
    const double h = (std::numbers::pi / 2) / panels;
    for (int p = 0; p < panels; ++p) acc += integrate_gl_c(g, p * h, (p + 1) * h, order);
    return acc;
}

}  // namespace freelim
