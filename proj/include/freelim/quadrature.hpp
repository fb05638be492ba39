#pragma once

#include <complex>
#include <functional>
#include <vector>

namespace freelim {

// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1].
// Computed once per order and cached.
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

const GaussLegendreRule& gauss_legendre(int order);

// Nodes/weights for expectations against the standard normal measure
// Dz = exp(-z^2/2) dz / sqrt(2 pi), i.e. E f(z) ~ sum w_i f(z_i).
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

const GaussHermiteRule& gauss_hermite_probabilist(int order);

// Fixed-order Gauss-Legendre on [a, b].
double integrate_gl(const std::function<double(double)>& f, double a, double b,
                    int order = 64);
std::complex<double> integrate_gl_c(
    const std::function<std::complex<double>(double)>& f, double a, double b,
    int order = 64);

// Adaptive panel-splitting Gauss-Legendre. abs_tol is on the whole interval.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double abs_tol = 1e-12, int max_depth = 24);

// Integrates f over [a, b] where f may behave like (x-a)^(+-1/2) and
// (b-x)^(+-1/2) at the endpoints. Substitutes x = a + (b-a) sin^2(t) so both
// edge singularities become smooth in t.
double integrate_edge(const std::function<double(double)>& f, double a, double b,
                      int order = 96, int panels = 8);
std::complex<double> integrate_edge_c(
    const std::function<std::complex<double>(double)>& f, double a, double b,
    int order = 96, int panels = 8);

}  // namespace freelim
