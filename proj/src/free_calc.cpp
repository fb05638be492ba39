#include "freelim/free_calc.hpp"

#include "freelim/errors.hpp"
#include "freelim/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace freelim {

namespace {
constexpr double kPi = std::numbers::pi;
}

double SampledDensity::trapezoid_mass() const {
    double acc = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i)
        acc += 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
    for (const auto& a : atoms) acc += a.mass;
    return acc;
}

void SampledDensity::normalize() {
    double atom_mass = 0.0;
    for (const auto& a : atoms) atom_mass += a.mass;
    double cont = trapezoid_mass() - atom_mass;
    double target = 1.0 - atom_mass;
    if (std::abs(cont - target) > 1e-3)
        throw precision_error("SampledDensity::normalize: mass deficit " +
                              std::to_string(std::abs(cont - target)));
    if (cont > 0.0)
        for (auto& v : values) v *= target / cont;
}

double SampledDensity::l1_distance_to(const SpectralLaw& law) const {
    double acc = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        double d0 = std::abs(values[i - 1] - law.density(grid[i - 1]));
        double d1 = std::abs(values[i] - law.density(grid[i]));
        acc += 0.5 * (d0 + d1) * (grid[i] - grid[i - 1]);
    }
    return acc;
}

double SampledDensity::moment(int k) const {
    double acc = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        double f0 = values[i - 1] * std::pow(grid[i - 1], k);
        double f1 = values[i] * std::pow(grid[i], k);
        acc += 0.5 * (f0 + f1) * (grid[i] - grid[i - 1]);
    }
    for (const auto& a : atoms) acc += a.mass * std::pow(a.location, k);
    return acc;
}

std::vector<double> refined_grid(double lo, double hi, int n_core,
                                 const std::vector<double>& edges, int n_edge) {
    std::vector<double> g;
    for (int i = 0; i < n_core; ++i)
        g.push_back(lo + (hi - lo) * (i + 0.5) / n_core);
    for (double e : edges) {
        // geometric ladder on both sides of the edge, 1e-1 down to 1e-9; the
        // gentle ratio keeps the trapezoid error of 1/sqrt tails below 1e-3
        double ratio = std::pow(1e-9 / 1e-1, 1.0 / (n_edge - 1));
        double d = 1e-1;
        for (int i = 0; i < n_edge; ++i, d *= ratio) {
            if (e - d > lo) g.push_back(e - d);
            if (e + d < hi) g.push_back(e + d);
        }
    }
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end(),
                        [](double a, double b) { return std::abs(a - b) < 1e-12; }),
            g.end());
    return g;
}

namespace {

bool try_eval_fc(const std::function<cplx(cplx)>& f, cplx s, cplx& out) {
    try {
        out = f(s);
    } catch (const std::domain_error&) {
        return false;
    }
    return std::isfinite(out.real()) && std::isfinite(out.imag());
}

cplx numeric_derivative(const std::function<cplx(cplx)>& f, cplx s) {
    double h = 1e-7 * std::max(1.0, std::abs(s));
    cplx fp, fm, f0;
    bool okp = try_eval_fc(f, s + cplx(h, 0), fp);
    bool okm = try_eval_fc(f, s - cplx(h, 0), fm);
    if (okp && okm) return (fp - fm) / (2.0 * h);
    if (!try_eval_fc(f, s, f0))
        throw solver_error("numeric_derivative: point not evaluable", 0.0);
    if (okp) return (fp - f0) / h;
    if (okm) return (f0 - fm) / h;
    throw solver_error("numeric_derivative: neighborhood not evaluable", 0.0);
}

cplx newton_step_solver(const std::function<cplx(cplx)>& f, cplx target, cplx seed,
                        int max_iter, const char* what) {
    cplx v = seed;
    cplx fv;
    if (!try_eval_fc(f, v, fv))
        throw solver_error(std::string(what) + ": seed not evaluable", 0.0);
    cplx r = fv - target;
    for (int it = 0; it < max_iter; ++it) {
        if (std::abs(r) < 1e-13) return v;
        cplx d = numeric_derivative(f, v);
        if (std::abs(d) < 1e-300)
            throw solver_error(std::string(what) + ": derivative vanished", std::abs(r));
        cplx step = r / d;
        double lambda = 1.0;
        bool moved = false;
        for (int half = 0; half < 40; ++half) {
            cplx cand = v - lambda * step;
            cplx fc;
            if (try_eval_fc(f, cand, fc)) {
                cplx rc = fc - target;
                if (std::abs(rc) < std::abs(r)) {
                    v = cand;
                    r = rc;
                    moved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if (!moved)
            throw solver_error(std::string(what) + ": line search stalled", std::abs(r));
    }
    if (std::abs(r) < 1e-9) return v;
    throw solver_error(std::string(what) + ": no convergence", std::abs(r));
}

// Inverts G at s from a known R-transform: solve R(-v) - 1/v = s for v = G(s).
cplx g_from_r(const std::function<cplx(cplx)>& r_sum, cplx s, cplx seed,
              const char* what) {
    auto f = [&](cplx v) { return r_sum(-v) - 1.0 / v; };
    return newton_step_solver(f, s, seed, 300, what);
}

// Continuation along a straight segment in s: retry with bisected steps when
// the Newton solve cannot make the jump in one go.
cplx solve_along_path(const std::function<cplx(cplx, cplx)>& g_with_seed, cplx s_from,
                      cplx g_from, cplx s_to, int depth) {
    try {
        return g_with_seed(s_to, g_from);
    } catch (const solver_error&) {
        if (depth <= 0) throw;
    }
    cplx mid = 0.5 * (s_from + s_to);
    cplx g_mid = solve_along_path(g_with_seed, s_from, g_from, mid, depth - 1);
    return solve_along_path(g_with_seed, mid, g_mid, s_to, depth - 1);
}

// Boundary-value density on a grid given a G(s) evaluator, shared by the
// convolution routines: Richardson over the eps schedule. The continuation
// runs right-to-left at the top eps, then descends the ladder per grid point.
SampledDensity invert_to_grid(
    const std::function<cplx(cplx, cplx)>& g_with_seed,  // (s, warm seed) -> G
    const std::vector<double>& grid) {
    auto eps = default_eps_schedule();
    SampledDensity out;
    out.grid = grid;
    out.values.assign(grid.size(), 0.0);

    std::vector<std::vector<double>> raw(eps.size(),
                                         std::vector<double>(grid.size(), 0.0));
    std::vector<cplx> top(grid.size());

    // entry point: approach the rightmost grid point from high above
    double x_right = grid.back();
    cplx s_high(x_right, std::max(10.0, 2.0 * std::abs(x_right)));
    cplx g = solve_along_path(g_with_seed, s_high * 2.0, -1.0 / (2.0 * s_high),
                              cplx(x_right, eps[0]), 16);
    top.back() = g;
    for (std::size_t n = grid.size() - 1; n-- > 0;) {
        top[n] = solve_along_path(g_with_seed, cplx(grid[n + 1], eps[0]), top[n + 1],
                                  cplx(grid[n], eps[0]), 14);
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        raw[0][i] = top[i].imag() / kPi;
        cplx cur = top[i];
        for (std::size_t j = 1; j < eps.size(); ++j) {
            cur = solve_along_path(g_with_seed, cplx(grid[i], eps[j - 1]), cur,
                                   cplx(grid[i], eps[j]), 14);
            raw[j][i] = cur.imag() / kPi;
        }
    }
    // Atom signature at the two smallest eps: Im G * eps stays put (Lorentzian)
    // instead of shrinking like a continuous edge would.
    std::size_t jl = eps.size() - 1, jp = eps.size() - 2;
    std::vector<char> is_atom(grid.size(), 0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double prod_l = raw[jl][i] * kPi * eps[jl];
        double prod_p = raw[jp][i] * kPi * eps[jp];
        if (prod_l > 1e-3 && prod_l > 0.7 * prod_p) is_atom[i] = 1;
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (is_atom[i]) {
            // cluster a run of flagged points into one atom at the peak
            std::size_t j = i;
            std::size_t peak = i;
            while (j < grid.size() && is_atom[j]) {
                if (raw[jl][j] > raw[jl][peak]) peak = j;
                out.values[j] = 0.0;
                ++j;
            }
            out.atoms.push_back({grid[peak], raw[jl][peak] * kPi * eps[jl]});
            i = j - 1;
            continue;
        }
        double extr = raw[0][i];
        double prev = raw[0][i], prev_eps = eps[0];
        for (std::size_t j = 1; j < eps.size(); ++j) {
            extr = (prev_eps * raw[j][i] - eps[j] * prev) / (prev_eps - eps[j]);
            prev = raw[j][i];
            prev_eps = eps[j];
        }
        out.values[i] = std::max(0.0, extr);
    }
    // Lorentzian mid-field: extrapolation near an atom is garbage out to
    // ~100 eps; zero it rather than let it pollute the trapezoid mass.
    double guard = 100.0 * eps.back();
    for (const auto& a : out.atoms)
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (std::abs(grid[i] - a.location) < guard) out.values[i] = 0.0;
    out.normalize();
    return out;
}

}  // namespace

SampledDensity add_free_convolve(const SpectralLaw& a, const SpectralLaw& b,
                                 const std::vector<double>& grid) {
    auto r_sum = [&](cplx w) { return law_r_transform(a, w) + law_r_transform(b, w); };
    auto g = [&](cplx s, cplx seed) {
        return g_from_r(r_sum, s, seed, "add_free_convolve");
    };
    try {
        return invert_to_grid(g, grid);
    } catch (const solver_error& e) {
        throw solver_error(std::string("add_free_convolve failed: ") + e.what(),
                           e.residual());
    }
}

SampledDensity mul_free_convolve(const SpectralLaw& a, const SpectralLaw& b,
                                 const std::vector<double>& grid) {
    if (std::abs(a.mean()) < 1e-12 || std::abs(b.mean()) < 1e-12)
        throw unsupported_error("mul_free_convolve: factors must have nonzero mean");
    auto s_prod = [&](cplx z) { return law_s_transform(a, z) * law_s_transform(b, z); };
    double m1 = a.mean() * b.mean();

    // Y^{-1}(z) = z/(1+z) S(z); solve Y^{-1}(z) = 1/u for z, then
    // G(u) = -(1 + z)/u. The Newton state lives in z-space, warm-started
    // along the sweep.
    cplx z_prev = 0.0;
    bool warm = false;
    auto g_with_seed = [&](cplx u, cplx /*seed*/) {
        auto f = [&](cplx z) { return z / (1.0 + z) * s_prod(z); };
        cplx init = warm ? z_prev : m1 / u;
        cplx z;
        try {
            z = newton_step_solver(f, 1.0 / u, init, 300, "mul_free_convolve");
        } catch (const solver_error&) {
            z = newton_step_solver(f, 1.0 / u, m1 / u, 300, "mul_free_convolve");
        }
        z_prev = z;
        warm = true;
        return -(1.0 + z) / u;
    };
    try {
        return invert_to_grid(g_with_seed, grid);
    } catch (const solver_error& e) {
        throw solver_error(std::string("mul_free_convolve failed: ") + e.what(),
                           e.residual());
    }
}

double free_clt_binary_density(int n, double x) {
    if (n < 2) throw std::domain_error("free_clt_binary_density: n must be >= 2");
    double edge = 2.0 * std::sqrt(1.0 - 1.0 / n);
    if (std::abs(x) >= edge) return 0.0;
    double num = 4.0 * n * n - 4.0 * n - n * n * x * x;
    return std::sqrt(num) / (2.0 * kPi * (n - x * x));
}

SampledDensity free_clt(const SpectralLaw& law, int n, const std::vector<double>& grid) {
    if (n < 1) throw std::domain_error("free_clt: n must be >= 1");
    if (std::abs(law.mean()) > 1e-10)
        throw std::domain_error("free_clt: law must have zero mean");
    if (std::abs(law.moment(2) - 1.0) > 1e-8)
        throw std::domain_error("free_clt: law must have unit variance");
    if (n == 1) {
        SampledDensity out;
        out.grid = grid;
        out.values.assign(grid.size(), 0.0);
        for (std::size_t i = 0; i < grid.size(); ++i) out.values[i] = law.density(grid[i]);
        out.atoms = law.atoms();
        return out;
    }
    double rn = std::sqrt(static_cast<double>(n));
    auto r_cn = [&](cplx w) { return rn * law_r_transform(law, w / rn); };
    auto g = [&](cplx s, cplx seed) { return g_from_r(r_cn, s, seed, "free_clt"); };
    return invert_to_grid(g, grid);
}

cplx silverstein_product(const SpectralLaw& p_x, double beta, cplx s,
                         const FixedPointConfig& cfg) {
    if (s.imag() <= 0.0) throw std::domain_error("silverstein_product: need Im s > 0");
    // Fixed point of the printed equation, whose G is normalized over the
    // K-side (H'XH). Converted to the N-side below so the output matches
    // (1/N) tr (HH'X - sI)^{-1}.
    auto rhs = [&](cplx g) {
        cplx denom_factor = 1.0 - beta - beta * s * g;
        cplx acc = 0.0;
        for (const auto& a : p_x.atoms())
            acc += a.mass / (a.location * denom_factor - s);
        for (const auto& iv : p_x.support()) {
            acc += integrate_edge_c(
                [&](double x) -> cplx {
                    return p_x.density(x) / (x * denom_factor - s);
                },
                iv.lo, iv.hi, 64, 8);
        }
        return acc;
    };
    cplx g = -1.0 / s;
    double err = 1.0;
    for (int it = 0; it < cfg.max_iter; ++it) {
        cplx next = rhs(g);
        cplx mixed = cfg.damping * next + (1.0 - cfg.damping) * g;
        err = std::abs(mixed - g);
        g = mixed;
        if (err < cfg.tol) break;
    }
    cplx resid = rhs(g) - g;
    if (std::abs(resid) > 10.0 * cfg.tol || g.imag() < -1e-12)
        throw solver_error("silverstein_product: fixed point not reached",
                           std::abs(resid));
    // N-side via G_{XX'}(s) = beta G_{X'X}(s) + (beta - 1)/s.
    return beta * g + (beta - 1.0) / s;
}

cplx silverstein_bai_sum(const std::function<cplx(cplx)>& G_x, const SpectralLaw& p_y,
                         double beta, cplx s, const FixedPointConfig& cfg) {
    if (s.imag() <= 0.0) throw std::domain_error("silverstein_bai_sum: need Im s > 0");
    auto shift = [&](cplx g) {
        cplx acc = 0.0;
        for (const auto& a : p_y.atoms())
            acc += a.mass * a.location / (1.0 + a.location * g);
        for (const auto& iv : p_y.support()) {
            acc += integrate_edge_c(
                [&](double y) -> cplx {
                    return p_y.density(y) * y / (1.0 + y * g);
                },
                iv.lo, iv.hi, 64, 8);
        }
        return acc;
    };
    auto rhs = [&](cplx g) { return G_x(s - beta * shift(g)); };
    cplx g = -1.0 / s;
    for (int it = 0; it < cfg.max_iter; ++it) {
        cplx next = rhs(g);
        cplx mixed = cfg.damping * next + (1.0 - cfg.damping) * g;
        double err = std::abs(mixed - g);
        g = mixed;
        if (err < cfg.tol) break;
    }
    cplx resid = rhs(g) - g;
    if (std::abs(resid) > 10.0 * cfg.tol || g.imag() < -1e-12)
        throw solver_error("silverstein_bai_sum: fixed point not reached",
                           std::abs(resid));
    return g;
}

GirkoSolution girko_profile_solve(const VarianceProfile& profile, cplx s,
                                  const FixedPointConfig& cfg) {
    if (s.imag() <= 0.0) throw std::domain_error("girko_profile_solve: need Im s > 0");
    const int nx = profile.grid_x, ny = profile.grid_y;
    const double dx = 1.0 / nx, dy = profile.beta / ny;
    std::vector<double> xs(nx), ys(ny);
    for (int i = 0; i < nx; ++i) xs[i] = (i + 0.5) * dx;
    for (int j = 0; j < ny; ++j) ys[j] = (j + 0.5) * dy;

    Eigen::MatrixXd w(nx, ny);
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            double v = profile.w(xs[i], ys[j]);
            if (v < 0.0) throw std::domain_error("girko_profile_solve: negative profile");
            w(i, j) = v;
        }

    std::vector<cplx> u(nx, -1.0 / s), next(nx);
    double err = 1.0;
    for (int it = 0; it < cfg.max_iter; ++it) {
        // inner integral per y: 1 + sum_x u(x) w(x, y) dx
        std::vector<cplx> denom(ny, 1.0);
        for (int j = 0; j < ny; ++j) {
            cplx acc = 0.0;
            for (int i = 0; i < nx; ++i) acc += u[i] * w(i, j);
            denom[j] += acc * dx;
        }
        err = 0.0;
        for (int i = 0; i < nx; ++i) {
            cplx acc = 0.0;
            for (int j = 0; j < ny; ++j) acc += w(i, j) / denom[j];
            cplx val = 1.0 / (-s + acc * dy);
            next[i] = cfg.damping * val + (1.0 - cfg.damping) * u[i];
            err = std::max(err, std::abs(next[i] - u[i]));
        }
        u.swap(next);
        if (err < cfg.tol) break;
    }
    if (err >= cfg.tol)
        throw solver_error("girko_profile_solve: no convergence", err);

    GirkoSolution sol;
    sol.x_nodes = xs;
    sol.u = u;
    cplx acc = 0.0;
    for (int i = 0; i < nx; ++i) {
        if (u[i].imag() < -1e-10)
            throw solver_error("girko_profile_solve: negative-imaginary branch", 0.0);
        acc += u[i];
    }
    sol.G = acc * dx;
    return sol;
}

cplx kronecker_pooling(const SpectralLaw& p_y, double beta, int antennas, cplx s,
                       const FixedPointConfig& cfg) {
    if (antennas < 1) throw std::domain_error("kronecker_pooling: antennas >= 1");
    if (s.imag() <= 0.0) throw std::domain_error("kronecker_pooling: need Im s > 0");
    auto shift = [&](cplx g) {
        cplx acc = 0.0;
        for (const auto& a : p_y.atoms())
            acc += a.mass * a.location / (1.0 + a.location * g);
        for (const auto& iv : p_y.support()) {
            acc += integrate_edge_c(
                [&](double y) -> cplx {
                    return p_y.density(y) * y / (1.0 + y * g);
                },
                iv.lo, iv.hi, 64, 8);
        }
        return acc;
    };
    // The printed formula reads G = (s - (beta/R) int ...)^{-1}; the sign of s
    // must flip to meet G -> -1/s and the paper's own claim that R=1, X=0
    // reduces to the Silverstein-Bai equation.
    auto rhs = [&](cplx g) {
        return 1.0 / (-s + (beta / antennas) * shift(g));
    };
    cplx g = -1.0 / s;
    for (int it = 0; it < cfg.max_iter; ++it) {
        cplx next = rhs(g);
        cplx mixed = cfg.damping * next + (1.0 - cfg.damping) * g;
        double err = std::abs(mixed - g);
        g = mixed;
        if (err < cfg.tol) break;
    }
    cplx resid = rhs(g) - g;
    if (std::abs(resid) > 10.0 * cfg.tol || g.imag() < -1e-12)
        throw solver_error("kronecker_pooling: fixed point not reached", std::abs(resid));
    return g;
}

cplx product_chain_s(const std::vector<double>& rho, cplx z) {
    if (rho.size() < 2) throw std::domain_error("product_chain_s: need rho_0..rho_N");
    for (double r : rho)
        if (r <= 0.0) throw std::domain_error("product_chain_s: ratios must be positive");
    if (std::abs(rho.back() - 1.0) > 1e-12)
        throw std::domain_error("product_chain_s: rho_N must be 1");
    cplx acc = 1.0;
    for (std::size_t n = 1; n < rho.size(); ++n) {
        cplx denom = z + rho[n - 1];
        if (std::abs(denom) < 1e-14)
            throw std::domain_error("product_chain_s: pole at z = -rho_{n-1}");
        acc *= rho[n] / denom;
    }
    return acc;
}

namespace {

// Coefficients of P(G) = G prod_n ((rho_{n-1} - 1 - sG)/rho_n) - sG - 1.
std::vector<cplx> chain_poly_coeffs(const std::vector<double>& rho, cplx s) {
    std::vector<cplx> poly = {0.0, 1.0};  // G
    for (std::size_t n = 1; n < rho.size(); ++n) {
        cplx a = (rho[n - 1] - 1.0) / rho[n];
        cplx b = -s / rho[n];
        std::vector<cplx> next(poly.size() + 1, 0.0);
        for (std::size_t i = 0; i < poly.size(); ++i) {
            next[i] += poly[i] * a;
            next[i + 1] += poly[i] * b;
        }
        poly.swap(next);
    }
    poly[0] -= 1.0;
    poly[1] -= s;
    return poly;
}

std::vector<cplx> poly_roots(const std::vector<cplx>& coeffs) {
    int deg = static_cast<int>(coeffs.size()) - 1;
    while (deg > 0 && std::abs(coeffs[static_cast<std::size_t>(deg)]) < 1e-300) --deg;
    if (deg < 1) throw solver_error("poly_roots: degenerate polynomial", 0.0);
    Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(deg, deg);
    for (int i = 0; i < deg; ++i)
        companion(0, i) = -coeffs[static_cast<std::size_t>(deg - 1 - i)] /
                          coeffs[static_cast<std::size_t>(deg)];
    for (int i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(companion, false);
    std::vector<cplx> roots(static_cast<std::size_t>(deg));
    for (int i = 0; i < deg; ++i) roots[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
    return roots;
}

}  // namespace

cplx product_chain_stieltjes(const std::vector<double>& rho, cplx s) {
    if (s.imag() <= 0.0)
        throw std::domain_error("product_chain_stieltjes: need Im s > 0");
    // Walk from high on the imaginary axis (where G ~ -1/s identifies the
    // branch) down to the target, tracking the nearest root.
    const int steps = 60;
    cplx s_far(s.real(), std::max(10.0, 4.0 * std::abs(s)));
    cplx g_prev = -1.0 / s_far;
    for (int k = 0; k <= steps; ++k) {
        double t = static_cast<double>(k) / steps;
        cplx sk = s_far + t * (s - s_far);
        auto roots = poly_roots(chain_poly_coeffs(rho, sk));
        cplx best = roots.front();
        for (const auto& r : roots)
            if (std::abs(r - g_prev) < std::abs(best - g_prev)) best = r;
        g_prev = best;
    }
    if (g_prev.imag() < -1e-9)
        throw solver_error("product_chain_stieltjes: no admissible branch",
                           std::abs(g_prev.imag()));
    return g_prev;
}

double free_log_mgf(const std::vector<double>& q_eigs,
                    const std::function<double(double)>& r_j) {
    double acc = 0.0;
    for (double lam : q_eigs) {
        if (lam == 0.0) continue;
        double lo = std::min(0.0, lam), hi = std::max(0.0, lam);
        double val = integrate_adaptive(r_j, lo, hi, 1e-12);
        if (!std::isfinite(val))
            throw precision_error("free_log_mgf: quadrature failed at eigenvalue " +
                                  std::to_string(lam));
        acc += (lam > 0.0) ? val : -val;
    }
    return acc;
}

double& tau_at(std::vector<double>& tau, int a, int b, int i, int k, int j, int l) {
    return tau[static_cast<std::size_t>(((i * b + k) * a + j) * b + l)];
}

double tau_get(const std::vector<double>& tau, int a, int b, int i, int k, int j,
               int l) {
    return tau[static_cast<std::size_t>(((i * b + k) * a + j) * b + l)];
}

OperatorValuedResult operator_valued_mimo(const std::vector<double>& tau, int a, int b,
                                          cplx z, const FixedPointConfig& cfg) {
    if (z.imag() <= 0.0) throw std::domain_error("operator_valued_mimo: need Im z > 0");
    if (static_cast<int>(tau.size()) != a * b * a * b)
        throw std::invalid_argument("operator_valued_mimo: tau must be a*b*a*b");
    for (int i = 0; i < a; ++i)
        for (int k = 0; k < b; ++k)
            for (int j = 0; j < a; ++j)
                for (int l = 0; l < b; ++l)
                    if (std::abs(tau_get(tau, a, b, i, k, j, l) -
                                 tau_get(tau, a, b, j, l, i, k)) > 1e-12)
                        throw std::invalid_argument(
                            "operator_valued_mimo: tau(i,k;j,l) must equal tau(j,l;i,k)");

    const double norm = 1.0 / (a + b);
    auto eta1 = [&](const Eigen::MatrixXcd& D) {
        Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(a, a);
        for (int i = 0; i < a; ++i)
            for (int j = 0; j < a; ++j) {
                cplx acc = 0.0;
                for (int k = 0; k < b; ++k)
                    for (int l = 0; l < b; ++l)
                        acc += tau_get(tau, a, b, i, k, j, l) * D(k, l);
                out(i, j) = norm * acc;
            }
        return out;
    };
    auto eta2 = [&](const Eigen::MatrixXcd& D) {
        Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(b, b);
        for (int k = 0; k < b; ++k)
            for (int l = 0; l < b; ++l) {
                cplx acc = 0.0;
                for (int i = 0; i < a; ++i)
                    for (int j = 0; j < a; ++j)
                        acc += tau_get(tau, a, b, i, k, j, l) * D(j, i);
                out(k, l) = norm * acc;
            }
        return out;
    };

    // z G1 = I + eta1((I - eta2(G1))^{-1}) G1, i.e.
    // G1 = (z I - eta1((I - eta2(G1))^{-1}))^{-1}; the printed form without
    // the trailing G1 factor contradicts the z G1 -> I normalization.
    Eigen::MatrixXcd g1 = Eigen::MatrixXcd::Identity(a, a) / z;
    double err = 1.0;
    auto step = [&](const Eigen::MatrixXcd& g) {
        Eigen::MatrixXcd inner = Eigen::MatrixXcd::Identity(b, b) - eta2(g);
        Eigen::FullPivLU<Eigen::MatrixXcd> lu(inner);
        if (!lu.isInvertible())
            throw solver_error("operator_valued_mimo: I - eta2(G1) singular", err);
        Eigen::MatrixXcd outer =
            z * Eigen::MatrixXcd::Identity(a, a) - eta1(lu.inverse());
        Eigen::FullPivLU<Eigen::MatrixXcd> lo(outer);
        if (!lo.isInvertible())
            throw solver_error("operator_valued_mimo: zI - eta1 map singular", err);
        return Eigen::MatrixXcd(lo.inverse());
    };
    for (int it = 0; it < cfg.max_iter; ++it) {
        Eigen::MatrixXcd mixed = cfg.damping * step(g1) + (1.0 - cfg.damping) * g1;
        err = (mixed - g1).cwiseAbs().maxCoeff();
        g1 = mixed;
        if (err < cfg.tol) break;
    }
    // independent residual on the defining equation
    Eigen::MatrixXcd resid = step(g1) - g1;
    double r = resid.cwiseAbs().maxCoeff();
    if (r > 10.0 * cfg.tol * std::max(1.0, std::abs(z)))
        throw solver_error("operator_valued_mimo: fixed point not reached", r);

    OperatorValuedResult out;
    out.G1 = g1;
    // G1 obeys z G1 -> I, i.e. the (z - lambda)^{-1} resolvent; negate the
    // trace so G matches the library's int dP/(x - s) convention.
    out.G = -g1.trace() / static_cast<double>(a);
    return out;
}

double rdiagonal_density(const std::function<double(double)>& s_hhd, cplx z) {
    auto f = [&](double s) {
        double v = s_hhd(s - 1.0);
        if (v <= 0.0) throw std::domain_error("rdiagonal_density: S must be positive");
        return 1.0 / std::sqrt(v);
    };
    double r = std::abs(z);
    double f0 = f(1e-12), f1 = f(1.0);
    double lo = std::min(f0, f1), hi = std::max(f0, f1);
    if (r < lo || r > hi) return 0.0;

    // monotone radial map: invert by bisection on [0, 1]
    bool increasing = f1 >= f0;
    double a = 0.0, b = 1.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (a + b);
        double val = f(std::max(mid, 1e-12));
        if ((val < r) == increasing)
            a = mid;
        else
            b = mid;
    }
    double s_star = 0.5 * (a + b);
    double h = 1e-6;
    double sl = std::max(s_star - h, 1e-12), sr = std::min(s_star + h, 1.0);
    double deriv = (f(sr) - f(sl)) / (sr - sl);
    if (deriv == 0.0) return 0.0;
    // p(z) = 1/(2 pi s f'(f^{-1}(z))) evaluated with s = |z| (the radial
    // coordinate); the Ginibre case pins this reading of the formula.
    return 1.0 / (2.0 * kPi * r * std::abs(deriv));
}

}  // namespace freelim
