#include "freelim/transforms.hpp"

#include "freelim/errors.hpp"
#include "freelim/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace freelim {

namespace {

constexpr double kPi = std::numbers::pi;

bool upper_half(cplx s) { return s.imag() > 0.0; }

// Admissibility of a candidate value of G(s) for a probability measure:
// Im G >= 0 and |G| <= 1/Im s when Im s > 0.
bool admissible_g(cplx g, cplx s) {
    if (g.imag() < -1e-12) return false;
    if (s.imag() > 0.0 && std::abs(g) > 1.0 / s.imag() + 1e-9) return false;
    return true;
}

cplx pick_branch(cplx s, cplx a, cplx b) {
    bool ok_a = admissible_g(a, s), ok_b = admissible_g(b, s);
    if (ok_a && !ok_b) return a;
    if (ok_b && !ok_a) return b;
    // Both or neither pass: prefer the larger imaginary part; ties cannot
    // happen for the table laws off the real axis.
    return a.imag() >= b.imag() ? a : b;
}

// Real s beyond the support: G(s) = int dP/(x - s) is positive below the
// support and negative above it.
cplx pick_branch_real(double s, double lo, double hi, cplx a, cplx b) {
    double va = a.real(), vb = b.real();
    if (s <= lo) return va >= 0.0 ? a : b;
    if (s >= hi) return va <= 0.0 ? a : b;
    (void)vb;
    return a;
}

double support_min(const SpectralLaw& law) {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& iv : law.support()) lo = std::min(lo, iv.lo);
    for (const auto& a : law.atoms()) lo = std::min(lo, a.location);
    return lo;
}

double support_max(const SpectralLaw& law) {
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& iv : law.support()) hi = std::max(hi, iv.hi);
    for (const auto& a : law.atoms()) hi = std::max(hi, a.location);
    return hi;
}

bool on_support_boundary(const SpectralLaw& law, double x) {
    for (const auto& iv : law.support())
        if (x >= iv.lo && x <= iv.hi) return true;
    for (const auto& a : law.atoms())
        if (x == a.location) return true;
    return false;
}

cplx quadrature_stieltjes(const SpectralLaw& law, cplx s) {
    cplx acc = 0.0;
    for (const auto& a : law.atoms()) acc += a.mass / (a.location - s);
    for (const auto& iv : law.support()) {
        acc += integrate_edge_c(
            [&](double x) -> cplx { return law.density(x) / (x - s); }, iv.lo, iv.hi,
            96, 12);
    }
    return acc;
}

cplx select_g(cplx s, double lo, double hi, cplx a, cplx b) {
    if (s.imag() != 0.0) return pick_branch(s, a, b);
    return pick_branch_real(s.real(), lo, hi, a, b);
}

cplx g_semicircle(cplx s) {
    cplx root = std::sqrt(1.0 - 4.0 / (s * s));
    cplx a = s / 2.0 * root - s / 2.0;
    cplx b = -s / 2.0 * root - s / 2.0;
    return select_g(s, -2.0, 2.0, a, b);
}

cplx g_marchenko_pastur(double beta, cplx s) {
    // s G^2 + (s + 1 - beta) G + 1 = 0 (the table entry squared out)
    double sq = std::sqrt(beta);
    double lo = beta < 1.0 ? 0.0 : (1.0 - sq) * (1.0 - sq);  // atom at 0 if beta<1
    double hi = (1.0 + sq) * (1.0 + sq);
    cplx disc = std::sqrt((s + 1.0 - beta) * (s + 1.0 - beta) - 4.0 * s);
    cplx a = (-(s + 1.0 - beta) + disc) / (2.0 * s);
    cplx b = (-(s + 1.0 - beta) - disc) / (2.0 * s);
    return select_g(s, lo, hi, a, b);
}

cplx g_inverse_semicircle(cplx s) {
    cplx root = std::sqrt(s * s - 4.0);
    return select_g(s, -2.0, 2.0, 1.0 / root, -1.0 / root);
}

// G_K(s) - 2/pi + (u/2pi) log((u+2)/(u-2)), u = sqrt(4 - s^2). Principal
// branches are continuous on the open upper half plane (the log argument only
// crosses the cut for real s); admissibility still guards the result.
cplx g_quarter_circle(cplx s) {
    cplx u = std::sqrt(4.0 - s * s);
    cplx gk = g_semicircle(s);
    cplx g = gk - 2.0 / kPi + u / (2.0 * kPi) * std::log((u + 2.0) / (u - 2.0));
    if (admissible_g(g, s)) return g;
    // retry with the other sheet of u
    u = -u;
    cplx g2 = gk - 2.0 / kPi + u / (2.0 * kPi) * std::log((u + 2.0) / (u - 2.0));
    return pick_branch(s, g, g2);
}

}  // namespace

cplx stieltjes_of_law(const SpectralLaw& law, cplx s) {
    if (law.planar()) throw unsupported_error("stieltjes_of_law: planar law");
    if (s.imag() == 0.0) {
        if (on_support_boundary(law, s.real()))
            throw std::domain_error(
                "stieltjes_of_law: real s inside the support is a boundary point");
        if (s.imag() < 0.0) throw std::domain_error("stieltjes_of_law: Im s < 0");
        // real s outside the support: closed forms only when s clears the
        // support entirely, otherwise (gaps) quadrature is unambiguous
        double lo = support_min(law), hi = support_max(law);
        if (s.real() > lo && s.real() < hi) return quadrature_stieltjes(law, s);
    } else if (s.imag() < 0.0) {
        throw std::domain_error("stieltjes_of_law: Im s < 0");
    }

    switch (law.kind()) {
        case LawKind::semicircle: return g_semicircle(s);
        case LawKind::marchenko_pastur: return g_marchenko_pastur(law.beta(), s);
        case LawKind::inverse_semicircle: return g_inverse_semicircle(s);
        case LawKind::quarter_circle:
            if (upper_half(s)) return g_quarter_circle(s);
            return quadrature_stieltjes(law, s);
        case LawKind::custom: {
            if (law.support().empty()) {  // purely atomic
                cplx acc = 0.0;
                for (const auto& a : law.atoms()) acc += a.mass / (a.location - s);
                return acc;
            }
            return quadrature_stieltjes(law, s);
        }
        default:
            throw unsupported_error("stieltjes_of_law: law has complex eigenvalues");
    }
}

AnalyticTransform stieltjes_transform(const SpectralLaw& law) {
    AnalyticTransform t;
    t.kind = AnalyticTransform::Kind::stieltjes;
    t.domain = "Im s > 0, or real s outside the support";
    t.branch_rule = "Im G(s) >= 0 when Im s > 0";
    t.eval = [law](cplx s) { return stieltjes_of_law(law, s); };
    return t;
}

StieltjesInversion density_from_stieltjes(const std::function<cplx(cplx)>& G,
                                          const std::vector<double>& grid,
                                          std::vector<double> eps_schedule,
                                          double stability_tol) {
    if (eps_schedule.size() < 2)
        throw std::invalid_argument("density_from_stieltjes: need >= 2 epsilons");
    if (eps_schedule.back() < 1e-6)
        throw std::invalid_argument("density_from_stieltjes: schedule must end >= 1e-6");

    StieltjesInversion out;
    out.grid = grid;
    out.density.resize(grid.size());
    out.clipped.assign(grid.size(), 0);

    for (std::size_t i = 0; i < grid.size(); ++i) {
        double x = grid[i];
        std::vector<double> raw(eps_schedule.size());
        for (std::size_t j = 0; j < eps_schedule.size(); ++j)
            raw[j] = G(cplx(x, eps_schedule[j])).imag() / kPi;

        // Atom signature: Im G * eps stays O(1) across the two smallest eps
        // (a continuous 1/sqrt edge shrinks it by sqrt of the eps ratio).
        double eps_last = eps_schedule.back();
        double eps_prev = eps_schedule[eps_schedule.size() - 2];
        double prod_l = raw.back() * kPi * eps_last;
        double prod_p = raw[eps_schedule.size() - 2] * kPi * eps_prev;
        if (prod_l > 1e-3 && prod_l > 0.7 * prod_p) {
            out.detected_atoms.push_back({x, prod_l});
            out.density[i] = raw.back();
            continue;
        }

        // two-point Richardson along the schedule (bias is O(eps))
        double prev = raw[0], prev_eps = eps_schedule[0];
        double extr_prev = raw[0], extr = raw[0];
        for (std::size_t j = 1; j < eps_schedule.size(); ++j) {
            double cur = raw[j], cur_eps = eps_schedule[j];
            extr_prev = extr;
            extr = (prev_eps * cur - cur_eps * prev) / (prev_eps - cur_eps);
            prev = cur;
            prev_eps = cur_eps;
        }
        double variation = std::abs(extr - extr_prev);
        if (variation > stability_tol * std::max(1.0, std::abs(extr)))
            throw solver_error("density_from_stieltjes: extrapolation unstable",
                               variation);
        if (extr < 0.0) {
            extr = 0.0;
            out.clipped[i] = 1;
        }
        out.density[i] = extr;
    }
    return out;
}

namespace {

// Evaluation wrapper: domain errors (an iterate wandering onto the support
// cut) read as "infinitely bad candidate" so the line search backs off.
bool try_eval(const std::function<cplx(cplx)>& f, cplx s, cplx& out) {
    try {
        out = f(s);
    } catch (const std::domain_error&) {
        return false;
    }
    return std::isfinite(out.real()) && std::isfinite(out.imag());
}

cplx numeric_derivative(const std::function<cplx(cplx)>& f, cplx s) {
    double h = 1e-6 * std::max(1.0, std::abs(s));
    cplx fp, fm;
    bool okp = try_eval(f, s + cplx(h, 0), fp);
    bool okm = try_eval(f, s - cplx(h, 0), fm);
    cplx f0;
    if (okp && okm) return (fp - fm) / (2.0 * h);
    if (!try_eval(f, s, f0))
        throw solver_error("numeric_derivative: point not evaluable", 0.0);
    if (okp) return (fp - f0) / h;
    if (okm) return (f0 - fm) / h;
    throw solver_error("numeric_derivative: neighborhood not evaluable", 0.0);
}

// Damped Newton for f(s) = target. Returns the iterate; throws on divergence.
cplx newton_solve(const std::function<cplx(cplx)>& f, cplx target, cplx seed,
                  int max_iter, const char* what) {
    cplx s = seed;
    cplx fs;
    if (!try_eval(f, s, fs))
        throw solver_error(std::string(what) + ": seed not evaluable", 0.0);
    cplx r = fs - target;
    for (int it = 0; it < max_iter; ++it) {
        if (std::abs(r) < 1e-13) return s;
        cplx d = numeric_derivative(f, s);
        if (std::abs(d) < 1e-300)
            throw solver_error(std::string(what) + ": derivative vanished", std::abs(r));
        cplx step = r / d;
        double lambda = 1.0;
        bool moved = false;
        for (int half = 0; half < 40; ++half) {
            cplx cand = s - lambda * step;
            cplx fc;
            if (try_eval(f, cand, fc)) {
                cplx rc = fc - target;
                if (std::abs(rc) < std::abs(r)) {
                    s = cand;
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
    if (std::abs(r) < 1e-10) return s;
    throw solver_error(std::string(what) + ": no convergence", std::abs(r));
}

}  // namespace

double mean_from_stieltjes(const std::function<cplx(cplx)>& G) {
    // On the imaginary axis Re(-s^2 G - s) = m1 + m3/y^2 + O(y^-4); one
    // Richardson step in 1/y^2 removes the bias without pushing |s| into
    // cancellation territory.
    auto raw = [&](double y) {
        cplx s(0.0, y);
        return (-s * s * G(s) - s).real();
    };
    // y balances the m5/y^4 tail against evaluation noise growing like y^2
    double y = 1e3;
    return (4.0 * raw(2.0 * y) - raw(y)) / 3.0;
}

namespace {

// The functional inverses live partly below the real axis; a real measure's
// transform extends there by the Schwarz reflection G(conj s) = conj G(s).
std::function<cplx(cplx)> reflected(const std::function<cplx(cplx)>& G) {
    return [G](cplx s) {
        if (s.imag() >= 0.0) return G(s);
        return std::conj(G(std::conj(s)));
    };
}

}  // namespace

cplx r_from_stieltjes(const std::function<cplx(cplx)>& G, cplx w, int max_iter) {
    if (std::abs(w) < 1e-14) return mean_from_stieltjes(G);
    double m1 = mean_from_stieltjes(G);
    auto Ge = reflected(G);

    // Homotopy from small |w| outward; seed exact at the asymptote.
    const int steps = 24;
    double mag0 = std::min(1e-3, std::abs(w));
    cplx dir = w / std::abs(w);
    cplx s_prev = 1.0 / (mag0 * dir) + m1;
    for (int k = 0; k <= steps; ++k) {
        double t = static_cast<double>(k) / steps;
        cplx wt = dir * mag0 * std::pow(std::abs(w) / mag0, t);
        s_prev = newton_solve(Ge, -wt, s_prev, max_iter, "r_from_stieltjes");
    }
    return s_prev - 1.0 / w;
}

cplx s_from_stieltjes(const std::function<cplx(cplx)>& G, cplx z, int max_iter) {
    double m1 = mean_from_stieltjes(G);
    if (std::abs(m1) < 1e-10)
        throw unsupported_error("s_from_stieltjes: law has zero mean");
    if (std::abs(z) < 1e-14) return 1.0 / m1;

    auto Ge = reflected(G);
    auto Y = [&](cplx s) { return -Ge(1.0 / s) / s - 1.0; };
    const int steps = 24;
    double mag0 = std::min(1e-3, std::abs(z));
    cplx dir = z / std::abs(z);
    cplx s_prev = mag0 * dir / m1;
    for (int k = 0; k <= steps; ++k) {
        double t = static_cast<double>(k) / steps;
        cplx zt = dir * mag0 * std::pow(std::abs(z) / mag0, t);
        s_prev = newton_solve(Y, zt, s_prev, max_iter, "s_from_stieltjes");
    }
    return (1.0 + z) / z * s_prev;
}

cplx law_upsilon(const SpectralLaw& law, cplx s) {
    return -stieltjes_of_law(law, 1.0 / s) / s - 1.0;
}

cplx law_r_transform(const SpectralLaw& law, cplx w) {
    switch (law.kind()) {
        case LawKind::semicircle: return w;
        case LawKind::marchenko_pastur: return law.beta() / (1.0 - w);
        case LawKind::inverse_semicircle: {
            if (std::abs(w) < 1e-14) return 0.0;
            return (-1.0 + std::sqrt(1.0 + 4.0 * w * w)) / w;
        }
        case LawKind::custom:
            if (law.atoms().size() == 1 && law.support().empty())
                return law.atoms().front().location;  // point mass: R = alpha
            if (law.atoms().size() == 2 && law.support().empty()) {
                // symmetric two-point law at +-a: R = (-1 + sqrt(1+4a^2 w^2))/(2w)
                const auto& at = law.atoms();
                if (std::abs(at[0].location + at[1].location) < 1e-14 &&
                    std::abs(at[0].mass - 0.5) < 1e-14) {
                    double a = std::abs(at[1].location);
                    if (std::abs(w) < 1e-14) return 0.0;
                    return (-1.0 + std::sqrt(1.0 + 4.0 * a * a * w * w)) / (2.0 * w);
                }
            }
            break;
        default: break;
    }
    return r_from_stieltjes([&](cplx s) { return stieltjes_of_law(law, s); }, w);
}

cplx law_s_transform(const SpectralLaw& law, cplx z) {
    if (std::abs(law.mean()) < 1e-12)
        throw unsupported_error("law_s_transform: law has zero mean");
    switch (law.kind()) {
        case LawKind::marchenko_pastur: return 1.0 / (law.beta() + z);
        case LawKind::custom:
            if (law.atoms().size() == 1 && law.support().empty())
                return 1.0 / law.atoms().front().location;
            break;
        default: break;
    }
    return s_from_stieltjes([&](cplx s) { return stieltjes_of_law(law, s); }, z);
}

double r_s_duality_check(const SpectralLaw& law, cplx z) {
    cplx S = law_s_transform(law, z);
    cplx R = law_r_transform(law, z * S);
    return std::abs(S * R - 1.0);
}

cplx xhx_from_xxh(cplx G_xxh, double beta, cplx s) {
    if (std::abs(s) < 1e-300) throw std::domain_error("xhx_from_xxh: pole at s = 0");
    return (G_xxh - (beta - 1.0) / s) / beta;
}

}  // namespace freelim
