#include "freelim/spectra.hpp"

#include "freelim/errors.hpp"
#include "freelim/quadrature.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace freelim {

namespace {
constexpr double kPi = std::numbers::pi;

double binom_d(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r *= static_cast<double>(n - k + i) / i;
    return r;
}
}  // namespace

std::uint64_t catalan(int n) {
    if (n < 0) throw std::domain_error("catalan: n must be nonnegative");
    if (n > 35) throw std::overflow_error("catalan: value exceeds 64-bit range");
    unsigned __int128 c = 1;
    for (int i = 0; i < n; ++i) {
        c = c * 2u * (2u * static_cast<unsigned>(i) + 1u);
        c /= static_cast<unsigned>(i) + 2u;
    }
    if (c > static_cast<unsigned __int128>(UINT64_MAX))
        throw std::overflow_error("catalan: value exceeds 64-bit range");
    return static_cast<std::uint64_t>(c);
}

std::string law_kind_name(LawKind kind) {
    switch (kind) {
        case LawKind::semicircle: return "semicircle";
        case LawKind::quarter_circle: return "quarter_circle";
        case LawKind::full_circle: return "full_circle";
        case LawKind::marchenko_pastur: return "marchenko_pastur";
        case LawKind::haar_circle: return "haar_circle";
        case LawKind::inverse_semicircle: return "inverse_semicircle";
        case LawKind::ginibre_product: return "ginibre_product";
        case LawKind::custom: return "custom";
    }
    return "custom";
}

SpectralLaw SpectralLaw::semicircle() {
    SpectralLaw law;
    law.kind_ = LawKind::semicircle;
    law.support_ = {{-2.0, 2.0}};
    law.density_ = [](double x) {
        double d = 4.0 - x * x;
        return d > 0.0 ? std::sqrt(d) / (2.0 * kPi) : 0.0;
    };
    return law;
}

SpectralLaw SpectralLaw::quarter_circle() {
    SpectralLaw law;
    law.kind_ = LawKind::quarter_circle;
    law.support_ = {{0.0, 2.0}};
    law.density_ = [](double x) {
        if (x < 0.0 || x >= 2.0) return 0.0;
        return std::sqrt(4.0 - x * x) / kPi;
    };
    return law;
}

SpectralLaw SpectralLaw::full_circle() {
    SpectralLaw law;
    law.kind_ = LawKind::full_circle;
    law.planar_ = true;
    law.support_ = {{0.0, 1.0}};  // radial support
    law.radial_density_ = [](double r) { return (r >= 0.0 && r <= 1.0) ? 2.0 * r : 0.0; };
    return law;
}

SpectralLaw SpectralLaw::marchenko_pastur(double beta) {
    if (beta <= 0.0) throw std::domain_error("marchenko_pastur: beta must be positive");
    SpectralLaw law;
    law.kind_ = LawKind::marchenko_pastur;
    law.beta_ = beta;
    double sq = std::sqrt(beta);
    double lo = (1.0 - sq) * (1.0 - sq);
    double hi = (1.0 + sq) * (1.0 + sq);
    law.support_ = {{lo, hi}};
    law.density_ = [beta, lo, hi](double x) {
        if (x <= lo || x >= hi || x <= 0.0) return 0.0;
        double d = 4.0 * beta - (x - 1.0 - beta) * (x - 1.0 - beta);
        return d > 0.0 ? std::sqrt(d) / (2.0 * kPi * x) : 0.0;
    };
    if (beta < 1.0) law.atoms_ = {{0.0, 1.0 - beta}};
    return law;
}

SpectralLaw SpectralLaw::haar_circle() {
    SpectralLaw law;
    law.kind_ = LawKind::haar_circle;
    law.planar_ = true;
    law.support_ = {{1.0, 1.0}};  // |z| = 1
    law.radial_density_ = [](double) { return 0.0; };
    return law;
}

SpectralLaw SpectralLaw::inverse_semicircle() {
    SpectralLaw law;
    law.kind_ = LawKind::inverse_semicircle;
    law.support_ = {{-2.0, 2.0}};
    law.density_ = [](double x) {
        double d = 4.0 - x * x;
        return d > 0.0 ? 1.0 / (kPi * std::sqrt(d)) : 0.0;
    };
    return law;
}

SpectralLaw SpectralLaw::ginibre_product(int factors) {
    if (factors < 1) throw std::domain_error("ginibre_product: need at least one factor");
    SpectralLaw law;
    law.kind_ = LawKind::ginibre_product;
    law.planar_ = true;
    law.factors_ = factors;
    law.support_ = {{0.0, 1.0}};
    double L = factors;
    law.radial_density_ = [L](double r) {
        if (r <= 0.0 || r > 1.0) return 0.0;
        return (2.0 / L) * std::pow(r, 2.0 / L - 1.0);
    };
    return law;
}

SpectralLaw SpectralLaw::point_mass(double location) {
    return from_atoms({{location, 1.0}});
}

SpectralLaw SpectralLaw::from_atoms(std::vector<Atom> atoms) {
    double mass = 0.0;
    for (const auto& a : atoms) {
        if (a.mass < 0.0) throw std::domain_error("from_atoms: negative mass");
        mass += a.mass;
    }
    if (std::abs(mass - 1.0) > 1e-10)
        throw std::domain_error("from_atoms: masses must sum to 1");
    SpectralLaw law;
    law.kind_ = LawKind::custom;
    law.atoms_ = std::move(atoms);
    std::sort(law.atoms_.begin(), law.atoms_.end(),
              [](const Atom& a, const Atom& b) { return a.location < b.location; });
    return law;
}

SpectralLaw SpectralLaw::binary_symmetric() {
    return from_atoms({{-1.0, 0.5}, {1.0, 0.5}});
}

SpectralLaw SpectralLaw::custom(std::vector<Interval> support,
                                std::function<double(double)> density,
                                std::vector<Atom> atoms) {
    SpectralLaw law;
    law.kind_ = LawKind::custom;
    law.support_ = std::move(support);
    law.density_ = std::move(density);
    law.atoms_ = std::move(atoms);
    return law;
}

SpectralLaw SpectralLaw::scaled(double alpha) const {
    if (alpha <= 0.0) throw std::domain_error("scaled: alpha must be positive");
    if (planar_) throw unsupported_error("scaled: planar laws not supported");
    SpectralLaw law;
    law.kind_ = LawKind::custom;
    for (const auto& iv : support_) law.support_.push_back({alpha * iv.lo, alpha * iv.hi});
    for (const auto& a : atoms_) law.atoms_.push_back({alpha * a.location, a.mass});
    if (density_) {
        auto base = density_;
        law.density_ = [base, alpha](double x) { return base(x / alpha) / alpha; };
    }
    return law;
}

double SpectralLaw::density(double x) const {
    if (!std::isfinite(x)) throw std::domain_error("density: position must be finite");
    if (planar_) return density(std::complex<double>(x, 0.0));
    if (!density_) return 0.0;
    return density_(x);
}

double SpectralLaw::density(std::complex<double> z) const {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw std::domain_error("density: position must be finite");
    if (!planar_) {
        if (z.imag() != 0.0)
            throw unsupported_error("density: complex position on a real-line law");
        return density(z.real());
    }
    double r = std::abs(z);
    switch (kind_) {
        case LawKind::full_circle: return r < 1.0 ? 1.0 / kPi : 0.0;
        case LawKind::ginibre_product: {
            if (r <= 0.0 || r > 1.0) return 0.0;
            double L = factors_;
            return std::pow(r, 2.0 / L - 2.0) / (L * kPi);
        }
        case LawKind::haar_circle:
            // singular on |z| = 1; no planar density off the circle
            return 0.0;
        default:
            throw unsupported_error("density: unsupported planar law");
    }
}

double SpectralLaw::radial_density(double r) const {
    if (!planar_) throw unsupported_error("radial_density: law is not planar");
    return radial_density_ ? radial_density_(r) : 0.0;
}

double SpectralLaw::moment_or_zero(int k) const {
    switch (kind_) {
        case LawKind::semicircle:
            return (k % 2 == 0) ? static_cast<double>(catalan(k / 2)) : 0.0;
        case LawKind::quarter_circle: {
            if (k % 2 == 0) return static_cast<double>(catalan(k / 2));
            double m = k;
            return std::pow(2.0, 2.0 * m) /
                   (kPi * m * (m / 2.0 + 1.0) * binom_d(k - 1, (k - 1) / 2));
        }
        case LawKind::full_circle: return 2.0 / (k + 2.0);
        case LawKind::marchenko_pastur: {
            double acc = 0.0;
            for (int i = 1; i <= k; ++i)
                acc += binom_d(k, i) * binom_d(k, i - 1) * std::pow(beta_, i);
            return acc / k;
        }
        case LawKind::haar_circle: return 1.0;
        case LawKind::inverse_semicircle:
            return (k % 2 == 0) ? binom_d(k, k / 2) : 0.0;
        case LawKind::ginibre_product: return 2.0 / (k * factors_ + 2.0);
        case LawKind::custom: {
            double acc = 0.0;
            for (const auto& a : atoms_) acc += a.mass * std::pow(a.location, k);
            if (density_) {
                for (const auto& iv : support_) {
                    acc += integrate_edge(
                        [&](double x) { return std::pow(x, k) * density_(x); }, iv.lo,
                        iv.hi);
                }
            }
            return acc;
        }
    }
    throw unsupported_error("moment: unknown law kind");
}

double SpectralLaw::moment(int k) const {
    if (k < 1) throw std::domain_error("moment: order must be >= 1");
    return moment_or_zero(k);
}

double SpectralLaw::total_mass() const {
    double acc = 0.0;
    for (const auto& a : atoms_) acc += a.mass;
    if (planar_) {
        if (kind_ == LawKind::haar_circle) return 1.0;
        if (kind_ == LawKind::ginibre_product) {
            // r = u^{L/2} chart turns the r^{2/L-1} endpoint into a smooth
            // integrand; the density itself is still what gets integrated
            double L = factors_;
            return acc + integrate_gl(
                             [&](double u) {
                                 double r = std::pow(u, L / 2.0);
                                 return radial_density_(r) * (L / 2.0) *
                                        std::pow(u, L / 2.0 - 1.0);
                             },
                             1e-14, 1.0, 96);
        }
        for (const auto& iv : support_)
            acc += integrate_edge(radial_density_, iv.lo, iv.hi);
        return acc;
    }
    if (density_) {
        for (const auto& iv : support_) acc += integrate_edge(density_, iv.lo, iv.hi);
    }
    return acc;
}

void SpectralLaw::build_cdf_table() const {
    // Knots follow the sin^2 edge substitution so the table stays accurate at
    // hard edges. Values are cumulative over panels.
    const int panels_per_interval = 1024;
    cdf_x_.clear();
    cdf_v_.clear();
    double running = 0.0;
    const auto& f = planar_ ? radial_density_ : density_;
    for (const auto& iv : support_) {
        double len = iv.hi - iv.lo;
        if (len <= 0.0 || !f) continue;
        double prev_x = iv.lo;
        cdf_x_.push_back(prev_x);
        cdf_v_.push_back(running);
        for (int p = 1; p <= panels_per_interval; ++p) {
            double t = (kPi / 2) * p / panels_per_interval;
            double s = std::sin(t);
            double x = iv.lo + len * s * s;
            running += integrate_edge(f, prev_x, x, 16, 1);
            cdf_x_.push_back(x);
            cdf_v_.push_back(running);
            prev_x = x;
        }
    }
}

namespace {
double table_lookup(const std::vector<double>& xs, const std::vector<double>& vs,
                    double x) {
    if (xs.empty()) return 0.0;
    if (x <= xs.front()) return 0.0;
    if (x >= xs.back()) return vs.back();
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t i = static_cast<std::size_t>(it - xs.begin());
    double x0 = xs[i - 1], x1 = xs[i];
    double v0 = vs[i - 1], v1 = vs[i];
    double w = (x - x0) / (x1 - x0);
    return v0 + w * (v1 - v0);
}
}  // namespace

double SpectralLaw::cdf(double x) const {
    if (planar_) throw unsupported_error("cdf: planar law, use radial_cdf");
    double acc = 0.0;
    for (const auto& a : atoms_)
        if (a.location <= x) acc += a.mass;
    if (density_) {
        if (cdf_x_.empty()) build_cdf_table();
        acc += table_lookup(cdf_x_, cdf_v_, x);
    }
    return acc;
}

double SpectralLaw::radial_cdf(double r) const {
    if (!planar_) throw unsupported_error("radial_cdf: law is not planar");
    switch (kind_) {
        case LawKind::full_circle:
            return r <= 0.0 ? 0.0 : (r >= 1.0 ? 1.0 : r * r);
        case LawKind::ginibre_product:
            return r <= 0.0 ? 0.0 : (r >= 1.0 ? 1.0 : std::pow(r, 2.0 / factors_));
        case LawKind::haar_circle: return r >= 1.0 ? 1.0 : 0.0;
        default: {
            if (cdf_x_.empty()) build_cdf_table();
            return table_lookup(cdf_x_, cdf_v_, r);
        }
    }
}

std::string SpectralLaw::descriptor_json() const {
    nlohmann::json params = nlohmann::json::object();
    if (kind_ == LawKind::marchenko_pastur) params["beta"] = beta_;
    if (kind_ == LawKind::ginibre_product) params["factors"] = factors_;
    if (kind_ == LawKind::custom && !atoms_.empty() && !density_) {
        nlohmann::json atoms = nlohmann::json::array();
        for (const auto& a : atoms_) atoms.push_back({{"location", a.location}, {"mass", a.mass}});
        params["atoms"] = atoms;
    }
    nlohmann::json j = {{"kind", law_kind_name(kind_)}, {"parameters", params}};
    return j.dump();
}

bool hankel_psd(const MomentSequence& moments, double tol) {
    int n = moments.max_order();
    int h = n / 2 + 1;  // largest Hankel with indices i+j <= n
    auto m = [&](int k) { return k == 0 ? 1.0 : moments.m(k); };
    Eigen::MatrixXd H(h, h);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < h; ++j) H(i, j) = m(i + j);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() > -tol;
}

MomentSequence law_moments(const SpectralLaw& law, int k_max) {
    MomentSequence seq;
    seq.values.reserve(static_cast<std::size_t>(k_max));
    for (int k = 1; k <= k_max; ++k) seq.values.push_back(law.moment(k));
    return seq;
}

}  // namespace freelim
