// Acceptance suite: runs every gate criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exit code is the failure count.

#include "freelim/cs_replica.hpp"
#include "freelim/detectors.hpp"
#include "freelim/free_calc.hpp"
#include "freelim/quadrature.hpp"
#include "freelim/mc_lab.hpp"
#include "freelim/ncpart.hpp"
#include "freelim/replica.hpp"
#include "freelim/rng.hpp"
#include "freelim/spectra.hpp"
#include "freelim/transforms.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace freelim;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int idx, const std::string& name, bool pass, const std::string& detail,
            double seconds) {
    std::printf("[%s] criterion %2d: %-34s (%.1fs) %s\n", pass ? "PASS" : "FAIL", idx,
                name.c_str(), seconds, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

// ---------------------------------------------------------------- criterion 1
void criterion_spectral_laws() {
    auto t0 = Clock::now();
    struct Task {
        std::string name;
        std::function<double(std::uint64_t)> ks;
    };
    const int n = 2000;
    std::vector<Task> tasks = {
        {"semicircle",
         [&](std::uint64_t s) {
             EnsembleSpec spec = EnsembleSpec::wigner_sym(n, s);
             spec.complex_field = false;
             return ks_distance(spectrum(sample(spec), SpectrumMode::eig_hermitian),
                                SpectralLaw::semicircle());
         }},
        {"quarter+mp1",
         [&](std::uint64_t s) {
             // singular values and their squares from the same draw
             auto h = sample(EnsembleSpec::iid_gaussian(n, n, s, false));
             auto sq = spectrum(h, SpectrumMode::singular_sq);
             EmpiricalSpectrum sv;
             sv.n = sq.n;
             for (double v : sq.values) sv.values.push_back(std::sqrt(std::max(0.0, v)));
             double a = ks_distance(sv, SpectralLaw::quarter_circle());
             double b = ks_distance(sq, SpectralLaw::marchenko_pastur(1.0));
             return std::max(a, b);
         }},
        {"mp_half",
         [&](std::uint64_t s) {
             auto h = sample(EnsembleSpec::iid_gaussian(n, n / 2, s, false));
             return ks_distance(spectrum(h, SpectrumMode::singular_sq),
                                SpectralLaw::marchenko_pastur(0.5));
         }},
        {"haar+inverse_semicircle",
         [&](std::uint64_t s) {
             auto t = sample(EnsembleSpec::haar_unitary(n, s));
             double phases = phase_ks(spectrum(t, SpectrumMode::eig_complex));
             Eigen::MatrixXcd y = t + t.adjoint();
             double inv = ks_distance(spectrum(y, SpectrumMode::eig_hermitian),
                                      SpectralLaw::inverse_semicircle());
             return std::max(phases, inv);
         }},
        {"full_circle",
         [&](std::uint64_t s) {
             auto h = sample(EnsembleSpec::iid_gaussian(n, n, s));
             return radial_ks(spectrum(h, SpectrumMode::eig_complex),
                              SpectralLaw::full_circle());
         }},
    };

    // (law, seed) pairs on two workers; each statistic is the median of 3 seeds
    std::vector<std::pair<int, std::uint64_t>> jobs;
    for (int ti = 0; ti < static_cast<int>(tasks.size()); ++ti)
        for (std::uint64_t s = 1; s <= 3; ++s) jobs.push_back({ti, s});
    std::vector<double> results(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t j = next.fetch_add(1);
            if (j >= jobs.size()) return;
            results[j] = tasks[static_cast<std::size_t>(jobs[j].first)].ks(jobs[j].second);
        }
    };
    auto f1 = std::async(std::launch::async, worker);
    worker();
    f1.wait();

    bool pass = true;
    std::ostringstream detail;
    for (int ti = 0; ti < static_cast<int>(tasks.size()); ++ti) {
        std::vector<double> ks;
        for (std::size_t j = 0; j < jobs.size(); ++j)
            if (jobs[j].first == ti) ks.push_back(results[j]);
        double med = median(ks);
        detail << tasks[static_cast<std::size_t>(ti)].name << "=" << med << " ";
        if (med >= 0.03) pass = false;
    }
    double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (secs >= 120.0) pass = false;
    report(1, "spectral-law Monte Carlo suite", pass, detail.str(), secs);
}

// ---------------------------------------------------------------- criterion 2
void criterion_moments() {
    auto t0 = Clock::now();
    bool pass = true;
    for (int k = 2; k <= 12; k += 2)
        if (SpectralLaw::semicircle().moment(k) != static_cast<double>(catalan(k / 2)))
            pass = false;
    for (int k = 1; k <= 11; k += 2)
        if (SpectralLaw::semicircle().moment(k) != 0.0) pass = false;

    double quad = 0.0;
    auto mp = SpectralLaw::marchenko_pastur(0.5);
    quad = integrate_edge([&](double x) { return x * x * mp.density(x); },
                          mp.support()[0].lo, mp.support()[0].hi, 128, 16);
    bool m2_ok = std::abs(mp.moment(2) - (0.5 + 0.25)) < 1e-12 &&
                 std::abs(quad - mp.moment(2)) < 1e-8;
    if (!m2_ok) pass = false;
    report(2, "moment identities", pass,
           "catalan<=12 exact, mp m2 quadrature gap=" + std::to_string(std::abs(quad - 0.75)),
           std::chrono::duration<double>(Clock::now() - t0).count());
}

// ---------------------------------------------------------------- criterion 3
void criterion_transform_round_trips() {
    auto t0 = Clock::now();
    bool pass = true;
    std::ostringstream detail;

    struct Row {
        std::string name;
        SpectralLaw law;
        double lo, hi;
    };
    std::vector<Row> rows = {
        {"semicircle", SpectralLaw::semicircle(), -2.5, 2.5},
        {"quarter", SpectralLaw::quarter_circle(), 0.02, 2.4},
        {"mp(0.5)", SpectralLaw::marchenko_pastur(0.5), 0.02, 3.2},
        {"mp(1)", SpectralLaw::marchenko_pastur(1.0), 0.02, 4.3},
        {"mp(2)", SpectralLaw::marchenko_pastur(2.0), 0.05, 6.2},
        {"inv-semicircle", SpectralLaw::inverse_semicircle(), -2.5, 2.5},
    };
    for (const auto& row : rows) {
        std::vector<double> grid;
        for (int i = 0; i < 200; ++i)
            grid.push_back(row.lo + (row.hi - row.lo) * (i + 0.5) / 200);
        auto inv = density_from_stieltjes(
            [&](cplx s) { return stieltjes_of_law(row.law, s); }, grid);
        double l1 = 0.0;
        for (std::size_t i = 1; i < grid.size(); ++i) {
            double e0 = std::abs(inv.density[i - 1] - row.law.density(grid[i - 1]));
            double e1 = std::abs(inv.density[i] - row.law.density(grid[i]));
            l1 += 0.5 * (e0 + e1) * (grid[i] - grid[i - 1]);
        }
        detail << row.name << "=" << l1 << " ";
        if (l1 >= 1e-3) pass = false;
    }

    // R/S duality, R(0) = mean, 1/S(0) = mean (numeric paths)
    for (const auto& law :
         {SpectralLaw::marchenko_pastur(0.5), SpectralLaw::marchenko_pastur(2.0),
          SpectralLaw::from_atoms({{1.0, 0.5}, {3.0, 0.5}})}) {
        if (r_s_duality_check(law, cplx(0.2, 0.0)) >= 1e-8) pass = false;
        auto G = [&](cplx s) { return stieltjes_of_law(law, s); };
        double mean = law.moment(1);
        if (std::abs(r_from_stieltjes(G, cplx(0, 0)).real() - mean) >= 1e-8 * std::max(1.0, mean))
            pass = false;
        if (std::abs(1.0 / s_from_stieltjes(G, cplx(0, 0)).real() - mean) >=
            1e-8 * std::max(1.0, mean))
            pass = false;
    }
    report(3, "transform round trips", pass, detail.str(),
           std::chrono::duration<double>(Clock::now() - t0).count());
}

// ---------------------------------------------------------------- criterion 4
void criterion_free_convolution() {
    auto t0 = Clock::now();
    bool pass = true;
    std::ostringstream detail;

    auto bin = SpectralLaw::binary_symmetric();
    auto grid = refined_grid(-2.5, 2.5, 200, {-2.0, 2.0});
    auto conv = add_free_convolve(bin, bin, grid);
    auto arcs = SpectralLaw::inverse_semicircle();
    double l1 = 0.0;
    {
        std::vector<double> xs, err;
        for (std::size_t i = 0; i < conv.grid.size(); ++i) {
            if (std::abs(std::abs(conv.grid[i]) - 2.0) < 5e-3) continue;
            xs.push_back(conv.grid[i]);
            err.push_back(std::abs(conv.values[i] - arcs.density(conv.grid[i])));
        }
        for (std::size_t i = 1; i < xs.size(); ++i)
            l1 += 0.5 * (err[i] + err[i - 1]) * (xs[i] - xs[i - 1]);
    }
    detail << "binary_l1=" << l1 << " ";
    if (l1 >= 1e-3) pass = false;

    auto grid64 = refined_grid(-2.4, 2.4, 200);
    auto clt64 = free_clt(bin, 64, grid64);
    double l1clt = clt64.l1_distance_to(SpectralLaw::semicircle());
    detail << "clt64_l1=" << l1clt << " ";
    if (l1clt >= 0.02) pass = false;

    // cumulant additivity through an independent contour-moment oracle
    auto a = SpectralLaw::marchenko_pastur(0.5);
    auto b = SpectralLaw::from_atoms({{1.0, 0.5}, {3.0, 0.5}});
    auto g_sum = [&](cplx s, cplx seed) {
        cplx v = seed;
        for (int it = 0; it < 400; ++it) {
            cplx f = law_r_transform(a, -v) + law_r_transform(b, -v) - 1.0 / v - s;
            if (std::abs(f) < 1e-13) break;
            double h = 1e-7 * std::max(1.0, std::abs(v));
            cplx fp = law_r_transform(a, -(v + h)) + law_r_transform(b, -(v + h)) -
                      1.0 / (v + h) - s;
            v -= f / ((fp - f) / h);
        }
        return v;
    };
    const double radius = 9.0;
    const int nodes = 256;
    std::vector<cplx> gs(nodes);
    cplx seed = -1.0 / cplx(radius, 0.0);
    for (int j = 0; j < nodes; ++j) {
        double th = 2.0 * std::numbers::pi * j / nodes;
        cplx s = radius * cplx(std::cos(th), std::sin(th));
        seed = g_sum(s, seed);
        gs[static_cast<std::size_t>(j)] = seed;
    }
    std::vector<double> mom(6);
    for (int k = 1; k <= 6; ++k) {
        cplx acc = 0.0;
        for (int j = 0; j < nodes; ++j) {
            double th = 2.0 * std::numbers::pi * j / nodes;
            cplx s = radius * cplx(std::cos(th), std::sin(th));
            cplx ds =
                radius * cplx(-std::sin(th), std::cos(th)) * (2.0 * std::numbers::pi / nodes);
            acc += std::pow(s, k) * gs[static_cast<std::size_t>(j)] * ds;
        }
        mom[static_cast<std::size_t>(k - 1)] = (acc / cplx(0.0, -2.0 * std::numbers::pi)).real();
    }
    auto kappa = free_cumulants_from_moments(mom);
    auto ka = free_cumulants_from_moments({a.moment(1), a.moment(2), a.moment(3),
                                           a.moment(4), a.moment(5), a.moment(6)});
    auto kb = free_cumulants_from_moments({b.moment(1), b.moment(2), b.moment(3),
                                           b.moment(4), b.moment(5), b.moment(6)});
    double worst = 0.0;
    for (int i = 0; i < 6; ++i)
        worst = std::max(worst, std::abs(kappa[static_cast<std::size_t>(i)] -
                                         ka[static_cast<std::size_t>(i)] -
                                         kb[static_cast<std::size_t>(i)]));
    detail << "cumulant_gap=" << worst;
    if (worst >= 1e-6) pass = false;

    report(4, "free convolution", pass, detail.str(),
           std::chrono::duration<double>(Clock::now() - t0).count());
}

// ---------------------------------------------------------------- criterion 5
void criterion_solvers() {
    auto t0 = Clock::now();
    bool pass = true;
    std::ostringstream detail;
    FixedPointConfig cfg;

    // silverstein vs Monte Carlo resolvent (1/N) tr (HH'X - sI)^{-1}
    {
        auto px = SpectralLaw::from_atoms({{1.0, 0.5}, {3.0, 0.5}});
        cplx s(0, 1);
        cplx g = silverstein_product(px, 0.5, s, cfg);
        // residual of the defining (K-side) equation via the N-side identity
        cplx gk = (g - (0.5 - 1.0) / s) / 0.5;
        cplx denom_factor = 1.0 - 0.5 - 0.5 * s * gk;
        cplx rhs = 0.5 / (1.0 * denom_factor - s) + 0.5 / (3.0 * denom_factor - s);
        double resid = std::abs(rhs - gk);
        detail << "silv_resid=" << resid << " ";
        if (resid >= 1e-9) pass = false;

        int n = 1000, k = 500;
        auto h = sample(EnsembleSpec::iid_gaussian(n, k, 5));
        Eigen::VectorXcd xdiag(n);
        Philox rng(71);
        for (int i = 0; i < n; ++i) xdiag(i) = rng.uniform() < 0.5 ? 1.0 : 3.0;
        Eigen::MatrixXcd m = (h * h.adjoint()) * xdiag.asDiagonal();
        m -= s * Eigen::MatrixXcd::Identity(n, n);
        cplx tr = m.partialPivLu().inverse().trace() / static_cast<double>(n);
        detail << "silv_mc=" << std::abs(tr - g) << " ";
        if (std::abs(tr - g) >= 1e-2) pass = false;
    }

    // silverstein-bai vs Monte Carlo at N = 1000
    {
        double sigma = 0.5;
        auto xlaw = SpectralLaw::semicircle().scaled(sigma);
        auto Gx = [&](cplx u) { return stieltjes_of_law(xlaw, u); };
        auto py = SpectralLaw::from_atoms({{1.0, 0.5}, {2.0, 0.5}});
        cplx s(0, 2);
        cplx g = silverstein_bai_sum(Gx, py, 1.0, s, cfg);
        cplx shift = 0.5 / (1.0 + g) + 0.5 * 2.0 / (1.0 + 2.0 * g);
        double resid = std::abs(Gx(s - shift) - g);
        detail << "bai_resid=" << resid << " ";
        if (resid >= 1e-9) pass = false;

        int n = 1000;
        auto w = sample(EnsembleSpec::wigner_sym(n, 6)) * sigma;
        auto h = sample(EnsembleSpec::iid_gaussian(n, n, 7));
        Eigen::VectorXcd y(n);
        Philox rng(72);
        for (int i = 0; i < n; ++i) y(i) = rng.uniform() < 0.5 ? 1.0 : 2.0;
        Eigen::MatrixXcd m = w + h * y.asDiagonal() * h.adjoint();
        m -= s * Eigen::MatrixXcd::Identity(n, n);
        cplx tr = m.partialPivLu().inverse().trace() / static_cast<double>(n);
        detail << "bai_mc=" << std::abs(tr - g) << " ";
        if (std::abs(tr - g) >= 1e-2) pass = false;
    }

    // girko separable profile: spectrum KS at N = 800
    {
        auto wfun = [](double x, double y) { return (0.5 + x) * (2.0 - y); };
        VarianceProfile prof{wfun, 1.0, 64, 64};
        int n = 800;
        auto h = sample(EnsembleSpec::variance_profile(n, n, wfun, 8));
        auto emp = spectrum(h, SpectrumMode::singular_sq);
        // law density over a grid via Stieltjes inversion of the solver
        std::vector<double> grid;
        double hi = emp.values.back() * 1.1;
        for (int i = 0; i < 220; ++i) grid.push_back(1e-3 + hi * (i + 0.5) / 220);
        auto eps = default_eps_schedule();
        std::vector<double> dens(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            double prev = 0, prev_eps = 0, extr = 0;
            for (std::size_t j = 0; j < eps.size(); ++j) {
                double v = girko_profile_solve(prof, cplx(grid[i], eps[j]), cfg)
                               .G.imag() / std::numbers::pi;
                extr = j == 0 ? v : (prev_eps * v - eps[j] * prev) / (prev_eps - eps[j]);
                prev = v;
                prev_eps = eps[j];
            }
            dens[i] = std::max(0.0, extr);
        }
        // KS between empirical values and the cumulative trapezoid of dens
        double mass = 0.0;
        std::vector<double> cum(grid.size(), 0.0);
        for (std::size_t i = 1; i < grid.size(); ++i) {
            mass += 0.5 * (dens[i] + dens[i - 1]) * (grid[i] - grid[i - 1]);
            cum[i] = mass;
        }
        double ks = 0.0;
        for (std::size_t i = 0; i < emp.values.size(); ++i) {
            double x = emp.values[i];
            auto it = std::upper_bound(grid.begin(), grid.end(), x);
            double f = it == grid.begin() ? 0.0
                       : it == grid.end() ? cum.back()
                                          : cum[static_cast<std::size_t>(it - grid.begin() - 1)];
            ks = std::max(ks, std::abs((i + 1.0) / emp.values.size() - f));
        }
        detail << "girko_ks=" << ks << " ";
        if (ks >= 0.03) pass = false;
    }

    // kronecker pooling residual
    {
        auto py = SpectralLaw::from_atoms({{1.0, 0.5}, {2.0, 0.5}});
        cplx s(0.3, 1.0);
        cplx g = kronecker_pooling(py, 1.0, 2, s, cfg);
        cplx shift = 0.5 / (1.0 + g) + 0.5 * 2.0 / (1.0 + 2.0 * g);
        double resid = std::abs(1.0 / (-s + 0.5 * shift) - g);
        detail << "kron_resid=" << resid << " ";
        if (resid >= 1e-9) pass = false;
    }

    // operator-valued: trivial case vs scalar MP; ISI block vs Monte Carlo
    {
        cplx z(0.5, 0.9);
        auto r = operator_valued_mimo({3.0}, 1, 1, z, cfg);
        double gap = std::abs(r.G - stieltjes_of_law(
                                        SpectralLaw::marchenko_pastur(1.0).scaled(1.5), z));
        detail << "opval_scalar=" << gap << " ";
        if (gap >= 1e-8) pass = false;

        // block-banded tau from a two-tap ISI chain (a = b = 2)
        int a = 2, b = 2, nblk = 400;
        std::vector<double> tau(16, 0.0);
        double c = 2.0;
        for (int i = 0; i < a; ++i)
            for (int k = 0; k < b; ++k)
                for (int j = 0; j < a; ++j)
                    for (int l = 0; l < b; ++l)
                        if (k - i == l - j && k - i >= 0 && k - i <= 1)
                            tau_at(tau, a, b, i, k, j, l) = c;
        auto h = sample(EnsembleSpec::block_gaussian(a, b, nblk, tau, 9));
        auto emp = spectrum(h, SpectrumMode::singular_sq);
        std::vector<double> grid;
        double hi = emp.values.back() * 1.1;
        for (int i = 0; i < 200; ++i) grid.push_back(1e-3 + hi * (i + 0.5) / 200);
        auto eps = default_eps_schedule();
        std::vector<double> dens(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            double prev = 0, prev_eps = 0, extr = 0;
            for (std::size_t j = 0; j < eps.size(); ++j) {
                double v =
                    operator_valued_mimo(tau, a, b, cplx(grid[i], eps[j]), cfg).G.imag() /
                    std::numbers::pi;
                extr = j == 0 ? v : (prev_eps * v - eps[j] * prev) / (prev_eps - eps[j]);
                prev = v;
                prev_eps = eps[j];
            }
            dens[i] = std::max(0.0, extr);
        }
        double mass = 0.0;
        std::vector<double> cum(grid.size(), 0.0);
        for (std::size_t i = 1; i < grid.size(); ++i) {
            mass += 0.5 * (dens[i] + dens[i - 1]) * (grid[i] - grid[i - 1]);
            cum[i] = mass;
        }
        double ks = 0.0;
        for (std::size_t i = 0; i < emp.values.size(); ++i) {
            double x = emp.values[i];
            auto it = std::upper_bound(grid.begin(), grid.end(), x);
            double f = it == grid.begin() ? 0.0
                       : it == grid.end() ? cum.back()
                                          : cum[static_cast<std::size_t>(it - grid.begin() - 1)];
            ks = std::max(ks, std::abs((i + 1.0) / emp.values.size() - f));
        }
        detail << "isi_ks=" << ks;
        if (ks >= 0.05) pass = false;
    }

    double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (secs >= 300.0) pass = false;
    report(5, "implicit-equation solvers vs MC", pass, detail.str(), secs);
}

// ---------------------------------------------------------------- criterion 6
void criterion_nc_combinatorics() {
    auto t0 = Clock::now();
    bool pass = true;
    for (int m = 1; m <= 10; ++m)
        if (enumerate_nc(m).size() != catalan(m)) pass = false;

    // count formula vs enumeration over every size multiset, m <= 9
    std::function<void(int, int, std::vector<int>&, std::vector<std::vector<int>>&)>
        parts = [&](int n, int mx, std::vector<int>& cur,
                    std::vector<std::vector<int>>& out) {
            if (n == 0) {
                out.push_back(cur);
                return;
            }
            for (int p = std::min(n, mx); p >= 1; --p) {
                cur.push_back(p);
                parts(n - p, p, cur, out);
                cur.pop_back();
            }
        };
    for (int m = 2; m <= 9 && pass; ++m) {
        std::map<std::vector<int>, std::uint64_t> counted;
        for (const auto& p : enumerate_nc(m)) {
            std::vector<int> sizes;
            for (const auto& blk : p.blocks) sizes.push_back(static_cast<int>(blk.size()));
            std::sort(sizes.begin(), sizes.end());
            ++counted[sizes];
        }
        std::vector<std::vector<int>> multisets;
        std::vector<int> cur;
        parts(m, m, cur, multisets);
        for (auto sizes : multisets) {
            std::sort(sizes.begin(), sizes.end());
            std::uint64_t expect = counted.count(sizes) ? counted[sizes] : 0;
            if (count_nc_by_sizes(sizes) != expect) pass = false;
        }
    }

    // moment <-> cumulant round trip exact on dyadic rationals
    std::vector<double> m10{0.5, 1.25, -0.375, 2.0, 0.625, -1.75, 0.875, 3.125, -0.25, 1.5};
    auto back = moments_from_free_cumulants(free_cumulants_from_moments(m10));
    for (std::size_t i = 0; i < m10.size(); ++i)
        if (std::abs(back[i] - m10[i]) > 1e-12 * std::max(1.0, std::abs(m10[i])))
            pass = false;

    report(6, "non-crossing combinatorics", pass, "",
           std::chrono::duration<double>(Clock::now() - t0).count());
}

// ---------------------------------------------------------------- criterion 7
void criterion_detectors() {
    auto t0 = Clock::now();
    bool pass = true;
    std::ostringstream detail;
    const double target = 2.0 + std::sqrt(14.0);  // 5.7417 at beta=.5, P=1, s0=.1

    ChannelParams cp{0.5, 1.0, 0.1, SpectralLaw::point_mass(1.0)};
    double eta = tse_hanly_eta(cp);
    detail << "eta_gap=" << std::abs(eta - target) << " ";
    if (std::abs(eta - target) >= 1e-8) pass = false;

    // finite-N mean at N = 512 within 3% (median of 3 seeds)
    std::vector<double> means;
    for (std::uint64_t s = 1; s <= 3; ++s) {
        auto h = sample(EnsembleSpec::iid_gaussian(512, 256, s, false)).real().eval();
        double mean = 0.0;
        for (int k = 0; k < 256; ++k) mean += mmse_sinr_finite(h, k, 1.0, 0.1);
        means.push_back(mean / 256.0);
    }
    double mean = median(means);
    detail << "finiteN_rel=" << std::abs(mean - target) / target << " ";
    if (std::abs(mean - target) / target >= 0.03) pass = false;

    double rec = pe_sinr_recursion(0.5, 1.0, 0.1, 50);
    detail << "pe50_gap=" << std::abs(rec - target) << " ";
    if (std::abs(rec - target) >= 1e-6) pass = false;

    // Cayley-Hamilton on an 8x8 Gram (H is 16x8 to stay off the hard edge)
    double worst = 0.0;
    for (std::uint64_t s = 1; s <= 3; ++s) {
        Philox rng(s);
        int n = 16, k = 8, deg = k - 1;
        Eigen::MatrixXd h(n, k);
        for (int j = 0; j < k; ++j)
            for (int i = 0; i < n; ++i)
                h(i, j) = rng.normal() / std::sqrt(static_cast<double>(n));
        Eigen::MatrixXd r = h.transpose() * h;
        auto w = pe_weights_from_gram(r, 0.3, deg);
        Eigen::MatrixXd approx = Eigen::MatrixXd::Zero(k, k);
        Eigen::MatrixXd rp = Eigen::MatrixXd::Identity(k, k);
        for (int i = 0; i <= deg; ++i) {
            approx += w[static_cast<std::size_t>(i)] * rp;
            rp = rp * r;
        }
        Eigen::MatrixXd exact = (r + 0.3 * Eigen::MatrixXd::Identity(k, k)).inverse();
        worst = std::max(worst, (approx - exact).cwiseAbs().maxCoeff());
    }
    detail << "cayley_hamilton=" << worst;
    if (worst >= 1e-8) pass = false;

    report(7, "detector suite", pass, detail.str(),
           std::chrono::duration<double>(Clock::now() - t0).count());
}

// ---------------------------------------------------------------- criterion 8
void criterion_phase_transition() {
    auto t0 = Clock::now();
    // The phase-transition figure's noise level is sigma0^2 = 0.1 (10 dB in
    // this library's P/sigma0^2 convention; the source labels the figure 6 dB).
    std::vector<double> betas;
    for (int i = 0; i < 300; ++i) betas.push_back(1.0 + 3.0 * i / 299.0);
    auto rep = phase_transition_sweep(0.1, betas);
    double secs = std::chrono::duration<double>(Clock::now() - t0).count();

    bool pass = rep.window_lo && rep.window_hi && rep.beta_star;
    std::ostringstream detail;
    if (pass) {
        detail << "window=[" << *rep.window_lo << "," << *rep.window_hi
               << "] beta*=" << *rep.beta_star;
        if (std::abs(*rep.window_lo - 1.73) > 0.05) pass = false;
        if (std::abs(*rep.window_hi - 3.56) > 0.05) pass = false;
        if (std::abs(*rep.beta_star - 1.986) > 0.02) pass = false;
    } else {
        detail << "window or transition not found";
    }
    if (secs >= 180.0) pass = false;
    report(8, "replica phase transition (300 pts)", pass, detail.str(), secs);
}

// ---------------------------------------------------------------- criterion 9
void criterion_replica_rmt_consistency() {
    auto t0 = Clock::now();
    bool pass = true;
    double worst = 0.0;
    for (double beta : {0.1, 0.5, 1.0, 2.0, 4.0})
        for (double s0 : {0.01, 0.1, 0.25, 1.0, 4.0}) {
            auto st = rs_fixed_point_gaussian(ReplicaProblem::gaussian(beta, s0, s0));
            ChannelParams cp{beta, 1.0, s0, SpectralLaw::point_mass(1.0)};
            double eta = tse_hanly_eta(cp);
            worst = std::max(worst, std::abs(st.E - eta) / std::max(1.0, eta));
            if (!st.converged) pass = false;
        }
    if (worst >= 1e-8) pass = false;

    auto st = rs_fixed_point_gaussian(ReplicaProblem::gaussian(1.0, 0.1, 0.1));
    double mi = mutual_information_per_user(st, 1.0);
    double cap = capacity_per_dim(SpectralLaw::marchenko_pastur(1.0), 1.0, 0.1);
    double gap = std::abs(mi - cap / 2.0);
    if (gap >= 1e-4) pass = false;

    std::ostringstream detail;
    detail << "eta_worst=" << worst << " mi_gap=" << gap;
    report(9, "replica-RMT consistency", pass, detail.str(),
           std::chrono::duration<double>(Clock::now() - t0).count());
}

// --------------------------------------------------------------- criterion 10
void criterion_cs_state_evolution() {
    auto t0 = Clock::now();
    bool pass = true;
    std::ostringstream detail;

    CsProblem prob;
    prob.beta = 2.0;
    prob.sigma0_sq = 0.01;
    prob.gamma = 0.05;
    prob.rho = 0.1;
    auto states = l0_state_evolution(prob);
    if (states.empty()) pass = false;
    double predicted = states.empty() ? 0.0 : states.front().mse;
    for (const auto& s : states)
        if (s.residual >= 1e-9 * std::max(1.0, s.gamma_p)) pass = false;

    // exhaustive l0 oracle at K = 16, N = 8, median of 50 seeded trials
    int K = 16, N = 8, trials = 50;
    std::vector<double> mses;
    for (int t = 0; t < trials; ++t) {
        Philox rng(3000 + static_cast<std::uint64_t>(t));
        Eigen::MatrixXd A(N, K);
        for (int j = 0; j < K; ++j)
            for (int i = 0; i < N; ++i)
                A(i, j) = rng.normal() / std::sqrt(static_cast<double>(N));
        Eigen::VectorXd x = Eigen::VectorXd::Zero(K);
        for (int j = 0; j < K; ++j)
            if (rng.uniform() < prob.rho) x(j) = rng.normal();
        Eigen::VectorXd y = A * x;
        for (int i = 0; i < N; ++i) y(i) += std::sqrt(prob.sigma0_sq) * rng.normal();

        double best_cost = y.squaredNorm() / (2.0 * prob.gamma);
        Eigen::VectorXd best = Eigen::VectorXd::Zero(K);
        for (std::uint32_t mask = 1; mask < (1u << K); ++mask) {
            int pc = __builtin_popcount(mask);
            if (pc > N) continue;
            Eigen::MatrixXd As(N, pc);
            int c = 0;
            for (int j = 0; j < K; ++j)
                if (mask & (1u << j)) As.col(c++) = A.col(j);
            Eigen::VectorXd coef = As.colPivHouseholderQr().solve(y);
            double cost = (y - As * coef).squaredNorm() / (2.0 * prob.gamma) + pc;
            if (cost < best_cost) {
                best_cost = cost;
                best.setZero();
                c = 0;
                for (int j = 0; j < K; ++j)
                    if (mask & (1u << j)) best(j) = coef(c++);
            }
        }
        mses.push_back((best - x).squaredNorm() / K);
    }
    double oracle = median(mses);
    double rel = std::abs(oracle - predicted) / predicted;
    detail << "mse_pred=" << predicted << " mse_oracle=" << oracle << " rel=" << rel
           << " ";
    if (rel >= 0.10) pass = false;

    // coherence Monte Carlo against the subexponential limit law
    int Nc = 200, Kc = 50;
    auto coh = coherence_mc(Kc, Nc, 200, 7);
    std::vector<double> stat;
    for (double v : coh) stat.push_back(coherence_statistic_subexp(v, Nc, Kc));
    std::sort(stat.begin(), stat.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < stat.size(); ++i) {
        double f = coherence_law_cdf(CoherenceRegime::subexp, 0.0, stat[i]);
        ks = std::max(ks, std::abs((i + 1.0) / stat.size() - f));
        ks = std::max(ks, std::abs(static_cast<double>(i) / stat.size() - f));
    }
    detail << "coherence_ks=" << ks;
    if (ks >= 0.1) pass = false;

    report(10, "cs state evolution", pass, detail.str(),
           std::chrono::duration<double>(Clock::now() - t0).count());
}

}  // namespace

int main() {
    std::setvbuf(stdout, nullptr, _IONBF, 0);
    criterion_spectral_laws();
    criterion_moments();
    criterion_transform_round_trips();
    criterion_free_convolution();
    criterion_solvers();
    criterion_nc_combinatorics();
    criterion_detectors();
    criterion_phase_transition();
    criterion_replica_rmt_consistency();
    criterion_cs_state_evolution();
    std::printf("%d of 10 criteria passed\n", 10 - g_failures);
    return g_failures;
}
