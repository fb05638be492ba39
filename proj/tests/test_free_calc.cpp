#include "freelim/free_calc.hpp"

#include "freelim/errors.hpp"
#include "freelim/ncpart.hpp"
#include "freelim/transforms.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace freelim;

namespace {
constexpr double kPi = std::numbers::pi;

// L1 on grid points at least `margin` away from the listed edges; the
// eps-limited inversion cannot resolve closer than the smallest eps anyway
double core_l1(const SampledDensity& d, const std::function<double(double)>& p,
               const std::vector<double>& edges, double margin = 5e-3) {
    std::vector<double> xs, err;
    for (std::size_t i = 0; i < d.grid.size(); ++i) {
        bool near = false;
        for (double e : edges)
            if (std::abs(d.grid[i] - e) < margin) near = true;
        if (near) continue;
        xs.push_back(d.grid[i]);
        err.push_back(std::abs(d.values[i] - p(d.grid[i])));
    }
    double acc = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i)
        acc += 0.5 * (err[i] + err[i - 1]) * (xs[i] - xs[i - 1]);
    return acc;
}

// moments by contour integration of a G evaluator around the support:
// m_k = -(1/2 pi i) oint s^k G(s) ds, trapezoid on a circle (geometric accuracy)
std::vector<double> moments_from_g(const std::function<cplx(cplx, cplx)>& g_seeded,
                                   double radius, int k_max, int nodes = 256) {
    std::vector<cplx> gs(static_cast<std::size_t>(nodes));
    cplx seed = -1.0 / cplx(radius, 0.1);
    for (int j = 0; j < nodes; ++j) {
        double th = 2.0 * kPi * j / nodes;
        cplx s = radius * cplx(std::cos(th), std::sin(th));
        // keep off the real axis by nudging the contour (Schwarz symmetry
        // means the trapezoid of the analytic integrand still converges)
        seed = g_seeded(s, seed);
        gs[static_cast<std::size_t>(j)] = seed;
    }
    std::vector<double> m(static_cast<std::size_t>(k_max));
    for (int k = 1; k <= k_max; ++k) {
        cplx acc = 0.0;
        for (int j = 0; j < nodes; ++j) {
            double th = 2.0 * kPi * j / nodes;
            cplx s = radius * cplx(std::cos(th), std::sin(th));
            cplx ds = radius * cplx(-std::sin(th), std::cos(th)) *
                      (2.0 * kPi / nodes);
            acc += std::pow(s, k) * gs[static_cast<std::size_t>(j)] * ds;
        }
        m[static_cast<std::size_t>(k) - 1] = (acc / cplx(0.0, -2.0 * kPi)).real();
    }
    return m;
}

// additive-convolution G via an independent little Newton on the R sum
cplx g_of_sum(const SpectralLaw& a, const SpectralLaw& b, cplx s, cplx seed) {
    cplx v = seed;
    for (int it = 0; it < 400; ++it) {
        cplx f = law_r_transform(a, -v) + law_r_transform(b, -v) - 1.0 / v - s;
        if (std::abs(f) < 1e-13) break;
        double h = 1e-7 * std::max(1.0, std::abs(v));
        cplx fp = law_r_transform(a, -(v + h)) + law_r_transform(b, -(v + h)) -
                  1.0 / (v + h) - s;
        cplx d = (fp - f) / h;
        v -= f / d;
    }
    return v;
}

}  // namespace

TEST_CASE("refined grid shape") {
    auto g = refined_grid(-2.0, 2.0, 50, {1.0});
    CHECK(std::is_sorted(g.begin(), g.end()));
    CHECK(std::adjacent_find(g.begin(), g.end()) == g.end());
    CHECK(g.size() > 50);
}

TEST_CASE("binary boxplus binary is the inverse semicircle") {
    auto bin = SpectralLaw::binary_symmetric();
    auto grid = refined_grid(-2.5, 2.5, 200, {-2.0, 2.0});
    auto conv = add_free_convolve(bin, bin, grid);
    CHECK(conv.trapezoid_mass() == doctest::Approx(1.0).epsilon(1e-6));
    auto arcs = SpectralLaw::inverse_semicircle();
    CHECK(core_l1(conv, [&](double x) { return arcs.density(x); }, {-2.0, 2.0}) <
          1e-3);
}

TEST_CASE("shift by a point mass moves the law and keeps its atom") {
    auto mp = SpectralLaw::marchenko_pastur(0.5);
    auto grid = refined_grid(0.5, 4.2, 200,
                             {1.0, 1.0 + mp.support()[0].lo, 1.0 + mp.support()[0].hi});
    grid.push_back(1.0);
    std::sort(grid.begin(), grid.end());
    auto shifted = add_free_convolve(mp, SpectralLaw::point_mass(1.0), grid);
    REQUIRE(shifted.atoms.size() == 1);
    CHECK(shifted.atoms[0].location == doctest::Approx(1.0));
    CHECK(shifted.atoms[0].mass == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(core_l1(shifted, [&](double x) { return mp.density(x - 1.0); },
                  {1.0, 1.0 + mp.support()[0].lo, 1.0 + mp.support()[0].hi}) < 1e-3);
}

TEST_CASE("semicircle boxplus semicircle rescales by sqrt2") {
    auto sc = SpectralLaw::semicircle();
    auto grid = refined_grid(-3.2, 3.2, 200);
    auto conv = add_free_convolve(sc, sc, grid);
    auto target = sc.scaled(std::numbers::sqrt2);
    CHECK(conv.l1_distance_to(target) < 1e-3);
}

TEST_CASE("free cumulants add under additive convolution") {
    auto a = SpectralLaw::marchenko_pastur(0.5);
    auto b = SpectralLaw::from_atoms({{1.0, 0.5}, {3.0, 0.5}});
    auto g = [&](cplx s, cplx seed) { return g_of_sum(a, b, s, seed); };
    auto mom = moments_from_g(g, 9.0, 6);
    auto kappa = free_cumulants_from_moments(mom);
    auto ka = free_cumulants_from_moments({a.moment(1), a.moment(2), a.moment(3),
                                           a.moment(4), a.moment(5), a.moment(6)});
    auto kb = free_cumulants_from_moments({b.moment(1), b.moment(2), b.moment(3),
                                           b.moment(4), b.moment(5), b.moment(6)});
    for (int n = 0; n < 6; ++n)
        CHECK(kappa[static_cast<std::size_t>(n)] ==
              doctest::Approx(ka[static_cast<std::size_t>(n)] +
                              kb[static_cast<std::size_t>(n)])
                  .epsilon(1e-6));
    // first moments add, second cumulants add
    CHECK(mom[0] == doctest::Approx(a.moment(1) + b.moment(1)).epsilon(1e-9));
}

TEST_CASE("multiplicative convolution") {
    // MP(beta) boxtimes point mass 2 = MP dilated by 2
    auto mp = SpectralLaw::marchenko_pastur(0.5);
    auto grid = refined_grid(0.02, 6.2, 160, {2.0 * mp.support()[0].lo,
                                              2.0 * mp.support()[0].hi});
    auto d = mul_free_convolve(mp, SpectralLaw::point_mass(2.0), grid);
    auto dilated = mp.scaled(2.0);
    CHECK(core_l1(d, [&](double x) { return dilated.density(x); },
                  {2.0 * mp.support()[0].lo, 2.0 * mp.support()[0].hi}) < 2e-3);
    // commutativity
    auto e = mul_free_convolve(SpectralLaw::point_mass(2.0), mp, grid);
    double worst = 0.0;
    for (std::size_t i = 0; i < d.values.size(); ++i)
        worst = std::max(worst, std::abs(d.values[i] - e.values[i]));
    CHECK(worst < 1e-9);
    CHECK_THROWS_AS(mul_free_convolve(SpectralLaw::semicircle(), mp, grid),
                    unsupported_error);
}

TEST_CASE("free central limit theorem") {
    auto bin = SpectralLaw::binary_symmetric();
    // n = 1: the atoms themselves
    auto g1 = free_clt(bin, 1, {0.0});
    REQUIRE(g1.atoms.size() == 2);
    CHECK(g1.atoms[0].location == -1.0);

    // n = 2: closed form (inverse semicircle scaled to |x| < sqrt 2)
    CHECK(free_clt_binary_density(2, 0.5) ==
          doctest::Approx(1.0 / (kPi * std::sqrt(2.0 - 0.25))));
    double edge2 = 2.0 * std::sqrt(0.5);
    auto grid2 = refined_grid(-1.6, 1.6, 200, {-edge2, edge2});
    auto clt2 = free_clt(bin, 2, grid2);
    CHECK(core_l1(clt2, [&](double x) { return free_clt_binary_density(2, x); },
                  {-edge2, edge2}) < 1e-3);

    // n = 64 approaches the semicircle; both the solver output and the
    // closed-form density agree on the distance
    auto grid64 = refined_grid(-2.4, 2.4, 200);
    auto clt64 = free_clt(bin, 64, grid64);
    auto sc = SpectralLaw::semicircle();
    CHECK(clt64.l1_distance_to(sc) < 0.02);
    double closed_l1 = 0.0;
    for (std::size_t i = 1; i < grid64.size(); ++i) {
        double e0 = std::abs(free_clt_binary_density(64, grid64[i - 1]) -
                             sc.density(grid64[i - 1]));
        double e1 =
            std::abs(free_clt_binary_density(64, grid64[i]) - sc.density(grid64[i]));
        closed_l1 += 0.5 * (e0 + e1) * (grid64[i] - grid64[i - 1]);
    }
    CHECK(clt64.l1_distance_to(sc) == doctest::Approx(closed_l1).epsilon(0.25));

    CHECK_THROWS_AS(free_clt(SpectralLaw::point_mass(1.0), 4, grid64),
                    std::domain_error);
    CHECK_THROWS_AS(free_clt(SpectralLaw::binary_symmetric().scaled(2.0), 4, grid64),
                    std::domain_error);
}

TEST_CASE("silverstein product equation") {
    cplx s(0.7, 0.9);
    // X = I recovers MP(beta)
    for (double beta : {0.5, 1.0, 2.0})
        CHECK(std::abs(silverstein_product(SpectralLaw::point_mass(1.0), beta, s) -
                       stieltjes_of_law(SpectralLaw::marchenko_pastur(beta), s)) <
              1e-9);
    // X = 0 gives the zero matrix
    CHECK(std::abs(silverstein_product(SpectralLaw::point_mass(0.0), 0.5, s) +
                   1.0 / s) < 1e-12);
    CHECK_THROWS_AS(silverstein_product(SpectralLaw::point_mass(1.0), 0.5,
                                        cplx(1.0, -0.1)),
                    std::domain_error);

    // equivalence with the S-transform product route (independent z-Newton)
    auto px = SpectralLaw::from_atoms({{1.0, 0.5}, {3.0, 0.5}});
    double beta = 0.5;
    auto s_prod = [&](cplx z) {
        return law_s_transform(SpectralLaw::marchenko_pastur(beta), z) *
               law_s_transform(px, z);
    };
    for (cplx probe : {cplx(0.5, 1.0), cplx(1.5, 0.8), cplx(-0.5, 1.2),
                       cplx(2.5, 0.6), cplx(0.0, 2.0)}) {
        // solve z/(1+z) S(z) = 1/probe for z, then G = -(1+z)/probe
        cplx z = 2.0 / probe;  // seed from m1 = 2
        for (int it = 0; it < 200; ++it) {
            cplx f = z / (1.0 + z) * s_prod(z) - 1.0 / probe;
            if (std::abs(f) < 1e-13) break;
            double h = 1e-7 * std::max(1.0, std::abs(z));
            cplx fp = (z + h) / (1.0 + z + h) * s_prod(z + h) - 1.0 / probe;
            z -= f / ((fp - f) / h);
        }
        cplx via_s = -(1.0 + z) / probe;
        CHECK(std::abs(silverstein_product(px, beta, probe) - via_s) < 1e-8);
    }
}

TEST_CASE("silverstein-bai sum equation") {
    cplx s(0.3, 1.1);
    auto Gzero = [](cplx u) { return -1.0 / u; };
    CHECK(std::abs(silverstein_bai_sum(Gzero, SpectralLaw::point_mass(1.0), 0.5, s) -
                   stieltjes_of_law(SpectralLaw::marchenko_pastur(0.5), s)) < 1e-9);
    // Y = 0 leaves X alone
    auto sc = SpectralLaw::semicircle();
    auto Gx = [&](cplx u) { return stieltjes_of_law(sc, u); };
    CHECK(std::abs(silverstein_bai_sum(Gx, SpectralLaw::point_mass(0.0), 1.0, s) -
                   Gx(s)) < 1e-10);
    // independent residual of the defining equation
    auto py = SpectralLaw::from_atoms({{1.0, 0.5}, {2.0, 0.5}});
    cplx g = silverstein_bai_sum(Gx, py, 1.0, cplx(0, 2));
    cplx shift = 0.5 * 1.0 / (1.0 + 1.0 * g) + 0.5 * 2.0 / (1.0 + 2.0 * g);
    CHECK(std::abs(Gx(cplx(0, 2) - 1.0 * shift) - g) < 1e-9);
}

TEST_CASE("girko variance profile solver") {
    cplx s(0.4, 0.8);
    VarianceProfile constant{[](double, double) { return 1.0; }, 0.5, 64, 64};
    auto sol = girko_profile_solve(constant, s);
    CHECK(std::abs(sol.G - stieltjes_of_law(SpectralLaw::marchenko_pastur(0.5), s)) <
          1e-9);
    // u constant in x for a constant profile
    for (const auto& u : sol.u) CHECK(std::abs(u - sol.u.front()) < 1e-9);

    VarianceProfile zero{[](double, double) { return 0.0; }, 0.5, 16, 16};
    CHECK(std::abs(girko_profile_solve(zero, s).G + 1.0 / s) < 1e-10);

    VarianceProfile negative{[](double, double) { return -1.0; }, 0.5, 8, 8};
    CHECK_THROWS_AS(girko_profile_solve(negative, s), std::domain_error);
}

TEST_CASE("kronecker resource pooling") {
    cplx s(0, 1);
    auto pm1 = SpectralLaw::point_mass(1.0);
    // R = 1 equals the Silverstein-Bai X=0 route
    auto Gzero = [](cplx u) { return -1.0 / u; };
    CHECK(std::abs(kronecker_pooling(pm1, 1.0, 1, s) -
                   silverstein_bai_sum(Gzero, pm1, 1.0, s)) < 1e-9);
    // R = 2 has the same effect as halving beta
    CHECK(std::abs(kronecker_pooling(pm1, 1.0, 2, s) -
                   kronecker_pooling(pm1, 0.5, 1, s)) < 1e-9);
    CHECK(std::abs(kronecker_pooling(pm1, 1.0, 2, s) -
                   stieltjes_of_law(SpectralLaw::marchenko_pastur(0.5), s)) < 1e-9);
}

TEST_CASE("product chain transforms") {
    // single factor: the MP S-transform
    CHECK(std::abs(product_chain_s({0.7, 1.0}, cplx(0.3, 0)) -
                   1.0 / (cplx(0.3, 0) + 0.7)) < 1e-14);
    CHECK(std::abs(product_chain_s({0.7, 1.0}, cplx(0.3, 0)) -
                   law_s_transform(SpectralLaw::marchenko_pastur(0.7), cplx(0.3, 0))) <
          1e-12);
    CHECK(product_chain_s({1.0, 1.0, 1.0}, cplx(1.0, 0)).real() ==
          doctest::Approx(0.25));
    CHECK_THROWS_AS(product_chain_s({1.0, 1.0, 1.0}, cplx(-1.0, 0)),
                    std::domain_error);
    CHECK_THROWS_AS(product_chain_s({0.7, 0.9}, cplx(0.3, 0)), std::domain_error);

    // N = 1 polynomial reduces to the closed MP transform
    for (cplx s : {cplx(0.9, 0.7), cplx(2.0, 0.2), cplx(-0.4, 1.0)})
        CHECK(std::abs(product_chain_stieltjes({0.7, 1.0}, s) -
                       stieltjes_of_law(SpectralLaw::marchenko_pastur(0.7), s)) <
              1e-10);
    // normalization s G -> -1 at the asymptote
    cplx far(0, 100.0);
    CHECK(std::abs(far * product_chain_stieltjes({1.0, 1.0, 1.0}, far) + 1.0) < 0.02);
}

TEST_CASE("free log-mgf quadratures") {
    CHECK(free_log_mgf({0.0, 0.0}, [](double w) { return w; }) == 0.0);
    CHECK(free_log_mgf({2.0}, [](double w) { return w; }) == doctest::Approx(2.0));
    CHECK(free_log_mgf({0.5}, [](double w) { return 1.0 / (1.0 - w); }) ==
          doctest::Approx(-std::log(0.5)).epsilon(1e-10));
}

TEST_CASE("operator-valued fixed point") {
    cplx z(0.5, 0.9);
    // tau = 0: point mass at zero
    auto r0 = operator_valued_mimo({0.0}, 1, 1, z);
    CHECK(std::abs(r0.G + 1.0 / z) < 1e-12);

    // scalar constant tau: the quadratic solved analytically in-test
    double c = 3.0;
    auto r = operator_valued_mimo({c}, 1, 1, z);
    // g = 1/(z - v/(1 - v g)), v = c/2; as a quadratic: v z g^2 - (z + v) g + 1 = 0
    double v = c / 2.0;
    cplx disc = std::sqrt((z + v) * (z + v) - 4.0 * v * z);
    cplx gA = ((z + v) + disc) / (2.0 * v * z);
    cplx gB = ((z + v) - disc) / (2.0 * v * z);
    cplx gtheorem = std::abs(-gA - r.G) < std::abs(-gB - r.G) ? gA : gB;
    CHECK(std::abs(-gtheorem - r.G) < 1e-10);

    // reduces to the scalar Silverstein solution
    CHECK(std::abs(r.G - silverstein_product(SpectralLaw::point_mass(c / 2.0), 1.0, z)) <
          1e-8);
    CHECK(std::abs(r.G - stieltjes_of_law(
                             SpectralLaw::marchenko_pastur(1.0).scaled(c / 2.0), z)) <
          1e-8);

    // symmetry requirement tau(i,k;j,l) = tau(j,l;i,k)
    std::vector<double> bad(16, 0.0);
    tau_at(bad, 2, 2, 0, 0, 1, 1) = 1.0;
    CHECK_THROWS_AS(operator_valued_mimo(bad, 2, 2, z), std::invalid_argument);
}

TEST_CASE("r-diagonal densities") {
    auto s_gin = [](double x) { return 1.0 / (1.0 + x); };
    CHECK(rdiagonal_density(s_gin, cplx(0.5, 0)) == doctest::Approx(1.0 / kPi));
    CHECK(rdiagonal_density(s_gin, cplx(0.0, 0.9)) == doctest::Approx(1.0 / kPi));
    CHECK(rdiagonal_density(s_gin, cplx(1.5, 0)) == 0.0);

    auto s_two = [](double x) { return 1.0 / ((1.0 + x) * (1.0 + x)); };
    CHECK(rdiagonal_density(s_two, cplx(0.5, 0)) ==
          doctest::Approx(1.0 / (2.0 * kPi * 0.5)));
    // haar: all singular values 1, support collapses to |z| = 1
    auto s_haar = [](double) { return 1.0; };
    CHECK(rdiagonal_density(s_haar, cplx(0.5, 0)) == 0.0);
    CHECK(rdiagonal_density(s_haar, cplx(1.3, 0)) == 0.0);
}

TEST_CASE("sampled density normalization guard") {
    // a sparse grid over the arcsine law misses edge mass and must say so
    auto bin = SpectralLaw::binary_symmetric();
    std::vector<double> coarse;
    for (int i = 0; i < 40; ++i) coarse.push_back(-2.5 + 5.0 * (i + 0.5) / 40);
    CHECK_THROWS_AS(add_free_convolve(bin, bin, coarse), precision_error);
}
