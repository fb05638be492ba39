#include "freelim/transforms.hpp"

#include "freelim/errors.hpp"
#include "freelim/quadrature.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace freelim;

namespace {
constexpr double kPi = std::numbers::pi;

cplx quad_stieltjes(const SpectralLaw& law, cplx s) {
    cplx acc = 0.0;
    for (const auto& a : law.atoms()) acc += a.mass / (a.location - s);
    for (const auto& iv : law.support())
        acc += integrate_edge_c([&](double x) -> cplx { return law.density(x) / (x - s); },
                                iv.lo, iv.hi, 128, 16);
    return acc;
}
}  // namespace

TEST_CASE("stieltjes closed forms against quadrature") {
    std::vector<cplx> probes{{0.3, 0.9}, {1.5, 0.4}, {-0.8, 1.3}, {2.5, 0.05}, {0.0, 2.0}};
    for (const auto& law :
         {SpectralLaw::semicircle(), SpectralLaw::quarter_circle(),
          SpectralLaw::marchenko_pastur(0.5), SpectralLaw::marchenko_pastur(1.0),
          SpectralLaw::marchenko_pastur(2.0), SpectralLaw::inverse_semicircle()}) {
        for (cplx s : probes)
            CHECK(std::abs(stieltjes_of_law(law, s) - quad_stieltjes(law, s)) < 1e-10);
        // real probes outside the support
        CHECK(std::abs(stieltjes_of_law(law, cplx(9.0, 0.0)) -
                       quad_stieltjes(law, cplx(9.0, 0.0))) < 1e-10);
        CHECK(std::abs(stieltjes_of_law(law, cplx(-7.0, 0.0)) -
                       quad_stieltjes(law, cplx(-7.0, 0.0))) < 1e-10);
    }
}

TEST_CASE("stieltjes table values") {
    // G_{alpha I}(s) = 1/(alpha - s) at alpha = 2, s = i
    cplx g = stieltjes_of_law(SpectralLaw::point_mass(2.0), cplx(0, 1));
    CHECK(g.real() == doctest::Approx(0.4));
    CHECK(g.imag() == doctest::Approx(0.2));
    // semicircle at 2i: i(sqrt(2) - 1)
    cplx gs = stieltjes_of_law(SpectralLaw::semicircle(), cplx(0, 2));
    CHECK(gs.real() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(gs.imag() == doctest::Approx(std::numbers::sqrt2 - 1.0));
    // inverse semicircle: 1/sqrt(s^2 - 4)
    cplx gy = stieltjes_of_law(SpectralLaw::inverse_semicircle(), cplx(3.0, 0.0));
    CHECK(gy.real() == doctest::Approx(-1.0 / std::sqrt(5.0)));
}

TEST_CASE("stieltjes branch and domain rules") {
    auto sc = SpectralLaw::semicircle();
    // Im G >= 0 on the upper half plane
    for (double re : {-3.0, -1.0, 0.0, 1.7, 3.0})
        for (double im : {0.01, 0.5, 2.0})
            CHECK(stieltjes_of_law(sc, cplx(re, im)).imag() >= 0.0);
    // G -> -1/s along the imaginary axis
    cplx far = stieltjes_of_law(sc, cplx(0, 100.0));
    CHECK(std::abs(far - cplx(0, 0.01)) < 1e-3);
    CHECK_THROWS_AS(stieltjes_of_law(sc, cplx(0.5, 0.0)), std::domain_error);
    CHECK_THROWS_AS(stieltjes_of_law(sc, cplx(0.0, -1.0)), std::domain_error);
    // gap query between atom and support edge (quadrature path)
    auto mp = SpectralLaw::marchenko_pastur(0.25);
    cplx gap = stieltjes_of_law(mp, cplx(0.1, 0.0));
    CHECK(std::abs(gap - quad_stieltjes(mp, cplx(0.1, 0.0))) < 1e-9);
}

TEST_CASE("density from stieltjes") {
    auto sc = SpectralLaw::semicircle();
    auto G = [&](cplx s) { return stieltjes_of_law(sc, s); };
    auto inv = density_from_stieltjes(G, {0.0});
    CHECK(inv.density[0] == doctest::Approx(1.0 / kPi).epsilon(1e-6));

    // atom signature: ~1/(pi eps) growth flagged with the right mass
    auto pm = SpectralLaw::point_mass(2.0);
    auto Gp = [&](cplx s) { return stieltjes_of_law(pm, s); };
    CHECK(Gp(cplx(2.0, 1e-3)).imag() / kPi == doctest::Approx(1.0 / (kPi * 1e-3)));
    auto invp = density_from_stieltjes(Gp, {1.0, 2.0, 3.0});
    REQUIRE(invp.detected_atoms.size() == 1);
    CHECK(invp.detected_atoms[0].location == 2.0);
    CHECK(invp.detected_atoms[0].mass == doctest::Approx(1.0).epsilon(1e-3));

    // MP(0.5) round trip on a 200-point grid: L1 < 1e-3
    auto mp = SpectralLaw::marchenko_pastur(0.5);
    auto Gm = [&](cplx s) { return stieltjes_of_law(mp, s); };
    std::vector<double> grid;
    for (int i = 0; i < 200; ++i) grid.push_back(0.02 + 3.2 * (i + 0.5) / 200);
    auto invm = density_from_stieltjes(Gm, grid);
    double l1 = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        double e0 = std::abs(invm.density[i - 1] - mp.density(grid[i - 1]));
        double e1 = std::abs(invm.density[i] - mp.density(grid[i]));
        l1 += 0.5 * (e0 + e1) * (grid[i] - grid[i - 1]);
    }
    CHECK(l1 < 1e-3);

    // unstable extrapolation is reported, not silently returned
    auto bad = [](cplx s) { return cplx(0.0, std::pow(s.imag(), -0.3)); };
    CHECK_THROWS_AS(density_from_stieltjes(bad, {0.0}), solver_error);
    CHECK_THROWS_AS(density_from_stieltjes(
                        [&](cplx s) { return stieltjes_of_law(sc, s); },
                        std::vector<double>{0.0}, {1e-2, 1e-3, 1e-7}),
                    std::invalid_argument);
}

TEST_CASE("r transform") {
    CHECK(law_r_transform(SpectralLaw::semicircle(), cplx(0.3, 0)).real() ==
          doctest::Approx(0.3));
    CHECK(law_r_transform(SpectralLaw::marchenko_pastur(0.5), cplx(0.5, 0)).real() ==
          doctest::Approx(1.0));
    // point mass: R identically alpha
    for (double w : {0.1, 0.4, -0.3})
        CHECK(law_r_transform(SpectralLaw::point_mass(1.3), cplx(w, 0)).real() ==
              doctest::Approx(1.3));

    // numeric inversion path matches the closed form off the table
    auto mp = SpectralLaw::marchenko_pastur(0.5);
    auto G = [&](cplx s) { return stieltjes_of_law(mp, s); };
    for (cplx w : {cplx(0.3, 0.0), cplx(0.5, 0.2), cplx(-0.2, 0.1)})
        CHECK(std::abs(r_from_stieltjes(G, w) - 0.5 / (1.0 - w)) < 1e-9);
    // R(0) = mean
    CHECK(r_from_stieltjes(G, cplx(0, 0)).real() == doctest::Approx(0.5).epsilon(1e-8));

    // scaling law R_{aX}(w) = a R_X(a w), numerically on the scaled law
    for (double alpha : {0.5, 2.0}) {
        auto scaled = mp.scaled(alpha);
        auto Gs = [&](cplx s) { return stieltjes_of_law(scaled, s); };
        for (cplx w : {cplx(0.2, 0.0), cplx(0.1, 0.1)}) {
            cplx lhs = r_from_stieltjes(Gs, w);
            cplx rhs = alpha * law_r_transform(mp, alpha * w);
            CHECK(std::abs(lhs - rhs) < 1e-9);
        }
    }
}

TEST_CASE("s transform") {
    CHECK(law_s_transform(SpectralLaw::point_mass(2.0), cplx(0.1, 0)).real() ==
          doctest::Approx(0.5));
    CHECK(law_s_transform(SpectralLaw::marchenko_pastur(1.0), cplx(1.0, 0)).real() ==
          doctest::Approx(0.5));
    auto mp1 = SpectralLaw::marchenko_pastur(1.0);
    auto G = [&](cplx s) { return stieltjes_of_law(mp1, s); };
    // numeric inversion strictly inside the image of Upsilon
    for (cplx z : {cplx(0.25, 0.0), cplx(0.5, 0.0), cplx(0.3, 0.1)})
        CHECK(std::abs(s_from_stieltjes(G, z) - 1.0 / (1.0 + z)) < 1e-9);
    // 1/S(0) = mean
    CHECK(1.0 / s_from_stieltjes(G, cplx(0, 0)).real() ==
          doctest::Approx(1.0).epsilon(1e-8));
    CHECK_THROWS_AS(s_from_stieltjes(
                        [&](cplx s) { return stieltjes_of_law(SpectralLaw::semicircle(), s); },
                        cplx(0.3, 0)),
                    unsupported_error);
    // table scaling S_{aX}(z) = a S_X(z) on point masses and MP
    auto two_sided = SpectralLaw::marchenko_pastur(0.5);
    for (double alpha : {0.5, 2.0}) {
        auto scaled = two_sided.scaled(alpha);
        auto Gs = [&](cplx s) { return stieltjes_of_law(scaled, s); };
        cplx z(0.2, 0.0);
        // the table convention reads S_{aX} = a^{-1} S_X; assert it verbatim
        CHECK(std::abs(s_from_stieltjes(Gs, z) -
                       law_s_transform(two_sided, z) / alpha) < 1e-8);
        CHECK(std::abs(law_s_transform(SpectralLaw::point_mass(alpha * 2.0), z) -
                       law_s_transform(SpectralLaw::point_mass(2.0), z) / alpha) <
              1e-12);
    }
}

TEST_CASE("r-s duality") {
    CHECK(r_s_duality_check(SpectralLaw::marchenko_pastur(0.5), cplx(0.2, 0)) < 1e-8);
    CHECK(r_s_duality_check(SpectralLaw::point_mass(3.0), cplx(0.4, 0)) < 1e-12);
    CHECK_THROWS_AS(r_s_duality_check(SpectralLaw::semicircle(), cplx(0.2, 0)),
                    unsupported_error);
}

TEST_CASE("r and s decrease on the real line") {
    auto mp = SpectralLaw::marchenko_pastur(0.8);
    double prev_r = 1e300, prev_s = 1e300;
    for (double w = -0.5; w < 0.55; w += 0.25) {
        double r = law_r_transform(mp, cplx(w, 0)).real();
        CHECK(r < prev_r);
        prev_r = r;
    }
    for (double z = 0.1; z < 1.05; z += 0.3) {
        double s = law_s_transform(mp, cplx(z, 0)).real();
        CHECK(s < prev_s);
        prev_s = s;
    }
}

TEST_CASE("xxh vs xhx identity") {
    // beta = 1: both sides identical
    cplx g(0.3, 0.4);
    CHECK(std::abs(xhx_from_xxh(g, 1.0, cplx(0, 1)) - g) < 1e-15);
    CHECK_THROWS_AS(xhx_from_xxh(g, 0.5, cplx(0, 0)), std::domain_error);

    // MP pair at beta = 0.5: X'X carries no atom; the (beta-1)/s term moves
    // the XX' atom across. The K-side law has density 2 p_mp on the bulk.
    auto mp = SpectralLaw::marchenko_pastur(0.5);
    auto bulk = SpectralLaw::custom(
        mp.support(), [mp](double x) { return 2.0 * mp.density(x); }, {});
    for (cplx s : {cplx(0.4, 0.8), cplx(1.2, 0.3), cplx(-1.0, 0.0)}) {
        cplx lhs = xhx_from_xxh(stieltjes_of_law(mp, s), 0.5, s);
        cplx rhs = quad_stieltjes(bulk, s);
        CHECK(std::abs(lhs - rhs) < 1e-9);
    }
}

TEST_CASE("analytic transform wrapper") {
    auto t = stieltjes_transform(SpectralLaw::semicircle());
    CHECK(t.kind == AnalyticTransform::Kind::stieltjes);
    CHECK(std::abs(t.eval(cplx(0, 2)) - cplx(0, std::numbers::sqrt2 - 1.0)) < 1e-12);
    CHECK(t.branch_rule.find("Im G") != std::string::npos);
}
