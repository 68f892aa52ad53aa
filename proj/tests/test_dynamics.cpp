#include <cmath>
#include <numbers>
#include <tuple>

#include "doctest.h"
#include "eqd/dynamics.hpp"
#include "eqd/errors.hpp"

using namespace eqd;
using namespace std::complex_literals;
using std::numbers::pi;

namespace {
const DynMap z2 = DynMap::parse("rational1d: num=[1,0,0] den=[0,0,1]");
const DynMap cheb = DynMap::parse("rational1d: num=[1,0,-2] den=[0,0,1]");
}  // namespace

TEST_CASE("evaluate examples") {
    CHECK(chordal_distance(evaluate(z2, ProjPoint::normalize({2.0, 1.0})), ProjPoint::normalize({4.0, 1.0})) < 1e-15);
    const auto mono = DynMap::monomial2d({{{2, 0}, {0, 2}}});
    CHECK(chordal_distance(evaluate(mono, ProjPoint::affine(2.0, 3.0)), ProjPoint::affine(4.0, 9.0)) < 1e-14);
    const auto prod = DynMap::parse("product2d: p=[1,0,-2] q=[1,0,0]");
    CHECK(chordal_distance(evaluate(prod, ProjPoint::affine(2.0, 1.0)), ProjPoint::affine(2.0, 1.0)) < 1e-15);
    // infinity is fixed by polynomial maps
    CHECK(chordal_distance(evaluate(cheb, ProjPoint::normalize({1.0, 0.0})), ProjPoint::normalize({1.0, 0.0})) == 0.0);
}

TEST_CASE("iterate examples") {
    const auto p = ProjPoint::affine(std::polar(1.0, pi / 4));
    CHECK(chordal_distance(iterate(z2, p, 3), ProjPoint::affine(1.0)) < 1e-14);
    CHECK(chordal_distance(iterate(cheb, p, 0), p) == 0.0);
    // conjugacy 2 cos t -> 2 cos 2t
    const auto x = ProjPoint::affine(2.0 * std::cos(pi / 5));
    CHECK(chordal_distance(iterate(cheb, x, 2), ProjPoint::affine(2.0 * std::cos(4 * pi / 5))) < 1e-14);
}

TEST_CASE("iterate reports the failing step on indeterminacy") {
    const auto mono = DynMap::monomial2d({{{1, -1}, {1, 1}}});
    CHECK_THROWS_AS(evaluate(mono, ProjPoint::affine(0.0, 1.0)), IndeterminacyPoint);
    try {
        iterate(mono, ProjPoint::affine(1.0, 0.0), 5);
        FAIL("expected IndeterminacyPoint");
    } catch (const IndeterminacyPoint& e) {
        CHECK(e.step() == 0);
    }
}

TEST_CASE("evaluate composes with iterate") {
    const std::vector<DynMap> maps{
        z2, cheb, DynMap::parse("rational1d: num=[1,0,0.1] den=[0,0,1]"),
        DynMap::parse("product2d: p=[1,0,-1] q=[1,0.5,0]"),
        DynMap::parse("skew2d: p=[1,0,0.2] q=[[0.1,0,1],[0.3,0.2,0],[0.5,0,0]]"),
        DynMap::monomial2d({{{3, 1}, {1, 2}}})};
    Stream rng(17);
    for (const auto& m : maps) {
        for (int t = 0; t < 1000 / static_cast<int>(maps.size()); ++t) {
            const auto p = sample_fubini_study(rng, m.dim());
            const std::size_t n = t % 6;
            double err = 0.0;
            try {
                err = chordal_distance(evaluate(m, iterate(m, p, n)), iterate(m, p, n + 1));
            } catch (const IndeterminacyPoint&) {
                // monomial orbits can underflow onto a coordinate line
                CHECK(m.family() == Family::Monomial2D);
            }
            CHECK(err < 1e-9);
        }
    }
}

TEST_CASE("degree closed forms") {
    const auto prod = DynMap::parse("product2d: p=[1,0,-2] q=[1,0,0]");
    const auto r = degrees(prod);
    CHECK(r.d_t == 4);
    for (std::size_t n = 0; n <= 10; ++n) CHECK(r.delta(n) == std::pow(2.0, n));

    const auto cubic = DynMap::parse("rational1d: num=[1,0,0,1] den=[0,0,0,1]");
    CHECK(degrees(cubic).d_t == 3);
    CHECK(degrees(cubic).delta(7) == 1.0);

    const auto mono = degrees(DynMap::monomial2d({{{3, 1}, {1, 2}}}));
    CHECK(mono.d_t == 5);
    CHECK(mono.d_list[1] == doctest::Approx((5.0 + std::sqrt(5.0)) / 2.0).epsilon(1e-14));
    CHECK(mono.delta_is_leading_order);
}

TEST_CASE("check_hypothesis") {
    auto [ok, margin] = check_hypothesis(z2);
    CHECK(ok);
    CHECK(margin == 1.0);
    std::tie(ok, margin) = check_hypothesis(DynMap::monomial2d({{{3, 1}, {1, 2}}}));
    CHECK(ok);
    CHECK(margin == doctest::Approx(5.0 - (5.0 + std::sqrt(5.0)) / 2.0).epsilon(1e-13));
    std::tie(ok, margin) = check_hypothesis(DynMap::monomial2d({{{2, 1}, {1, 1}}}));
    CHECK_FALSE(ok);
    CHECK(margin < 0.0);
    CHECK_THROWS_AS(require_hypothesis(DynMap::monomial2d({{{2, 1}, {1, 1}}})), HypothesisViolated);
}

TEST_CASE("(c delta_n)^(1/n) is non-increasing") {
    for (const auto& m : {z2, DynMap::parse("product2d: p=[1,0,0] q=[1,0,0]"), DynMap::monomial2d({{{3, 1}, {1, 2}}})}) {
        const auto r = degrees(m);
        const double c = 2.0;
        double prev = INFINITY;
        for (std::size_t n = 1; n <= 20; ++n) {
            const double v = std::pow(c * r.delta(n), 1.0 / static_cast<double>(n));
            CHECK(v <= prev * (1 + 1e-15));
            prev = v;
        }
    }
}

TEST_CASE("monomial maps commute with the torus action") {
    const auto m = DynMap::monomial2d({{{3, 1}, {1, 2}}});
    const auto& A = std::get<Monomial2D>(m.data()).A;
    Stream rng(1);
    for (int t = 0; t < 200; ++t) {
        const cplx z = std::polar(0.2 + rng.uniform(), 6.0 * rng.uniform());
        const cplx w = std::polar(0.2 + rng.uniform(), 6.0 * rng.uniform());
        const double th = 6.0 * rng.uniform();
        const auto lhs = evaluate(m, ProjPoint::affine(std::polar(1.0, th) * z, w));
        const auto img = evaluate(m, ProjPoint::affine(z, w));
        const auto rhs = ProjPoint::affine(std::polar(1.0, A[0][0] * th) * img.affine_coord(0),
                                           std::polar(1.0, A[1][0] * th) * img.affine_coord(1));
        CHECK(chordal_distance(lhs, rhs) < 1e-12);
    }
}

TEST_CASE("map grammar") {
    for (const char* s : {"rational1d: num=[1,0,0] den=[0,0,1]", "rational1d: num=[1,0,0.25j] den=[0,0,1]",
                          "rational1d: num=[2-1j, 0.5, 1] den=[1, 0, 3+0.5j]", "product2d: p=[1,0,-2] q=[1, 0, 0]",
                          "skew2d: p=[1,0,0] q=[[0,0,1],[0,1,0],[0.5,0,0]]", "monomial2d: A=[[3,1],[1,2]]"}) {
        const auto m = DynMap::parse(s);
        CHECK(DynMap::parse(m.spec()).spec() == m.spec());
        CHECK(m.hash().size() == 16);
    }
    CHECK(DynMap::parse("rational1d: num=[1,0,0.25j] den=[0,0,1]").hash() !=
          DynMap::parse("rational1d: num=[1,0,0.25] den=[0,0,1]").hash());
    CHECK_THROWS_AS(DynMap::parse("rational1d: num=[1,0,0 den=[0,0,1]"), ParseError);
    CHECK_THROWS_AS(DynMap::parse("cubic2d: p=[1]"), ParseError);
    try {
        DynMap::parse("monomial2d: A=[[3,1],[1,2.5]]");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.position() == 14);
    }
    // common root z = 1
    CHECK_THROWS_AS(DynMap::rational1d({1, 0, -1}, {0, 1, -1}), InvalidMap);
    CHECK_THROWS_AS(DynMap::rational1d({0, 1, 0}, {0, 0, 1}), InvalidMap);
    CHECK_THROWS_AS(DynMap::product2d({1, 0, 0}, {1, 0, 0, 0}), InvalidMap);
    CHECK_THROWS_AS(DynMap::skew2d({1, 0, 0}, {{0, 0, 0}, {0, 1, 0}, {1, 0, 0}}), InvalidMap);
    CHECK_THROWS_AS(DynMap::monomial2d({{{2, 4}, {1, 2}}}), InvalidMap);
}
