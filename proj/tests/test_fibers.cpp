#include <algorithm>
#include <cmath>
#include <map>

#include "doctest.h"
#include "eqd/errors.hpp"
#include "eqd/fibers.hpp"
#include "eqd/poly.hpp"

using namespace eqd;
using namespace std::complex_literals;

namespace {

bool has_root(const RootSet& rs, cplx z, int mult, double tol = 1e-12) {
    return std::any_of(rs.roots.begin(), rs.roots.end(),
                       [&](const Root& r) { return std::abs(r.value - z) < tol && r.multiplicity == mult; });
}

bool fiber_contains(const Fiber& f, const ProjPoint& p, int mult, double tol = 1e-12) {
    return std::any_of(f.points.begin(), f.points.end(), [&](const FiberPoint& q) {
        return chordal_distance(q.point, p) < tol && q.multiplicity == mult;
    });
}

std::vector<DynMap> family_panel() {
    return {DynMap::parse("rational1d: num=[1,0,0] den=[0,0,1]"),
            DynMap::parse("rational1d: num=[1,0.3-0.2j,0.1,2] den=[0.5j,1,0,1]"),
            DynMap::parse("rational1d: num=[1,0,-1,0,0.3] den=[0,0.2,0,1,0]"),
            DynMap::parse("product2d: p=[1,0,-2] q=[1,0.2j,0.1]"),
            DynMap::parse("product2d: p=[1,0,0,0.3] q=[0.5,0,1,0]"),
            DynMap::parse("skew2d: p=[1,0,-1] q=[[0.1,0,1],[0.3,0.2,0],[0.5,0,0]]"),
            DynMap::monomial2d({{{2, 0}, {0, 2}}}),
            DynMap::monomial2d({{{3, 1}, {1, 2}}}),
            DynMap::monomial2d({{{2, -1}, {1, 2}}}),
            DynMap::monomial2d({{{1, 2}, {3, 0}}})};
}

}  // namespace

TEST_CASE("roots examples") {
    auto rs = roots(std::vector<cplx>{-1, 0, 1});
    CHECK(rs.roots.size() == 2);
    CHECK(has_root(rs, 1.0, 1));
    CHECK(has_root(rs, -1.0, 1));
    rs = roots(std::vector<cplx>{1, 0, 1});
    CHECK(has_root(rs, 1.0i, 1));
    CHECK(has_root(rs, -1.0i, 1));
    // (z - 2)^2 (z + 1) = z^3 - 3 z^2 + 4
    rs = roots(std::vector<cplx>{4, 0, -3, 1});
    CHECK(rs.roots.size() == 2);
    CHECK(has_root(rs, 2.0, 2, 1e-10));
    CHECK(has_root(rs, -1.0, 1));
    CHECK_FALSE(rs.ill_conditioned);
    CHECK_THROWS_AS(roots(std::vector<cplx>{3}), NoRoots);
    CHECK_THROWS_AS(roots(std::vector<cplx>{3, 0, 0}), NoRoots);
    rs = roots(std::vector<cplx>{0, 0, 1});
    CHECK(has_root(rs, 0.0, 2));
}

TEST_CASE("roots reach the backward-error target on random polynomials") {
    Stream rng(31);
    for (int t = 0; t < 2000; ++t) {
        const int d = 1 + t % 8;
        std::vector<cplx> c;
        for (int k = 0; k <= d; ++k) c.emplace_back(rng.normal(), rng.normal());
        // a few badly scaled ones
        if (t % 5 == 0) c[0] *= 1e8;
        const auto rs = roots(c);
        int total = 0;
        for (const auto& r : rs.roots) {
            total += r.multiplicity;
            CHECK(r.backward_error < kRootBackwardTol);
        }
        CHECK(total == d);
    }
}

TEST_CASE("roots: clusters of multiple roots") {
    // (z - 1)^3 (z + 0.5i)^2
    std::vector<cplx> c{1.0};
    for (cplx r : {cplx(1.0), cplx(1.0), cplx(1.0), -0.5i, -0.5i}) c = poly::multiply(c, std::vector<cplx>{-r, 1.0});
    const auto rs = roots(c);
    int total = 0;
    for (const auto& r : rs.roots) total += r.multiplicity;
    CHECK(total == 5);
    CHECK(has_root(rs, 1.0, 3, 1e-6));
    CHECK(has_root(rs, -0.5i, 2, 1e-7));
}

TEST_CASE("fiber examples") {
    const auto z2 = DynMap::parse("rational1d: num=[1,0,0] den=[0,0,1]");
    auto f = fiber(z2, ProjPoint::affine(1.0));
    CHECK(f.total_multiplicity() == 2);
    CHECK(fiber_contains(f, ProjPoint::affine(1.0), 1));
    CHECK(fiber_contains(f, ProjPoint::affine(-1.0), 1));

    const auto cheb = DynMap::parse("rational1d: num=[1,0,-2] den=[0,0,1]");
    f = fiber(cheb, ProjPoint::affine(2.0));
    CHECK(fiber_contains(f, ProjPoint::affine(2.0), 1));
    CHECK(fiber_contains(f, ProjPoint::affine(-2.0), 1));

    const auto sq = DynMap::monomial2d({{{2, 0}, {0, 2}}});
    f = fiber(sq, ProjPoint::affine(1.0, 1.0));
    CHECK(f.points.size() == 4);
    for (double a : {1.0, -1.0})
        for (double b : {1.0, -1.0}) CHECK(fiber_contains(f, ProjPoint::affine(a, b), 1));
    CHECK_THROWS_AS(fiber(sq, ProjPoint::affine(0.0, 1.0)), IndeterminacyPoint);

    // critical values: z^2 over 0 and over infinity
    f = fiber(z2, ProjPoint::affine(0.0));
    CHECK(f.points.size() == 1);
    CHECK(fiber_contains(f, ProjPoint::affine(0.0), 2, 1e-8));
    f = fiber(z2, ProjPoint::normalize({1.0, 0.0}));
    CHECK(fiber_contains(f, ProjPoint::normalize({1.0, 0.0}), 2, 1e-8));

    // product map over a point at infinity: d points of multiplicity d each
    const auto prod = DynMap::parse("product2d: p=[1,0,-2] q=[1,0,0]");
    f = fiber(prod, ProjPoint::normalize({1.0, 1.0, 0.0}));
    CHECK(f.total_multiplicity() == 4);
    CHECK(f.points.size() == 2);
}

TEST_CASE("fiber contract on random base points") {
    Stream rng(4);
    for (const auto& m : family_panel()) {
        const int d_t = degrees(m).d_t;
        int flagged = 0;
        for (int t = 0; t < 300; ++t) {
            const auto z = sample_fubini_study(rng, m.dim());
            const auto f = fiber(m, z);
            CHECK(f.total_multiplicity() == d_t);
            if (f.flagged) {
                ++flagged;
                continue;
            }
            for (const auto& p : f.points) CHECK(p.residual < kFiberResidualTol);
        }
        CHECK(flagged == 0);
    }
}

TEST_CASE("monomial fibers enumerate every coset") {
    Stream rng(8);
    for (auto A : {std::array<std::array<long, 2>, 2>{{{3, 1}, {1, 2}}}, {{{2, 0}, {0, 3}}}, {{{4, 1}, {2, 3}}},
                   {{{-2, 1}, {1, 2}}}}) {
        const auto m = DynMap::monomial2d(A);
        const int d_t = degrees(m).d_t;
        CHECK(std::get<Monomial2D>(m.data()).cosets.size() == static_cast<std::size_t>(d_t));
        const auto f = fiber(m, sample_fubini_study(rng, 2));
        CHECK(f.points.size() == static_cast<std::size_t>(d_t));
        for (std::size_t i = 0; i < f.points.size(); ++i)
            for (std::size_t j = i + 1; j < f.points.size(); ++j)
                CHECK(chordal_distance(f.points[i].point, f.points[j].point) > kFiberMergeTol);
    }
}

TEST_CASE("random_preimage frequencies") {
    const auto z2 = DynMap::parse("rational1d: num=[1,0,0] den=[0,0,1]");
    Stream rng(12);
    const int n = 10000;
    int minus = 0;
    for (int i = 0; i < n; ++i)
        if (chordal_distance(random_preimage(z2, ProjPoint::affine(1.0), rng), ProjPoint::affine(-1.0)) < 1e-12) ++minus;
    CHECK(std::abs(minus - n / 2) < 3.0 * std::sqrt(n * 0.25));

    const auto sq = DynMap::monomial2d({{{2, 0}, {0, 2}}});
    std::map<std::pair<int, int>, int> counts;
    for (int i = 0; i < n; ++i) {
        const auto p = random_preimage(sq, ProjPoint::affine(1.0, 1.0), rng);
        counts[{p.affine_coord(0).real() > 0, p.affine_coord(1).real() > 0}]++;
    }
    CHECK(counts.size() == 4);
    for (auto [k, c] : counts) CHECK(std::abs(c - n / 4) < 3.0 * std::sqrt(n * 0.25 * 0.75));

    const auto cheb = DynMap::parse("rational1d: num=[1,0,-2] den=[0,0,1]");
    for (int i = 0; i < 1000; ++i) {
        const cplx w = random_preimage(cheb, ProjPoint::affine(0.0), rng).affine_coord(0);
        CHECK(std::abs(std::abs(w) - std::sqrt(2.0)) < 1e-12);
        CHECK(std::abs(w.imag()) < 1e-12);
    }
}
