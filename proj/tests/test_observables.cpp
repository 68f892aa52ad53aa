#include <cmath>
#include <limits>

#include "doctest.h"
#include "eqd/errors.hpp"
#include "eqd/observables.hpp"

using namespace eqd;
using namespace std::complex_literals;

namespace {

const double kPi = std::acos(-1.0);

std::vector<Observable> p1_panel() {
    std::vector<Observable> out;
    for (const char* s : {"chordal_re(0,1)", "chordal_re(0,0)", "dist_to([1,0])", "dist_to([1,1j])",
                          "bump([1,0.5], 0.8)", "loglog(1,0; 0)", "lip_of(abs, chordal_re(0,1))",
                          "lip_of(clip(-0.5,0.5), chordal_re(1,1))", "sum(dist_to([0,1]), scale(0.5, chordal_re(0,1)))",
                          "lip_of(clip(-3,0), qpsh_log(1,-0.2))"})
        out.push_back(Observable::parse(s));
    return out;
}

}  // namespace

TEST_CASE("grammar examples") {
    CHECK(Observable::parse("dist_to([1,0])")(ProjPoint::normalize({1.0, 0.0})) == doctest::Approx(0.0));
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(Observable::parse("chordal_re(0,1)")(ProjPoint::normalize({r, r})) == doctest::Approx(1.0).epsilon(1e-14));
    const double v = Observable::parse("qpsh_log(1,0)")(ProjPoint::normalize({0.0, 1.0}));
    CHECK(v == -std::numeric_limits<double>::infinity());
    CHECK(Observable::parse("const(2.5)")(ProjPoint::normalize({1.0, 2.0})) == 2.5);
}

TEST_CASE("grammar kinds") {
    CHECK(Observable::parse("const(1)").kind() == ObservableKind::Smooth);
    CHECK(Observable::parse("dist_to([1,0])").kind() == ObservableKind::Lipschitz);
    CHECK(Observable::parse("qpsh_log(1,2j)").kind() == ObservableKind::QpshLog);
    CHECK(Observable::parse("loglog(1,0; 0)").kind() == ObservableKind::Composed);
    CHECK(Observable::parse("lip_of(pos, qpsh_log(1,0))").kind() == ObservableKind::DshDiff);
    CHECK(Observable::parse("lip_of(abs, dist_to([1,0]))").kind() == ObservableKind::Lipschitz);
    CHECK(Observable::parse("sum(const(1), chordal_re(0,1))").kind() == ObservableKind::Smooth);
    CHECK(Observable::parse("scale(-1, qpsh_log(1,0))").kind() == ObservableKind::Composed);
    CHECK(Observable::parse("qpsh_log(1,0,1)").dim() == 2);
}

TEST_CASE("grammar round trip and errors") {
    for (const auto& phi : p1_panel()) {
        const auto again = Observable::parse(phi.spec());
        CHECK(again.spec() == phi.spec());
        const auto z = ProjPoint::normalize({0.3 + 0.1i, 1.0});
        CHECK(again(z) == phi(z));
    }
    auto pos_of = [](const std::string& s) {
        try {
            Observable::parse(s);
        } catch (const ParseError& e) {
            return static_cast<long>(e.position());
        }
        return -1L;
    };
    CHECK(pos_of("wobble(1)") == 0);
    CHECK(pos_of("sum(const(1), nope(2))") == 14);
    CHECK(pos_of("dist_to([1,0]") == 13);
    CHECK(pos_of("bump([1,0], -1)") == 12);
    CHECK(pos_of("dist_to([0,0])") == 8);
    CHECK(pos_of("lip_of(sqrt, const(1))") == 7);
    CHECK(pos_of("const(1) x") == 9);
    CHECK(pos_of("sum(dist_to([1,0]), dist_to([1,0,0]))") == 20);
}

TEST_CASE("dimension mismatch") {
    const auto phi = Observable::parse("dist_to([1,0,0])");
    CHECK_THROWS_AS(phi(ProjPoint::normalize({1.0, 0.0})), DimMismatch);
    CHECK_THROWS_AS(Observable::parse("chordal_re(0,2)")(ProjPoint::normalize({1.0, 0.0})), DimMismatch);
}

TEST_CASE("bump is compactly supported") {
    const auto phi = Observable::parse("bump([1,0], 0.5)");
    CHECK(phi(ProjPoint::normalize({1.0, 0.0})) == doctest::Approx(1.0));
    CHECK(phi(ProjPoint::normalize({0.0, 1.0})) == 0.0);
    CHECK(phi(ProjPoint::normalize({1.0, 0.6})) == 0.0);
}

TEST_CASE("lipschitz estimates") {
    Stream rng(11, 0);
    const auto d = Observable::parse("dist_to([1,0.5j])");
    const double ld = lipschitz_estimate(d, 4000, rng).value;
    CHECK(ld == doctest::Approx(1.0).epsilon(0.05));
    CHECK(ld <= 1.0 + 1e-12);
    CHECK(lipschitz_estimate(constant(3.0), 1000, rng).value == 0.0);

    Stream a(5, 1), b(5, 1);
    const double l1 = lipschitz_estimate(d, 2000, a).value;
    const double l3 = lipschitz_estimate(scale(3.0, d), 2000, b).value;
    CHECK(l3 == doctest::Approx(3.0 * l1).epsilon(1e-12));

    const auto est = lipschitz_estimate(Observable::parse("qpsh_log(1,0)"), 10, rng);
    CHECK(std::isinf(est.value));
    CHECK_FALSE(est.lower_bound);

    Stream r2(3, 0);
    const double d2 = lipschitz_estimate(Observable::parse("dist_to([1,0,1j])"), 4000, r2).value;
    CHECK(d2 == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("lip_of respects the Lipschitz constant of chi") {
    Stream rng(21, 0);
    for (const char* inner : {"chordal_re(0,1)", "dist_to([1,1j])", "sum(chordal_re(0,0), bump([1,0],0.7))"}) {
        const auto phi = Observable::parse(inner);
        const double base = lipschitz_estimate(phi, 3000, rng).value;
        for (const char* chi : {"abs", "pos", "clip(-0.2,0.3)"}) {
            const auto comp = Observable::parse(std::string("lip_of(") + chi + ", " + inner + ")");
            CHECK(lipschitz_estimate(comp, 3000, rng).value <= 1.05 * base);
        }
    }
}

TEST_CASE("star norm examples") {
    CHECK(star_norm_p1(constant(-2.5), 1000) == doctest::Approx(2.5).epsilon(1e-12));
    const auto psi = Observable::parse("dist_to([1,0.3])");
    const auto n1 = sphere_norms(psi, 5000);
    const auto n2 = sphere_norms(scale(-4.0, psi), 5000);
    CHECK(std::sqrt(n2.dirichlet) == doctest::Approx(4.0 * std::sqrt(n1.dirichlet)).epsilon(1e-12));

    // chordal_re(0,1) is the x coordinate on the unit sphere
    const auto x = Observable::parse("chordal_re(0,1)");
    const double s1 = star_norm_p1(x, 10000), s4 = star_norm_p1(x, 40000);
    CHECK(std::abs(s1 - s4) / s4 < 0.02);
    CHECK(s4 == doctest::Approx(std::sqrt(4.0 * kPi / 3.0)).epsilon(0.01));
    const auto nx = sphere_norms(x, 40000);
    CHECK(nx.mean == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
    CHECK(nx.l2 == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-3));
    CHECK(nx.excluded_area == 0.0);
    CHECK_THROWS_AS(sphere_norms(Observable::parse("chordal_re(0,2)"), 100), DimMismatch);
}

TEST_CASE("pole cells are excluded and reported") {
    const auto n = sphere_norms(Observable::parse("lip_of(pos, qpsh_log(1,0))"), 10000);
    CHECK(n.excluded_area == 0.0);
    const auto q = sphere_norms(Observable::parse("qpsh_log(1,0)"), 10000);
    CHECK(q.excluded_area > 0.0);
    CHECK(q.excluded_area < 1e-3);
    CHECK(std::isfinite(q.mean));
}

TEST_CASE("poincare sobolev check") {
    auto panel = p1_panel();
    const auto r1 = poincare_sobolev_check(panel, 10000);
    const auto r4 = poincare_sobolev_check(panel, 40000);
    REQUIRE(r1.entries.size() == 10);
    for (const auto& e : r1.entries) {
        CHECK_FALSE(e.skipped);
        CHECK(std::isfinite(e.ratio));
    }
    CHECK(std::abs(r1.max_ratio - r4.max_ratio) / r4.max_ratio < 0.1);

    const auto rc = poincare_sobolev_check({constant(1.0)}, 1000);
    CHECK(rc.entries[0].skipped);

    const auto phi = Observable::parse("dist_to([1,0.2j])");
    for (int p : {1, 2}) {
        const auto r = poincare_sobolev_check({phi, scale(2.0, phi)}, 5000, p);
        CHECK(r.entries[0].ratio == doctest::Approx(r.entries[1].ratio).epsilon(1e-12));
    }
}

TEST_CASE("positive part and absolute value stay controlled") {
    auto panel = p1_panel();
    const double c_emp = poincare_sobolev_check(panel, 20000).max_ratio;
    for (const auto& phi : panel) {
        const double s = star_norm_p1(phi, 20000);
        CHECK(star_norm_p1(Observable::parse("lip_of(pos, " + phi.spec() + ")"), 20000) <= 3.0 * s);
        CHECK(star_norm_p1(Observable::parse("lip_of(abs, " + phi.spec() + ")"), 20000) <= 3.0 * s);
        CHECK(sphere_norms(phi, 20000).l2 <= (1.0 + c_emp) * s);
    }
}

TEST_CASE("coboundary and centering") {
    const auto f = DynMap::parse("rational1d: num=[1,0,0] den=[0,0,1]");
    const auto psi = Observable::parse("chordal_re(0,1)");
    const auto g = coboundary(f, psi);
    const auto z = ProjPoint::normalize({0.3 + 0.4i, 1.0});
    CHECK(g(z) == doctest::Approx(psi(evaluate(f, z)) - psi(z)));
    CHECK(centered(psi, 0.25)(z) == doctest::Approx(psi(z) - 0.25));
    CHECK(compose_with_map(f, psi)(z) == doctest::Approx(psi(evaluate(f, z))));
}
