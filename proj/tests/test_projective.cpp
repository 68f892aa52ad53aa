#include <cmath>
#include <numbers>

#include "doctest.h"
#include "eqd/errors.hpp"
#include "eqd/projective.hpp"
#include "eqd/statistics.hpp"

using namespace eqd;
using namespace std::complex_literals;

namespace {
bool close(const ProjPoint& p, std::initializer_list<cplx> expected, double tol = 1e-14) {
    int i = 0;
    for (auto e : expected)
        if (std::abs(p[i++] - e) > tol) return false;
    return true;
}
}  // namespace

TEST_CASE("normalize produces the canonical representative") {
    CHECK(close(ProjPoint::normalize({2.0, 0.0}), {1.0, 0.0}));
    CHECK(close(ProjPoint::normalize({0.0, 3.0i}), {0.0, 1.0}));
    const double h = 1.0 / std::sqrt(2.0);
    CHECK(close(ProjPoint::normalize({1.0, 1.0}), {h, h}));
    // ties on the modulus go to the lowest index
    auto p = ProjPoint::normalize({1.0i, -1.0});
    CHECK(p[0].real() > 0.0);
    CHECK(p[0].imag() == 0.0);
    CHECK_THROWS_AS(ProjPoint::normalize({0.0, 0.0}), InvalidPoint);
    CHECK_THROWS_AS(ProjPoint::normalize({0.0, 0.0, 0.0}), InvalidPoint);
}

TEST_CASE("normalize is idempotent and scale invariant") {
    Stream rng(7);
    for (int t = 0; t < 1000; ++t) {
        const int dim = 1 + t % 2;
        std::vector<cplx> raw;
        for (int i = 0; i <= dim; ++i) raw.emplace_back(rng.normal(), rng.normal());
        const auto p = ProjPoint::normalize(raw);
        const auto q = ProjPoint::normalize(p.coords());
        for (int i = 0; i <= dim; ++i) CHECK(std::abs(p[i] - q[i]) <= 1e-14);
        const cplx s = std::polar(1e-7 + rng.uniform() * 1e7, 6.0 * rng.uniform());
        for (auto& c : raw) c *= s;
        const auto r = ProjPoint::normalize(raw);
        for (int i = 0; i <= dim; ++i) CHECK(std::abs(p[i] - r[i]) <= 1e-12);
    }
}

TEST_CASE("chordal distance examples") {
    const auto e0 = ProjPoint::normalize({1.0, 0.0});
    const auto e1 = ProjPoint::normalize({0.0, 1.0});
    const auto m = ProjPoint::normalize({1.0, 1.0});
    CHECK(chordal_distance(e0, e0) == 0.0);
    CHECK(chordal_distance(e0, e1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(chordal_distance(e0, m) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK_THROWS_AS(chordal_distance(e0, ProjPoint::normalize({1.0, 0.0, 0.0})), DimMismatch);
}

TEST_CASE("chordal distance is a bounded symmetric metric") {
    Stream rng(11);
    for (int t = 0; t < 10000; ++t) {
        const int dim = 1 + t % 2;
        const auto a = sample_fubini_study(rng, dim);
        const auto b = sample_fubini_study(rng, dim);
        const auto c = sample_fubini_study(rng, dim);
        const double ab = chordal_distance(a, b), bc = chordal_distance(b, c), ac = chordal_distance(a, c);
        CHECK(ac <= ab + bc + 1e-12);
        CHECK(ab == doctest::Approx(chordal_distance(b, a)).epsilon(1e-12));
        CHECK(ab <= 1.0);
        CHECK(chordal_distance(a, a) < 1e-12);
    }
}

TEST_CASE("Fubini-Study sampling moments") {
    // |z0|^2 is uniform on [0,1] on P^1 (var 1/12) and Beta(1,2) on P^2 (var 1/18).
    const int n = 100000;
    for (auto [dim, mean, var] : {std::tuple{1, 0.5, 1.0 / 12.0}, std::tuple{2, 1.0 / 3.0, 1.0 / 18.0}}) {
        Stream rng(2024, static_cast<std::uint64_t>(dim));
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += std::norm(sample_fubini_study(rng, dim)[0]);
        CHECK(std::abs(s / n - mean) < 3.0 * std::sqrt(var / n));
    }
}

TEST_CASE("Fubini-Study sampling is deterministic per stream") {
    Stream a(99, 3), b(99, 3), c(99, 4);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const auto p = sample_fubini_study(a, 2), q = sample_fubini_study(b, 2), r = sample_fubini_study(c, 2);
        for (int k = 0; k < 3; ++k) CHECK(p[k] == q[k]);
        differs = differs || p[0] != r[0];
    }
    CHECK(differs);
}

TEST_CASE("Fubini-Study sampling is unitarily invariant") {
    // Fixed unitary from the QR-free Cayley-like construction of a rotation pair.
    const cplx a = std::polar(0.6, 0.4), b = std::polar(0.8, -1.3);
    Stream r1(5, 1), r2(5, 2);
    std::vector<double> plain, rotated;
    for (int i = 0; i < 20000; ++i) {
        plain.push_back(std::norm(sample_fubini_study(r1, 1)[0]));
        const auto p = sample_fubini_study(r2, 1);
        const auto q = ProjPoint::normalize({a * p[0] - std::conj(b) * p[1], b * p[0] + std::conj(a) * p[1]});
        rotated.push_back(std::norm(q[0]));
    }
    CHECK(ks_test_2(plain, rotated).p_value > 0.001);
}

TEST_CASE("sphere correspondence round trip") {
    Stream rng(3);
    for (int i = 0; i < 1000; ++i) {
        const auto p = sample_fubini_study(rng, 1);
        const auto s = to_sphere(p);
        CHECK(s[0] * s[0] + s[1] * s[1] + s[2] * s[2] == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(chordal_distance(from_sphere(s[0], s[1], s[2]), p) < 1e-12);
    }
    const auto north = from_sphere(0, 0, 1);
    CHECK(std::abs(north[1]) < 1e-15);
    CHECK(std::abs(ProjPoint::affine(2.0).affine_coord(0) - 2.0) < 1e-15);
}
