#include "eqd/fibers.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "eqd/errors.hpp"
#include "eqd/poly.hpp"

namespace eqd {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kInfinityTol = 1e-12;

std::vector<cplx> initial_estimates(const poly::Coeffs& c) {
    const std::size_t d = c.size() - 1;
    if (d == 1) return {-c[0] / c[1]};
    if (d == 2) {
        const cplx a = c[2], b = c[1], k = c[0];
        const cplx disc = std::sqrt(b * b - 4.0 * a * k);
        // Choose the sign that avoids cancellation.
        const cplx q = (std::real(std::conj(b) * disc) >= 0.0) ? -0.5 * (b + disc) : -0.5 * (b - disc);
        if (q == cplx(0.0)) return {cplx(0.0), cplx(0.0)};
        return {q / a, k / q};
    }
    // Rescale z = s t so the companion matrix is balanced at both ends.
    const double s = std::pow(std::abs(c[0]) / std::abs(c[d]), 1.0 / static_cast<double>(d));
    const double scale = (s > 0.0 && std::isfinite(s)) ? s : 1.0;
    Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    double sk = 1.0;
    std::vector<cplx> monic(d);
    const cplx lead = c[d] * std::pow(scale, static_cast<double>(d));
    for (std::size_t k = 0; k < d; ++k) {
        monic[k] = c[k] * sk / lead;
        sk *= scale;
    }
    for (std::size_t k = 0; k < d; ++k) C(0, static_cast<Eigen::Index>(d - 1 - k)) = -monic[k];
    for (std::size_t k = 1; k < d; ++k) C(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k - 1)) = 1.0;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(C, false);
    std::vector<cplx> out(d);
    for (std::size_t k = 0; k < d; ++k) out[k] = es.eigenvalues()(static_cast<Eigen::Index>(k)) * scale;
    return out;
}

/// Newton iteration on `c` started at z, run in the chart where |z| <= 1.
/// `order` > 0 polishes a root of the order-th derivative instead.
cplx newton(const poly::Coeffs& c, cplx z, int order = 0) {
    const bool inverted = std::abs(z) > 1.0;
    poly::Coeffs q = inverted ? poly::reversed(c) : c;
    for (int k = 0; k < order; ++k) q = poly::derivative(q);
    cplx u = inverted ? 1.0 / z : z;
    double best = std::abs(poly::eval(q, u));
    cplx best_u = u;
    for (int it = 0; it < 12 && best > 0.0; ++it) {
        cplx v, dv;
        poly::eval_d1(q, u, v, dv);
        if (dv == cplx(0.0)) break;
        const cplx next = u - v / dv;
        const double r = std::abs(poly::eval(q, next));
        u = next;
        if (r < best) {
            best = r;
            best_u = next;
        } else if (it > 2) {
            break;
        }
    }
    return inverted ? 1.0 / best_u : best_u;
}

double closeness_scale(cplx a, cplx b) { return std::max({1.0, std::abs(a), std::abs(b)}); }

constexpr double kClusterTols[] = {1e-3, 1e-5};

void resolve_clusters(const poly::Coeffs& c, const std::vector<cplx>& z, const std::vector<std::size_t>& members,
                      std::size_t level, RootSet& out) {
    if (level == std::size(kClusterTols)) {
        for (auto i : members) {
            const double eta = poly::backward_error(c, z[i]);
            if (eta > kRootBackwardTol) out.ill_conditioned = true;
            out.roots.push_back({z[i], 1, eta});
        }
        return;
    }
    const double tol = kClusterTols[level];
    const std::size_t n = members.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const cplx a = z[members[i]], b = z[members[j]];
            if (std::abs(a - b) <= tol * closeness_scale(a, b)) parent[find(i)] = find(j);
        }
    std::vector<std::vector<std::size_t>> groups(n);
    for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(members[i]);
    for (const auto& g : groups) {
        if (g.empty()) continue;
        if (g.size() == 1) {
            resolve_clusters(c, z, g, std::size(kClusterTols), out);
            continue;
        }
        cplx centroid = 0.0;
        for (auto i : g) centroid += z[i];
        centroid /= static_cast<double>(g.size());
        const int m = static_cast<int>(g.size());
        const cplx r = newton(c, centroid, m - 1);
        const double eta = poly::backward_error(c, r);
        if (eta <= kRootBackwardTol) {
            out.roots.push_back({r, m, eta});
            continue;
        }
        resolve_clusters(c, z, g, level + 1, out);
    }
}

}  // namespace

RootSet roots(std::span<const cplx> ascending) {
    poly::Coeffs c = poly::trimmed(ascending);
    if (c.size() <= 1) throw NoRoots("polynomial of degree 0 has no roots");

    RootSet out;
    std::size_t zeros = 0;
    while (c[zeros] == cplx(0.0)) ++zeros;
    c.erase(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(zeros));
    if (zeros > 0) out.roots.push_back({cplx(0.0), static_cast<int>(zeros), 0.0});
    if (c.size() <= 1) return out;

    const std::vector<cplx> est = initial_estimates(c);
    const std::size_t n = est.size();
    std::vector<cplx> polished(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sep = INFINITY;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) sep = std::min(sep, std::abs(est[i] - est[j]));
        const cplx p = newton(c, est[i]);
        // Keep the estimate if Newton wandered toward a neighbouring root.
        polished[i] = (std::abs(p - est[i]) <= 0.5 * sep && poly::backward_error(c, p) <= poly::backward_error(c, est[i]))
                          ? p
                          : est[i];
    }

    // Nearly coincident roots are grouped by single linkage, coarse tolerance
    // first; a group is accepted as one multiple root only if its centroid,
    // polished on the (m-1)-th derivative, meets the backward-error target.
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    resolve_clusters(c, polished, all, 0, out);
    return out;
}

std::vector<std::pair<ProjPoint, int>> binary_form_roots(std::span<const cplx> g, bool* ill_conditioned) {
    const std::size_t d = g.size() - 1;
    if (std::all_of(g.begin(), g.end(), [](cplx v) { return v == cplx(0.0); }))
        throw DegenerateFiber("binary form vanishes identically");
    // Generic unitary changes of coordinates: w = U (t, 1). Root-finding in the
    // rotated chart treats infinity like any other point.
    static const std::array<std::array<cplx, 2>, 3> rotations{{
        {cplx(0.8, 0.0), std::polar(0.6, 0.7)},
        {std::polar(0.6, 0.3), std::polar(0.8, -1.1)},
        {cplx(0.28, 0.0), std::polar(0.96, 2.1)},
    }};
    for (const auto& [a, b] : rotations) {
        const cplx u00 = a, u01 = -std::conj(b), u10 = b, u11 = std::conj(a);
        const poly::Coeffs l0{u01, u00}, l1{u11, u10};
        poly::Coeffs gt(d + 1, cplx(0.0));
        poly::Coeffs p0{cplx(1.0)};
        for (std::size_t k = 0; k <= d; ++k) {
            poly::Coeffs term = p0;
            for (std::size_t j = k; j < d; ++j) term = poly::multiply(term, l1);
            for (std::size_t i = 0; i < term.size(); ++i) gt[i] += g[k] * term[i];
            p0 = poly::multiply(p0, l0);
        }
        double scale = 0.0;
        for (auto v : gt) scale += std::abs(v);
        if (std::abs(gt[d]) < 1e-12 * scale) continue;
        const RootSet rs = roots(gt);
        if (ill_conditioned && rs.ill_conditioned) *ill_conditioned = true;
        std::vector<std::pair<ProjPoint, int>> out;
        out.reserve(rs.roots.size());
        for (const auto& r : rs.roots) {
            const cplx t = r.value;
            if (std::abs(t) <= 1.0)
                out.emplace_back(ProjPoint::normalize({u00 * t + u01, u10 * t + u11}), r.multiplicity);
            else
                out.emplace_back(ProjPoint::normalize({u00 + u01 / t, u10 + u11 / t}), r.multiplicity);
        }
        return out;
    }
    throw DegenerateFiber("no admissible chart for binary form");
}

int Fiber::total_multiplicity() const {
    int s = 0;
    for (const auto& p : points) s += p.multiplicity;
    return s;
}

namespace {

void append_polynomial_roots(const poly::Coeffs& c, std::vector<std::pair<cplx, int>>& out, bool& ill) {
    const RootSet rs = roots(c);
    ill = ill || rs.ill_conditioned;
    for (const auto& r : rs.roots) out.emplace_back(r.value, r.multiplicity);
}

std::vector<std::pair<ProjPoint, int>> at_infinity(std::span<const cplx> g, int d, bool& ill) {
    auto pts = binary_form_roots(g, &ill);
    std::vector<std::pair<ProjPoint, int>> out;
    for (auto& [p, m] : pts) out.emplace_back(ProjPoint::normalize({p[0], p[1], cplx(0.0)}), m * d);
    return out;
}

std::vector<std::pair<ProjPoint, int>> raw_fiber(const DynMap& map, const ProjPoint& z, bool& ill) {
    const int d = map.degree();
    const auto du = static_cast<std::size_t>(d);
    return std::visit(
        [&](const auto& m) -> std::vector<std::pair<ProjPoint, int>> {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Rational1D>) {
                poly::Coeffs g(du + 1);
                for (std::size_t k = 0; k <= du; ++k) g[k] = z[1] * m.num[k] - z[0] * m.den[k];
                return binary_form_roots(g, &ill);
            } else if constexpr (std::is_same_v<T, Product2D>) {
                if (std::abs(z[2]) < kInfinityTol) {
                    poly::Coeffs g(du + 1, cplx(0.0));
                    g[du] += z[1] * m.p[du];
                    g[0] -= z[0] * m.q[du];
                    return at_infinity(g, d, ill);
                }
                poly::Coeffs a(du + 1), b(du + 1);
                for (std::size_t k = 0; k <= du; ++k) {
                    a[k] = z[2] * m.p[k];
                    b[k] = z[2] * m.q[k];
                }
                a[0] -= z[0];
                b[0] -= z[1];
                std::vector<std::pair<cplx, int>> xs, ys;
                append_polynomial_roots(a, xs, ill);
                append_polynomial_roots(b, ys, ill);
                std::vector<std::pair<ProjPoint, int>> out;
                for (auto [x, mx] : xs)
                    for (auto [y, my] : ys) out.emplace_back(ProjPoint::normalize({x, y, cplx(1.0)}), mx * my);
                return out;
            } else if constexpr (std::is_same_v<T, Skew2D>) {
                if (std::abs(z[2]) < kInfinityTol) {
                    poly::Coeffs g(du + 1, cplx(0.0));
                    g[du] += z[1] * m.p[du];
                    for (std::size_t k = 0; k <= du; ++k) g[k] -= z[0] * m.q[k][du - k];
                    return at_infinity(g, d, ill);
                }
                poly::Coeffs a(du + 1);
                for (std::size_t k = 0; k <= du; ++k) a[k] = z[2] * m.p[k];
                a[0] -= z[0];
                std::vector<std::pair<cplx, int>> xs;
                append_polynomial_roots(a, xs, ill);
                std::vector<std::pair<ProjPoint, int>> out;
                for (auto [x, mx] : xs) {
                    poly::Coeffs b(du + 1, cplx(0.0));
                    for (std::size_t j = 0; j <= du; ++j) {
                        cplx s = 0.0;
                        for (std::size_t i = du + 1 - j; i-- > 0;) s = s * x + m.q[i][j];
                        b[j] = z[2] * s;
                    }
                    b[0] -= z[1];
                    std::vector<std::pair<cplx, int>> ys;
                    append_polynomial_roots(b, ys, ill);
                    for (auto [y, my] : ys) out.emplace_back(ProjPoint::normalize({x, y, cplx(1.0)}), mx * my);
                }
                return out;
            } else {
                for (int i = 0; i < 3; ++i)
                    if (std::abs(z[i]) < kIndeterminacyTol)
                        throw IndeterminacyPoint("monomial fiber: coordinate z" + std::to_string(i) + " of the base vanishes");
                const auto& A = m.A;
                const double det = static_cast<double>(A[0][0] * A[1][1] - A[0][1] * A[1][0]);
                const double adj[2][2] = {{static_cast<double>(A[1][1]), static_cast<double>(-A[0][1])},
                                          {static_cast<double>(-A[1][0]), static_cast<double>(A[0][0])}};
                const double lh = std::log(std::abs(z[2])), ah = std::arg(z[2]);
                const double L[2] = {std::log(std::abs(z[0])) - lh, std::log(std::abs(z[1])) - lh};
                const double th[2] = {std::arg(z[0]) - ah, std::arg(z[1]) - ah};
                double U[2];
                for (int i = 0; i < 2; ++i) U[i] = (adj[i][0] * L[0] + adj[i][1] * L[1]) / det;
                const double top = std::max({U[0], U[1], 0.0});
                std::vector<std::pair<ProjPoint, int>> out;
                out.reserve(m.cosets.size());
                for (const auto& c : m.cosets) {
                    const double a0 = th[0] + kTwoPi * static_cast<double>(c[0]);
                    const double a1 = th[1] + kTwoPi * static_cast<double>(c[1]);
                    double P[2];
                    for (int i = 0; i < 2; ++i) P[i] = std::fmod((adj[i][0] * a0 + adj[i][1] * a1) / det, kTwoPi);
                    out.emplace_back(ProjPoint::normalize({std::polar(std::exp(U[0] - top), P[0]),
                                                           std::polar(std::exp(U[1] - top), P[1]), cplx(std::exp(-top))}),
                                     1);
                }
                return out;
            }
        },
        map.data());
}

}  // namespace

Fiber fiber(const DynMap& map, const ProjPoint& z) {
    if (z.dim() != map.dim()) throw DimMismatch("fiber base has the wrong dimension");
    bool ill = false;
    auto raw = raw_fiber(map, z, ill);

    Fiber f{z, {}, ill};
    f.points.reserve(raw.size());
    for (auto& [p, mult] : raw) {
        auto same = std::find_if(f.points.begin(), f.points.end(),
                                 [&](const FiberPoint& q) { return chordal_distance(q.point, p) <= kFiberMergeTol; });
        if (same != f.points.end()) {
            same->multiplicity += mult;
            continue;
        }
        f.points.push_back({p, mult, 0.0});
    }
    for (auto& fp : f.points) {
        fp.residual = chordal_distance(evaluate(map, fp.point), z);
        if (!(fp.residual < kFiberResidualTol)) f.flagged = true;
    }
    const int d_t = degrees(map).d_t;
    if (f.total_multiplicity() != d_t)
        throw DegenerateFiber("fiber multiplicities sum to " + std::to_string(f.total_multiplicity()) + ", expected " +
                              std::to_string(d_t));
    return f;
}

const ProjPoint& pick(const Fiber& f, int d_t, Stream& rng) {
    std::uint64_t u = rng.below(static_cast<std::uint64_t>(d_t));
    for (const auto& p : f.points) {
        if (u < static_cast<std::uint64_t>(p.multiplicity)) return p.point;
        u -= static_cast<std::uint64_t>(p.multiplicity);
    }
    return f.points.back().point;
}

ProjPoint random_preimage(const DynMap& map, const ProjPoint& z, Stream& rng) {
    const Fiber f = fiber(map, z);
    return pick(f, f.total_multiplicity(), rng);
}

}  // namespace eqd
