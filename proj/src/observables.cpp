#include "eqd/observables.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "eqd/errors.hpp"

namespace eqd {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kFourPi = 12.566370614359172953850573533118;

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string fmt(cplx c) {
    if (c.imag() == 0.0) return fmt(c.real());
    std::string im = fmt(c.imag());
    if (im[0] != '-') im = "+" + im;
    return fmt(c.real()) + im + "j";
}

std::string fmt_point(const std::vector<cplx>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
    return s + "]";
}

int merge_dim(int a, int b, std::size_t pos) {
    if (a && b && a != b) throw ParseError("observables of different dimensions combined", pos);
    return a ? a : b;
}

bool lipschitz_like(ObservableKind k) { return k == ObservableKind::Lipschitz || k == ObservableKind::Smooth; }
bool dsh_like(ObservableKind k) { return k == ObservableKind::DshDiff || k == ObservableKind::Smooth; }

Observable make_dist_to(const std::vector<cplx>& coords) {
    const auto p = ProjPoint::normalize(coords);
    return Observable("dist_to(" + fmt_point(coords) + ")", ObservableKind::Lipschitz,
                      [p](const ProjPoint& z) { return chordal_distance(z, p); }, p.dim());
}

Observable make_chordal_re(int i, int j) {
    const int top = std::max(i, j);
    return Observable("chordal_re(" + std::to_string(i) + "," + std::to_string(j) + ")", ObservableKind::Smooth,
                      [i, j, top](const ProjPoint& z) {
                          if (top > z.dim()) throw DimMismatch("chordal_re index out of range on P^" + std::to_string(z.dim()));
                          return 2.0 * std::real(z[i] * std::conj(z[j]));
                      },
                      top == 2 ? 2 : 0);
}

Observable make_bump(const std::vector<cplx>& coords, double r) {
    const auto p = ProjPoint::normalize(coords);
    return Observable("bump(" + fmt_point(coords) + "," + fmt(r) + ")", ObservableKind::Smooth,
                      [p, r](const ProjPoint& z) {
                          const double rho = chordal_distance(z, p) / r;
                          return rho < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - rho * rho)) : 0.0;
                      },
                      p.dim());
}

std::string form_args(const std::vector<cplx>& a) {
    std::string s;
    for (std::size_t i = 0; i < a.size(); ++i) s += (i ? "," : "") + fmt(a[i]);
    return s;
}

double log_form(const std::vector<cplx>& a, const ProjPoint& z) {
    if (z.size() != static_cast<int>(a.size()))
        throw DimMismatch("linear form with " + std::to_string(a.size()) + " coefficients on P^" + std::to_string(z.dim()));
    cplx v = 0.0;
    for (int i = 0; i < z.size(); ++i) v += a[static_cast<std::size_t>(i)] * z[i];
    const double m = std::abs(v);
    return m == 0.0 ? kNegInf : std::log(m);
}

Observable make_qpsh_log(const std::vector<cplx>& a) {
    return Observable("qpsh_log(" + form_args(a) + ")", ObservableKind::QpshLog,
                      [a](const ProjPoint& z) { return log_form(a, z); }, static_cast<int>(a.size()) - 1);
}

Observable make_loglog(const std::vector<cplx>& a, double M) {
    return Observable("loglog(" + form_args(a) + "; " + fmt(M) + ")", ObservableKind::Composed,
                      [a, M](const ProjPoint& z) {
                          const double psi = log_form(a, z);
                          if (psi == kNegInf) return kNegInf;
                          return -std::log(-std::min(psi - M, -1.0));
                      },
                      static_cast<int>(a.size()) - 1);
}

struct Chi {
    enum class Type { Clip, Abs, Pos } type;
    double lo = 0.0, hi = 0.0;

    double operator()(double x) const {
        switch (type) {
            case Type::Clip: return std::clamp(x, lo, hi);
            case Type::Abs: return std::abs(x);
            case Type::Pos: return std::max(x, 0.0);
        }
        return x;
    }
    std::string spec() const {
        switch (type) {
            case Type::Clip: return "clip(" + fmt(lo) + "," + fmt(hi) + ")";
            case Type::Abs: return "abs";
            case Type::Pos: return "pos";
        }
        return "?";
    }
};

Observable make_lip_of(Chi chi, const Observable& inner) {
    ObservableKind kind = ObservableKind::Composed;
    const auto k = inner.kind();
    if (lipschitz_like(k)) {
        kind = ObservableKind::Lipschitz;
    } else if (k == ObservableKind::DshDiff) {
        kind = ObservableKind::DshDiff;
    } else if (k == ObservableKind::QpshLog && chi.type != Chi::Type::Abs) {
        // clip and pos of a q.p.s.h. function are bounded and d.s.h.
        kind = ObservableKind::DshDiff;
    }
    return Observable("lip_of(" + chi.spec() + ", " + inner.spec() + ")", kind,
                      [chi, inner](const ProjPoint& z) { return chi(inner(z)); }, inner.dim());
}

class Reader {
public:
    explicit Reader(const std::string& s) : s_(s) {}

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!accept(c)) throw ParseError(std::string("expected '") + c + "'", pos_);
    }
    std::string word() {
        skip();
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
        if (start == pos_) throw ParseError("expected identifier", pos_);
        return s_.substr(start, pos_ - start);
    }
    double real() {
        skip();
        const char* begin = s_.c_str() + pos_;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin || !std::isfinite(v)) throw ParseError("expected number", pos_);
        pos_ += static_cast<std::size_t>(end - begin);
        return v;
    }
    cplx complex() {
        const double a = real();
        if (pos_ < s_.size() && s_[pos_] == 'j') {
            ++pos_;
            return {0.0, a};
        }
        if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) {
            const double b = real();
            if (pos_ >= s_.size() || s_[pos_] != 'j') throw ParseError("expected 'j'", pos_);
            ++pos_;
            return {a, b};
        }
        return {a, 0.0};
    }
    int index() {
        const std::size_t at = (skip(), pos_);
        const double v = real();
        if (v != std::floor(v) || v < 0 || v > 2) throw ParseError("coordinate index must be 0, 1 or 2", at);
        return static_cast<int>(v);
    }
    std::vector<cplx> point() {
        const std::size_t at = (skip(), pos_);
        expect('[');
        std::vector<cplx> v{complex()};
        while (accept(',')) v.push_back(complex());
        expect(']');
        if (v.size() != 2 && v.size() != 3) throw ParseError("point needs 2 or 3 homogeneous coordinates", at);
        if (std::all_of(v.begin(), v.end(), [](cplx c) { return c == cplx(0.0); }))
            throw ParseError("point with all coordinates zero", at);
        return v;
    }
    std::vector<cplx> form() {
        std::vector<cplx> a{complex()};
        expect(',');
        a.push_back(complex());
        if (accept(',')) a.push_back(complex());
        return a;
    }

    Observable observable() {
        const std::size_t at = (skip(), pos_);
        const std::string name = word();
        expect('(');
        Observable out = [&]() -> Observable {
            if (name == "const") return constant(real());
            if (name == "chordal_re") {
                const int i = index();
                expect(',');
                return make_chordal_re(i, index());
            }
            if (name == "dist_to") return make_dist_to(point());
            if (name == "bump") {
                auto p = point();
                expect(',');
                const std::size_t rat = (skip(), pos_);
                const double r = real();
                if (!(r > 0.0)) throw ParseError("bump radius must be positive", rat);
                return make_bump(p, r);
            }
            if (name == "qpsh_log") return make_qpsh_log(form());
            if (name == "loglog") {
                auto a = form();
                expect(';');
                return make_loglog(a, real());
            }
            if (name == "lip_of") {
                const std::size_t cat = (skip(), pos_);
                const std::string chi = word();
                Chi c{Chi::Type::Abs};
                if (chi == "clip") {
                    expect('(');
                    c.type = Chi::Type::Clip;
                    c.lo = real();
                    expect(',');
                    c.hi = real();
                    expect(')');
                    if (!(c.lo <= c.hi)) throw ParseError("clip needs lo <= hi", cat);
                } else if (chi == "abs") {
                    c.type = Chi::Type::Abs;
                } else if (chi == "pos") {
                    c.type = Chi::Type::Pos;
                } else {
                    throw ParseError("unknown Lipschitz function '" + chi + "'", cat);
                }
                expect(',');
                return make_lip_of(c, observable());
            }
            if (name == "sum") {
                auto a = observable();
                expect(',');
                const std::size_t bat = (skip(), pos_);
                auto b = observable();
                merge_dim(a.dim(), b.dim(), bat);
                return eqd::sum(a, b);
            }
            if (name == "scale") {
                const double c = real();
                expect(',');
                return eqd::scale(c, observable());
            }
            throw ParseError("unknown observable '" + name + "'", at);
        }();
        expect(')');
        return out;
    }

    void end() {
        skip();
        if (pos_ != s_.size()) throw ParseError("trailing characters", pos_);
    }

private:
    const std::string& s_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string to_string(ObservableKind k) {
    switch (k) {
        case ObservableKind::Lipschitz: return "lipschitz";
        case ObservableKind::Smooth: return "smooth";
        case ObservableKind::QpshLog: return "qpsh_log";
        case ObservableKind::DshDiff: return "dsh_diff";
        case ObservableKind::Composed: return "composed";
    }
    return "?";
}

Observable::Observable(std::string spec, ObservableKind kind, Fn fn, int dim)
    : spec_(std::move(spec)), kind_(kind), fn_(std::make_shared<const Fn>(std::move(fn))), dim_(dim) {}

Observable Observable::parse(const std::string& spec) {
    Reader r(spec);
    Observable o = r.observable();
    r.end();
    return o;
}

Observable make_observable(const std::string& spec) { return Observable::parse(spec); }

Observable constant(double c) {
    return Observable("const(" + fmt(c) + ")", ObservableKind::Smooth, [c](const ProjPoint&) { return c; });
}

Observable sum(const Observable& a, const Observable& b) {
    ObservableKind kind = ObservableKind::Composed;
    if (a.kind() == ObservableKind::Smooth && b.kind() == ObservableKind::Smooth)
        kind = ObservableKind::Smooth;
    else if (lipschitz_like(a.kind()) && lipschitz_like(b.kind()))
        kind = ObservableKind::Lipschitz;
    else if (dsh_like(a.kind()) && dsh_like(b.kind()))
        kind = ObservableKind::DshDiff;
    if (a.dim() && b.dim() && a.dim() != b.dim()) throw DimMismatch("sum of observables on different spaces");
    return Observable("sum(" + a.spec() + ", " + b.spec() + ")", kind,
                      [a, b](const ProjPoint& z) { return a(z) + b(z); }, a.dim() ? a.dim() : b.dim());
}

Observable scale(double c, const Observable& a) {
    ObservableKind kind = a.kind();
    if (kind == ObservableKind::QpshLog && c < 0.0) kind = ObservableKind::Composed;
    if (c == 0.0) kind = ObservableKind::Smooth;
    Observable out("scale(" + fmt(c) + ", " + a.spec() + ")", kind,
                   [c, a](const ProjPoint& z) {
                       const double v = a(z);
                       return c == 0.0 ? 0.0 : c * v;
                   },
                   a.dim());
    return out;
}

Observable compose_with_map(const DynMap& map, const Observable& psi) {
    return Observable("compose(" + psi.spec() + ")", ObservableKind::Composed,
                      [map, psi](const ProjPoint& z) { return psi(evaluate(map, z)); }, map.dim());
}

Observable coboundary(const DynMap& map, const Observable& psi) {
    return Observable("coboundary(" + psi.spec() + ")", ObservableKind::Composed,
                      [map, psi](const ProjPoint& z) { return psi(evaluate(map, z)) - psi(z); }, map.dim());
}

Observable centered(const Observable& phi, double c) {
    Observable out = sum(phi, constant(-c));
    return out;
}

// ---------------------------------------------------------------------------
// Lipschitz estimation

namespace {

ProjPoint perturb(const ProjPoint& p, double s, Stream& rng) {
    std::array<cplx, 3> v{};
    for (int i = 0; i < p.size(); ++i) v[static_cast<std::size_t>(i)] = p[i] + s * cplx(rng.normal(), rng.normal());
    return ProjPoint::normalize(std::span<const cplx>(v.data(), static_cast<std::size_t>(p.size())));
}

double ratio(const Observable& phi, const ProjPoint& x, const ProjPoint& y) {
    const double d = chordal_distance(x, y);
    if (d < 1e-12) return 0.0;
    const double r = std::abs(phi(x) - phi(y)) / d;
    return std::isfinite(r) ? r : 0.0;
}

}  // namespace

LipschitzEstimate lipschitz_estimate(const Observable& phi, std::size_t pairs, Stream& rng, int dim) {
    if (phi.kind() == ObservableKind::QpshLog) return {std::numeric_limits<double>::infinity(), false};
    if (dim == 0) dim = phi.dim() ? phi.dim() : 1;

    struct Pair {
        ProjPoint x, y;
        double r;
    };
    std::vector<Pair> best;
    for (std::size_t i = 0; i < pairs; ++i) {
        const auto x = sample_fubini_study(rng, dim);
        // Half the pairs are local, at log-uniform separations.
        const auto y = (i % 2 == 0) ? sample_fubini_study(rng, dim) : perturb(x, std::pow(10.0, -1.0 - 3.0 * rng.uniform()), rng);
        best.push_back({x, y, ratio(phi, x, y)});
        if (best.size() > 64) {
            std::partial_sort(best.begin(), best.begin() + 10, best.end(), [](auto& a, auto& b) { return a.r > b.r; });
            best.resize(10);
        }
    }
    std::partial_sort(best.begin(), best.begin() + std::min<std::ptrdiff_t>(10, static_cast<std::ptrdiff_t>(best.size())),
                      best.end(), [](auto& a, auto& b) { return a.r > b.r; });
    best.resize(std::min<std::size_t>(10, best.size()));

    double sup = 0.0;
    for (auto& pr : best) {
        double step = 0.1;
        for (int it = 0; it < 300; ++it) {
            const bool move_x = rng.uniform() < 0.5;
            const ProjPoint nx = move_x ? perturb(pr.x, step, rng) : pr.x;
            const ProjPoint ny = move_x ? pr.y : perturb(pr.y, step, rng);
            const double r = ratio(phi, nx, ny);
            if (r > pr.r) {
                pr = {nx, ny, r};
                step = std::min(0.5, step * 1.5);
            } else {
                step = std::max(1e-7, step * 0.85);
            }
        }
        sup = std::max(sup, pr.r);
    }
    return {sup, true};
}

// ---------------------------------------------------------------------------
// Sphere-grid quadrature

double SphereNorms::star() const { return std::abs(mean) + std::sqrt(dirichlet); }

namespace {

using Vec3 = std::array<double, 3>;

Vec3 normalized(Vec3 v) {
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    return {v[0] / n, v[1] / n, v[2] / n};
}

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

double spherical_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    const double num = std::abs(dot(a, cross(b, c)));
    const double den = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
    return 2.0 * std::atan2(num, den);
}

}  // namespace

SphereNorms sphere_norms(const Observable& phi, std::size_t grid_n) {
    if (phi.dim() == 2) throw DimMismatch("sphere-grid norms are defined on P^1 only");
    // Each octant face is split into s^2 triangles; 8 s^2 >= grid_n.
    const auto s = static_cast<int>(std::max<double>(1.0, std::ceil(std::sqrt(static_cast<double>(grid_n) / 8.0))));
    const std::array<Vec3, 6> axis{{{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}}};

    struct Cell {
        double area, flat_area, grad2;
        std::array<double, 3> f;
        bool excluded;
    };
    std::vector<Cell> cells;
    cells.reserve(static_cast<std::size_t>(8 * s * s));

    for (int sx : {0, 1})
        for (int sy : {2, 3})
            for (int sz : {4, 5}) {
                const Vec3 A = axis[static_cast<std::size_t>(sx)], B = axis[static_cast<std::size_t>(sy)],
                           C = axis[static_cast<std::size_t>(sz)];
                // Barycentric lattice vertices of this face, evaluated once.
                const int nv = (s + 1) * (s + 2) / 2;
                std::vector<Vec3> pos(static_cast<std::size_t>(nv));
                std::vector<double> val(static_cast<std::size_t>(nv));
                auto idx = [s](int i, int j) { return i * (s + 1) - i * (i - 1) / 2 + j; };
                for (int i = 0; i <= s; ++i)
                    for (int j = 0; i + j <= s; ++j) {
                        const double a = static_cast<double>(s - i - j) / s, b = static_cast<double>(i) / s,
                                     c = static_cast<double>(j) / s;
                        const Vec3 v = normalized({a * A[0] + b * B[0] + c * C[0], a * A[1] + b * B[1] + c * C[1],
                                                   a * A[2] + b * B[2] + c * C[2]});
                        pos[static_cast<std::size_t>(idx(i, j))] = v;
                        val[static_cast<std::size_t>(idx(i, j))] = phi(from_sphere(v[0], v[1], v[2]));
                    }
                auto add = [&](int i0, int i1, int i2) {
                    const Vec3& p0 = pos[static_cast<std::size_t>(i0)];
                    const Vec3& p1 = pos[static_cast<std::size_t>(i1)];
                    const Vec3& p2 = pos[static_cast<std::size_t>(i2)];
                    Cell cell{};
                    cell.f = {val[static_cast<std::size_t>(i0)], val[static_cast<std::size_t>(i1)], val[static_cast<std::size_t>(i2)]};
                    cell.area = spherical_area(p0, p1, p2);
                    cell.excluded = !(std::isfinite(cell.f[0]) && std::isfinite(cell.f[1]) && std::isfinite(cell.f[2]));
                    const Vec3 e1 = sub(p1, p0), e2 = sub(p2, p0);
                    const double g11 = dot(e1, e1), g12 = dot(e1, e2), g22 = dot(e2, e2);
                    const double det = g11 * g22 - g12 * g12;
                    cell.flat_area = 0.5 * std::sqrt(det);
                    if (!cell.excluded) {
                        const double d1 = cell.f[1] - cell.f[0], d2 = cell.f[2] - cell.f[0];
                        cell.grad2 = (g22 * d1 * d1 - 2.0 * g12 * d1 * d2 + g11 * d2 * d2) / det;
                    }
                    cells.push_back(cell);
                };
                for (int i = 0; i < s; ++i)
                    for (int j = 0; i + j < s; ++j) {
                        add(idx(i, j), idx(i + 1, j), idx(i, j + 1));
                        if (i + j + 1 < s) add(idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
                    }
            }

    SphereNorms out;
    out.cells = cells.size();
    double area = 0.0, dropped = 0.0, msum = 0.0, energy = 0.0, sq = 0.0;
    for (const auto& c : cells) {
        if (c.excluded) {
            dropped += c.area;
            continue;
        }
        area += c.area;
        msum += c.area * (c.f[0] + c.f[1] + c.f[2]) / 3.0;
        sq += c.area * (c.f[0] * c.f[0] + c.f[1] * c.f[1] + c.f[2] * c.f[2]) / 3.0;
        // flat P1 energy reweighted to the spherical cell area
        energy += c.area * c.grad2;
    }
    out.mean = msum / area;
    // i d(phi) ^ dbar(phi) = |grad phi|^2 / 2 dA in any conformal chart.
    out.dirichlet = 0.5 * energy;
    out.l2 = std::sqrt(sq / area);
    double l1 = 0.0, l2 = 0.0;
    for (const auto& c : cells) {
        if (c.excluded) continue;
        double a1 = 0.0, a2 = 0.0;
        for (double v : c.f) {
            a1 += std::abs(v - out.mean);
            a2 += (v - out.mean) * (v - out.mean);
        }
        l1 += c.area * a1 / 3.0;
        l2 += c.area * a2 / 3.0;
    }
    out.l1_dev = l1 / area;
    out.l2_dev = std::sqrt(l2 / area);
    out.excluded_area = dropped / kFourPi;
    return out;
}

double star_norm_p1(const Observable& phi, std::size_t grid_n) { return sphere_norms(phi, grid_n).star(); }

PoincareReport poincare_sobolev_check(const std::vector<Observable>& phis, std::size_t grid_n, int p) {
    if (p != 1 && p != 2) throw Error("Poincare-Sobolev check supports p = 1 or p = 2");
    PoincareReport rep;
    rep.p = p;
    for (const auto& phi : phis) {
        const auto n = sphere_norms(phi, grid_n);
        PoincareEntry e{phi.spec(), 0.0, false};
        if (n.dirichlet < 1e-24) {
            e.skipped = true;
        } else {
            e.ratio = (p == 1 ? n.l1_dev : n.l2_dev) / std::sqrt(n.dirichlet);
            rep.max_ratio = std::max(rep.max_ratio, e.ratio);
        }
        rep.entries.push_back(e);
    }
    return rep;
}

}  // namespace eqd
