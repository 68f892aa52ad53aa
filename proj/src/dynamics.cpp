#include "eqd/dynamics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "eqd/errors.hpp"
#include "eqd/poly.hpp"

namespace eqd {
namespace {

constexpr double kResultantTol = 1e-10;

std::vector<cplx> ascending(std::vector<cplx> desc) {
    std::reverse(desc.begin(), desc.end());
    return desc;
}

int exact_degree(const std::vector<cplx>& asc) {
    for (std::size_t k = asc.size(); k-- > 0;)
        if (asc[k] != cplx(0.0)) return static_cast<int>(k);
    return -1;
}

double max_abs(const std::vector<cplx>& c) {
    double m = 0.0;
    for (auto v : c) m = std::max(m, std::abs(v));
    return m;
}

/// Resultant of two binary forms of degree d (ascending coefficients, each
/// normalized to unit max modulus) via the Sylvester determinant.
double binary_resultant(const std::vector<cplx>& f, const std::vector<cplx>& g) {
    const int d = static_cast<int>(f.size()) - 1;
    const double sf = max_abs(f), sg = max_abs(g);
    Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(2 * d, 2 * d);
    for (int r = 0; r < d; ++r) {
        for (int k = 0; k <= d; ++k) {
            S(r, r + k) = f[static_cast<std::size_t>(d - k)] / sf;
            S(d + r, r + k) = g[static_cast<std::size_t>(d - k)] / sg;
        }
    }
    return std::abs(S.fullPivLu().determinant());
}

std::string fmt_real(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string fmt_cplx(cplx c) {
    if (c.imag() == 0.0) return fmt_real(c.real());
    std::string im = fmt_real(c.imag());
    if (im[0] != '-') im = "+" + im;
    return fmt_real(c.real()) + im + "j";
}

std::string fmt_list(const std::vector<cplx>& asc) {
    std::string s = "[";
    for (std::size_t k = asc.size(); k-- > 0;) {
        s += fmt_cplx(asc[k]);
        if (k) s += ",";
    }
    return s + "]";
}

// Recursive-descent reader for the map grammar.
class Reader {
public:
    explicit Reader(const std::string& s) : s_(s) {}

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool peek(char c) {
        skip();
        return pos_ < s_.size() && s_[pos_] == c;
    }
    void expect(char c) {
        skip();
        if (pos_ >= s_.size() || s_[pos_] != c) throw ParseError(std::string("expected '") + c + "'", pos_);
        ++pos_;
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
    /// re, imj, or re+imj.
    cplx complex() {
        const double a = real();
        if (pos_ < s_.size() && s_[pos_] == 'j') {
            ++pos_;
            return {0.0, a};
        }
        if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) {
            const double b = real();
            if (pos_ >= s_.size() || s_[pos_] != 'j') throw ParseError("expected 'j' after imaginary part", pos_);
            ++pos_;
            return {a, b};
        }
        return {a, 0.0};
    }
    std::vector<cplx> list() {
        expect('[');
        std::vector<cplx> out;
        if (peek(']')) {
            ++pos_;
            return out;
        }
        for (;;) {
            out.push_back(complex());
            if (peek(',')) {
                ++pos_;
                continue;
            }
            expect(']');
            return out;
        }
    }
    std::vector<std::vector<cplx>> matrix() {
        expect('[');
        std::vector<std::vector<cplx>> out;
        for (;;) {
            out.push_back(list());
            if (peek(',')) {
                ++pos_;
                continue;
            }
            expect(']');
            return out;
        }
    }
    void key(const char* name) {
        const std::size_t at = (skip(), pos_);
        if (word() != name) throw ParseError(std::string("expected key '") + name + "'", at);
        expect('=');
    }
    void end() {
        skip();
        if (pos_ != s_.size()) throw ParseError("trailing characters", pos_);
    }
    std::size_t pos() const { return pos_; }

private:
    const std::string& s_;
    std::size_t pos_ = 0;
};

long as_integer(cplx c, std::size_t pos) {
    if (c.imag() != 0.0 || c.real() != std::round(c.real())) throw ParseError("exponent matrix entries must be integers", pos);
    return static_cast<long>(c.real());
}

}  // namespace

std::string to_string(Family f) {
    switch (f) {
        case Family::Rational1D: return "rational1d";
        case Family::Product2D: return "product2d";
        case Family::Skew2D: return "skew2d";
        case Family::Monomial2D: return "monomial2d";
    }
    return "?";
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

DynMap DynMap::rational1d(std::vector<cplx> num_desc, std::vector<cplx> den_desc) {
    auto num = ascending(std::move(num_desc));
    auto den = ascending(std::move(den_desc));
    const int d = std::max(exact_degree(num), exact_degree(den));
    if (exact_degree(num) < 0 || exact_degree(den) < 0) throw InvalidMap("rational1d: zero numerator or denominator");
    if (d < 2) throw InvalidMap("rational1d: degree must be at least 2");
    num.resize(static_cast<std::size_t>(d + 1), cplx(0.0));
    den.resize(static_cast<std::size_t>(d + 1), cplx(0.0));
    if (binary_resultant(num, den) < kResultantTol)
        throw InvalidMap("rational1d: numerator and denominator share a root (resultant below tolerance)");
    return DynMap(Rational1D{std::move(num), std::move(den)}, d);
}

DynMap DynMap::product2d(std::vector<cplx> p_desc, std::vector<cplx> q_desc) {
    auto p = poly::trimmed(ascending(std::move(p_desc)));
    auto q = poly::trimmed(ascending(std::move(q_desc)));
    const int d = exact_degree(p);
    if (d != exact_degree(q)) throw InvalidMap("product2d: p and q must have equal exact degree");
    if (d < 2) throw InvalidMap("product2d: degree must be at least 2");
    return DynMap(Product2D{std::move(p), std::move(q)}, d);
}

DynMap DynMap::skew2d(std::vector<cplx> p_desc, std::vector<std::vector<cplx>> q) {
    auto p = poly::trimmed(ascending(std::move(p_desc)));
    const int d = exact_degree(p);
    if (d < 2) throw InvalidMap("skew2d: degree of p must be at least 2");
    const auto n = static_cast<std::size_t>(d + 1);
    for (std::size_t i = 0; i < q.size(); ++i)
        for (std::size_t j = 0; j < q[i].size(); ++j)
            if (q[i][j] != cplx(0.0) && (i >= n || j >= n || i + j > n - 1))
                throw InvalidMap("skew2d: q has a term of total degree above deg p");
    q.resize(n);
    for (auto& row : q) row.resize(n, cplx(0.0));
    if (q[0][n - 1] == cplx(0.0)) throw InvalidMap("skew2d: q must contain w^d with a nonzero constant coefficient");
    return DynMap(Skew2D{std::move(p), std::move(q)}, d);
}

DynMap DynMap::monomial2d(std::array<std::array<long, 2>, 2> A) {
    if (A[0][0] * A[1][1] - A[0][1] * A[1][0] == 0) throw InvalidMap("monomial2d: det A must be nonzero");
    const long det = A[0][0] * A[1][1] - A[0][1] * A[1][0];
    const long n = std::labs(det);
    // m and m' lie in the same coset iff adj(A) (m - m') = 0 mod det.
    auto mod = [n](long v) { return ((v % n) + n) % n; };
    std::vector<std::array<long, 2>> cosets;
    std::vector<std::pair<long, long>> seen;
    for (long a = 0; a < n && static_cast<long>(cosets.size()) < n; ++a) {
        for (long b = 0; b < n && static_cast<long>(cosets.size()) < n; ++b) {
            const std::pair<long, long> key{mod(A[1][1] * a - A[0][1] * b), mod(-A[1][0] * a + A[0][0] * b)};
            if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
            seen.push_back(key);
            cosets.push_back({a, b});
        }
    }
    const long d = std::max(std::labs(A[0][0]) + std::labs(A[0][1]), std::labs(A[1][0]) + std::labs(A[1][1]));
    return DynMap(Monomial2D{A, std::move(cosets)}, static_cast<int>(d));
}

DynMap DynMap::parse(const std::string& spec) {
    Reader r(spec);
    const std::size_t at = (r.skip(), r.pos());
    const std::string fam = r.word();
    r.expect(':');
    try {
        if (fam == "rational1d") {
            r.key("num");
            auto num = r.list();
            r.key("den");
            auto den = r.list();
            r.end();
            return rational1d(std::move(num), std::move(den));
        }
        if (fam == "product2d") {
            r.key("p");
            auto p = r.list();
            r.key("q");
            auto q = r.list();
            r.end();
            return product2d(std::move(p), std::move(q));
        }
        if (fam == "skew2d") {
            r.key("p");
            auto p = r.list();
            r.key("q");
            auto q = r.matrix();
            r.end();
            return skew2d(std::move(p), std::move(q));
        }
        if (fam == "monomial2d") {
            r.key("A");
            const std::size_t mpos = r.pos();
            auto m = r.matrix();
            r.end();
            if (m.size() != 2 || m[0].size() != 2 || m[1].size() != 2) throw ParseError("A must be 2x2", mpos);
            return monomial2d({{{as_integer(m[0][0], mpos), as_integer(m[0][1], mpos)},
                                {as_integer(m[1][0], mpos), as_integer(m[1][1], mpos)}}});
        }
    } catch (const InvalidMap& e) {
        throw ParseError(e.what(), at);
    }
    throw ParseError("unknown map family '" + fam + "'", at);
}

Family DynMap::family() const { return static_cast<Family>(data_.index()); }

std::string DynMap::spec() const {
    return std::visit(
        [](const auto& m) -> std::string {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Rational1D>) {
                return "rational1d: num=" + fmt_list(m.num) + " den=" + fmt_list(m.den);
            } else if constexpr (std::is_same_v<T, Product2D>) {
                return "product2d: p=" + fmt_list(m.p) + " q=" + fmt_list(m.q);
            } else if constexpr (std::is_same_v<T, Skew2D>) {
                std::string s = "skew2d: p=" + fmt_list(m.p) + " q=[";
                for (std::size_t i = 0; i < m.q.size(); ++i) {
                    if (i) s += ",";
                    s += "[";
                    for (std::size_t j = 0; j < m.q[i].size(); ++j) {
                        if (j) s += ",";
                        s += fmt_cplx(m.q[i][j]);
                    }
                    s += "]";
                }
                return s + "]";
            } else {
                const auto& A = m.A;
                return "monomial2d: A=[[" + std::to_string(A[0][0]) + "," + std::to_string(A[0][1]) + "],[" +
                       std::to_string(A[1][0]) + "," + std::to_string(A[1][1]) + "]]";
            }
        },
        data_);
}

std::string DynMap::hash() const { return fnv1a_hex(spec()); }

namespace {

cplx homogeneous(const std::vector<cplx>& asc, cplx x, cplx h, int d) {
    // sum_k c_k x^k h^(d-k)
    cplx v = 0.0, hp = 1.0;
    std::vector<cplx> xp(static_cast<std::size_t>(d + 1));
    xp[0] = 1.0;
    for (int k = 1; k <= d; ++k) xp[static_cast<std::size_t>(k)] = xp[static_cast<std::size_t>(k - 1)] * x;
    for (int k = d; k >= 0; --k) {
        if (static_cast<std::size_t>(k) < asc.size()) v += asc[static_cast<std::size_t>(k)] * xp[static_cast<std::size_t>(k)] * hp;
        hp *= h;
    }
    return v;
}

ProjPoint eval_monomial(const Monomial2D& m, const ProjPoint& p) {
    for (int i = 0; i < 3; ++i)
        if (std::abs(p[i]) < kIndeterminacyTol)
            throw IndeterminacyPoint("monomial map: coordinate z" + std::to_string(i) + " vanishes at " + p.to_string());
    const double lh = std::log(std::abs(p[2]));
    const double ah = std::arg(p[2]);
    double L[2], T[2];
    for (int j = 0; j < 2; ++j) {
        L[j] = std::log(std::abs(p[j])) - lh;
        T[j] = std::arg(p[j]) - ah;
    }
    double U[2], P[2];
    for (int i = 0; i < 2; ++i) {
        U[i] = static_cast<double>(m.A[static_cast<std::size_t>(i)][0]) * L[0] +
               static_cast<double>(m.A[static_cast<std::size_t>(i)][1]) * L[1];
        P[i] = static_cast<double>(m.A[static_cast<std::size_t>(i)][0]) * T[0] +
               static_cast<double>(m.A[static_cast<std::size_t>(i)][1]) * T[1];
    }
    const double top = std::max({U[0], U[1], 0.0});
    return ProjPoint::normalize({std::polar(std::exp(U[0] - top), P[0]), std::polar(std::exp(U[1] - top), P[1]),
                                 cplx(std::exp(-top), 0.0)});
}

}  // namespace

ProjPoint evaluate(const DynMap& map, const ProjPoint& p) {
    if (p.dim() != map.dim())
        throw DimMismatch("map acts on P^" + std::to_string(map.dim()) + ", point is in P^" + std::to_string(p.dim()));
    const int d = map.degree();
    return std::visit(
        [&](const auto& m) -> ProjPoint {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Rational1D>) {
                return ProjPoint::normalize({poly::eval_binary(m.num, p[0], p[1]), poly::eval_binary(m.den, p[0], p[1])});
            } else if constexpr (std::is_same_v<T, Product2D>) {
                return ProjPoint::normalize({homogeneous(m.p, p[0], p[2], d), homogeneous(m.q, p[1], p[2], d),
                                             std::pow(p[2], d)});
            } else if constexpr (std::is_same_v<T, Skew2D>) {
                cplx qv = 0.0;
                for (int i = 0; i <= d; ++i)
                    for (int j = 0; i + j <= d; ++j)
                        qv += m.q[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * std::pow(p[0], i) *
                              std::pow(p[1], j) * std::pow(p[2], d - i - j);
                return ProjPoint::normalize({homogeneous(m.p, p[0], p[2], d), qv, std::pow(p[2], d)});
            } else {
                return eval_monomial(m, p);
            }
        },
        map.data());
}

ProjPoint iterate(const DynMap& map, const ProjPoint& p, std::size_t n) {
    ProjPoint x = p;
    for (std::size_t i = 0; i < n; ++i) {
        try {
            x = evaluate(map, x);
        } catch (const IndeterminacyPoint&) {
            throw IndeterminacyPoint("orbit hit the indeterminacy set at " + x.to_string(), i);
        }
    }
    return x;
}

double DegreeReport::delta(std::size_t n) const { return std::pow(delta_base, static_cast<double>(n)); }

DegreeReport degrees(const DynMap& map) {
    DegreeReport r;
    const int d = map.degree();
    switch (map.family()) {
        case Family::Rational1D:
            r.d_t = d;
            r.d_list = {1.0, static_cast<double>(d)};
            r.delta_base = 1.0;
            break;
        case Family::Product2D:
        case Family::Skew2D:
            r.d_t = d * d;
            r.d_list = {1.0, static_cast<double>(d), static_cast<double>(d * d)};
            r.delta_base = d;
            break;
        case Family::Monomial2D: {
            const auto& A = std::get<Monomial2D>(map.data()).A;
            Eigen::Matrix2d M;
            M << static_cast<double>(A[0][0]), static_cast<double>(A[0][1]), static_cast<double>(A[1][0]),
                static_cast<double>(A[1][1]);
            const double rho = M.eigenvalues().cwiseAbs().maxCoeff();
            r.d_t = static_cast<int>(std::labs(A[0][0] * A[1][1] - A[0][1] * A[1][0]));
            r.d_list = {1.0, rho, static_cast<double>(r.d_t)};
            r.delta_base = rho;
            r.delta_is_leading_order = true;
            break;
        }
    }
    r.hypothesis_margin = static_cast<double>(r.d_t) - r.d_list[r.d_list.size() - 2];
    return r;
}

std::pair<bool, double> check_hypothesis(const DynMap& map) {
    const auto r = degrees(map);
    return {r.hypothesis_margin > 0.0, r.hypothesis_margin};
}

void require_hypothesis(const DynMap& map) {
    const auto [ok, margin] = check_hypothesis(map);
    if (!ok) {
        std::ostringstream os;
        os << "d_t > d_{k-1} fails for " << map.spec() << " (margin " << margin << ")";
        throw HypothesisViolated(os.str());
    }
}

}  // namespace eqd
