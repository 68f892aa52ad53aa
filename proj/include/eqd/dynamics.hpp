#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "eqd/projective.hpp"

namespace eqd {

enum class Family { Rational1D, Product2D, Skew2D, Monomial2D };

std::string to_string(Family f);

/// z -> num(z)/den(z) on P^1. Coefficients are ascending (index = power) and
/// both lists have length d + 1.
struct Rational1D {
    std::vector<cplx> num;
    std::vector<cplx> den;
};

/// (z, w) -> (p(z), q(w)) extended to P^2; ascending coefficients, exact degree d.
struct Product2D {
    std::vector<cplx> p;
    std::vector<cplx> q;
};

/// (z, w) -> (p(z), q(z, w)); q[i][j] multiplies z^i w^j, total degree <= d,
/// and q[0][d] (the w^d coefficient) is nonzero.
struct Skew2D {
    std::vector<cplx> p;
    std::vector<std::vector<cplx>> q;
};

/// (z1, z2) -> (z1^a11 z2^a12, z1^a21 z2^a22), meromorphic on P^2.
struct Monomial2D {
    std::array<std::array<long, 2>, 2> A;
    /// Representatives of Z^2 / A Z^2 (|det A| of them), filled by the factory.
    std::vector<std::array<long, 2>> cosets;
};

/// Immutable dominant self-map of P^1 or P^2 from one of four families.
class DynMap {
public:
    using Data = std::variant<Rational1D, Product2D, Skew2D, Monomial2D>;

    /// Factories take univariate coefficients in descending order
    /// ([c_d, ..., c_0]), matching the textual map grammar.
    static DynMap rational1d(std::vector<cplx> num_desc, std::vector<cplx> den_desc);
    static DynMap product2d(std::vector<cplx> p_desc, std::vector<cplx> q_desc);
    static DynMap skew2d(std::vector<cplx> p_desc, std::vector<std::vector<cplx>> q);
    static DynMap monomial2d(std::array<std::array<long, 2>, 2> A);

    /// Parses the map grammar, e.g. "rational1d: num=[1,0,0] den=[0,0,1]".
    static DynMap parse(const std::string& spec);

    Family family() const;
    int dim() const { return family() == Family::Rational1D ? 1 : 2; }
    /// Algebraic degree d (for monomial maps: the largest row sum of |A|).
    int degree() const { return degree_; }
    const Data& data() const { return data_; }

    /// Canonical textual form; parse(spec()) reproduces the map.
    std::string spec() const;
    /// FNV-1a hash of spec(), 16 hex digits.
    std::string hash() const;

private:
    DynMap(Data data, int degree) : data_(std::move(data)), degree_(degree) {}
    Data data_;
    int degree_;
};

inline constexpr double kIndeterminacyTol = 1e-10;

/// Image of p; throws IndeterminacyPoint within kIndeterminacyTol of I_1.
ProjPoint evaluate(const DynMap& map, const ProjPoint& p);

/// n-fold iterate; an IndeterminacyPoint carries the failing step index.
ProjPoint iterate(const DynMap& map, const ProjPoint& p, std::size_t n);

struct DegreeReport {
    int d_t = 1;
    /// d_0, ..., d_k.
    std::vector<double> d_list;
    /// delta_n = d_{k-1}^n in closed form (leading order for monomial maps).
    double delta_base = 1.0;
    bool delta_is_leading_order = false;
    double hypothesis_margin = 0.0;

    double delta(std::size_t n) const;
};

DegreeReport degrees(const DynMap& map);

/// (d_t > d_{k-1}, d_t - d_{k-1}).
std::pair<bool, double> check_hypothesis(const DynMap& map);

/// Throws HypothesisViolated unless d_t > d_{k-1}.
void require_hypothesis(const DynMap& map);

/// FNV-1a 64-bit hash as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace eqd
