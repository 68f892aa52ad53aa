#pragma once

#include <span>
#include <vector>

#include "eqd/dynamics.hpp"
#include "eqd/rng.hpp"

namespace eqd {

struct Root {
    cplx value;
    int multiplicity = 1;
    double backward_error = 0.0;
};

struct RootSet {
    std::vector<Root> roots;
    /// Set when a root cluster could neither be resolved into simple roots nor
    /// certified as a multiple root at the backward-error target.
    bool ill_conditioned = false;
};

inline constexpr double kRootBackwardTol = 1e-12;

/// All complex roots of the polynomial with ascending coefficients, with
/// multiplicity. Companion-matrix eigenvalues (closed form below degree 3)
/// polished by Newton's method. Throws NoRoots for degree 0.
RootSet roots(std::span<const cplx> ascending);

/// Roots of the binary form sum_k g[k] w0^k w1^(d-k) as points of P^1,
/// infinity included.
std::vector<std::pair<ProjPoint, int>> binary_form_roots(std::span<const cplx> g, bool* ill_conditioned = nullptr);

struct FiberPoint {
    ProjPoint point;
    int multiplicity = 1;
    /// Chordal distance between the image of `point` and the fiber base.
    double residual = 0.0;
};

struct Fiber {
    ProjPoint base;
    std::vector<FiberPoint> points;
    /// Low-precision fiber: a residual above kFiberResidualTol or an
    /// ill-conditioned root cluster.
    bool flagged = false;

    int total_multiplicity() const;
};

inline constexpr double kFiberResidualTol = 1e-8;
inline constexpr double kFiberMergeTol = 1e-9;

/// f^{-1}(z) with multiplicities summing to d_t. Throws IndeterminacyPoint for
/// monomial maps at a base with a vanishing coordinate and DegenerateFiber if
/// the multiplicities do not add up.
Fiber fiber(const DynMap& map, const ProjPoint& z);

/// One fiber point drawn with probability multiplicity / d_t.
ProjPoint random_preimage(const DynMap& map, const ProjPoint& z, Stream& rng);

/// Draws from an already computed fiber.
const ProjPoint& pick(const Fiber& f, int d_t, Stream& rng);

}  // namespace eqd
