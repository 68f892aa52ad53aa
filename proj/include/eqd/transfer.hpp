#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eqd/dynamics.hpp"
#include "eqd/measure.hpp"
#include "eqd/observables.hpp"
#include "eqd/rng.hpp"

namespace eqd {

/// Lambda phi(z) = d_t^{-1} sum over f^{-1}(z) of phi, with multiplicity.
/// Throws PolarValue when phi is -infinity at a fiber point.
double apply_pf(const DynMap& map, const Observable& phi, const ProjPoint& z);

/// Limit on fiber evaluations per tree engine call (nodes * d_t^depth).
inline constexpr double kTreeBudget = 1e7;

/// Lambda^k phi(z) for k = 0..depth. Branches are expanded exhaustively down
/// to `full_depth`; below that each leaf is continued along a single random
/// branch (an unbiased estimate of the remaining levels).
std::vector<double> pf_iterates(const DynMap& map, const Observable& phi, const ProjPoint& z, int depth, int full_depth,
                                Stream& rng);

/// Deepest exhaustive level affordable for `nodes` trees within `budget`.
int affordable_depth(const DynMap& map, std::size_t nodes, double budget = kTreeBudget);

struct LebesgueMean {
    double mean = 0.0;
    double std_err = 0.0;
    std::size_t dropped = 0;
    bool polar_warning = false;
};

/// Monte Carlo mean of phi against the Fubini-Study volume. `dim` defaults
/// to phi.dim(), or 1 when phi lives on both spaces.
LebesgueMean lebesgue_mean(const Observable& phi, std::size_t nodes, const Stream& rng, int dim = 0);

struct QuadratureMeta {
    std::string scheme = "fubini_study_mc";
    std::size_t nodes = 0;
    std::uint64_t seed = 0;
    /// Levels computed exhaustively; deeper levels are branch-subsampled.
    int exact_depth = 0;
};

struct DecompositionTrace {
    /// c_0..c_N.
    std::vector<double> c;
    /// b_n = -sum_{m>n} c_m over the truncated tail; b_N = 0.
    std::vector<double> b;
    std::vector<double> phi_tail_l2;
    std::vector<double> phi_tail_sup;
    /// Standard error of each c_n.
    std::vector<double> std_err;
    double c_phi = 0.0;
    double c_phi_std_err = 0.0;
    QuadratureMeta quadrature;

    /// CSV with header n,c_n,b_n,phi_tail_L2,phi_tail_sup,stderr.
    std::string to_csv() const;
};

/// c_0 = m(phi), c_{n+1} = m(Lambda phi_n) with phi_n = Lambda phi_{n-1} - c_n,
/// estimated on common quadrature nodes as c_n = m(Lambda^n phi) - m(Lambda^{n-1} phi).
/// Requires the degree hypothesis; throws BudgetExceeded when even one
/// tree level per node does not fit the budget.
DecompositionTrace decompose(const DynMap& map, const Observable& phi, int N, std::size_t nodes, const Stream& rng,
                             unsigned workers = 0, double budget = kTreeBudget);

struct GordinTerm {
    int n = 0;
    double term = 0.0;
    double std_err = 0.0;
    double partial_sum = 0.0;
    /// Batch-means standard error of the per-sample partial sum.
    double partial_std_err = 0.0;
};

struct GordinSeries {
    std::vector<GordinTerm> terms;
    /// Samples actually used (the set is truncated to keep trees exhaustive).
    std::size_t samples_used = 0;
};

/// Estimates of ||Lambda^n phi||_{L^1(mu)}, n = 0..N, from exhaustive fiber
/// trees at the first samples of `mu`. When |mu| d_t^N exceeds the budget
/// only the leading samples are used; BudgetExceeded if fewer than 100 fit.
GordinSeries gordin_series(const DynMap& map, const Observable& phi, const SampleSet& mu, int N, unsigned workers = 0,
                           double budget = kTreeBudget);

}  // namespace eqd
