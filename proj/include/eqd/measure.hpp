#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eqd/dynamics.hpp"
#include "eqd/observables.hpp"
#include "eqd/rng.hpp"

namespace eqd {

enum class SampleMethod { Tree, Backward, FubiniStudy };

std::string to_string(SampleMethod m);
SampleMethod sample_method_from_string(const std::string& s);

struct Provenance {
    std::string map_hash = "-";
    SampleMethod method = SampleMethod::FubiniStudy;
    /// Tree depth n, or the burn-in length for backward walks.
    int depth = 0;
    std::uint64_t seed = 0;
    std::size_t count = 0;
};

/// Weighted point cloud approximating a measure on P^1 or P^2.
struct SampleSet {
    int dim = 1;
    std::vector<ProjPoint> points;
    /// Positive, summing to 1.
    std::vector<double> weights;
    bool uniform = true;
    Provenance provenance;
    /// Walks lost to the indeterminacy set (backward sampling only).
    std::size_t dropped = 0;

    std::size_t size() const { return points.size(); }
};

/// Atoms of d_t^{-n} (f^n)^* delta_a: every branch of the depth-n fiber tree,
/// weighted by its multiplicity product over d_t^n. Throws TreeTooLarge when
/// d_t^n > 1e6.
SampleSet pullback_tree(const DynMap& map, const ProjPoint& a, int n);

inline constexpr double kTreeLimit = 1e6;

/// N independent random inverse-branch walks of length burn_in from a, keeping
/// the endpoints. Walk i draws from rng.child(i), so the result does not depend
/// on `workers`. Throws ExceptionalStart when more than 1% of the walks stay
/// on single-point fibers.
SampleSet backward_orbit_sample(const DynMap& map, const ProjPoint& a, int burn_in, std::size_t N, const Stream& rng,
                                unsigned workers = 0);

/// N points drawn from the Fubini-Study volume form.
SampleSet fubini_study_sample(int dim, std::size_t N, const Stream& rng);

/// Random inverse-branch path x_0 = start, x_{k+1} in f^{-1}(x_k).
std::vector<ProjPoint> backward_path(const DynMap& map, const ProjPoint& start, std::size_t length, Stream& rng);

struct Integral {
    double mean = 0.0;
    double std_err = 0.0;
    /// Points where phi was -infinity; excluded from the mean.
    std::size_t dropped = 0;
    /// More than 1% of the samples (by weight) sat on the pole set.
    bool polar_warning = false;
};

/// Weighted mean of phi; batch-means standard error for equal-weight sets and
/// 0 for tree atoms.
Integral integrate(const SampleSet& s, const Observable& phi);
/// Same with precomputed values (may contain -infinity).
Integral integrate_values(const SampleSet& s, const std::vector<double>& values);

/// Text format: header "EQD1 dim count method depth seed maphash", then
/// "w re0 im0 re1 im1 [re2 im2]" per sample with w = '*' for uniform sets.
void write_sample_set(const SampleSet& s, const std::string& path);
std::string format_sample_set(const SampleSet& s);
SampleSet read_sample_set(const std::string& path);
SampleSet parse_sample_set(const std::string& text);

}  // namespace eqd
