#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "eqd/dynamics.hpp"
#include "eqd/projective.hpp"
#include "eqd/rng.hpp"

namespace eqd {

enum class ObservableKind { Lipschitz, Smooth, QpshLog, DshDiff, Composed };

std::string to_string(ObservableKind k);

struct NormCache {
    std::optional<double> lip_est;
    std::optional<double> star_est;
    std::optional<double> mean_est;
};

/// Real-valued test function on P^1 or P^2. Values may be -infinity on a
/// pole set (q.p.s.h. observables); everything else is finite.
class Observable {
public:
    using Fn = std::function<double(const ProjPoint&)>;

    /// `dim` is 1 or 2 when the observable only makes sense in one dimension,
    /// 0 when it is defined on both.
    Observable(std::string spec, ObservableKind kind, Fn fn, int dim = 0);

    /// Parses the observable grammar, e.g. "lip_of(clip(-3,0), qpsh_log(1,-0.2))".
    static Observable parse(const std::string& spec);

    double operator()(const ProjPoint& p) const { return (*fn_)(p); }

    const std::string& spec() const { return spec_; }
    ObservableKind kind() const { return kind_; }
    int dim() const { return dim_; }

    NormCache cached_norms;

private:
    std::string spec_;
    ObservableKind kind_;
    std::shared_ptr<const Fn> fn_;
    int dim_;
};

Observable make_observable(const std::string& spec);

// Programmatic constructors mirroring the grammar.
Observable constant(double c);
Observable sum(const Observable& a, const Observable& b);
Observable scale(double c, const Observable& a);
/// psi o f; not expressible in the textual grammar.
Observable compose_with_map(const DynMap& map, const Observable& psi);
/// psi o f - psi.
Observable coboundary(const DynMap& map, const Observable& psi);
/// phi - c.
Observable centered(const Observable& phi, double c);

struct LipschitzEstimate {
    double value = 0.0;
    /// Sampling can only ever under-estimate the supremum.
    bool lower_bound = true;
};

/// Sampled sup |phi(x) - phi(y)| / dist(x, y) over random pairs, refined by
/// hill-climbing from the best 10 pairs. Returns +infinity for q.p.s.h. logs.
LipschitzEstimate lipschitz_estimate(const Observable& phi, std::size_t pairs, Stream& rng, int dim = 0);

/// Quadrature data on an equal-area-reweighted octahedral sphere grid.
struct SphereNorms {
    double mean = 0.0;        ///< m(phi), Lebesgue mean
    double dirichlet = 0.0;   ///< integral of i d(phi) ^ dbar(phi)
    double l1_dev = 0.0;      ///< ||phi - m(phi)||_{L^1}
    double l2_dev = 0.0;      ///< ||phi - m(phi)||_{L^2}
    double l2 = 0.0;          ///< ||phi||_{L^2}
    double excluded_area = 0.0;  ///< fraction of area dropped around poles
    std::size_t cells = 0;

    /// |m(phi)| + (integral of i d(phi) ^ dbar(phi))^(1/2).
    double star() const;
};

SphereNorms sphere_norms(const Observable& phi, std::size_t grid_n);

/// ||phi||_* on P^1 from the grid (the infimum is attained at the gradient
/// current itself in dimension 1).
double star_norm_p1(const Observable& phi, std::size_t grid_n);

struct PoincareEntry {
    std::string spec;
    double ratio = 0.0;
    bool skipped = false;
};

struct PoincareReport {
    int p = 2;
    std::vector<PoincareEntry> entries;
    double max_ratio = 0.0;
};

/// ||phi - m(phi)||_{L^p} / ||d phi||_{L^2} per observable on P^1, p in {1, 2}.
PoincareReport poincare_sobolev_check(const std::vector<Observable>& phis, std::size_t grid_n, int p = 2);

}  // namespace eqd
