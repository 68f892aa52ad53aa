#include "eqd/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "eqd/errors.hpp"
#include "eqd/fibers.hpp"
#include "eqd/parallel.hpp"
#include "eqd/statistics.hpp"

namespace eqd {

namespace {

double checked(const Observable& phi, const ProjPoint& w) {
    const double v = phi(w);
    if (v == -std::numeric_limits<double>::infinity())
        throw PolarValue("observable " + phi.spec() + " is -infinity at fiber point " + w.to_string());
    return v;
}

struct TreeWalker {
    const DynMap& map;
    const Observable& phi;
    int d_t;
    int depth;
    int full_depth;
    Stream& rng;
    std::vector<double>& acc;

    void visit(const ProjPoint& z, int level, double weight) {
        acc[static_cast<std::size_t>(level)] += weight * checked(phi, z);
        if (level == depth) return;
        if (level < full_depth) {
            const Fiber f = fiber(map, z);
            for (const auto& fp : f.points) visit(fp.point, level + 1, weight * fp.multiplicity / d_t);
        } else {
            visit(random_preimage(map, z, rng), level + 1, weight);
        }
    }
};

double rms(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return v.empty() ? 0.0 : std::sqrt(s / static_cast<double>(v.size()));
}

double sup_abs(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

}  // namespace

double apply_pf(const DynMap& map, const Observable& phi, const ProjPoint& z) {
    const Fiber f = fiber(map, z);
    const int d_t = degrees(map).d_t;
    double sum = 0.0;
    for (const auto& fp : f.points) sum += fp.multiplicity * checked(phi, fp.point);
    return sum / d_t;
}

std::vector<double> pf_iterates(const DynMap& map, const Observable& phi, const ProjPoint& z, int depth, int full_depth,
                                Stream& rng) {
    if (depth < 0) throw Error("iterate depth must be non-negative");
    std::vector<double> acc(static_cast<std::size_t>(depth) + 1, 0.0);
    TreeWalker w{map, phi, degrees(map).d_t, depth, std::max(0, full_depth), rng, acc};
    w.visit(z, 0, 1.0);
    return acc;
}

int affordable_depth(const DynMap& map, std::size_t nodes, double budget) {
    const double d_t = degrees(map).d_t;
    double cost = static_cast<double>(nodes);
    int depth = 0;
    while (cost * d_t <= budget && depth < 64) {
        cost *= d_t;
        ++depth;
    }
    return depth;
}

LebesgueMean lebesgue_mean(const Observable& phi, std::size_t nodes, const Stream& rng, int dim) {
    if (dim == 0) dim = phi.dim() ? phi.dim() : 1;
    const SampleSet s = fubini_study_sample(dim, nodes, rng);
    const Integral r = integrate(s, phi);
    return {r.mean, r.std_err, r.dropped, r.polar_warning};
}

std::string DecompositionTrace::to_csv() const {
    std::string out = "n,c_n,b_n,phi_tail_L2,phi_tail_sup,stderr\n";
    char buf[256];
    for (std::size_t n = 0; n < c.size(); ++n) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", n, c[n], b[n], phi_tail_l2[n],
                      phi_tail_sup[n], std_err[n]);
        out += buf;
    }
    return out;
}

DecompositionTrace decompose(const DynMap& map, const Observable& phi, int N, std::size_t nodes, const Stream& rng,
                             unsigned workers, double budget) {
    require_hypothesis(map);
    if (N < 0) throw Error("truncation order must be non-negative");
    if (nodes < 2) throw Error("decompose needs at least 2 quadrature nodes");
    if (static_cast<double>(nodes) > budget)
        throw BudgetExceeded(std::to_string(nodes) + " quadrature nodes exceed the fiber budget");
    const int dim = map.dim();
    const int full = affordable_depth(map, nodes, budget);

    std::vector<std::vector<double>> v(nodes);
    parallel_for(nodes, workers, [&](std::size_t j) {
        Stream s = rng.child(j);
        const ProjPoint z = sample_fubini_study(s, dim);
        v[j] = pf_iterates(map, phi, z, N, full, s);
    });

    DecompositionTrace t;
    t.quadrature = {"fubini_study_mc", nodes, rng.seed(), std::min(full, N)};
    const auto n_terms = static_cast<std::size_t>(N) + 1;
    std::vector<double> level(nodes), diff(nodes);
    double prev_mean = 0.0;
    for (std::size_t n = 0; n < n_terms; ++n) {
        for (std::size_t j = 0; j < nodes; ++j) {
            level[j] = v[j][n];
            diff[j] = n == 0 ? v[j][0] : v[j][n] - v[j][n - 1];
        }
        const MeanEstimate m = batch_means(level);
        const MeanEstimate dc = batch_means(diff);
        // c_n from the telescoped means keeps sum c_n = m(Lambda^N phi) exact.
        t.c.push_back(n == 0 ? m.mean : m.mean - prev_mean);
        t.std_err.push_back(dc.std_err);
        for (double& x : level) x -= m.mean;
        t.phi_tail_l2.push_back(rms(level));
        t.phi_tail_sup.push_back(sup_abs(level));
        prev_mean = m.mean;
        if (n + 1 == n_terms) {
            t.c_phi = m.mean;
            t.c_phi_std_err = m.std_err;
        }
    }
    t.b.assign(n_terms, 0.0);
    for (std::size_t n = n_terms - 1; n-- > 0;) t.b[n] = t.b[n + 1] - t.c[n + 1];
    return t;
}

GordinSeries gordin_series(const DynMap& map, const Observable& phi, const SampleSet& mu, int N, unsigned workers,
                           double budget) {
    if (N < 0) throw Error("series length must be non-negative");
    if (!mu.uniform) throw Error("gordin_series needs an equal-weight sample set");
    const double d_t = degrees(map).d_t;
    const double per_sample = std::pow(d_t, N);
    std::size_t used = mu.size();
    if (static_cast<double>(used) * per_sample > budget) used = static_cast<std::size_t>(budget / per_sample);
    if (used < 100)
        throw BudgetExceeded("exhaustive depth-" + std::to_string(N) + " trees fit for only " + std::to_string(used) +
                             " samples");

    std::vector<std::vector<double>> v(used);
    parallel_for(used, workers, [&](std::size_t j) {
        Stream unused(0, j);
        v[j] = pf_iterates(map, phi, mu.points[j], N, N, unused);
    });

    GordinSeries out;
    out.samples_used = used;
    std::vector<double> abs_n(used), partial(used, 0.0);
    double total = 0.0;
    for (int n = 0; n <= N; ++n) {
        for (std::size_t j = 0; j < used; ++j) {
            abs_n[j] = std::abs(v[j][static_cast<std::size_t>(n)]);
            partial[j] += abs_n[j];
        }
        const MeanEstimate m = batch_means(abs_n);
        const MeanEstimate p = batch_means(partial);
        total += m.mean;
        out.terms.push_back({n, m.mean, m.std_err, total, p.std_err});
    }
    return out;
}

}  // namespace eqd
