#include "eqd/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "eqd/errors.hpp"
#include "eqd/fibers.hpp"
#include "eqd/parallel.hpp"
#include "eqd/statistics.hpp"

namespace eqd {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kBootstrap = 1000;
/// Relative model error added to every log-variance in the rate fits.
constexpr double kLogVarFloor = 1e-4;

bool monte_carlo(const SampleSet& s) { return s.uniform && s.provenance.method != SampleMethod::Tree; }

MeanEstimate mean_of(const SampleSet& s, const std::vector<double>& v, const std::vector<double>& w) {
    return monte_carlo(s) ? batch_means(v) : weighted_mean(v, w);
}

struct Orbits {
    /// psi(f^n x_j) laid out as [j][n]; rows of dropped samples are empty.
    std::vector<std::vector<double>> psi;
    std::vector<double> phi;
    std::vector<double> weights;
    std::size_t dropped = 0;
};

Orbits forward_orbits(const DynMap& map, const SampleSet& mu, const Observable& psi, const Observable& phi, int n_max,
                      unsigned workers) {
    const std::size_t N = mu.size();
    std::vector<std::vector<double>> rows(N);
    std::vector<double> phis(N, kNaN);
    parallel_for(N, workers, [&](std::size_t j) {
        ProjPoint x = mu.points[j];
        const double p0 = phi(x);
        if (!std::isfinite(p0)) return;
        std::vector<double> row;
        row.reserve(static_cast<std::size_t>(n_max) + 1);
        try {
            for (int n = 0; n <= n_max; ++n) {
                if (n > 0) x = evaluate(map, x);
                const double v = psi(x);
                if (!std::isfinite(v)) return;
                row.push_back(v);
            }
        } catch (const IndeterminacyPoint&) {
            return;
        }
        rows[j] = std::move(row);
        phis[j] = p0;
    });
    Orbits o;
    for (std::size_t j = 0; j < N; ++j) {
        if (rows[j].empty()) {
            ++o.dropped;
            continue;
        }
        o.psi.push_back(std::move(rows[j]));
        o.phi.push_back(phis[j]);
        o.weights.push_back(mu.weights[j]);
    }
    return o;
}

double wmean(const std::vector<double>& v, const std::vector<double>& w) {
    double s = 0.0, t = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        s += w[i] * v[i];
        t += w[i];
    }
    return s / t;
}

struct Line {
    double slope = 0.0;
    double intercept = 0.0;
    bool ok = false;
};

Line wls(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w) {
    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
    }
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += w[i] * (x[i] - mx) * (x[i] - mx);
        sxy += w[i] * (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0) return {};
    const double b = sxy / sxx;
    return {b, my - b * mx, true};
}

double percentile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::string num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

CorrelationSeries correlation_series(const DynMap& map, const SampleSet& mu, const Observable& psi,
                                     const Observable& phi, int n_max, unsigned workers) {
    if (n_max < 0) throw Error("n_max must be non-negative");
    if (mu.dim != map.dim()) throw DimMismatch("sample set and map live on different spaces");
    const Orbits o = forward_orbits(map, mu, psi, phi, n_max, workers);
    if (o.phi.empty()) throw Error("every sample was dropped from the correlation series");

    CorrelationSeries s;
    s.meta = {map.hash(), psi.spec(), phi.spec(), mu.provenance, 0.0, 0.0, o.dropped,
              static_cast<double>(o.dropped) > 0.01 * static_cast<double>(mu.size())};
    const double phi_bar = wmean(o.phi, o.weights);
    s.meta.phi_mean = phi_bar;
    const std::size_t M = o.phi.size();
    std::vector<double> col(M), prod(M);
    for (int n = 0; n <= n_max; ++n) {
        for (std::size_t j = 0; j < M; ++j) col[j] = o.psi[j][static_cast<std::size_t>(n)];
        const double psi_bar = wmean(col, o.weights);
        if (n == 0) s.meta.psi_mean = psi_bar;
        for (std::size_t j = 0; j < M; ++j) prod[j] = (col[j] - psi_bar) * (o.phi[j] - phi_bar);
        const MeanEstimate m = mean_of(mu, prod, o.weights);
        s.entries.push_back({n, m.mean, m.std_err});
    }
    return s;
}

DecayFit decay_fit(const std::vector<CorrelationEntry>& entries, int n_lo, int n_hi, const Stream& rng) {
    DecayFit fit;
    std::vector<double> x, y, w;
    bool started = false;
    int last_n = n_lo - 1;
    fit.floor_index = -1;
    for (const auto& e : entries) {
        if (e.n < n_lo || (n_hi >= 0 && e.n > n_hi)) continue;
        last_n = e.n;
        const double a = std::abs(e.corr);
        const bool above = a > 2.0 * e.std_err && a > 0.0 && std::isfinite(a);
        if (!above) {
            if (started) {
                fit.floor_index = e.n;
                break;
            }
            continue;
        }
        started = true;
        const double rel = e.std_err / a;
        x.push_back(e.n);
        y.push_back(std::log(a));
        w.push_back(1.0 / (rel * rel + kLogVarFloor));
    }
    if (fit.floor_index < 0) fit.floor_index = last_n + 1;
    fit.used = static_cast<int>(x.size());
    const Line line = x.size() >= 3 ? wls(x, y, w) : Line{};
    if (!line.ok) {
        fit.insufficient_signal = true;
        return fit;
    }
    fit.rate = -line.slope;
    fit.log_amplitude = line.intercept;

    Stream s = rng;
    std::vector<double> rates;
    rates.reserve(kBootstrap);
    std::vector<double> bx(x.size()), by(x.size()), bw(x.size());
    for (int b = 0; b < kBootstrap; ++b) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            const auto k = static_cast<std::size_t>(s.below(x.size()));
            bx[i] = x[k];
            by[i] = y[k];
            bw[i] = w[k];
        }
        const Line l = wls(bx, by, bw);
        if (l.ok) rates.push_back(-l.slope);
    }
    if (rates.empty()) {
        fit.ci_lo = fit.ci_hi = fit.rate;
    } else {
        fit.ci_lo = percentile(rates, 0.025);
        fit.ci_hi = percentile(rates, 0.975);
    }
    return fit;
}

DecayFit decay_fit(const CorrelationSeries& series, int n_lo, int n_hi, const Stream& rng) {
    return decay_fit(series.entries, n_lo, n_hi, rng);
}

MixingReport mixing_bound_check(const CorrelationSeries& series, const DynMap& map, double phi_star_norm,
                                double psi_sup) {
    if (!std::isfinite(phi_star_norm) || phi_star_norm < 0.0)
        throw NormUnavailable("Sobolev norm of phi is unavailable (" + num(phi_star_norm) + ")");
    if (!std::isfinite(psi_sup) || psi_sup < 0.0)
        throw NormUnavailable("sup norm of psi is unavailable (" + num(psi_sup) + ")");
    const DegreeReport deg = degrees(map);
    MixingReport rep;
    std::vector<CorrelationEntry> ratios;
    for (const auto& e : series.entries) {
        MixingRow r;
        r.n = e.n;
        r.corr = e.corr;
        r.bound = psi_sup * phi_star_norm * std::sqrt(deg.delta(static_cast<std::size_t>(e.n))) *
                  std::pow(static_cast<double>(deg.d_t), -0.5 * e.n);
        const double a = std::abs(e.corr);
        if (r.bound > 0.0) {
            r.ratio = a / r.bound;
            r.ratio_std_err = e.std_err / r.bound;
        } else {
            r.ratio = a == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        }
        r.above_floor = a > 2.0 * e.std_err && a > 0.0;
        if (r.above_floor) {
            rep.a_emp = std::max(rep.a_emp, r.ratio);
            ratios.push_back({r.n, r.ratio, r.ratio_std_err});
        }
        rep.rows.push_back(r);
    }
    // The exponent holds when the ratios do not grow: a decay fit of the ratio
    // sequence whose whole bootstrap interval is negative marks a violation.
    const DecayFit trend = decay_fit(ratios);
    if (!trend.insufficient_signal && trend.ci_hi < -1e-9) {
        rep.exponent_violation = true;
        for (std::size_t i = 1; i < ratios.size(); ++i)
            if (ratios[i].corr > ratios[i - 1].corr) {
                rep.violation_n = ratios[i].n;
                break;
            }
    }
    return rep;
}

std::string MixingReport::to_csv(const CorrelationSeries& series) const {
    std::string out = "n,corr,stderr,bound,ratio\n";
    char buf[256];
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", rows[i].n, rows[i].corr,
                      series.entries[i].std_err, rows[i].bound, rows[i].ratio);
        out += buf;
    }
    return out;
}

GreenKubo green_kubo_sigma2(const DynMap& map, const SampleSet& mu, const Observable& phi, int n_max,
                            unsigned workers) {
    if (n_max < 0) throw Error("n_max must be non-negative");
    if (mu.dim != map.dim()) throw DimMismatch("sample set and map live on different spaces");
    GreenKubo gk;
    gk.series = correlation_series(map, mu, phi, phi, n_max, workers);
    const Orbits o = forward_orbits(map, mu, phi, phi, n_max, workers);
    const std::size_t M = o.phi.size();
    gk.phi_mean = wmean(o.phi, o.weights);
    std::vector<double> means(static_cast<std::size_t>(n_max) + 1);
    std::vector<double> col(M);
    for (int n = 0; n <= n_max; ++n) {
        for (std::size_t j = 0; j < M; ++j) col[j] = o.psi[j][static_cast<std::size_t>(n)];
        means[static_cast<std::size_t>(n)] = wmean(col, o.weights);
    }
    // Per-sample contributions whose mean is the truncated Green-Kubo sum.
    std::vector<double> g(M);
    for (std::size_t j = 0; j < M; ++j) {
        const double c = o.phi[j] - gk.phi_mean;
        double v = c * c;
        for (int n = 1; n <= n_max; ++n) v += 2.0 * (o.psi[j][static_cast<std::size_t>(n)] - means[static_cast<std::size_t>(n)]) * c;
        g[j] = v;
    }
    const MeanEstimate m = mean_of(mu, g, o.weights);
    gk.sigma2 = m.mean;
    gk.std_err = m.std_err;

    const DecayFit fit = decay_fit(gk.series, 1);
    if (!fit.insufficient_signal && fit.rate > 0.0) {
        const double q = std::exp(-fit.rate);
        gk.tail = 2.0 * std::exp(fit.log_amplitude) * std::pow(q, n_max + 1) / (1.0 - q);
    }
    return gk;
}

std::string CltReport::summary_json() const {
    std::string s = "{\n";
    s += "  \"sigma2_gk\": " + num(sigma2_gk) + ",\n";
    s += "  \"sigma2_gk_stderr\": " + num(sigma2_gk_std_err) + ",\n";
    s += "  \"sigma2_emp\": " + num(sigma2_emp) + ",\n";
    s += "  \"sigma2_emp_stderr\": " + num(sigma2_emp_std_err) + ",\n";
    s += "  \"reference_sigma2\": " + num(reference_sigma2) + ",\n";
    s += "  \"ks_stat\": " + num(ks_stat) + ",\n";
    s += "  \"ks_p\": " + num(ks_p) + ",\n";
    s += "  \"n_block\": " + std::to_string(n_block) + ",\n";
    s += "  \"trajectories\": " + std::to_string(trajectories) + ",\n";
    s += "  \"dropped\": " + std::to_string(dropped) + ",\n";
    s += std::string("  \"recentered\": ") + (recentered ? "true" : "false") + ",\n";
    s += std::string("  \"degenerate\": ") + (degenerate ? "true" : "false") + "\n}\n";
    return s;
}

CltReport birkhoff_clt(const DynMap& map, const SampleSet& mu, const Observable& phi, int n_block, int trajectories,
                       const Stream& rng, const CltOptions& options) {
    if (n_block < 1 || trajectories < 2) throw Error("birkhoff_clt needs n_block >= 1 and trajectories >= 2");
    if (mu.size() == 0) throw Error("empty sample set");
    if (mu.dim != map.dim()) throw DimMismatch("sample set and map live on different spaces");

    CltReport rep;
    rep.n_block = n_block;
    rep.trajectories = trajectories;
    const GreenKubo gk = green_kubo_sigma2(map, mu, phi, options.gk_n_max, options.workers);
    rep.sigma2_gk = gk.sigma2;
    rep.sigma2_gk_std_err = gk.std_err;

    std::vector<double> cumulative;
    if (!mu.uniform) {
        cumulative.resize(mu.size());
        std::partial_sum(mu.weights.begin(), mu.weights.end(), cumulative.begin());
    }
    const int d_t = degrees(map).d_t;
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_block));
    std::vector<double> stats(static_cast<std::size_t>(trajectories), kNaN);
    parallel_for(stats.size(), options.workers, [&](std::size_t i) {
        Stream s = rng.child(i);
        std::size_t start;
        if (mu.uniform) {
            start = static_cast<std::size_t>(s.below(mu.size()));
        } else {
            const double u = s.uniform() * cumulative.back();
            start = std::min<std::size_t>(
                static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin()),
                mu.size() - 1);
        }
        ProjPoint x = mu.points[start];
        double sum = 0.0;
        try {
            for (int k = 0; k < n_block; ++k) {
                if (k > 0) x = pick(fiber(map, x), d_t, s);
                const double v = phi(x);
                if (!std::isfinite(v)) return;
                sum += v;
            }
        } catch (const IndeterminacyPoint&) {
            return;
        }
        stats[i] = sum * scale;
    });
    for (double v : stats)
        if (std::isfinite(v)) rep.trajectory_stats.push_back(v);
    rep.dropped = stats.size() - rep.trajectory_stats.size();
    const auto T = static_cast<double>(rep.trajectory_stats.size());
    if (T < 2) throw Error("fewer than two trajectories survived");

    const double mean = std::accumulate(rep.trajectory_stats.begin(), rep.trajectory_stats.end(), 0.0) / T;
    double m2 = 0.0, m4 = 0.0;
    for (double v : rep.trajectory_stats) {
        const double d2 = (v - mean) * (v - mean);
        m2 += d2;
        m4 += d2 * d2;
    }
    rep.sigma2_emp = m2 / (T - 1.0);
    rep.sigma2_emp_std_err = std::sqrt(std::max(0.0, m4 / T - (m2 / T) * (m2 / T)) / T);
    rep.recentered = options.recenter;
    if (options.recenter)
        for (double& v : rep.trajectory_stats) v -= mean;

    std::vector<double> vals, w;
    for (std::size_t j = 0; j < mu.size(); ++j) {
        const double v = phi(mu.points[j]);
        if (!std::isfinite(v)) continue;
        vals.push_back(v);
        w.push_back(mu.weights[j]);
    }
    const double pm = wmean(vals, w);
    for (double& v : vals) v = (v - pm) * (v - pm);
    const double var_mu = wmean(vals, w);
    rep.degenerate = rep.sigma2_emp <= std::max(1e-14, 20.0 * var_mu / n_block);

    rep.reference_sigma2 = options.reference_sigma2.value_or(rep.sigma2_gk);
    if (rep.reference_sigma2 > 0.0) {
        const double sd = std::sqrt(rep.reference_sigma2);
        const KsResult ks = ks_test(rep.trajectory_stats, [sd](double v) { return normal_cdf(v / sd); });
        rep.ks_stat = ks.statistic;
        rep.ks_p = ks.p_value;
    } else {
        rep.ks_stat = 1.0;
        rep.ks_p = 0.0;
    }
    return rep;
}

}  // namespace eqd
