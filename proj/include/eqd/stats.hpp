#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eqd/dynamics.hpp"
#include "eqd/measure.hpp"
#include "eqd/observables.hpp"
#include "eqd/rng.hpp"

namespace eqd {

struct CorrelationEntry {
    int n = 0;
    double corr = 0.0;
    double std_err = 0.0;
};

struct CorrelationMeta {
    std::string map_hash;
    std::string psi_spec;
    std::string phi_spec;
    Provenance sample;
    double psi_mean = 0.0;
    double phi_mean = 0.0;
    /// Samples whose forward orbit met the indeterminacy set.
    std::size_t dropped = 0;
    bool drop_warning = false;
};

struct CorrelationSeries {
    std::vector<CorrelationEntry> entries;
    CorrelationMeta meta;
};

/// corr_n = mean of (psi(f^n x) - mean_n)(phi(x) - mean_phi) over mu, n = 0..n_max,
/// by forward iteration of the samples. Batch-means standard errors for
/// equal-weight sets, 0 for tree atoms.
CorrelationSeries correlation_series(const DynMap& map, const SampleSet& mu, const Observable& psi,
                                     const Observable& phi, int n_max, unsigned workers = 0);

struct DecayFit {
    /// Fitted decay rate in nats per step (-slope of log|corr_n|).
    double rate = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    /// log of the fitted amplitude.
    double log_amplitude = 0.0;
    /// First n in the fit range with |corr_n| <= 2 stderr (entries.size() if none).
    int floor_index = 0;
    int used = 0;
    /// Fewer than 3 entries above the noise floor; the other fields are 0.
    bool insufficient_signal = false;

    double ci_width() const { return ci_hi - ci_lo; }
};

/// Weighted least squares of log|corr_n| on n over entries above 2 stderr with
/// n in [n_lo, n_hi] (n_hi < 0: no upper limit); percentile bootstrap CI over
/// 1000 resamples of the fitted points.
DecayFit decay_fit(const std::vector<CorrelationEntry>& entries, int n_lo = 0, int n_hi = -1,
                   const Stream& rng = Stream(0x6465636179ULL));
DecayFit decay_fit(const CorrelationSeries& series, int n_lo = 0, int n_hi = -1,
                   const Stream& rng = Stream(0x6465636179ULL));

struct MixingRow {
    int n = 0;
    double corr = 0.0;
    double bound = 0.0;
    double ratio = 0.0;
    double ratio_std_err = 0.0;
    bool above_floor = false;
};

struct MixingReport {
    std::vector<MixingRow> rows;
    /// sup of the ratios above the noise floor.
    double a_emp = 0.0;
    /// The ratios above the floor grow: their decay fit has a bootstrap
    /// interval entirely below zero.
    bool exponent_violation = false;
    int violation_n = -1;

    /// CSV with header n,corr,stderr,bound,ratio.
    std::string to_csv(const CorrelationSeries& series) const;
};

/// ratio_n = |corr_n| / (psi_sup phi_star delta_n^{1/2} d_t^{-n/2}). Throws
/// NormUnavailable when a norm is missing (non-finite or negative).
MixingReport mixing_bound_check(const CorrelationSeries& series, const DynMap& map, double phi_star_norm,
                                double psi_sup);

struct GreenKubo {
    /// <phi^2> + 2 sum_{n=1}^{n_max} <phi (phi o f^n)> for the centered phi.
    double sigma2 = 0.0;
    double std_err = 0.0;
    /// Geometric tail beyond n_max extrapolated from decay_fit (0 without signal).
    double tail = 0.0;
    double phi_mean = 0.0;
    CorrelationSeries series;
};

/// Green-Kubo variance; phi is centered internally by its sample mean.
GreenKubo green_kubo_sigma2(const DynMap& map, const SampleSet& mu, const Observable& phi, int n_max,
                            unsigned workers = 0);

struct CltOptions {
    /// Truncation of the Green-Kubo series used for sigma2_gk.
    int gk_n_max = 6;
    /// Variance of the reference normal law for the KS test; sigma2_gk if unset.
    std::optional<double> reference_sigma2;
    /// Subtract the mean of the trajectory sums before the KS test. Use when
    /// <mu, phi> is only known to sampling accuracy: an error e in it shifts
    /// every sum by e sqrt(n_block).
    bool recenter = false;
    unsigned workers = 0;
};

struct CltReport {
    double sigma2_gk = 0.0;
    double sigma2_gk_std_err = 0.0;
    double sigma2_emp = 0.0;
    double sigma2_emp_std_err = 0.0;
    double reference_sigma2 = 0.0;
    double ks_stat = 0.0;
    double ks_p = 0.0;
    int n_block = 0;
    int trajectories = 0;
    bool degenerate = false;
    bool recentered = false;
    std::size_t dropped = 0;
    /// S = sum_{i<n_block} phi(f^i x) / sqrt(n_block), one per trajectory.
    std::vector<double> trajectory_stats;

    /// {sigma2_gk, sigma2_emp, ks_stat, ks_p, degenerate, ...} as JSON text.
    std::string summary_json() const;
};

/// Normalized Birkhoff sums over stationary orbit segments. Each segment is a
/// random inverse-branch path from a point drawn from mu, read backwards: the
/// reversed path is a forward orbit of a mu-distributed point. phi must be
/// centered by the caller unless options.recenter is set.
CltReport birkhoff_clt(const DynMap& map, const SampleSet& mu, const Observable& phi, int n_block, int trajectories,
                       const Stream& rng, const CltOptions& options = {});

}  // namespace eqd
