#pragma once

// Statistical primitives shared by the sampling, transfer and stats modules.

#include <functional>
#include <span>
#include <vector>

namespace eqd {

struct MeanEstimate {
    double mean = 0.0;
    double std_err = 0.0;
};

/// Mean with batch-means standard error (floor(sqrt(N)) batches).
MeanEstimate batch_means(std::span<const double> values);

/// Weighted mean; the standard error is 0 (exact atoms carry no sampling noise).
MeanEstimate weighted_mean(std::span<const double> values, std::span<const double> weights);

/// Asymptotic Kolmogorov tail probability Q(lambda) = P(K > lambda).
double kolmogorov_q(double lambda);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// One-sample KS test against a continuous CDF; p-value from the asymptotic
/// distribution with Stephens' finite-n correction.
KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf);

/// Two-sample KS test.
KsResult ks_test_2(std::vector<double> a, std::vector<double> b);

/// Upper tail of the chi-square distribution.
double chi_square_sf(double x, double dof);

/// Standard normal CDF.
double normal_cdf(double x);

}  // namespace eqd
