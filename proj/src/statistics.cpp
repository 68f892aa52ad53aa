#include "eqd/statistics.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numeric>

namespace eqd {

MeanEstimate batch_means(std::span<const double> values) {
    const std::size_t n = values.size();
    MeanEstimate r;
    if (n == 0) return r;
    r.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
    const auto batches = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
    if (batches < 2) return r;
    const std::size_t size = n / batches;
    std::vector<double> bm(batches);
    for (std::size_t b = 0; b < batches; ++b) {
        double s = 0.0;
        for (std::size_t i = b * size; i < (b + 1) * size; ++i) s += values[i];
        bm[b] = s / static_cast<double>(size);
    }
    const double m = std::accumulate(bm.begin(), bm.end(), 0.0) / static_cast<double>(batches);
    double ss = 0.0;
    for (double v : bm) ss += (v - m) * (v - m);
    r.std_err = std::sqrt(ss / static_cast<double>(batches - 1) / static_cast<double>(batches));
    return r;
}

MeanEstimate weighted_mean(std::span<const double> values, std::span<const double> weights) {
    double s = 0.0, w = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        s += weights[i] * values[i];
        w += weights[i];
    }
    return {w > 0.0 ? s / w : 0.0, 0.0};
}

double kolmogorov_q(double lambda) {
    if (lambda < 0.2) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 ? 1.0 : -1.0) * term;
        if (term < 1e-17) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {
double stephens(double d, double n) {
    const double sn = std::sqrt(n);
    return kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
}
}  // namespace

KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return {d, sample.empty() ? 1.0 : stephens(d, n)};
}

KsResult ks_test_2(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return {d, stephens(d, na * nb / (na + nb))};
}

double chi_square_sf(double x, double dof) {
    if (x <= 0.0) return 1.0;
    return boost::math::gamma_q(0.5 * dof, 0.5 * x);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace eqd
