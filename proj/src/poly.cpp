#include "eqd/poly.hpp"

#include <cmath>

namespace eqd::poly {

cplx eval(std::span<const cplx> c, cplx z) {
    cplx v = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) v = v * z + c[k];
    return v;
}

void eval_d1(std::span<const cplx> c, cplx z, cplx& value, cplx& deriv) {
    value = 0.0;
    deriv = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) {
        deriv = deriv * z + value;
        value = value * z + c[k];
    }
}

Coeffs derivative(std::span<const cplx> c) {
    if (c.size() <= 1) return {cplx(0.0)};
    Coeffs d(c.size() - 1);
    for (std::size_t k = 1; k < c.size(); ++k) d[k - 1] = c[k] * static_cast<double>(k);
    return d;
}

Coeffs reversed(std::span<const cplx> c) { return Coeffs(c.rbegin(), c.rend()); }

Coeffs multiply(std::span<const cplx> a, std::span<const cplx> b) {
    if (a.empty() || b.empty()) return {};
    Coeffs out(a.size() + b.size() - 1, cplx(0.0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

Coeffs trimmed(std::span<const cplx> c) {
    std::size_t n = c.size();
    while (n > 0 && c[n - 1] == cplx(0.0)) --n;
    return Coeffs(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(n));
}

double abs_scale(std::span<const cplx> c, double r) {
    double s = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) s = s * r + std::abs(c[k]);
    return s;
}

double backward_error(std::span<const cplx> c, cplx z) {
    const double r = std::abs(z);
    if (r <= 1.0) {
        const double scale = abs_scale(c, r);
        return scale == 0.0 ? 0.0 : std::abs(eval(c, z)) / scale;
    }
    const Coeffs rc = reversed(c);
    const cplx u = 1.0 / z;
    const double scale = abs_scale(rc, std::abs(u));
    return scale == 0.0 ? 0.0 : std::abs(eval(rc, u)) / scale;
}

cplx eval_binary(std::span<const cplx> g, cplx w0, cplx w1) {
    // Horner in whichever affine chart keeps the ratio bounded.
    const std::size_t d = g.size() - 1;
    if (std::abs(w1) >= std::abs(w0)) {
        const cplx t = w0 / w1;
        return eval(g, t) * std::pow(w1, static_cast<int>(d));
    }
    const cplx s = w1 / w0;
    cplx v = 0.0;
    for (std::size_t k = 0; k <= d; ++k) v = v * s + g[k];
    return v * std::pow(w0, static_cast<int>(d));
}

}  // namespace eqd::poly
