#pragma once

// Dense complex polynomials with ascending coefficients: c[k] multiplies z^k.

#include <complex>
#include <span>
#include <vector>

namespace eqd::poly {

using cplx = std::complex<double>;
using Coeffs = std::vector<cplx>;

cplx eval(std::span<const cplx> c, cplx z);
/// Value and first derivative by Horner.
void eval_d1(std::span<const cplx> c, cplx z, cplx& value, cplx& deriv);
Coeffs derivative(std::span<const cplx> c);
Coeffs reversed(std::span<const cplx> c);
Coeffs multiply(std::span<const cplx> a, std::span<const cplx> b);
/// Drops trailing (highest-degree) coefficients that are exactly zero.
Coeffs trimmed(std::span<const cplx> c);

/// Sum |c_k| |z|^k, the scale against which backward error is measured.
double abs_scale(std::span<const cplx> c, double r);

/// |p(z)| / sum |c_k||z|^k, evaluated in the chart (z or 1/z) where |.| <= 1.
double backward_error(std::span<const cplx> c, cplx z);

/// Homogeneous binary form sum_k g[k] w0^k w1^(d-k), d = g.size() - 1.
cplx eval_binary(std::span<const cplx> g, cplx w0, cplx w1);

}  // namespace eqd::poly
