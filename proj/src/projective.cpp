#include "eqd/projective.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "eqd/errors.hpp"

namespace eqd {

ProjPoint ProjPoint::normalize(std::span<const cplx> raw) {
    if (raw.size() != 2 && raw.size() != 3)
        throw InvalidPoint("projective point needs 2 or 3 coordinates, got " + std::to_string(raw.size()));
    // Scale by the largest modulus first so the norm never over/underflows.
    std::size_t lead = 0;
    double big = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double a = std::abs(raw[i]);
        if (!std::isfinite(a)) throw InvalidPoint("non-finite homogeneous coordinate");
        if (a > big) {
            big = a;
            lead = i;
        }
    }
    if (big == 0.0) throw InvalidPoint("all homogeneous coordinates vanish");

    ProjPoint p;
    p.dim_ = static_cast<int>(raw.size()) - 1;
    // Already canonical up to rounding: keep the bits, so normalize is idempotent.
    if (raw[lead].imag() == 0.0 && raw[lead].real() > 0.0) {
        double n2 = 0.0;
        for (const cplx& c : raw) n2 += std::norm(c);
        if (std::abs(n2 - 1.0) <= 1e-15) {
            std::copy(raw.begin(), raw.end(), p.coords_.begin());
            return p;
        }
    }

    const cplx phase = std::conj(raw[lead]) / big;  // rotates raw[lead] onto the positive axis
    double norm2 = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        p.coords_[i] = raw[i] / big * phase;
        norm2 += std::norm(p.coords_[i]);
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t i = 0; i < raw.size(); ++i) p.coords_[i] *= inv;
    p.coords_[lead] = cplx(std::abs(p.coords_[lead]), 0.0);
    return p;
}

ProjPoint ProjPoint::normalize(std::initializer_list<cplx> raw) {
    return normalize(std::span<const cplx>(raw.begin(), raw.size()));
}

ProjPoint ProjPoint::affine(cplx z) { return normalize({z, cplx(1.0)}); }

ProjPoint ProjPoint::affine(cplx z, cplx w) { return normalize({z, w, cplx(1.0)}); }

cplx ProjPoint::affine_coord(int i) const {
    const cplx h = coords_[static_cast<std::size_t>(dim_)];
    if (h == cplx(0.0)) return cplx(INFINITY, 0.0);
    return coords_[static_cast<std::size_t>(i)] / h;
}

std::string ProjPoint::to_string() const {
    std::ostringstream os;
    os.precision(17);
    os << '[';
    for (int i = 0; i < size(); ++i) {
        if (i) os << ", ";
        os << (*this)[i].real() << (std::signbit((*this)[i].imag()) ? "" : "+") << (*this)[i].imag() << 'j';
    }
    os << ']';
    return os.str();
}

cplx inner(const ProjPoint& p, const ProjPoint& q) {
    if (p.dim() != q.dim()) throw DimMismatch("points of P^" + std::to_string(p.dim()) + " and P^" + std::to_string(q.dim()));
    cplx s = 0.0;
    for (int i = 0; i < p.size(); ++i) s += p[i] * std::conj(q[i]);
    return s;
}

double chordal_distance(const ProjPoint& p, const ProjPoint& q) {
    const double m = std::min(1.0, std::abs(inner(p, q)));
    // 1 - m^2 loses everything near m = 1; use the antisymmetric form there.
    if (m > 0.5) {
        double s = 0.0;
        for (int i = 0; i < p.size(); ++i)
            for (int j = i + 1; j < p.size(); ++j) s += std::norm(p[i] * q[j] - p[j] * q[i]);
        return std::min(1.0, std::sqrt(s));
    }
    return std::sqrt(1.0 - m * m);
}

ProjPoint sample_fubini_study(Stream& rng, int dim) {
    if (dim != 1 && dim != 2) throw DimMismatch("Fubini-Study sampling supports dim 1 or 2");
    std::array<cplx, 3> g{};
    for (int i = 0; i <= dim; ++i) g[static_cast<std::size_t>(i)] = cplx(rng.normal(), rng.normal());
    return ProjPoint::normalize(std::span<const cplx>(g.data(), static_cast<std::size_t>(dim + 1)));
}

ProjPoint from_sphere(double x, double y, double z) {
    if (z >= 0.0) return ProjPoint::normalize({cplx(1.0 + z, 0.0), cplx(x, -y)});
    return ProjPoint::normalize({cplx(x, y), cplx(1.0 - z, 0.0)});
}

std::array<double, 3> to_sphere(const ProjPoint& p) {
    // |z0|^2 - |z1|^2 = z and 2 z0 conj(z1) = x + iy for unit representatives.
    const cplx w = 2.0 * p[0] * std::conj(p[1]);
    return {w.real(), w.imag(), std::norm(p[0]) - std::norm(p[1])};
}

}  // namespace eqd
