#pragma once

#include <array>
#include <complex>
#include <span>
#include <string>

#include "eqd/rng.hpp"

namespace eqd {

using cplx = std::complex<double>;

/// A point of P^1 (dim 1, two coordinates) or P^2 (dim 2, three coordinates)
/// stored in canonical form: unit Euclidean norm, and the coordinate of
/// largest modulus (lowest index on ties) is a positive real.
///
/// Affine charts: the last homogeneous coordinate is the homogenizing one,
/// so [z0 : z1] is the point z0/z1 of the Riemann sphere and [z0 : z1 : z2]
/// is the point (z0/z2, z1/z2) of C^2.
class ProjPoint {
public:
    /// Canonical representative of `raw` (2 or 3 entries). Throws InvalidPoint
    /// on the zero vector or a non-finite entry.
    static ProjPoint normalize(std::span<const cplx> raw);
    static ProjPoint normalize(std::initializer_list<cplx> raw);

    /// The point z of C (dim 1) or (z, w) of C^2 (dim 2).
    static ProjPoint affine(cplx z);
    static ProjPoint affine(cplx z, cplx w);

    int dim() const { return dim_; }
    int size() const { return dim_ + 1; }
    cplx operator[](int i) const { return coords_[static_cast<std::size_t>(i)]; }
    std::span<const cplx> coords() const { return {coords_.data(), static_cast<std::size_t>(size())}; }

    /// Affine coordinate i (z_i / z_dim); infinite when the point is at infinity.
    cplx affine_coord(int i) const;

    std::string to_string() const;

private:
    std::array<cplx, 3> coords_{};
    int dim_ = 1;
};

/// Fubini-Study chordal distance sqrt(1 - |<p,q>|^2), in [0, 1].
double chordal_distance(const ProjPoint& p, const ProjPoint& q);

/// Hermitian inner product <p, q> of the unit representatives.
cplx inner(const ProjPoint& p, const ProjPoint& q);

/// Draws a point distributed by the normalized Fubini-Study volume.
ProjPoint sample_fubini_study(Stream& rng, int dim);

/// P^1 <-> unit sphere S^2 (north pole = infinity = [1:0]); the pushforward of
/// the Fubini-Study volume is the uniform area measure.
ProjPoint from_sphere(double x, double y, double z);
std::array<double, 3> to_sphere(const ProjPoint& p);

}  // namespace eqd
