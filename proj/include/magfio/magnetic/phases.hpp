#pragma once

#include "magfio/magnetic/potential.hpp"

#include <algorithm>

namespace magfio {

// Gamma^A(x, y): average of A over the segment [x, y].
// Composite rule with panels no longer than the potential's length scale.
inline Vec segment_average(const VectorPotential& A, const Vec& x, const Vec& y, int nodes = 16) {
  const auto& rule = gauss_legendre(nodes);
  const int panels = panel_count((y - x).norm(), A.length_scale());
  const double len = 1.0 / panels;
  Vec g = Vec::Zero(x.size());
  for (int p = 0; p < panels; ++p)
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double s = (p + rule.nodes[q]) * len;
      g += (rule.weights[q] * len) * A((1.0 - s) * x + s * y);
    }
  return g;
}

// Line integral of A along the oriented segment from x to y.
inline double circulation(const VectorPotential& A, const Vec& x, const Vec& y, int nodes = 16) {
  if (A.is_zero()) return 0.0;
  return -(x - y).dot(segment_average(A, x, y, nodes));
}

// omega^A(x, y) = exp(-i * circulation(x -> y)).
inline Complex omega_phase(const VectorPotential& A, const Vec& x, const Vec& y, int nodes = 16) {
  return std::polar(1.0, -circulation(A, x, y, nodes));
}

// C(x, y, z) = int_0^1 ds int_0^s dt B(t x + (s - t) y + (1 - s) z).
inline Mat triangle_moment(const MagneticField& B, const Vec& x, const Vec& y, const Vec& z,
                           int nodes = 16) {
  const int d = B.dim();
  if (B.is_constant()) return 0.5 * B.matrix(x);
  const auto& rule = gauss_legendre(nodes);
  Mat C = Mat::Zero(d, d);
  for (std::size_t a = 0; a < rule.nodes.size(); ++a) {
    const double s = rule.nodes[a];
    for (std::size_t b = 0; b < rule.nodes.size(); ++b) {
      const double u = rule.nodes[b];
      const double t = s * u;
      Vec p = t * x + (s - t) * y + (1.0 - s) * z;
      C += (rule.weights[a] * rule.weights[b] * s) * B.matrix(p);
    }
  }
  return C;
}

// Flux F(x, y, z) = -<C (x - y), x - z>; positive for counter-clockwise
// triangles in a positive constant field.
// Triangles larger than the field scale are split at edge midpoints into
// four similar, equally oriented pieces whose fluxes add.
inline double triangle_flux(const MagneticField& B, const Vec& x, const Vec& y, const Vec& z,
                            int nodes = 16) {
  if (B.is_zero()) return 0.0;
  const double diam = std::max({(x - y).norm(), (y - z).norm(), (z - x).norm()});
  if (B.is_constant() || !(diam > B.length_scale()))
    return -(triangle_moment(B, x, y, z, nodes) * (x - y)).dot(x - z);
  Vec xy = 0.5 * (x + y), yz = 0.5 * (y + z), zx = 0.5 * (z + x);
  return triangle_flux(B, x, xy, zx, nodes) + triangle_flux(B, xy, y, yz, nodes) +
         triangle_flux(B, zx, yz, z, nodes) + triangle_flux(B, yz, zx, xy, nodes);
}

inline Complex omega_triangle(const MagneticField& B, const Vec& x, const Vec& y, const Vec& z,
                              int nodes = 16) {
  return std::polar(1.0, -triangle_flux(B, x, y, z, nodes));
}

// |omega(x,y) omega(y,z) omega(z,x) - Omega(x,y,z)|.
inline double cocycle_defect(const VectorPotential& A, const MagneticField& B, const Vec& x,
                             const Vec& y, const Vec& z) {
  Complex lhs = omega_phase(A, x, y) * omega_phase(A, y, z) * omega_phase(A, z, x);
  return std::abs(lhs - omega_triangle(B, x, y, z));
}

}  // namespace magfio
