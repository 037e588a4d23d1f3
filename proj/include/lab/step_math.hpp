#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace lab::step {

// Constant-coefficient step for -phi'' + q phi = E phi over length l, written
// through z = (E - q) l^2:
//
//   [ phi  ]        [ C(z)        l S(z) ] [ phi  ]
//   [ phi' ]  |->   [ -(z/l) S(z) C(z)   ] [ phi' ]
//
// with C(z) = cos sqrt(z) (= cosh sqrt(-z) for z < 0) and S(z) = sin(sqrt z)/
// sqrt(z) (= sinh analog).  One analytic pair covers the oscillatory,
// hyperbolic and shear cases; the series branch keeps C and S smooth through
// z = 0 and avoids the 0/0 in S.
inline constexpr double kSeriesThreshold = 1e-8;

inline void cs(double z, double& C, double& S) {
  if (std::abs(z) < kSeriesThreshold) {
    C = 1.0 - z * (0.5 - z * (1.0 / 24.0 - z / 720.0));
    S = 1.0 - z * (1.0 / 6.0 - z * (1.0 / 120.0 - z / 5040.0));
  } else if (z > 0.0) {
    double x = std::sqrt(z);
    C = std::cos(x);
    S = std::sin(x) / x;
  } else {
    double x = std::sqrt(-z);
    C = std::cosh(x);
    S = std::sinh(x) / x;
  }
}

// Constant piece of a unit cell: q = coupling * u_height over the length.
struct CellPiece {
  double length = 0.0;
  double u_height = 0.0;
};

// Advance one sample across one cell and renormalize.  This exact sequence of
// operations is shared by transfer::propagate, the scalar batch kernel and the
// AVX2 batch kernel's tail lanes; the AVX2 vector body mirrors it op for op.
// Returns the log of the norm taken out by the renormalization.
inline double advance_cell(double& phi, double& dphi, double coupling, double E,
                           const CellPiece* pieces, std::size_t n_pieces) {
  for (std::size_t p = 0; p < n_pieces; ++p) {
    double len = pieces[p].length;
    double q = coupling * pieces[p].u_height;
    double z = (E - q) * (len * len);
    double C, S;
    cs(z, C, S);
    double b = len * S;
    double c = -((z / len) * S);
    double nphi = C * phi + b * dphi;
    double ndphi = c * phi + C * dphi;
    phi = nphi;
    dphi = ndphi;
  }
  double n2 = phi * phi + dphi * dphi;
  double norm = std::sqrt(n2);
  phi = phi / norm;
  dphi = dphi / norm;
  return std::log(norm);
}

}  // namespace lab::step
