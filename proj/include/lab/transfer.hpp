#pragma once

#include <cstdint>
#include <vector>

#include "lab/model.hpp"
#include "lab/step_math.hpp"

namespace lab {

// 2x2 real unimodular matrix acting on column (phi, phi').
struct TransferMatrix {
  double a = 1.0, b = 0.0;
  double c = 0.0, d = 1.0;

  double det() const { return a * d - b * c; }
  TransferMatrix inverse() const { return {d, -b, -c, a}; }  // unimodular
  void apply(double& phi, double& dphi) const {
    double p = a * phi + b * dphi;
    double q = c * phi + d * dphi;
    phi = p;
    dphi = q;
  }
  // Operator 2-norm from the closed-form singular values.
  double norm() const;
};

inline TransferMatrix operator*(const TransferMatrix& L, const TransferMatrix& R) {
  return {L.a * R.a + L.b * R.c, L.a * R.b + L.b * R.d,
          L.c * R.a + L.d * R.c, L.c * R.b + L.d * R.d};
}

// Decomposition of [0,1] into the constant pieces induced by the single-site
// segments (gaps have height 0).  Identical for every cell; only the coupling
// in front differs.
std::vector<step::CellPiece> cell_pieces(const SingleSitePotential& u);

// Closed-form step across a constant potential q over the given length.
TransferMatrix constant_step(double q, double E, double length);

// Ordered product of constant steps across cell n (rightmost factor acts
// first, i.e. corresponds to the leftmost piece).
TransferMatrix unit_cell_transfer(const DisorderRealization& realization,
                                  std::int64_t n, double E);

// Overflow-safe result of T(n,m;E) psi0: unit direction plus accumulated log
// norm, with optional per-cell log increments.
struct PropagationResult {
  double dir_phi = 1.0;
  double dir_dphi = 0.0;
  double log_norm = 0.0;
  std::vector<double> cell_log_increments;  // filled only when requested
};

PropagationResult propagate(const DisorderRealization& realization, std::int64_t m,
                            std::int64_t n, double E, double psi0_phi,
                            double psi0_dphi, bool keep_trace = false);

// M = exp(1/2 * int_a^b |1 + lambda V - E|), closed form over constant pieces;
// every ||T(x,y;E)|| with x,y in [a,b] lies in [1/M, M].
double apriori_bound(const DisorderRealization& realization, std::int64_t a,
                     std::int64_t b, double E);

}  // namespace lab
