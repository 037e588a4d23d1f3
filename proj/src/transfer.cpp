#include "lab/transfer.hpp"

#include <cmath>

namespace lab {

double TransferMatrix::norm() const {
  double f = a * a + b * b + c * c + d * d;
  double dd = det();
  double disc = f * f - 4.0 * dd * dd;
  if (disc < 0.0) disc = 0.0;
  return std::sqrt(0.5 * (f + std::sqrt(disc)));
}

std::vector<step::CellPiece> cell_pieces(const SingleSitePotential& u) {
  std::vector<step::CellPiece> pieces;
  double pos = 0.0;
  for (const auto& s : u.segments) {
    if (s.lo > pos) pieces.push_back({s.lo - pos, 0.0});
    pieces.push_back({s.hi - s.lo, s.height});
    pos = s.hi;
  }
  if (pos < 1.0) pieces.push_back({1.0 - pos, 0.0});
  return pieces;
}

TransferMatrix constant_step(double q, double E, double length) {
  double z = (E - q) * (length * length);
  double C, S;
  step::cs(z, C, S);
  return {C, length * S, -((z / length) * S), C};
}

TransferMatrix unit_cell_transfer(const DisorderRealization& realization,
                                  std::int64_t n, double E) {
  if (!realization.contains(n))
    throw ValidationError("unit_cell_transfer: cell outside window");
  double coupling = realization.cell_coupling(n);
  TransferMatrix m;  // identity
  for (const auto& p : cell_pieces(realization.config.single_site))
    m = constant_step(coupling * p.u_height, E, p.length) * m;
  return m;
}

PropagationResult propagate(const DisorderRealization& realization, std::int64_t m,
                            std::int64_t n, double E, double psi0_phi,
                            double psi0_dphi, bool keep_trace) {
  std::int64_t lo = std::min(m, n), hi = std::max(m, n);
  if (!realization.contains(lo) || (hi > lo && !realization.contains(hi - 1)))
    throw ValidationError("propagate: span outside window");

  PropagationResult r;
  r.dir_phi = psi0_phi;
  r.dir_dphi = psi0_dphi;
  if (m == n) return r;

  const auto pieces = cell_pieces(realization.config.single_site);
  if (n > m) {
    for (std::int64_t cell = m; cell < n; ++cell) {
      double inc = step::advance_cell(r.dir_phi, r.dir_dphi,
                                      realization.cell_coupling(cell), E,
                                      pieces.data(), pieces.size());
      r.log_norm += inc;
      if (keep_trace) r.cell_log_increments.push_back(inc);
    }
  } else {
    // T(n,m) = T(m,n)^{-1}: apply inverted cells m-1 down to n, each cell's
    // pieces right to left with off-diagonal signs flipped.
    for (std::int64_t cell = m - 1; cell >= n; --cell) {
      double coupling = realization.cell_coupling(cell);
      for (std::size_t ip = pieces.size(); ip-- > 0;) {
        TransferMatrix t =
            constant_step(coupling * pieces[ip].u_height, E, pieces[ip].length)
                .inverse();
        t.apply(r.dir_phi, r.dir_dphi);
      }
      double norm = std::sqrt(r.dir_phi * r.dir_phi + r.dir_dphi * r.dir_dphi);
      r.dir_phi /= norm;
      r.dir_dphi /= norm;
      double inc = std::log(norm);
      r.log_norm += inc;
      if (keep_trace) r.cell_log_increments.push_back(inc);
    }
  }
  return r;
}

double apriori_bound(const DisorderRealization& realization, std::int64_t a,
                     std::int64_t b, double E) {
  if (!realization.contains(a) || (b > a && !realization.contains(b - 1)))
    throw ValidationError("apriori_bound: span outside window");
  const auto pieces = cell_pieces(realization.config.single_site);
  double acc = 0.0;
  for (std::int64_t cell = a; cell < b; ++cell) {
    double coupling = realization.cell_coupling(cell);
    for (const auto& p : pieces)
      acc += std::abs(1.0 + coupling * p.u_height - E) * p.length;
  }
  return std::exp(0.5 * acc);
}

}  // namespace lab
