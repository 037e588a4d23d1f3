#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "lab/model.hpp"
#include "lab/spectral.hpp"

namespace lab {

// Bounded energy multiplier with compact support [lo, hi]; an empty weight
// means the plain indicator of [lo, hi].
struct EnergyWindow {
  double lo = 0.0;
  double hi = 0.0;
  std::function<double(double)> weight;

  double operator()(double E) const {
    if (E < lo || E > hi) return 0.0;
    return weight ? weight(E) : 1.0;
  }
};

// Eigenpairs of the discretized box restricted to an energy range; phi is
// column-major (n_points x count) and normalized in the h-weighted inner
// product <u,v> = h * sum u v.
struct EigenRange {
  double lo = 0.0, hi = 0.0;
  std::size_t count = 0;
  std::vector<double> energies;
  std::vector<double> phi;
};

inline constexpr int kDefaultGridPerCell = 32;
inline constexpr std::int64_t kMaxGridPoints = 16384;

// Second-order finite-difference Dirichlet discretization of -d^2/dx^2 + V on
// the interior grid of [a, b]: diag 2/h^2 + V(x_g), offdiag -1/h^2.  The
// last-solved energy range is cached; a box instance belongs to one worker.
class DiscretizedBox {
 public:
  DiscretizedBox(const DisorderRealization& realization, const BoxSpec& box,
                 int grid_per_cell = kDefaultGridPerCell);

  const BoxSpec& box() const { return box_; }
  double h() const { return h_; }
  std::int64_t n_points() const { return n_points_; }
  double x_at(std::int64_t g) const {
    return static_cast<double>(box_.a) + h_ * static_cast<double>(g + 1);
  }
  const std::vector<double>& diagonal() const { return diag_; }
  const std::vector<double>& offdiagonal() const { return offdiag_; }

  const EigenRange& range(double e_lo, double e_hi) const;
  // Gershgorin-wide range: every eigenpair.
  const EigenRange& full_range() const;
  // First grid index of cell c and one past its last (grid points with
  // x in [c, c+1)).
  std::pair<std::int64_t, std::int64_t> cell_span(std::int64_t c) const;

 private:
  BoxSpec box_;
  double h_ = 0.0;
  int grid_per_cell_ = 0;
  std::int64_t n_points_ = 0;
  std::vector<double> diag_, offdiag_;
  mutable EigenRange cache_;
  mutable bool cache_valid_ = false;
};

// Sum over eigenpairs with energy in [e_lo, e_hi] of ||chi_x phi_n|| *
// ||chi_y phi_n||: a rank-one-projector surrogate that upper-bounds the
// sup-over-observables correlator and carries the same spatial decay.
double correlator(const DiscretizedBox& dbox, std::int64_t x, std::int64_t y,
                  double e_lo, double e_hi);

// The same sum against a fixed base cell y for every cell of the box.
struct CorrelatorProfile {
  std::int64_t y = 0;
  double e_lo = 0.0, e_hi = 0.0;
  std::vector<std::int64_t> cells;
  std::vector<double> values;
};
CorrelatorProfile correlator_profile(const DiscretizedBox& dbox,
                                     std::int64_t y, double e_lo, double e_hi);

// Time-averaged moment (2/T) int_0^inf e^{-2t/T} || |X|^{p/2} e^{-itH} f(H)
// chi_0 ||^2 dt, assembled in closed form through the eigenbasis: each (n,m)
// pair contributes with the Lorentzian factor 1 / (1 + (T(E_n - E_m)/2)^2).
double moment_M(const DiscretizedBox& dbox, double p, const EnergyWindow& f,
                double T);
// Same moment over a whole T grid with the position kernel built once.
std::vector<double> moment_M_scan(const DiscretizedBox& dbox, double p,
                                  const EnergyWindow& f,
                                  const std::vector<double>& t_grid);

struct TransportPoint {
  double T = 0.0;
  double mean_M = 0.0;
  double std_error = 0.0;
};

struct TransportScan {
  std::vector<TransportPoint> points;
  double pooled_slope = 0.0;  // log mean_M against log T
  double mean_slope = 0.0;    // average of per-realization slopes
  double slope_se = 0.0;
  std::uint64_t n_samples = 0;
};

// Monte Carlo moments across realizations at each T.  T beyond the box's
// ballistic horizon min(|a|, b) / (2 sqrt(f.hi)) is rejected: finite-box
// evolution is only faithful before boundary reflection.
TransportScan transport_scan(const ModelConfig& config, double p,
                             const EnergyWindow& f,
                             const std::vector<double>& t_grid,
                             const BoxSpec& box, int grid_per_cell,
                             std::uint64_t n_samples, std::uint64_t root_seed,
                             unsigned workers = 0);

struct KappaMoment {
  double sup = 0.0;      // max over the t grid of the weighted norm squared
  double log_sup = 0.0;  // same in log scale (never overflows)
  double argmax_t = 0.0;
};

// sup over the t grid of || e^{|X|^kappa / 2} e^{-itH} P_I psi ||^2 with psi a
// grid vector (h-normalized); evaluated through the eigenbasis in log space.
KappaMoment kappa_moment(const DiscretizedBox& dbox, double kappa, double e_lo,
                         double e_hi, const std::vector<double>& psi,
                         const std::vector<double>& t_grid);

}  // namespace lab
