#pragma once

#include <cstdint>
#include <vector>

#include "lab/asymptotics.hpp"
#include "lab/model.hpp"
#include "lab/transfer.hpp"

namespace lab {

// Finite box [a,b] with Dirichlet conditions at both ends.
struct BoxSpec {
  std::int64_t a = 0;
  std::int64_t b = 0;  // b - a >= 2

  void validate() const;
  std::int64_t n_cells() const { return b - a; }
};

// Uniform sampling grid: kGridPerCell intervals per unit cell (even, piece
// boundaries of the default bump land exactly on grid nodes, and composite
// Simpson panels never straddle a kink).
inline constexpr int kGridPerCell = 64;

// Largest |E| the shooting solver accepts.
inline constexpr double kEnergyCap = 1.0e6;

// Dirichlet eigenvalue counting by oscillation: the number of zeros of the
// solution shooting from (phi, phi') = (0, 1) at a, counted exactly per
// constant piece (closed-form angle advance on oscillatory pieces, convexity
// sign test on the rest).  Equals #{eigenvalues < E} away from eigenvalues.
std::int64_t count_eigenvalues_below(const DisorderRealization& realization,
                                     const BoxSpec& box, double E);

// All Dirichlet eigenvalues in [e_lo, e_hi], each bracketed by bisection on
// the counting function to width tol.
std::vector<double> locate_eigenvalues(const DisorderRealization& realization,
                                       const BoxSpec& box, double e_lo,
                                       double e_hi, double tol);

struct EigenPair {
  double energy = 0.0;
  std::int64_t box_a = 0;
  std::int64_t box_b = 0;
  int grid_per_cell = kGridPerCell;
  std::vector<double> xs;    // n_cells*grid_per_cell + 1 uniform points
  std::vector<double> phi;   // L2-normalized over the box
  std::vector<double> dphi;

  // sqrt of the Simpson integral of phi^2 over unit cell [c, c+1].
  double cell_l2_norm(std::int64_t c) const;
};

// Two-sided shooting solution at a located eigenvalue, matched where the
// amplitude peaks, L2-normalized by composite Simpson.
EigenPair eigenfunction(const DisorderRealization& realization,
                        const BoxSpec& box, double E);

// Wronskian Green's function at non-eigenvalue energy: left and right
// Dirichlet solutions phi_a, phi_b with G(s,t) = phi_a(min)phi_b(max)/W.
// Everything is carried in log scale, so deep-tunneling entries neither
// overflow nor lose their exponent.
struct GreenSample {
  double E = 0.0;
  double wronskian = 0.0;  // signed, linear scale (may overflow on huge boxes)
  double log_abs_wronskian = 0.0;
  int wronskian_sign = 0;

  GreenSample(const DisorderRealization& realization, const BoxSpec& box,
              double E);

  double value(double s, double t) const;
  // Hilbert-Schmidt norm of the kernel restricted to cell x times cell y;
  // dominates the operator norm of chi_x G chi_y.
  double cell_hs_norm(std::int64_t x, std::int64_t y) const;
  double log_cell_hs_norm(std::int64_t x, std::int64_t y) const;

 private:
  std::int64_t a_ = 0, b_ = 0;
  std::vector<double> pieces_q_;           // per-cell coupling
  std::vector<step::CellPiece> pieces_;
  // Per cell-boundary unit states and log amplitudes for both solutions.
  std::vector<double> la_, lb_;            // size n_cells+1
  std::vector<double> va_phi_, va_dphi_, vb_phi_, vb_dphi_;
  // Per-cell log of the integral of the (relative-scale) solution squared.
  std::vector<double> log_ia_, log_ib_;    // size n_cells
  // Relative-scale subgrids (unit left-boundary state), 65 values per cell.
  std::vector<double> ga_, gb_;

  double eval_log(double x, bool left_solution, double* sign_out) const;
};

// Near-eigenvalue rejection: a GreenSample construction throws NumericalError
// when the normalized Wronskian falls below this.
inline constexpr double kWronskianRejectThreshold = 1e-8;

// Monte Carlo mean of ||chi_x G chi_y||^s over realizations; near-eigenvalue
// realizations are skipped and counted (metadata key "rejections"), and a
// rejection rate above 20% aborts.
EstimatorResult fractional_moment_green(const ModelConfig& config,
                                        const BoxSpec& box, std::int64_t x,
                                        std::int64_t y, double E, double s,
                                        std::uint64_t n_samples,
                                        std::uint64_t root_seed,
                                        unsigned workers = 0);

// Same estimator across a whole set of x cells with shared realizations (one
// pair of shooting passes serves every x).
struct GreenDecayProfile {
  std::vector<EstimatorResult> per_x;
  std::uint64_t rejections = 0;
  std::uint64_t n_samples = 0;
};
GreenDecayProfile fractional_moment_green_profile(
    const ModelConfig& config, const BoxSpec& box,
    const std::vector<std::int64_t>& xs, std::int64_t y, double E, double s,
    std::uint64_t n_samples, std::uint64_t root_seed, unsigned workers = 0);

// Sum over eigenvalues in [e_lo, e_hi] of
//   <chi_x phi_n, phi_n>^{v/2} * <u_m phi_n, phi_n>^{1 - v/2},
// the fractional correlator between cell x and the bump at cell m.
double eigenfunction_correlator(const DisorderRealization& realization,
                                const BoxSpec& box, std::int64_t x,
                                std::int64_t m, double e_lo, double e_hi,
                                double v);

// Per-cell L2 profile of an eigenfunction fitted as
//   log ||chi_x phi|| ~ intercept - rate * |x - x_max|^{1-2 alpha};
// cells below 1e-13 of the peak are dropped, the peak cell itself is the
// fit origin.  center_out (optional) receives the peak cell.
StretchedFit decay_profile(const EigenPair& pair, double alpha,
                           std::int64_t* center_out = nullptr);

}  // namespace lab
