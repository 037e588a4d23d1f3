#pragma once

#include <cstdint>
#include <optional>

#include "lab/model.hpp"

namespace lab {

// Polar coordinates adapted to the oscillation at energy E = k^2:
//   phi = e^{log_R} sin(theta),  phi' = k e^{log_R} cos(theta).
// theta is a continuous lift (not reduced mod 2*pi), so zero crossings of phi
// correspond one-to-one with theta passing multiples of pi.
struct PrueferState {
  double log_R = 0.0;
  double theta = 0.0;
  double k = 1.0;
};

// Inverse pair.  to_pruefer picks the angle branch nearest theta_hint when a
// hint is given, otherwise the principal atan2 branch.
PrueferState to_pruefer(double phi, double dphi, double k,
                        std::optional<double> theta_hint = std::nullopt);
void from_pruefer(const PrueferState& state, double& phi, double& dphi);

inline constexpr double kDefaultFlowStep = 1.0 / 512.0;

// Integrates d theta/dx = k - (V/k) sin^2(theta), d log_R/dx = (V/2k) sin(2*theta)
// across cell [n, n+1] with classical 4th-order steps.  Steps are sized so no
// step advances theta by more than a fraction of pi (lift safety); pieces with
// V = 0 advance exactly.
PrueferState flow_cell(const DisorderRealization& realization, std::int64_t n,
                       const PrueferState& state, double E,
                       double h_target = kDefaultFlowStep);

// Same flow over an arbitrary interval [x0, x1] inside the window, x0 <= x1.
PrueferState flow_interval(const DisorderRealization& realization, double x0,
                           double x1, const PrueferState& state, double E,
                           double h_target = kDefaultFlowStep);

// Multiples of pi crossed by the lift: floor(theta_end/pi) - floor(theta_start/pi).
std::int64_t winding_count(double theta_start, double theta_end);

// Split of log R(n)/R(m) into one centered first-order sum, two oscillatory
// second-order sums, a deterministic-in-expectation drift sum, and the exact
// remainder.  drift_prediction is term4 with omega_j^2 replaced by its unit
// mean, available without sampling.
struct MartingaleDecomposition {
  double term1 = 0.0;
  double term2 = 0.0;
  double term3 = 0.0;
  double term4 = 0.0;
  double residual = 0.0;
  double drift_prediction = 0.0;
};

MartingaleDecomposition martingale_decompose(
    const DisorderRealization& realization, std::int64_t m, std::int64_t n,
    double E, double theta0, double h_target = 1.0 / 128.0);

}  // namespace lab
