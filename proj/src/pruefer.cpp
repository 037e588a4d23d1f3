#include "lab/pruefer.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "lab/errors.hpp"
#include "lab/transfer.hpp"

namespace lab {

namespace {

constexpr double kPi = std::numbers::pi;
// Largest fraction of pi a single integrator step may advance theta.
constexpr double kMaxAngleStep = 0.45 * kPi;

void check_k(const PrueferState& state, double E) {
  if (E <= 0.0) throw ValidationError("pruefer flow requires E > 0");
  double k = std::sqrt(E);
  if (!(state.k > 0.0) ||
      std::abs(state.k - k) > 1e-9 * std::max(1.0, k))
    throw ValidationError("pruefer state k does not match sqrt(E)");
}

// One constant-potential piece of local length len, potential value q.
// theta' = k - (q/k) sin^2(theta), log_R' = (q/2k) sin(2 theta); log_R does
// not feed back, so only theta enters the stage derivatives.
void flow_piece(double& theta, double& log_R, double k, double q, double len,
                double h_target) {
  if (len <= 0.0) return;
  if (q == 0.0) {
    theta += k * len;
    return;
  }
  double qk = q / k;
  double rate_cap = k + std::abs(qk);
  auto dtheta = [&](double th) {
    double s = std::sin(th);
    return k - qk * s * s;
  };
  auto dlog = [&](double th) { return 0.5 * qk * std::sin(2.0 * th); };
  double steps = std::max({1.0, std::ceil(len / h_target),
                           std::ceil(len * rate_cap / kMaxAngleStep)});
  double h = len / steps;
  for (double i = 0; i < steps; ++i) {
    double k1t = dtheta(theta), k1r = dlog(theta);
    double t2 = theta + 0.5 * h * k1t;
    double k2t = dtheta(t2), k2r = dlog(t2);
    double t3 = theta + 0.5 * h * k2t;
    double k3t = dtheta(t3), k3r = dlog(t3);
    double t4 = theta + h * k3t;
    double k4t = dtheta(t4), k4r = dlog(t4);
    theta += h / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t);
    log_R += h / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
  }
}

// Flow across the part [lo, hi] (local cell coordinates) of one cell with the
// given coupling, using the shared piece layout.
void flow_cell_part(const step::CellPiece* pieces, std::size_t n_pieces,
                    double coupling, double lo, double hi, double k,
                    double& theta, double& log_R, double h_target) {
  double off = 0.0;
  for (std::size_t p = 0; p < n_pieces && off < hi; ++p) {
    double len = pieces[p].length;
    double a = std::max(lo, off);
    double b = std::min(hi, off + len);
    if (b > a)
      flow_piece(theta, log_R, k, coupling * pieces[p].u_height, b - a,
                 h_target);
    off += len;
  }
}

}  // namespace

PrueferState to_pruefer(double phi, double dphi, double k,
                        std::optional<double> theta_hint) {
  if (!(k > 0.0)) throw ValidationError("to_pruefer requires k > 0");
  if (phi == 0.0 && dphi == 0.0)
    throw ValidationError("to_pruefer: zero vector has no angle");
  double c = dphi / k;
  double theta = std::atan2(phi, c);
  if (theta_hint) {
    double two_pi = 2.0 * kPi;
    theta += two_pi * std::round((*theta_hint - theta) / two_pi);
  }
  return {0.5 * std::log(phi * phi + c * c), theta, k};
}

void from_pruefer(const PrueferState& state, double& phi, double& dphi) {
  double r = std::exp(state.log_R);
  phi = r * std::sin(state.theta);
  dphi = state.k * r * std::cos(state.theta);
}

PrueferState flow_cell(const DisorderRealization& realization, std::int64_t n,
                       const PrueferState& state, double E, double h_target) {
  check_k(state, E);
  if (!realization.contains(n))
    throw ValidationError("flow_cell: cell outside realization window");
  if (!(h_target > 0.0)) throw ValidationError("flow_cell: h_target must be > 0");
  auto pieces = cell_pieces(realization.config.single_site);
  PrueferState out = state;
  flow_cell_part(pieces.data(), pieces.size(), realization.cell_coupling(n),
                 0.0, 1.0, state.k, out.theta, out.log_R, h_target);
  return out;
}

PrueferState flow_interval(const DisorderRealization& realization, double x0,
                           double x1, const PrueferState& state, double E,
                           double h_target) {
  check_k(state, E);
  if (!(h_target > 0.0))
    throw ValidationError("flow_interval: h_target must be > 0");
  if (!(x1 >= x0)) throw ValidationError("flow_interval: requires x1 >= x0");
  auto pieces = cell_pieces(realization.config.single_site);
  PrueferState out = state;
  std::int64_t first = static_cast<std::int64_t>(std::floor(x0));
  while (x0 < x1) {
    std::int64_t cell = first;
    double cell_end = static_cast<double>(cell + 1);
    double hi = std::min(x1, cell_end);
    if (hi > x0) {
      if (!realization.contains(cell))
        throw ValidationError("flow_interval: cell outside realization window");
      flow_cell_part(pieces.data(), pieces.size(),
                     realization.cell_coupling(cell),
                     x0 - static_cast<double>(cell),
                     hi - static_cast<double>(cell), state.k, out.theta,
                     out.log_R, h_target);
    }
    x0 = cell_end;
    ++first;
  }
  return out;
}

std::int64_t winding_count(double theta_start, double theta_end) {
  return static_cast<std::int64_t>(std::floor(theta_end / kPi)) -
         static_cast<std::int64_t>(std::floor(theta_start / kPi));
}

MartingaleDecomposition martingale_decompose(
    const DisorderRealization& realization, std::int64_t m, std::int64_t n,
    double E, double theta0, double h_target) {
  if (m < 1)
    throw ValidationError(
        "martingale_decompose: window must start at cell 1 or later");
  if (n <= m) throw ValidationError("martingale_decompose: requires n > m");
  if (!realization.contains(m) || !realization.contains(n - 1))
    throw ValidationError("martingale_decompose: cells outside window");
  if (E <= 0.0) throw ValidationError("martingale_decompose: requires E > 0");
  if (!(h_target > 0.0))
    throw ValidationError("martingale_decompose: h_target must be > 0");

  const double k = std::sqrt(E);
  const auto& u = realization.config.single_site;
  const std::complex<double> uhat = single_site_fourier(u, 2.0 * k);
  const std::complex<double> phat = single_site_fourier_primitive(u, 2.0 * k);
  const double nu = std::arg(uhat);
  const double uhat_sq = std::norm(uhat);
  const double lambda = realization.config.lambda;
  auto pieces = cell_pieces(u);

  double theta = theta0;
  double flow_log_R = 0.0;  // carried by the flow; terms use only theta
  // Exact radius ratio, via the unit-cell maps: evolve (phi, phi') with
  // per-cell renormalization and correct for the polar metric at the ends.
  double phi = std::sin(theta0);
  double dphi = k * std::cos(theta0);  // R(m) = 1
  double log_growth = 0.0;

  MartingaleDecomposition d;
  for (std::int64_t j = m; j < n; ++j) {
    const double w = realization.cell_coupling(j);
    const std::complex<double> e2 = std::polar(1.0, 2.0 * theta);
    d.term1 += w / (2.0 * k) * std::imag(e2 * uhat);
    const double w2 = w * w;
    d.term2 -= w2 / (4.0 * k * k) * std::real(e2 * phat);
    d.term3 += w2 / (8.0 * k * k) * uhat_sq * std::cos(4.0 * (theta - nu));
    d.term4 += w2 / (8.0 * k * k) * uhat_sq;
    const double la = lambda * envelope_value(realization.config, j);
    d.drift_prediction += la * la / (8.0 * k * k) * uhat_sq;

    flow_cell_part(pieces.data(), pieces.size(), w, 0.0, 1.0, k, theta,
                   flow_log_R, h_target);
    log_growth += step::advance_cell(phi, dphi, w, E, pieces.data(),
                                     pieces.size());
  }
  const double c = dphi / k;
  const double exact = log_growth + 0.5 * std::log(phi * phi + c * c);
  d.residual = exact - (d.term1 + d.term2 + d.term3 + d.term4);
  return d;
}

}  // namespace lab
