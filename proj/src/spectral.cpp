#include "lab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lab/errors.hpp"
#include "lab/parallel.hpp"
#include "lab/rng.hpp"
#include "lab/step_math.hpp"

namespace lab {

namespace {

constexpr int kGrid = kGridPerCell;           // intervals per cell
constexpr int kGridPts = kGrid + 1;           // stored values per cell block
constexpr double kGridH = 1.0 / kGrid;
constexpr double kEigenDefectThreshold = 1e-5;
constexpr double kLocateTolInternal = 1e-10;  // used by the correlator

void check_window(const DisorderRealization& realization, const BoxSpec& box) {
  box.validate();
  if (!realization.contains(box.a) || !realization.contains(box.b - 1))
    throw ValidationError("box extends outside the realization window");
}

void check_energy_cap(double E) {
  if (!(std::abs(E) <= kEnergyCap))
    throw ResourceGuardError("energy outside the solver cap");
}

// Composite Simpson over an inclusive value range with an even number of
// intervals.
double simpson(const double* v, int n_intervals, double h) {
  double odd = 0.0, even = 0.0;
  for (int j = 1; j < n_intervals; j += 2) odd += v[j];
  for (int j = 2; j < n_intervals; j += 2) even += v[j];
  return h / 3.0 * (v[0] + v[n_intervals] + 4.0 * odd + 2.0 * even);
}

// Apply one constant piece: phi'' = (q - E) phi over given length.
inline void apply_piece(double& phi, double& dphi, double q, double E,
                        double length) {
  double z = (E - q) * length * length;
  double C, S;
  step::cs(z, C, S);
  double nphi = C * phi + length * S * dphi;
  double ndphi = -(z / length) * S * phi + C * dphi;
  phi = nphi;
  dphi = ndphi;
}

inline void apply_piece_inverse(double& phi, double& dphi, double q, double E,
                                double length) {
  double z = (E - q) * length * length;
  double C, S;
  step::cs(z, C, S);
  double nphi = C * phi - length * S * dphi;
  double ndphi = (z / length) * S * phi + C * dphi;
  phi = nphi;
  dphi = ndphi;
}

// Evaluate phi on the uniform cell subgrid from the state at the left cell
// edge; g/dg receive kGridPts values, the raw end state comes back through
// p_end/dp_end.
void eval_cell_grid(double p, double dp, double coupling, double E,
                    const step::CellPiece* pieces, std::size_t n_pieces,
                    double* g, double* dg, double& p_end, double& dp_end) {
  double off = 0.0;
  int j = 0;
  for (std::size_t pi = 0; pi < n_pieces; ++pi) {
    double len = pieces[pi].length;
    double q = coupling * pieces[pi].u_height;
    double end = off + len;
    while (j <= kGrid) {
      double x = j * kGridH;
      if (x >= end - 1e-12) break;
      double dt = x - off;
      if (dt <= 0.0) {
        g[j] = p;
        if (dg) dg[j] = dp;
      } else {
        double z = (E - q) * dt * dt;
        double C, S;
        step::cs(z, C, S);
        g[j] = C * p + dt * S * dp;
        if (dg) dg[j] = -(z / dt) * S * p + C * dp;
      }
      ++j;
    }
    apply_piece(p, dp, q, E, len);
    off = end;
  }
  for (; j <= kGrid; ++j) {
    g[j] = p;
    if (dg) dg[j] = dp;
  }
  p_end = p;
  dp_end = dp;
}

// One-sided Dirichlet shooting across the whole box with per-cell
// renormalization.  log_scale[c] is the log amplitude at the left edge of
// cell c (relative to the unit initial data), uphi/udphi the unit state
// there, grid/dgrid the per-cell subgrids from that unit state, and
// log_i2[c] = log of the integral of phi^2 over the cell at full relative
// scale.
struct ShootingTable {
  std::vector<double> log_scale, uphi, udphi;  // size n_cells + 1
  std::vector<double> grid, dgrid;             // n_cells * kGridPts
  std::vector<double> log_i2;                  // n_cells
};

ShootingTable shoot(const DisorderRealization& realization, const BoxSpec& box,
                    double E, bool from_left, bool want_dgrid) {
  const std::int64_t n = box.n_cells();
  auto pieces = cell_pieces(realization.config.single_site);
  ShootingTable t;
  t.log_scale.assign(n + 1, 0.0);
  t.uphi.assign(n + 1, 0.0);
  t.udphi.assign(n + 1, 0.0);
  t.grid.assign(n * kGridPts, 0.0);
  if (want_dgrid) t.dgrid.assign(n * kGridPts, 0.0);
  t.log_i2.assign(n, 0.0);
  std::vector<double> sq(kGridPts);

  if (from_left) {
    t.uphi[0] = 0.0;
    t.udphi[0] = 1.0;
    for (std::int64_t c = 0; c < n; ++c) {
      double w = realization.cell_coupling(box.a + c);
      double pe, dpe;
      eval_cell_grid(t.uphi[c], t.udphi[c], w, E, pieces.data(), pieces.size(),
                     &t.grid[c * kGridPts],
                     want_dgrid ? &t.dgrid[c * kGridPts] : nullptr, pe, dpe);
      for (int j = 0; j < kGridPts; ++j) {
        double v = t.grid[c * kGridPts + j];
        sq[j] = v * v;
      }
      t.log_i2[c] = 2.0 * t.log_scale[c] + std::log(simpson(sq.data(), kGrid, kGridH));
      double r = std::hypot(pe, dpe);
      t.uphi[c + 1] = pe / r;
      t.udphi[c + 1] = dpe / r;
      t.log_scale[c + 1] = t.log_scale[c] + std::log(r);
    }
  } else {
    t.uphi[n] = 0.0;
    t.udphi[n] = 1.0;
    for (std::int64_t c = n - 1; c >= 0; --c) {
      double w = realization.cell_coupling(box.a + c);
      double p = t.uphi[c + 1], dp = t.udphi[c + 1];
      for (std::size_t pi = pieces.size(); pi-- > 0;)
        apply_piece_inverse(p, dp, w * pieces[pi].u_height, E,
                            pieces[pi].length);
      double r = std::hypot(p, dp);
      t.uphi[c] = p / r;
      t.udphi[c] = dp / r;
      t.log_scale[c] = t.log_scale[c + 1] + std::log(r);
      double pe, dpe;
      eval_cell_grid(t.uphi[c], t.udphi[c], w, E, pieces.data(), pieces.size(),
                     &t.grid[c * kGridPts],
                     want_dgrid ? &t.dgrid[c * kGridPts] : nullptr, pe, dpe);
      for (int j = 0; j < kGridPts; ++j) {
        double v = t.grid[c * kGridPts + j];
        sq[j] = v * v;
      }
      t.log_i2[c] = 2.0 * t.log_scale[c] + std::log(simpson(sq.data(), kGrid, kGridH));
    }
  }
  return t;
}

MeanSE fold_mean_se_skipping(const std::vector<double>& xs) {
  MeanSE r;
  double m = 0.0, m2 = 0.0;
  std::uint64_t n = 0;
  for (double x : xs) {
    if (std::isnan(x)) continue;
    ++n;
    double d = x - m;
    m += d / static_cast<double>(n);
    m2 += d * (x - m);
  }
  r.mean = m;
  r.n = n;
  if (n > 1) r.std_error = std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
  return r;
}

}  // namespace

void BoxSpec::validate() const {
  if (b - a < 2) throw ValidationError("box must span at least 2 cells");
}

std::int64_t count_eigenvalues_below(const DisorderRealization& realization,
                                     const BoxSpec& box, double E) {
  check_window(realization, box);
  check_energy_cap(E);
  auto pieces = cell_pieces(realization.config.single_site);
  double phi = 0.0, dphi = 1.0;
  std::int64_t count = 0;
  constexpr double pi = 3.14159265358979323846;
  for (std::int64_t c = box.a; c < box.b; ++c) {
    double w = realization.cell_coupling(c);
    for (const auto& piece : pieces) {
      double len = piece.length;
      double q = w * piece.u_height;
      double z = (E - q) * len * len;
      if (z > step::kSeriesThreshold) {
        // oscillatory: the local polar angle atan2(kappa phi, phi') advances
        // exactly linearly by sqrt(z); each multiple of pi passed is a zero.
        double kl = std::sqrt(z);
        double kappa = kl / len;
        double psi0 = std::atan2(kappa * phi, dphi);
        count += static_cast<std::int64_t>(std::floor((psi0 + kl) / pi)) -
                 static_cast<std::int64_t>(std::floor(psi0 / pi));
        apply_piece(phi, dphi, q, E, len);
      } else {
        // hyperbolic / near-linear: convexity allows at most one sign change.
        double phi0 = phi;
        apply_piece(phi, dphi, q, E, len);
        if (phi0 != 0.0 && (phi0 * phi < 0.0 || phi == 0.0)) ++count;
      }
    }
    double r = std::hypot(phi, dphi);
    phi /= r;
    dphi /= r;
  }
  return count;
}

std::vector<double> locate_eigenvalues(const DisorderRealization& realization,
                                       const BoxSpec& box, double e_lo,
                                       double e_hi, double tol) {
  check_window(realization, box);
  check_energy_cap(e_lo);
  check_energy_cap(e_hi);
  if (!(tol > 0.0)) throw ValidationError("locate_eigenvalues requires tol > 0");
  if (e_hi < e_lo)
    throw ValidationError("locate_eigenvalues: empty energy interval");
  const std::int64_t c_lo = count_eigenvalues_below(realization, box, e_lo);
  const std::int64_t c_hi = count_eigenvalues_below(realization, box, e_hi);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(std::max<std::int64_t>(0, c_hi - c_lo)));
  for (std::int64_t k = c_lo + 1; k <= c_hi; ++k) {
    double lo = e_lo, hi = e_hi;
    for (int iter = 0; iter < 200 && hi - lo > tol; ++iter) {
      double mid = 0.5 * (lo + hi);
      if (count_eigenvalues_below(realization, box, mid) >= k)
        hi = mid;
      else
        lo = mid;
    }
    out.push_back(0.5 * (lo + hi));
  }
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i] - out[i - 1] <= 2.0 * tol)
      throw NumericalError(
          "locate_eigenvalues: near-degenerate pair at the requested tol");
  return out;
}

double EigenPair::cell_l2_norm(std::int64_t c) const {
  if (c < box_a || c >= box_b)
    throw ValidationError("cell_l2_norm: cell outside box");
  const std::size_t base =
      static_cast<std::size_t>(c - box_a) * static_cast<std::size_t>(grid_per_cell);
  std::vector<double> sq(static_cast<std::size_t>(grid_per_cell) + 1);
  for (std::size_t j = 0; j < sq.size(); ++j)
    sq[j] = phi[base + j] * phi[base + j];
  return std::sqrt(simpson(sq.data(), grid_per_cell, 1.0 / grid_per_cell));
}

EigenPair eigenfunction(const DisorderRealization& realization,
                        const BoxSpec& box, double E) {
  check_window(realization, box);
  check_energy_cap(E);
  const std::int64_t n = box.n_cells();
  ShootingTable fw = shoot(realization, box, E, true, true);
  ShootingTable bw = shoot(realization, box, E, false, true);

  // Match where the combined amplitude peaks (best conditioned).
  std::int64_t m = 1;
  double best = -std::numeric_limits<double>::infinity();
  for (std::int64_t i = 1; i < n; ++i) {
    double v = fw.log_scale[i] + bw.log_scale[i];
    if (v > best) {
      best = v;
      m = i;
    }
  }
  double cross = fw.uphi[m] * bw.udphi[m] - fw.udphi[m] * bw.uphi[m];
  if (std::abs(cross) > kEigenDefectThreshold)
    throw ValidationError(
        "eigenfunction: energy is not an eigenvalue of the box (defect too "
        "large)");
  double dot = fw.uphi[m] * bw.uphi[m] + fw.udphi[m] * bw.udphi[m];
  double sign = dot >= 0.0 ? 1.0 : -1.0;

  // Per-cell log amplitude of the glued solution.
  std::vector<double> amp(n);
  double amp_max = -std::numeric_limits<double>::infinity();
  for (std::int64_t c = 0; c < n; ++c) {
    amp[c] = c < m ? fw.log_scale[c]
                   : bw.log_scale[c] + (fw.log_scale[m] - bw.log_scale[m]);
    amp_max = std::max(amp_max, amp[c]);
  }

  EigenPair pair;
  pair.energy = E;
  pair.box_a = box.a;
  pair.box_b = box.b;
  pair.xs.resize(n * kGrid + 1);
  pair.phi.resize(n * kGrid + 1);
  pair.dphi.resize(n * kGrid + 1);
  for (std::int64_t c = 0; c < n; ++c) {
    const bool left = c < m;
    const double scale = std::exp(amp[c] - amp_max) * (left ? 1.0 : sign);
    const double* g = (left ? fw.grid : bw.grid).data() + c * kGridPts;
    const double* dg = (left ? fw.dgrid : bw.dgrid).data() + c * kGridPts;
    const int last = (c == n - 1) ? kGrid : kGrid - 1;
    for (int j = 0; j <= last; ++j) {
      std::size_t gi = static_cast<std::size_t>(c) * kGrid + j;
      pair.xs[gi] = static_cast<double>(box.a) + c + j * kGridH;
      pair.phi[gi] = scale * g[j];
      pair.dphi[gi] = scale * dg[j];
    }
  }
  std::vector<double> sq(pair.phi.size());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = pair.phi[i] * pair.phi[i];
  double total = simpson(sq.data(), static_cast<int>(sq.size()) - 1, kGridH);
  double norm = 1.0 / std::sqrt(total);
  if (pair.dphi[0] < 0.0) norm = -norm;
  for (std::size_t i = 0; i < pair.phi.size(); ++i) {
    pair.phi[i] *= norm;
    pair.dphi[i] *= norm;
  }
  return pair;
}

GreenSample::GreenSample(const DisorderRealization& realization,
                         const BoxSpec& box, double E_in) {
  check_window(realization, box);
  check_energy_cap(E_in);
  E = E_in;
  a_ = box.a;
  b_ = box.b;
  const std::int64_t n = box.n_cells();
  pieces_ = cell_pieces(realization.config.single_site);
  pieces_q_.resize(n);
  for (std::int64_t c = 0; c < n; ++c)
    pieces_q_[c] = realization.cell_coupling(box.a + c);

  ShootingTable fw = shoot(realization, box, E, true, false);
  ShootingTable bw = shoot(realization, box, E, false, false);
  const std::int64_t mid = n / 2;
  double cross = fw.uphi[mid] * bw.udphi[mid] - fw.udphi[mid] * bw.uphi[mid];
  if (std::abs(cross) < kWronskianRejectThreshold)
    throw NumericalError(
        "green_function: Wronskian vanishes, energy too close to an "
        "eigenvalue of the box");
  log_abs_wronskian =
      fw.log_scale[mid] + bw.log_scale[mid] + std::log(std::abs(cross));
  wronskian_sign = cross > 0.0 ? 1 : -1;
  wronskian = wronskian_sign * std::exp(log_abs_wronskian);

  la_ = std::move(fw.log_scale);
  lb_ = std::move(bw.log_scale);
  va_phi_ = std::move(fw.uphi);
  va_dphi_ = std::move(fw.udphi);
  vb_phi_ = std::move(bw.uphi);
  vb_dphi_ = std::move(bw.udphi);
  log_ia_ = std::move(fw.log_i2);
  log_ib_ = std::move(bw.log_i2);
  ga_ = std::move(fw.grid);
  gb_ = std::move(bw.grid);
}

double GreenSample::eval_log(double x, bool left_solution,
                             double* sign_out) const {
  if (!(x >= static_cast<double>(a_) && x <= static_cast<double>(b_)))
    throw ValidationError("green evaluation point outside box");
  std::int64_t c = static_cast<std::int64_t>(std::floor(x)) - a_;
  if (c >= b_ - a_) c = b_ - a_ - 1;
  double off = x - static_cast<double>(a_ + c);
  double p = left_solution ? va_phi_[c] : vb_phi_[c];
  double dp = left_solution ? va_dphi_[c] : vb_dphi_[c];
  double w = pieces_q_[c];
  double pos = 0.0;
  for (const auto& piece : pieces_) {
    if (off <= pos + 1e-12) break;
    double len = std::min(piece.length, off - pos);
    apply_piece(p, dp, w * piece.u_height, E, len);
    pos += len;
  }
  *sign_out = p >= 0.0 ? 1.0 : -1.0;
  double ls = left_solution ? la_[c] : lb_[c];
  return ls + std::log(std::abs(p));
}

double GreenSample::value(double s, double t) const {
  double lo = std::min(s, t), hi = std::max(s, t);
  double sa, sb;
  double l1 = eval_log(lo, true, &sa);
  double l2 = eval_log(hi, false, &sb);
  return sa * sb * wronskian_sign * std::exp(l1 + l2 - log_abs_wronskian);
}

double GreenSample::log_cell_hs_norm(std::int64_t x, std::int64_t y) const {
  if (x < a_ || x >= b_ || y < a_ || y >= b_)
    throw ValidationError("cell_hs_norm: cell outside box");
  if (x != y) {
    std::int64_t lo = std::min(x, y) - a_, hi = std::max(x, y) - a_;
    return 0.5 * (log_ia_[lo] + log_ib_[hi]) - log_abs_wronskian;
  }
  // Diagonal block: 2D composite Simpson of G^2 over the cell square.
  std::int64_t c = x - a_;
  const double* A = ga_.data() + c * kGridPts;
  const double* B = gb_.data() + c * kGridPts;
  double acc = 0.0;
  for (int i = 0; i <= kGrid; ++i) {
    double wi = (i == 0 || i == kGrid) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    double row = 0.0;
    for (int j = 0; j <= kGrid; ++j) {
      double wj = (j == 0 || j == kGrid) ? 1.0 : (j % 2 ? 4.0 : 2.0);
      double g = i <= j ? A[i] * B[j] : A[j] * B[i];
      row += wj * g * g;
    }
    acc += wi * row;
  }
  acc *= (kGridH / 3.0) * (kGridH / 3.0);
  return la_[c] + lb_[c] - log_abs_wronskian + 0.5 * std::log(acc);
}

double GreenSample::cell_hs_norm(std::int64_t x, std::int64_t y) const {
  return std::exp(log_cell_hs_norm(x, y));
}

GreenDecayProfile fractional_moment_green_profile(
    const ModelConfig& config, const BoxSpec& box,
    const std::vector<std::int64_t>& xs, std::int64_t y, double E, double s,
    std::uint64_t n_samples, std::uint64_t root_seed, unsigned workers) {
  box.validate();
  if (!(s > 0.0 && s < 0.5))
    throw ValidationError("fractional moment requires s in (0, 0.5)");
  if (n_samples < 2) throw ValidationError("need at least 2 samples");
  if (y < box.a || y >= box.b)
    throw ValidationError("fractional moment: y outside box");
  for (auto x : xs)
    if (x < box.a || x >= box.b)
      throw ValidationError("fractional moment: x outside box");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<double>> values(
      xs.size(), std::vector<double>(n_samples, nan));
  std::vector<unsigned char> rejected(n_samples, 0);

  parallel_for_samples(n_samples, workers, [&](std::uint64_t i) {
    auto realization = sample_realization(config, box.a, box.b - 1,
                                          rng::sample_seed(root_seed, i));
    try {
      GreenSample g(realization, box, E);
      for (std::size_t xi = 0; xi < xs.size(); ++xi)
        values[xi][i] = std::exp(s * g.log_cell_hs_norm(xs[xi], y));
    } catch (const NumericalError&) {
      rejected[i] = 1;
    }
  });

  GreenDecayProfile profile;
  profile.n_samples = n_samples;
  for (auto r : rejected) profile.rejections += r;
  if (profile.rejections * 5 > n_samples)
    throw NumericalError(
        "fractional moment: rejection rate above 20%, energy too close to "
        "dense spectrum for this box");
  for (std::size_t xi = 0; xi < xs.size(); ++xi) {
    MeanSE ms = fold_mean_se_skipping(values[xi]);
    if (ms.n < 2)
      throw NumericalError("fractional moment: fewer than 2 accepted samples");
    EstimatorResult r;
    r.mean = ms.mean;
    r.std_error = ms.std_error;
    r.n_samples = ms.n;
    r.root_seed = root_seed;
    r.metadata = {{"E", E},
                  {"s", s},
                  {"x", static_cast<double>(xs[xi])},
                  {"y", static_cast<double>(y)},
                  {"rejections", static_cast<double>(profile.rejections)}};
    profile.per_x.push_back(std::move(r));
  }
  return profile;
}

EstimatorResult fractional_moment_green(const ModelConfig& config,
                                        const BoxSpec& box, std::int64_t x,
                                        std::int64_t y, double E, double s,
                                        std::uint64_t n_samples,
                                        std::uint64_t root_seed,
                                        unsigned workers) {
  auto profile = fractional_moment_green_profile(config, box, {x}, y, E, s,
                                                 n_samples, root_seed, workers);
  return profile.per_x.front();
}

double eigenfunction_correlator(const DisorderRealization& realization,
                                const BoxSpec& box, std::int64_t x,
                                std::int64_t m, double e_lo, double e_hi,
                                double v) {
  check_window(realization, box);
  if (!(v >= 0.0 && v <= 2.0))
    throw ValidationError("eigenfunction_correlator requires v in [0,2]");
  if (x < box.a || x >= box.b || m < box.a || m >= box.b)
    throw ValidationError("eigenfunction_correlator: cell outside box");
  auto energies =
      locate_eigenvalues(realization, box, e_lo, e_hi, kLocateTolInternal);
  const auto& u = realization.config.single_site;
  double q = 0.0;
  std::vector<double> sq(kGridPts);
  for (double En : energies) {
    EigenPair pair = eigenfunction(realization, box, En);
    // <chi_x phi, phi>
    std::size_t bx = static_cast<std::size_t>(x - box.a) * kGrid;
    for (int j = 0; j < kGridPts; ++j)
      sq[j] = pair.phi[bx + j] * pair.phi[bx + j];
    double p1 = simpson(sq.data(), kGrid, kGridH);
    // <u_m phi, phi>: per bump segment; aligned edges integrate exactly
    std::size_t bm = static_cast<std::size_t>(m - box.a) * kGrid;
    double p2 = 0.0;
    for (const auto& seg : u.segments) {
      long j0 = std::lround(seg.lo * kGrid);
      long j1 = std::lround(seg.hi * kGrid);
      bool aligned = std::abs(seg.lo * kGrid - j0) < 1e-9 &&
                     std::abs(seg.hi * kGrid - j1) < 1e-9 && j0 % 2 == 0 &&
                     j1 % 2 == 0 && j1 > j0;
      if (aligned) {
        for (long j = j0; j <= j1; ++j) {
          double p = pair.phi[bm + j];
          sq[j - j0] = p * p;
        }
        p2 += seg.height * simpson(sq.data(), static_cast<int>(j1 - j0), kGridH);
      } else {
        for (int j = 0; j < kGridPts; ++j) {
          double p = pair.phi[bm + j];
          sq[j] = u.value(j * kGridH) * p * p;
        }
        p2 += simpson(sq.data(), kGrid, kGridH);
        break;  // generic path already covers every segment
      }
    }
    q += std::pow(p1, 0.5 * v) * std::pow(p2, 1.0 - 0.5 * v);
  }
  return q;
}

StretchedFit decay_profile(const EigenPair& pair, double alpha,
                           std::int64_t* center_out) {
  if (!(alpha > 0.0 && alpha < 0.5))
    throw ValidationError("decay_profile requires alpha in (0, 1/2)");
  const std::int64_t n = pair.box_b - pair.box_a;
  std::vector<double> norms(n);
  std::int64_t cmax = 0;
  for (std::int64_t c = 0; c < n; ++c) {
    norms[c] = pair.cell_l2_norm(pair.box_a + c);
    if (norms[c] > norms[cmax]) cmax = c;
  }
  if (center_out) *center_out = pair.box_a + cmax;
  if (cmax < 10 || cmax > n - 1 - 10)
    throw ValidationError(
        "decay_profile: localization center within 10 cells of the box edge");
  const double floor_norm = 1e-13 * norms[cmax];
  std::vector<double> xs, ys;
  for (std::int64_t c = 0; c < n; ++c) {
    if (c == cmax || norms[c] < floor_norm) continue;
    xs.push_back(static_cast<double>(std::abs(c - cmax)));
    ys.push_back(norms[c]);
  }
  if (xs.size() < 3)
    throw ValidationError("decay_profile: degenerate profile, mass confined "
                          "to a single cell");
  return fit_stretched_exponential(xs, ys, 1.0 - 2.0 * alpha);
}

}  // namespace lab
