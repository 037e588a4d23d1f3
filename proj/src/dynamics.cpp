#include "lab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lab/errors.hpp"
#include "lab/parallel.hpp"
#include "lab/rng.hpp"
#include "lab/tridiag.hpp"

extern "C" {
void dgemm_(const char* transa, const char* transb, const int* m, const int* n,
            const int* k, const double* alpha, const double* a, const int* lda,
            const double* b, const int* ldb, const double* beta, double* c,
            const int* ldc);
void dgemv_(const char* trans, const int* m, const int* n, const double* alpha,
            const double* a, const int* lda, const double* x, const int* incx,
            const double* beta, double* y, const int* incy);
}

namespace lab {

namespace {

// Ordinary least squares slope of y against x.
double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double xm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xm += x[i];
    ym += y[i];
  }
  xm /= static_cast<double>(n);
  ym /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - xm) * (x[i] - xm);
    sxy += (x[i] - xm) * (y[i] - ym);
  }
  return sxy / sxx;
}

}  // namespace

DiscretizedBox::DiscretizedBox(const DisorderRealization& realization,
                               const BoxSpec& box, int grid_per_cell) {
  box.validate();
  if (!realization.contains(box.a) || !realization.contains(box.b - 1))
    throw ValidationError("discretized box extends outside the window");
  if (grid_per_cell < 2)
    throw ValidationError("discretization needs at least 2 points per cell");
  box_ = box;
  grid_per_cell_ = grid_per_cell;
  h_ = 1.0 / grid_per_cell;
  n_points_ = box.n_cells() * grid_per_cell - 1;
  if (n_points_ > kMaxGridPoints)
    throw ResourceGuardError(
        "discretized box exceeds the dense-eigensolve cap of 16384 points");
  diag_.resize(n_points_);
  offdiag_.assign(n_points_ - 1, -1.0 / (h_ * h_));
  for (std::int64_t g = 0; g < n_points_; ++g)
    diag_[g] = 2.0 / (h_ * h_) + eval_potential(realization, x_at(g));
}

const EigenRange& DiscretizedBox::range(double e_lo, double e_hi) const {
  if (cache_valid_ && cache_.lo == e_lo && cache_.hi == e_hi) return cache_;
  auto eig = tridiag_eigen_range(diag_, offdiag_, e_lo, e_hi);
  cache_.lo = e_lo;
  cache_.hi = e_hi;
  cache_.count = eig.energies.size();
  cache_.energies = std::move(eig.energies);
  cache_.phi = std::move(eig.vectors);
  const double root_h = std::sqrt(h_);
  for (double& v : cache_.phi) v /= root_h;  // euclidean -> h-weighted norm
  cache_valid_ = true;
  return cache_;
}

const EigenRange& DiscretizedBox::full_range() const {
  double lo = diag_[0], hi = diag_[0];
  for (std::int64_t g = 0; g < n_points_; ++g) {
    double r = 2.0 / (h_ * h_);  // |offdiag| row sum bound
    lo = std::min(lo, diag_[g] - r);
    hi = std::max(hi, diag_[g] + r);
  }
  return range(lo - 1.0, hi + 1.0);
}

std::pair<std::int64_t, std::int64_t> DiscretizedBox::cell_span(
    std::int64_t c) const {
  if (c < box_.a || c >= box_.b)
    throw ValidationError("cell_span: cell outside box");
  std::int64_t g0 = (c - box_.a) * grid_per_cell_ - 1;
  std::int64_t g1 = (c - box_.a + 1) * grid_per_cell_ - 1;
  return {std::max<std::int64_t>(0, g0), std::min(n_points_, g1)};
}

namespace {

// ||chi_c phi_n|| for every cell and eigenvector: cn[(c - a) * count + n].
std::vector<double> cell_norms(const DiscretizedBox& dbox,
                               const EigenRange& er) {
  const std::int64_t n_cells = dbox.box().n_cells();
  const std::int64_t np = dbox.n_points();
  std::vector<double> cn(static_cast<std::size_t>(n_cells) * er.count, 0.0);
  for (std::int64_t c = 0; c < n_cells; ++c) {
    auto [g0, g1] = dbox.cell_span(dbox.box().a + c);
    for (std::size_t n = 0; n < er.count; ++n) {
      const double* col = er.phi.data() + n * np;
      double acc = 0.0;
      for (std::int64_t g = g0; g < g1; ++g) acc += col[g] * col[g];
      cn[c * er.count + n] = std::sqrt(dbox.h() * acc);
    }
  }
  return cn;
}

// <phi_n, chi_0> for each eigenvector: h * sum over the [0,1) span.
std::vector<double> cell0_overlaps(const DiscretizedBox& dbox,
                                   const EigenRange& er) {
  auto [g0, g1] = dbox.cell_span(0);
  const std::int64_t np = dbox.n_points();
  std::vector<double> c(er.count, 0.0);
  for (std::size_t n = 0; n < er.count; ++n) {
    const double* col = er.phi.data() + n * np;
    double acc = 0.0;
    for (std::int64_t g = g0; g < g1; ++g) acc += col[g];
    c[n] = dbox.h() * acc;
  }
  return c;
}

}  // namespace

double correlator(const DiscretizedBox& dbox, std::int64_t x, std::int64_t y,
                  double e_lo, double e_hi) {
  const auto& box = dbox.box();
  if (x < box.a || x >= box.b || y < box.a || y >= box.b)
    throw ValidationError("correlator: cell outside box");
  const EigenRange& er = dbox.range(e_lo, e_hi);
  const std::int64_t np = dbox.n_points();
  auto [gx0, gx1] = dbox.cell_span(x);
  auto [gy0, gy1] = dbox.cell_span(y);
  double q = 0.0;
  for (std::size_t n = 0; n < er.count; ++n) {
    const double* col = er.phi.data() + n * np;
    double ax = 0.0, ay = 0.0;
    for (std::int64_t g = gx0; g < gx1; ++g) ax += col[g] * col[g];
    for (std::int64_t g = gy0; g < gy1; ++g) ay += col[g] * col[g];
    q += std::sqrt(ax * ay);
  }
  return dbox.h() * q;
}

CorrelatorProfile correlator_profile(const DiscretizedBox& dbox,
                                     std::int64_t y, double e_lo,
                                     double e_hi) {
  const auto& box = dbox.box();
  if (y < box.a || y >= box.b)
    throw ValidationError("correlator_profile: base cell outside box");
  const EigenRange& er = dbox.range(e_lo, e_hi);
  auto cn = cell_norms(dbox, er);
  CorrelatorProfile p;
  p.y = y;
  p.e_lo = e_lo;
  p.e_hi = e_hi;
  const std::int64_t n_cells = box.n_cells();
  const double* base = cn.data() + (y - box.a) * er.count;
  for (std::int64_t c = 0; c < n_cells; ++c) {
    double q = 0.0;
    const double* row = cn.data() + c * er.count;
    for (std::size_t n = 0; n < er.count; ++n) q += row[n] * base[n];
    p.cells.push_back(box.a + c);
    p.values.push_back(q);
  }
  return p;
}

std::vector<double> moment_M_scan(const DiscretizedBox& dbox, double p,
                                  const EnergyWindow& f,
                                  const std::vector<double>& t_grid) {
  if (!(p >= 0.0)) throw ValidationError("moment_M requires p >= 0");
  if (!(f.hi > f.lo)) throw ValidationError("moment_M: empty energy window");
  for (double T : t_grid)
    if (!(T > 0.0)) throw ValidationError("moment_M requires T > 0");
  const EigenRange& er = dbox.range(f.lo, f.hi);
  const int ms = static_cast<int>(er.count);
  if (ms == 0) return std::vector<double>(t_grid.size(), 0.0);
  const int np = static_cast<int>(dbox.n_points());

  std::vector<double> c = cell0_overlaps(dbox, er);
  for (int n = 0; n < ms; ++n) c[n] *= f(er.energies[n]);

  // Position kernel K = Phi^T diag(h |x|^p) Phi, built once for every T.
  std::vector<double> w(static_cast<std::size_t>(np) * ms);
  for (int n = 0; n < ms; ++n) {
    const double* col = er.phi.data() + static_cast<std::size_t>(n) * np;
    double* out = w.data() + static_cast<std::size_t>(n) * np;
    for (int g = 0; g < np; ++g)
      out[g] = dbox.h() * std::pow(std::abs(dbox.x_at(g)), p) * col[g];
  }
  std::vector<double> K(static_cast<std::size_t>(ms) * ms);
  const double one = 1.0, zero = 0.0;
  dgemm_("T", "N", &ms, &ms, &np, &one, er.phi.data(), &np, w.data(), &np,
         &zero, K.data(), &ms);

  std::vector<double> out;
  out.reserve(t_grid.size());
  for (double T : t_grid) {
    double acc = 0.0;
    for (int n = 0; n < ms; ++n) {
      for (int m = 0; m < ms; ++m) {
        double q = 0.5 * T * (er.energies[n] - er.energies[m]);
        acc += c[n] * c[m] * K[static_cast<std::size_t>(m) * ms + n] /
               (1.0 + q * q);
      }
    }
    out.push_back(acc);
  }
  return out;
}

double moment_M(const DiscretizedBox& dbox, double p, const EnergyWindow& f,
                double T) {
  return moment_M_scan(dbox, p, f, {T}).front();
}

TransportScan transport_scan(const ModelConfig& config, double p,
                             const EnergyWindow& f,
                             const std::vector<double>& t_grid,
                             const BoxSpec& box, int grid_per_cell,
                             std::uint64_t n_samples, std::uint64_t root_seed,
                             unsigned workers) {
  box.validate();
  if (box.a > -1 || box.b < 2)
    throw ValidationError("transport_scan: box must surround the origin cell");
  if (t_grid.empty()) throw ValidationError("transport_scan: empty T grid");
  if (n_samples < 2) throw ValidationError("transport_scan: need >= 2 samples");
  if (!(f.hi > f.lo) || !(f.hi > 0.0))
    throw ValidationError("transport_scan: invalid energy window");
  const double half = std::min(-static_cast<double>(box.a),
                               static_cast<double>(box.b));
  const double horizon = half / (2.0 * std::sqrt(f.hi));
  for (double T : t_grid) {
    if (!(T > 0.0)) throw ValidationError("transport_scan requires T > 0");
    if (T > horizon)
      throw ResourceGuardError(
          "transport_scan: T exceeds the ballistic horizon of the box");
  }

  const std::size_t nt = t_grid.size();
  std::vector<std::vector<double>> rows(n_samples);
  parallel_for_samples(n_samples, workers, [&](std::uint64_t i) {
    auto realization = sample_realization(config, box.a, box.b - 1,
                                          rng::sample_seed(root_seed, i));
    DiscretizedBox dbox(realization, box, grid_per_cell);
    rows[i] = moment_M_scan(dbox, p, f, t_grid);
  });

  TransportScan scan;
  scan.n_samples = n_samples;
  std::vector<double> log_t(nt);
  for (std::size_t j = 0; j < nt; ++j) log_t[j] = std::log(t_grid[j]);
  std::vector<double> column(n_samples);
  for (std::size_t j = 0; j < nt; ++j) {
    for (std::uint64_t i = 0; i < n_samples; ++i) column[i] = rows[i][j];
    MeanSE ms = fold_mean_se(column);
    scan.points.push_back({t_grid[j], ms.mean, ms.std_error});
  }
  std::vector<double> log_mean(nt);
  for (std::size_t j = 0; j < nt; ++j) {
    if (!(scan.points[j].mean_M > 0.0))
      throw NumericalError("transport_scan: vanishing moment in the T scan");
    log_mean[j] = std::log(scan.points[j].mean_M);
  }
  scan.pooled_slope = ols_slope(log_t, log_mean);

  std::vector<double> slopes;
  slopes.reserve(n_samples);
  std::vector<double> log_m(nt);
  for (std::uint64_t i = 0; i < n_samples; ++i) {
    bool ok = true;
    for (std::size_t j = 0; j < nt; ++j) {
      if (!(rows[i][j] > 0.0)) {
        ok = false;
        break;
      }
      log_m[j] = std::log(rows[i][j]);
    }
    if (ok) slopes.push_back(ols_slope(log_t, log_m));
  }
  if (slopes.size() < 2)
    throw NumericalError("transport_scan: too few usable samples");
  MeanSE ms = fold_mean_se(slopes);
  scan.mean_slope = ms.mean;
  scan.slope_se = ms.std_error;
  return scan;
}

KappaMoment kappa_moment(const DiscretizedBox& dbox, double kappa, double e_lo,
                         double e_hi, const std::vector<double>& psi,
                         const std::vector<double>& t_grid) {
  if (!(kappa >= 0.0)) throw ValidationError("kappa_moment requires kappa >= 0");
  if (t_grid.empty()) throw ValidationError("kappa_moment: empty t grid");
  const std::int64_t np = dbox.n_points();
  if (psi.size() != static_cast<std::size_t>(np))
    throw ValidationError("kappa_moment: psi has wrong grid size");
  double nrm = 0.0;
  for (double v : psi) nrm += v * v;
  nrm *= dbox.h();
  if (std::abs(nrm - 1.0) > 1e-8)
    throw ValidationError("kappa_moment: psi must be h-normalized");

  const EigenRange& er = dbox.range(e_lo, e_hi);
  const int ms = static_cast<int>(er.count);
  KappaMoment out;
  out.log_sup = -std::numeric_limits<double>::infinity();
  out.argmax_t = t_grid.front();
  if (ms == 0) {
    out.sup = 0.0;
    return out;
  }
  const int npi = static_cast<int>(np);
  std::vector<double> d(ms);
  for (int n = 0; n < ms; ++n) {
    const double* col = er.phi.data() + static_cast<std::size_t>(n) * np;
    double acc = 0.0;
    for (std::int64_t g = 0; g < np; ++g) acc += col[g] * psi[g];
    d[n] = dbox.h() * acc;
  }
  std::vector<double> wexp(np), cr(ms), ci(ms), re(np), im(np);
  for (std::int64_t g = 0; g < np; ++g)
    wexp[g] = std::pow(std::abs(dbox.x_at(g)), kappa);
  const double logh = std::log(dbox.h());
  const double one = 1.0, zero = 0.0;
  const int inc = 1;
  for (double t : t_grid) {
    for (int n = 0; n < ms; ++n) {
      cr[n] = d[n] * std::cos(t * er.energies[n]);
      ci[n] = -d[n] * std::sin(t * er.energies[n]);
    }
    dgemv_("N", &npi, &ms, &one, er.phi.data(), &npi, cr.data(), &inc, &zero,
           re.data(), &inc);
    dgemv_("N", &npi, &ms, &one, er.phi.data(), &npi, ci.data(), &inc, &zero,
           im.data(), &inc);
    // log-sum-exp of |x_g|^kappa + log h + log |psi_t(g)|^2
    double mx = -std::numeric_limits<double>::infinity();
    for (std::int64_t g = 0; g < np; ++g) {
      double a2 = re[g] * re[g] + im[g] * im[g];
      if (a2 > 0.0) mx = std::max(mx, wexp[g] + logh + std::log(a2));
    }
    double lse;
    if (!std::isfinite(mx)) {
      lse = -std::numeric_limits<double>::infinity();
    } else {
      double acc = 0.0;
      for (std::int64_t g = 0; g < np; ++g) {
        double a2 = re[g] * re[g] + im[g] * im[g];
        if (a2 > 0.0) acc += std::exp(wexp[g] + logh + std::log(a2) - mx);
      }
      lse = mx + std::log(acc);
    }
    if (lse > out.log_sup) {
      out.log_sup = lse;
      out.argmax_t = t;
    }
  }
  out.sup = std::exp(out.log_sup);
  return out;
}

}  // namespace lab
