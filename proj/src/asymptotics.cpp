#include "lab/asymptotics.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "lab/errors.hpp"
#include "lab/kernels.hpp"
#include "lab/parallel.hpp"
#include "lab/rng.hpp"
#include "lab/transfer.hpp"

namespace lab {

namespace {

constexpr std::size_t kChunk = 64;  // samples per kernel batch (caps memory)

EstimatorResult make_result(const std::vector<double>& values,
                            std::uint64_t root_seed,
                            std::map<std::string, double> metadata) {
  MeanSE ms = fold_mean_se(values);
  EstimatorResult r;
  r.mean = ms.mean;
  r.std_error = ms.std_error;
  r.n_samples = ms.n;
  r.root_seed = root_seed;
  r.metadata = std::move(metadata);
  return r;
}

}  // namespace

double beta_closed_form(const ModelConfig& config, double E,
                        BetaConvention convention) {
  if (!(E > 0.0)) throw ValidationError("beta_closed_form requires E > 0");
  double k = std::sqrt(E);
  double frac = k / std::numbers::pi;
  if (std::abs(frac - std::round(frac)) < 1e-9)
    throw ValidationError(
        "beta_closed_form: resonant energy, sqrt(E) is a multiple of pi");
  double f = convention == BetaConvention::sqrtE ? k : 2.0 * k;
  double mag = std::abs(single_site_fourier(config.single_site, f));
  return config.lambda * config.lambda / (8.0 * E) * mag * mag;
}

double sum_envelope(std::uint64_t m, std::uint64_t n, double p) {
  if (m < 1 || m > n) throw ValidationError("sum_envelope requires 1 <= m <= n");
  double s = 0.0;
  for (std::uint64_t j = n; j >= m; --j) {
    s += std::pow(static_cast<double>(j), -p);
    if (j == m) break;
  }
  return s;
}

std::vector<double> batched_log_norms(const ModelConfig& config, double E,
                                      std::int64_t m, std::int64_t n,
                                      std::uint64_t n_samples,
                                      std::uint64_t root_seed,
                                      bool random_circle_psi0,
                                      unsigned workers) {
  if (n < m) throw ValidationError("batched_log_norms requires n >= m");
  config.validate();
  const std::size_t n_cells = static_cast<std::size_t>(n - m);
  if (n_cells > (1ull << 24))
    throw ResourceGuardError("batched_log_norms: window exceeds 2^24 cells");
  auto pieces = cell_pieces(config.single_site);
  auto kernel = kernels::active_kernel();
  std::vector<double> out(n_samples, 0.0);
  const std::uint64_t n_chunks = (n_samples + kChunk - 1) / kChunk;

  parallel_for_samples(n_chunks, workers, [&](std::uint64_t chunk) {
    const std::uint64_t lo = chunk * kChunk;
    const std::uint64_t hi = std::min<std::uint64_t>(n_samples, lo + kChunk);
    const std::size_t cn = static_cast<std::size_t>(hi - lo);
    std::vector<double> coup(n_cells * cn);
    std::vector<double> phi(cn), dphi(cn), log_norm(cn, 0.0);
    for (std::size_t lane = 0; lane < cn; ++lane) {
      const std::uint64_t seed = rng::sample_seed(root_seed, lo + lane);
      for (std::size_t c = 0; c < n_cells; ++c) {
        const std::int64_t cell = m + static_cast<std::int64_t>(c);
        coup[c * cn + lane] = config.lambda * envelope_value(config, cell) *
                              config.disorder.sample(rng::cell_key(seed, cell));
      }
      if (random_circle_psi0) {
        double angle = 2.0 * std::numbers::pi *
                       rng::to_u01(rng::mix64(seed ^ 0x5CA1AB1E5CA1AB1Eull));
        phi[lane] = std::sin(angle);
        dphi[lane] = std::cos(angle);
      } else {
        phi[lane] = 1.0;
        dphi[lane] = 0.0;
      }
    }
    if (n_cells > 0)
      kernel(coup.data(), cn, n_cells, pieces.data(), pieces.size(), E,
             phi.data(), dphi.data(), log_norm.data());
    for (std::size_t lane = 0; lane < cn; ++lane) out[lo + lane] = log_norm[lane];
  });
  return out;
}

EstimatorResult estimate_lyapunov(const ModelConfig& config, double E,
                                  std::int64_t n, std::uint64_t n_samples,
                                  std::uint64_t root_seed, unsigned workers) {
  if (n < 1) throw ValidationError("estimate_lyapunov requires n >= 1");
  if (n_samples < 2)
    throw ValidationError("estimate_lyapunov requires n_samples >= 2");
  auto log_norms = batched_log_norms(config, E, 0, n, n_samples, root_seed,
                                     /*random_circle_psi0=*/false, workers);
  const double norm = sum_envelope(1, static_cast<std::uint64_t>(n),
                                   2.0 * config.alpha);
  for (double& v : log_norms) v /= norm;
  return make_result(log_norms, root_seed,
                     {{"E", E},
                      {"n_cells", static_cast<double>(n)},
                      {"envelope_sum", norm}});
}

std::pair<EstimatorResult, EstimatorResult> block_statistics(
    const ModelConfig& config, double E, std::int64_t l, std::int64_t n0,
    std::uint64_t n_samples, std::uint64_t root_seed, unsigned workers) {
  if (l < 1 || n0 < 1)
    throw ValidationError("block_statistics requires l >= 1 and n0 >= 1");
  if (n_samples < 2)
    throw ValidationError("block_statistics requires n_samples >= 2");
  const std::int64_t first = (l - 1) * n0 + 1;  // cells first .. l*n0 inclusive
  auto log_norms = batched_log_norms(config, E, first, l * n0 + 1, n_samples,
                                     root_seed, /*random_circle_psi0=*/true,
                                     workers);
  std::vector<double> squares(log_norms.size());
  for (std::size_t i = 0; i < log_norms.size(); ++i)
    squares[i] = log_norms[i] * log_norms[i];
  std::map<std::string, double> meta{{"E", E},
                                     {"l", static_cast<double>(l)},
                                     {"n0", static_cast<double>(n0)}};
  return {make_result(log_norms, root_seed, meta),
          make_result(squares, root_seed, meta)};
}

EstimatorResult estimate_negative_moment(const ModelConfig& config, double E,
                                         std::int64_t m, std::int64_t n,
                                         double s, std::uint64_t n_samples,
                                         std::uint64_t root_seed,
                                         unsigned workers) {
  if (!(s > 0.0 && s < 1.0))
    throw ValidationError("estimate_negative_moment requires s in (0,1)");
  if (n < m) throw ValidationError("estimate_negative_moment requires n >= m");
  if (n_samples < 2)
    throw ValidationError("estimate_negative_moment requires n_samples >= 2");
  auto log_norms = batched_log_norms(config, E, m, n, n_samples, root_seed,
                                     /*random_circle_psi0=*/true, workers);
  for (double& v : log_norms) v = std::exp(-s * v);
  return make_result(log_norms, root_seed,
                     {{"E", E},
                      {"m", static_cast<double>(m)},
                      {"n", static_cast<double>(n)},
                      {"s", s}});
}

StretchedFit fit_stretched_exponential(const std::vector<double>& xs,
                                       const std::vector<double>& ys,
                                       double gamma) {
  if (xs.size() != ys.size())
    throw ValidationError("fit_stretched_exponential: length mismatch");
  if (xs.size() < 3)
    throw ValidationError("fit_stretched_exponential: need at least 3 points");
  const std::size_t n = xs.size();
  std::vector<double> t(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(xs[i] > 0.0))
      throw ValidationError("fit_stretched_exponential: abscissas must be > 0");
    if (!(ys[i] > 0.0))
      throw ValidationError("fit_stretched_exponential: values must be > 0");
    t[i] = std::pow(xs[i], gamma);
    w[i] = std::log(ys[i]);
  }
  double tm = 0.0, wm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    tm += t[i];
    wm += w[i];
  }
  tm /= static_cast<double>(n);
  wm /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (t[i] - tm) * (t[i] - tm);
    sxy += (t[i] - tm) * (w[i] - wm);
    syy += (w[i] - wm) * (w[i] - wm);
  }
  if (sxx == 0.0)
    throw ValidationError("fit_stretched_exponential: degenerate abscissas");
  const double slope = sxy / sxx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = w[i] - wm - slope * (t[i] - tm);
    ss_res += r * r;
  }
  StretchedFit fit;
  fit.rate = -slope;
  fit.intercept = wm - slope * tm;
  fit.gamma = gamma;
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  fit.slope_se =
      n > 2 ? std::sqrt(ss_res / static_cast<double>(n - 2) / sxx) : 0.0;
  fit.n_points = n;
  return fit;
}

}  // namespace lab
