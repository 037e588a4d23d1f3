#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lab/model.hpp"

namespace lab {

struct EstimatorResult {
  double mean = 0.0;
  double std_error = 0.0;  // sample sd / sqrt(n), one-pass accumulation
  std::uint64_t n_samples = 0;
  std::uint64_t root_seed = 0;
  std::map<std::string, double> metadata;
};

// Least-squares of log y against x^gamma; rate is the negated slope, so
// y ~ exp(intercept - rate * x^gamma).
struct StretchedFit {
  double rate = 0.0;
  double intercept = 0.0;
  double gamma = 0.0;
  double r_squared = 0.0;
  double slope_se = 0.0;  // standard error of the fitted slope
  std::size_t n_points = 0;
};

// Frequency used in the closed-form growth-rate formula; the two candidates
// are settled empirically by the deciding Monte Carlo run.
enum class BetaConvention { sqrtE, twoK };

// (lambda^2 / 8E) |u_hat(f)|^2 with f = sqrt(E) or 2 sqrt(E).
double beta_closed_form(const ModelConfig& config, double E,
                        BetaConvention convention);

// Exact sum_{j=m}^{n} j^{-p} (accumulated small-to-large).
double sum_envelope(std::uint64_t m, std::uint64_t n, double p);

// Mean of log ||T(n,0;E) psi0|| / sum_envelope(1,n,2 alpha) over independent
// realizations, psi0 = (1,0).
EstimatorResult estimate_lyapunov(const ModelConfig& config, double E,
                                  std::int64_t n, std::uint64_t n_samples,
                                  std::uint64_t root_seed, unsigned workers = 0);

// First and second moment of log ||T-block psi0|| over the block of cells
// [(l-1)*n0+1, l*n0], psi0 re-randomized uniformly on the unit circle.
std::pair<EstimatorResult, EstimatorResult> block_statistics(
    const ModelConfig& config, double E, std::int64_t l, std::int64_t n0,
    std::uint64_t n_samples, std::uint64_t root_seed, unsigned workers = 0);

// Mean of ||T(n,m;E) psi0||^{-s}, evaluated as exp(-s * log_norm) so large
// products never overflow.  psi0 re-randomized on the unit circle.
EstimatorResult estimate_negative_moment(const ModelConfig& config, double E,
                                         std::int64_t m, std::int64_t n,
                                         double s, std::uint64_t n_samples,
                                         std::uint64_t root_seed,
                                         unsigned workers = 0);

StretchedFit fit_stretched_exponential(const std::vector<double>& xs,
                                       const std::vector<double>& ys,
                                       double gamma);

// Shared batched sampler: per-sample log ||T(n,m;E) psi0|| for samples
// [0, n_samples), seeds derived from root_seed by index.  psi0_angle < 0
// selects the fixed state (1,0); otherwise each sample draws its own angle
// uniformly on the circle from its seed.
std::vector<double> batched_log_norms(const ModelConfig& config, double E,
                                      std::int64_t m, std::int64_t n,
                                      std::uint64_t n_samples,
                                      std::uint64_t root_seed,
                                      bool random_circle_psi0,
                                      unsigned workers = 0);

}  // namespace lab
