#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "lab/errors.hpp"

namespace lab {

// One constant piece of the single-site potential: u = height on [lo, hi].
struct SingleSiteSegment {
  double lo = 0.0;
  double hi = 0.0;
  double height = 0.0;
};

// Bounded bump supported inside (0,1), c_u * 1_J <= u <= C_u * 1_[0,1].
struct SingleSitePotential {
  std::vector<SingleSiteSegment> segments;  // disjoint, sorted
  double c_u = 0.0;
  double C_u = 0.0;
  double j_lo = 0.0;  // interval J on which u >= c_u > 0
  double j_hi = 0.0;

  // u = 1 on [1/4, 3/4]: unit cells then split into three constant pieces.
  static SingleSitePotential default_bump();

  void validate() const;
  double value(double y) const;      // u(y) for y in [0,1]
  double total_mass() const;         // integral of u over [0,1]
};

// Integral of u(y) e^{i f y} over [0,1], in closed form segment by segment.
std::complex<double> single_site_fourier(const SingleSitePotential& u, double frequency);

// Integral of u(y) U(y) e^{i f y} with U(y) = int_0^y u(t) dt; U is piecewise
// linear, so each segment contributes a (c0 + c1 y) e^{ify} antiderivative.
std::complex<double> single_site_fourier_primitive(const SingleSitePotential& u,
                                                   double frequency);

enum class DisorderFamily { uniform, triangular, degenerate };

// i.i.d. coupling law: mean 0, variance 1, bounded density on a compact
// support.  "degenerate" (omega == 0) is a testing bypass of the moment check.
struct DisorderSpec {
  DisorderFamily family = DisorderFamily::uniform;
  double omega_minus = 0.0;
  double omega_plus = 0.0;
  double density_sup = 0.0;

  static DisorderSpec make(DisorderFamily family);
  void validate() const;  // quadrature moment check, tolerance 1e-10

  double density(double w) const;
  double cdf(double w) const;
  // Deterministic draw from a 64-bit hash key.
  double sample(std::uint64_t key) const;
};

struct ModelConfig {
  double alpha = 0.25;
  double lambda = 1.0;
  std::string envelope_rule = "power";  // a_n = max(1,|n|)^{-alpha}
  DisorderSpec disorder = DisorderSpec::make(DisorderFamily::uniform);
  SingleSitePotential single_site = SingleSitePotential::default_bump();

  void validate() const;
};

double envelope_value(const ModelConfig& config, std::int64_t n);

// Seeded disorder values on an integer window; regeneration from the same
// (config, window, seed) is bit-identical, and a larger window reproduces the
// values of any window it contains.
struct DisorderRealization {
  std::int64_t n_min = 0;
  std::int64_t n_max = 0;  // inclusive
  std::vector<double> values;
  std::uint64_t seed = 0;
  ModelConfig config;

  bool contains(std::int64_t n) const { return n >= n_min && n <= n_max; }
  double omega(std::int64_t n) const {
    if (!contains(n))
      throw ValidationError("cell index outside realization window");
    return values[static_cast<std::size_t>(n - n_min)];
  }
  // lambda * a_n * omega_n, the coupling in front of u(. - n) on cell n.
  double cell_coupling(std::int64_t n) const {
    return config.lambda * envelope_value(config, n) * omega(n);
  }
};

DisorderRealization sample_realization(const ModelConfig& config, std::int64_t n_min,
                                       std::int64_t n_max, std::uint64_t seed);

// Full potential lambda * V_omega(x); floor(x) must lie inside the window.
double eval_potential(const DisorderRealization& realization, double x);

}  // namespace lab
