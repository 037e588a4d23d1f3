#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "lab/asymptotics.hpp"
#include "lab/model.hpp"
#include "lab/pruefer.hpp"
#include "lab/rng.hpp"
#include "lab/transfer.hpp"

using namespace lab;

namespace {

constexpr double kPi = 3.14159265358979323846;

ModelConfig config_with(double lambda, DisorderFamily family) {
  ModelConfig cfg;
  cfg.lambda = lambda;
  cfg.disorder = DisorderSpec::make(family);
  cfg.validate();
  return cfg;
}

// log of the oscillation-adapted radius sqrt(phi^2 + (phi'/k)^2)
double log_radius(double phi, double dphi, double k) {
  return 0.5 * std::log(phi * phi + (dphi / k) * (dphi / k));
}

}  // namespace

TEST_CASE("polar map fixes the two axis states") {
  const double k = 2.0;
  auto a = to_pruefer(k, 0.0, k);  // phi = k, phi' = 0
  CHECK(a.log_R == doctest::Approx(std::log(k)).epsilon(1e-14));
  CHECK(a.theta == doctest::Approx(kPi / 2).epsilon(1e-14));
  auto b = to_pruefer(0.0, 1.0, k);  // phi = 0, phi' = 1
  CHECK(b.log_R == doctest::Approx(-std::log(k)).epsilon(1e-14));
  CHECK(b.theta == doctest::Approx(0.0));
}

TEST_CASE("polar round trip is exact to 1e-12") {
  rng::Stream st(404);
  for (int i = 0; i < 200; ++i) {
    double phi = st.uniform(-3.0, 3.0);
    double dphi = st.uniform(-3.0, 3.0);
    if (std::abs(phi) + std::abs(dphi) < 1e-3) continue;
    double k = st.uniform(0.2, 4.0);
    auto state = to_pruefer(phi, dphi, k);
    double p2, d2;
    from_pruefer(state, p2, d2);
    CHECK(p2 == doctest::Approx(phi).epsilon(1e-12));
    CHECK(d2 == doctest::Approx(dphi).epsilon(1e-12));
  }
}

TEST_CASE("angle hint lifts onto the requested branch") {
  auto near7pi = to_pruefer(1.0, 1.0, 1.0, 7.0 * kPi);
  CHECK(std::abs(near7pi.theta - 7.0 * kPi) < kPi);
  auto base = to_pruefer(1.0, 1.0, 1.0);
  double laps = (near7pi.theta - base.theta) / (2.0 * kPi);
  CHECK(laps == doctest::Approx(std::round(laps)).epsilon(1e-12));
}

TEST_CASE("free flow advances the angle by exactly k per cell") {
  auto cfg = config_with(1.0, DisorderFamily::degenerate);  // V = 0
  auto rl = sample_realization(cfg, 0, 9, 1);
  const double E = 2.0, k = std::sqrt(E);
  PrueferState s{0.25, 0.4, k};
  for (std::int64_t n = 0; n < 10; ++n) s = flow_cell(rl, n, s, E);
  CHECK(s.theta == doctest::Approx(0.4 + 10.0 * k).epsilon(1e-14));
  CHECK(s.log_R == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("flow tracks the transfer solution across one thousand cells") {
  auto cfg = config_with(1.0, DisorderFamily::uniform);
  auto rl = sample_realization(cfg, 0, 999, 2023);
  const double E = 1.0, k = 1.0;
  PrueferState s{0.0, 0.3, k};
  double phi, dphi;
  from_pruefer(s, phi, dphi);
  double log_scale = 0.0;
  double worst_theta = 0.0, worst_logr = 0.0;
  for (std::int64_t n = 0; n < 1000; ++n) {
    s = flow_cell(rl, n, s, E);
    auto t = unit_cell_transfer(rl, n, E);
    t.apply(phi, dphi);
    double norm = std::hypot(phi, dphi);
    phi /= norm;
    dphi /= norm;
    log_scale += std::log(norm);
    auto ref = to_pruefer(phi, dphi, k, s.theta);
    worst_theta = std::max(worst_theta, std::abs(ref.theta - s.theta));
    worst_logr =
        std::max(worst_logr, std::abs(ref.log_R + log_scale - s.log_R));
  }
  CHECK(worst_theta < 1e-6);
  CHECK(worst_logr < 1e-6);
}

TEST_CASE("flow over an interval is a semigroup") {
  auto cfg = config_with(2.0, DisorderFamily::uniform);
  auto rl = sample_realization(cfg, 0, 19, 7);
  const double E = 1.21;
  PrueferState s0{0.0, 1.0, std::sqrt(E)};
  auto whole = flow_interval(rl, 0.8, 17.3, s0, E);
  auto first = flow_interval(rl, 0.8, 9.11, s0, E);
  auto second = flow_interval(rl, 9.11, 17.3, first, E);
  CHECK(second.theta == doctest::Approx(whole.theta).epsilon(1e-9));
  CHECK(second.log_R == doctest::Approx(whole.log_R).epsilon(1e-9));
}

TEST_CASE("winding counts multiples of pi crossed by the lift") {
  CHECK(winding_count(-0.1, 2.0 * kPi) == 3);
  CHECK(winding_count(0.0, kPi) == 1);
  CHECK(winding_count(0.1, 0.2) == 0);
  CHECK(winding_count(-0.1, -0.05) == 0);
  CHECK(winding_count(3.2, 9.5) == 2);
  CHECK(winding_count(9.5, 3.2) == -2);
}

TEST_CASE("angle lift counts sign changes of the solution") {
  auto cfg = config_with(1.5, DisorderFamily::uniform);
  auto rl = sample_realization(cfg, 0, 49, 99);
  const double E = 1.0;
  PrueferState s{0.0, 0.2, 1.0};
  double phi, dphi;
  from_pruefer(s, phi, dphi);
  int sign_changes = 0;
  double prev = phi;
  // dense sampling of the solution via fine sub-interval flow
  const int steps_per_cell = 64;
  for (std::int64_t n = 0; n < 50; ++n) {
    for (int i = 0; i < steps_per_cell; ++i) {
      double x0 = n + static_cast<double>(i) / steps_per_cell;
      double x1 = n + static_cast<double>(i + 1) / steps_per_cell;
      s = flow_interval(rl, x0, x1, s, E);
      double p, d;
      from_pruefer(s, p, d);
      if (prev * p < 0.0) ++sign_changes;
      prev = p;
    }
  }
  PrueferState start{0.0, 0.2, 1.0};
  CHECK(winding_count(start.theta, s.theta) == sign_changes);
}

TEST_CASE("decomposition is identically zero without disorder") {
  auto cfg = config_with(1.0, DisorderFamily::degenerate);
  auto rl = sample_realization(cfg, 1, 63, 5);
  auto md = martingale_decompose(rl, 1, 64, 1.0, 0.7);
  CHECK(std::abs(md.term1) < 1e-12);
  CHECK(std::abs(md.term2) < 1e-12);
  CHECK(std::abs(md.term3) < 1e-12);
  CHECK(std::abs(md.term4) < 1e-12);
  CHECK(std::abs(md.residual) < 1e-12);
  CHECK(md.drift_prediction > 0.0);  // prediction is disorder-free by design
}

TEST_CASE("decomposition terms sum to the exact radial growth") {
  auto cfg = config_with(1.0, DisorderFamily::uniform);
  const std::int64_t m = 8, n = 256;
  const double E = 1.0, k = 1.0, theta0 = 0.9;
  auto rl = sample_realization(cfg, m, n - 1, 31);
  auto md = martingale_decompose(rl, m, n, E, theta0);
  // independent exact value through the renormalized transfer product
  PrueferState s0{0.0, theta0, k};
  double phi, dphi;
  from_pruefer(s0, phi, dphi);
  auto res = propagate(rl, m, n, E, phi, dphi);
  double exact = res.log_norm + log_radius(res.dir_phi, res.dir_dphi, k) -
                 log_radius(phi, dphi, k);
  double sum = md.term1 + md.term2 + md.term3 + md.term4 + md.residual;
  CHECK(sum == doctest::Approx(exact).epsilon(1e-9));
}

TEST_CASE("drift prediction equals the closed-form rate times the envelope sum") {
  auto cfg = config_with(1.0, DisorderFamily::uniform);
  const std::int64_t m = 32, n = 512;
  const double E = 1.0;
  auto rl = sample_realization(cfg, m, n - 1, 77);
  auto md = martingale_decompose(rl, m, n, E, 0.3);
  double beta = beta_closed_form(cfg, E, BetaConvention::twoK);
  double expect = beta * sum_envelope(m, n - 1, 2.0 * cfg.alpha);
  CHECK(md.drift_prediction == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("centered terms average to zero and the drift term does not") {
  auto cfg = config_with(1.0, DisorderFamily::uniform);
  const std::int64_t m = 16, n = 128;
  const double E = 1.0;
  const int samples = 400;
  double t1 = 0.0, t3 = 0.0, t4 = 0.0;
  double t1_sq = 0.0, t3_sq = 0.0;
  for (int i = 0; i < samples; ++i) {
    const std::uint64_t seed = rng::sample_seed(56, i);
    auto rl = sample_realization(cfg, m, n - 1, seed);
    const double theta0 = kPi * rng::to_u01(rng::mix64(seed ^ 0xF00Dull));
    auto md = martingale_decompose(rl, m, n, E, theta0);
    t1 += md.term1;
    t3 += md.term3;
    t4 += md.term4;
    t1_sq += md.term1 * md.term1;
    t3_sq += md.term3 * md.term3;
  }
  t1 /= samples;
  t3 /= samples;
  t4 /= samples;
  t1_sq /= samples;
  t3_sq /= samples;
  double se1 = std::sqrt((t1_sq - t1 * t1) / samples);
  double se3 = std::sqrt((t3_sq - t3 * t3) / samples);
  CHECK(std::abs(t1) < 3.0 * se1);
  CHECK(std::abs(t3) < 3.0 * se3);
  // the drift term concentrates near its omega-free prediction
  auto rl = sample_realization(cfg, m, n - 1, 1);
  auto md = martingale_decompose(rl, m, n, E, 0.0);
  CHECK(t4 > 0.5 * md.drift_prediction);
  CHECK(t4 < 2.0 * md.drift_prediction);
}
