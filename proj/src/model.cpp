#include "lab/model.hpp"

#include <cmath>

#include "lab/rng.hpp"

namespace lab {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kSqrt6 = 2.449489742783178;

// sin(x)/x with the small-argument series.
double sinc(double x) {
  if (std::abs(x) < 1e-4) {
    double z = x * x;
    return 1.0 - z / 6.0 + z * z / 120.0;
  }
  return std::sin(x) / x;
}

// (sin x - x cos x)/x^2, the odd first-moment kernel; series near 0.
double moment_kernel(double x) {
  if (std::abs(x) < 1e-3) {
    double z = x * x;
    return x * (1.0 / 3.0 - z / 30.0 + z * z / 840.0);
  }
  return (std::sin(x) - x * std::cos(x)) / (x * x);
}

}  // namespace

SingleSitePotential SingleSitePotential::default_bump() {
  SingleSitePotential u;
  u.segments = {{0.25, 0.75, 1.0}};
  u.c_u = 1.0;
  u.C_u = 1.0;
  u.j_lo = 0.25;
  u.j_hi = 0.75;
  return u;
}

void SingleSitePotential::validate() const {
  if (segments.empty()) throw ValidationError("single_site.segments: empty");
  double prev = 0.0;
  double total = 0.0;
  for (const auto& s : segments) {
    if (!(s.lo > 0.0 && s.hi < 1.0 && s.lo < s.hi))
      throw ValidationError("single_site.segments: support must lie inside (0,1)");
    if (s.lo < prev)
      throw ValidationError("single_site.segments: must be disjoint and sorted");
    if (!(s.height >= 0.0))
      throw ValidationError("single_site.segments: heights must be >= 0");
    if (C_u > 0.0 && s.height > C_u + 1e-12)
      throw ValidationError("single_site.segments: height exceeds C_u");
    prev = s.hi;
    total += s.hi - s.lo;
  }
  if (total > 1.0 + 1e-12)
    throw ValidationError("single_site.segments: total length exceeds 1");
  if (!(c_u > 0.0) || !(j_lo < j_hi) || j_lo <= 0.0 || j_hi >= 1.0)
    throw ValidationError("single_site.bounds: need c_u > 0 on a subinterval J of (0,1)");
  // u >= c_u on J: J must be covered by segments of height >= c_u.
  double cover = j_lo;
  for (const auto& s : segments) {
    if (s.hi <= cover || s.height + 1e-12 < c_u) continue;
    if (s.lo > cover + 1e-12) break;
    cover = std::max(cover, s.hi);
    if (cover >= j_hi) break;
  }
  if (cover < j_hi - 1e-12)
    throw ValidationError("single_site.bounds: u < c_u somewhere on J");
}

double SingleSitePotential::value(double y) const {
  for (const auto& s : segments)
    if (y > s.lo && y < s.hi) return s.height;
  // On a segment boundary the convention is the open-interval value 0 except
  // between two touching segments, which we do not produce in practice.
  for (const auto& s : segments)
    if (y == s.lo || y == s.hi) return 0.0;
  return 0.0;
}

double SingleSitePotential::total_mass() const {
  double m = 0.0;
  for (const auto& s : segments) m += s.height * (s.hi - s.lo);
  return m;
}

std::complex<double> single_site_fourier(const SingleSitePotential& u, double frequency) {
  // Each segment contributes height * e^{ifm} * 2w * sinc(fw) around its
  // midpoint m with half-width w; exact for all f including f = 0.
  std::complex<double> acc{0.0, 0.0};
  for (const auto& s : u.segments) {
    double m = 0.5 * (s.lo + s.hi);
    double w = 0.5 * (s.hi - s.lo);
    double phase = frequency * m;
    std::complex<double> e{std::cos(phase), std::sin(phase)};
    acc += s.height * 2.0 * w * sinc(frequency * w) * e;
  }
  return acc;
}

std::complex<double> single_site_fourier_primitive(const SingleSitePotential& u,
                                                   double frequency) {
  // U(y) = int_0^y u is piecewise linear with slope = height inside segments.
  std::complex<double> acc{0.0, 0.0};
  double U_left = 0.0;  // U at the left edge of the current segment
  for (const auto& s : u.segments) {
    double m = 0.5 * (s.lo + s.hi);
    double w = 0.5 * (s.hi - s.lo);
    // On the segment, u(y) U(y) = height * (U(m) + height * (y - m)).
    double U_mid = U_left + s.height * w;
    double c0 = s.height * U_mid;        // constant part about the midpoint
    double c1 = s.height * s.height;     // linear part coefficient
    double fw = frequency * w;
    double phase = frequency * m;
    std::complex<double> e{std::cos(phase), std::sin(phase)};
    // int_{-w}^{w} (c0 + c1 t) e^{ift} dt
    //   = c0 * 2w * sinc(fw) + c1 * 2i * (sin(fw) - fw cos(fw)) / f^2.
    std::complex<double> odd{0.0, 2.0 * w * w * moment_kernel(fw)};
    acc += e * (c0 * 2.0 * w * sinc(fw) + c1 * odd);
    U_left = U_mid + s.height * w;
  }
  return acc;
}

DisorderSpec DisorderSpec::make(DisorderFamily family) {
  DisorderSpec d;
  d.family = family;
  switch (family) {
    case DisorderFamily::uniform:
      d.omega_minus = -kSqrt3;
      d.omega_plus = kSqrt3;
      d.density_sup = 1.0 / (2.0 * kSqrt3);
      break;
    case DisorderFamily::triangular:
      d.omega_minus = -kSqrt6;
      d.omega_plus = kSqrt6;
      d.density_sup = 1.0 / kSqrt6;
      break;
    case DisorderFamily::degenerate:
      d.omega_minus = 0.0;
      d.omega_plus = 0.0;
      d.density_sup = 0.0;
      break;
  }
  return d;
}

double DisorderSpec::density(double w) const {
  if (w < omega_minus || w > omega_plus) return 0.0;
  switch (family) {
    case DisorderFamily::uniform:
      return 1.0 / (omega_plus - omega_minus);
    case DisorderFamily::triangular:
      return (1.0 - std::abs(w) / kSqrt6) / kSqrt6;
    case DisorderFamily::degenerate:
      return 0.0;
  }
  return 0.0;
}

double DisorderSpec::cdf(double w) const {
  if (w <= omega_minus) return 0.0;
  if (w >= omega_plus) return 1.0;
  switch (family) {
    case DisorderFamily::uniform:
      return (w - omega_minus) / (omega_plus - omega_minus);
    case DisorderFamily::triangular: {
      double t = w / kSqrt6;  // in (-1, 1)
      return t < 0.0 ? 0.5 * (1.0 + t) * (1.0 + t) : 1.0 - 0.5 * (1.0 - t) * (1.0 - t);
    }
    case DisorderFamily::degenerate:
      return w < 0.0 ? 0.0 : 1.0;
  }
  return 0.0;
}

void DisorderSpec::validate() const {
  if (family == DisorderFamily::degenerate) return;  // testing bypass
  if (!(omega_minus < omega_plus))
    throw ValidationError("disorder: empty support");
  // Simpson quadrature of the density moments over the support.
  const int n = 4000;  // even
  double h = (omega_plus - omega_minus) / n;
  double m0 = 0.0, m1 = 0.0, m2 = 0.0;
  for (int i = 0; i <= n; ++i) {
    double w = omega_minus + i * h;
    double c = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    double rho = density(w);
    m0 += c * rho;
    m1 += c * rho * w;
    m2 += c * rho * w * w;
  }
  m0 *= h / 3.0;
  m1 *= h / 3.0;
  m2 *= h / 3.0;
  if (std::abs(m0 - 1.0) > 1e-10 || std::abs(m1) > 1e-10 || std::abs(m2 - 1.0) > 1e-10)
    throw ValidationError("disorder: density must have mass 1, mean 0, variance 1");
}

double DisorderSpec::sample(std::uint64_t key) const {
  switch (family) {
    case DisorderFamily::uniform:
      return omega_minus + (omega_plus - omega_minus) * rng::to_u01(key);
    case DisorderFamily::triangular: {
      // Sum of two independent uniforms, scaled to variance 1.
      double a = rng::to_u01(key);
      double b = rng::to_u01(rng::mix64(key ^ 0xA5A5A5A5A5A5A5A5ull));
      return kSqrt6 * (a + b - 1.0);
    }
    case DisorderFamily::degenerate:
      return 0.0;
  }
  return 0.0;
}

void ModelConfig::validate() const {
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw ValidationError("model.alpha: must lie in (0,1)");
  if (lambda == 0.0) throw ValidationError("model.lambda: must be nonzero");
  if (envelope_rule != "power")
    throw ValidationError("model.envelope.rule: unknown rule '" + envelope_rule + "'");
  disorder.validate();
  single_site.validate();
}

double envelope_value(const ModelConfig& config, std::int64_t n) {
  double base = static_cast<double>(n >= 0 ? (n > 1 ? n : 1) : (-n > 1 ? -n : 1));
  return std::pow(base, -config.alpha);
}

DisorderRealization sample_realization(const ModelConfig& config, std::int64_t n_min,
                                       std::int64_t n_max, std::uint64_t seed) {
  if (n_min > n_max) throw ValidationError("realization window: empty");
  std::uint64_t cells = static_cast<std::uint64_t>(n_max - n_min) + 1;
  if (cells > (1ull << 24))
    throw ResourceGuardError("realization window exceeds 2^24 cells");
  DisorderRealization r;
  r.n_min = n_min;
  r.n_max = n_max;
  r.seed = seed;
  r.config = config;
  r.values.resize(cells);
  for (std::uint64_t i = 0; i < cells; ++i)
    r.values[i] = config.disorder.sample(
        rng::cell_key(seed, n_min + static_cast<std::int64_t>(i)));
  return r;
}

double eval_potential(const DisorderRealization& realization, double x) {
  double fl = std::floor(x);
  std::int64_t n = static_cast<std::int64_t>(fl);
  if (!realization.contains(n))
    throw ValidationError("eval_potential: x outside realization window");
  double y = x - fl;
  return realization.cell_coupling(n) * realization.config.single_site.value(y);
}

}  // namespace lab
