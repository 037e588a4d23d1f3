// Full-scale acceptance battery.  Each numbered criterion prints exactly one
// [PASS]/[FAIL] line with its measured numbers; the exit status is the number
// of failures.  Criteria 2-10 run the pinned documents in configs/, and the
// final determinism criterion reruns every one of those experiments with a
// different worker count, so a complete pass executes each experiment twice.
//
// Run from the repository root (or pass the root as argv[1]) so the configs/
// paths resolve.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lab/asymptotics.hpp"
#include "lab/errors.hpp"
#include "lab/harness.hpp"
#include "lab/model.hpp"
#include "lab/pruefer.hpp"
#include "lab/rng.hpp"
#include "lab/spectral.hpp"
#include "lab/transfer.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

int g_failures = 0;

void report(int index, const std::string& name, bool ok,
            const std::string& detail) {
  std::cout << (ok ? "[PASS] " : "[FAIL] ") << std::setw(2) << index << ' '
            << name << ": " << detail << std::endl;
  if (!ok) ++g_failures;
}

template <class Body>
void guarded(int index, const std::string& name, Body&& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(index, name, false, std::string("exception: ") + e.what());
  }
}

// First-pass runs, kept for the determinism rerun.  Reserved up front so the
// references handed out by run_config stay valid.
struct StoredRun {
  std::string label;
  lab::ExperimentSpec spec;
  lab::RunRecord record;
};
std::vector<StoredRun> g_runs;
std::string g_root = ".";

const lab::RunRecord& run_config(const std::string& label) {
  lab::ExperimentSpec spec =
      lab::load_spec(g_root + "/configs/" + label + ".json");
  StoredRun sr;
  sr.label = label;
  sr.spec = spec;
  sr.record = lab::run(spec, 1);
  g_runs.push_back(std::move(sr));
  return g_runs.back().record;
}

const lab::RecordPoint& point_at(const lab::RunRecord& rec,
                                 const std::vector<std::string>& coords) {
  for (const auto& p : rec.points)
    if (p.coords == coords) return p;
  throw lab::ValidationError("acceptance: no point with coordinates " +
                             (coords.empty() ? std::string("<none>")
                                             : coords.front()));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_root = argv[1];
  g_runs.reserve(16);
  std::cout << "acceptance battery: full pinned scale, every experiment runs "
               "twice (workers 1, then 3)"
            << std::endl;

  // ---- 1: exact identities of the propagation core, all under 10 s.
  guarded(1, "exactness", [&] {
    const auto t0 = Clock::now();

    // Unimodularity of the unit-cell transfer across random couplings and
    // energies.
    lab::ModelConfig strong;
    strong.lambda = 3.0;
    auto rz = lab::sample_realization(strong, -5000, 4999, 0xACCE5501ull);
    lab::rng::Stream energies(0xACCE5502ull);
    double worst_det = 0.0;
    for (std::int64_t n = -5000; n < 5000; ++n) {
      auto T = lab::unit_cell_transfer(rz, n, energies.uniform(-5.0, 5.0));
      worst_det = std::max(worst_det, std::abs(T.det() - 1.0));
    }

    // Zero-coupling cells against the rotation / shear / hyperbolic closed
    // forms, including energies tiny enough to exercise the series branch.
    lab::ModelConfig freecfg;
    freecfg.disorder = lab::DisorderSpec::make(lab::DisorderFamily::degenerate);
    auto freerz = lab::sample_realization(freecfg, 0, 3, 1);
    double worst_free = 0.0;
    for (double E : {4.0, 2.0, 1.0, 0.5, 0.25, 1e-3, 1e-10, 0.0, -1e-10, -0.5,
                     -2.0}) {
      auto T = lab::unit_cell_transfer(freerz, 0, E);
      double a, b, c, d;
      if (E > 0.0) {
        double k = std::sqrt(E);
        a = std::cos(k);
        b = std::sin(k) / k;
        c = -k * std::sin(k);
        d = a;
      } else if (E < 0.0) {
        double kap = std::sqrt(-E);
        a = std::cosh(kap);
        b = std::sinh(kap) / kap;
        c = kap * std::sinh(kap);
        d = a;
      } else {
        a = 1.0;
        b = 1.0;
        c = 0.0;
        d = 1.0;
      }
      worst_free = std::max({worst_free, std::abs(T.a - a), std::abs(T.b - b),
                             std::abs(T.c - c), std::abs(T.d - d)});
    }

    // Angle/radius flow against the renormalized matrix product, cell by cell
    // over 1000 disordered cells at E = 1.
    lab::ModelConfig mc;
    auto rz3 = lab::sample_realization(mc, 0, 999, 0xACCE5503ull);
    const double E = 1.0, k = 1.0;
    double phi = 0.3, dphi = 0.7, log_norm = 0.0;
    lab::PrueferState ps = lab::to_pruefer(phi, dphi, k);
    double worst_theta = 0.0, worst_logr = 0.0;
    for (std::int64_t n = 0; n < 1000; ++n) {
      lab::unit_cell_transfer(rz3, n, E).apply(phi, dphi);
      double s = std::hypot(phi, dphi);
      phi /= s;
      dphi /= s;
      log_norm += std::log(s);
      ps = lab::flow_cell(rz3, n, ps, E);
      auto ref = lab::to_pruefer(phi, dphi, k, ps.theta);
      worst_theta = std::max(worst_theta, std::abs(ps.theta - ref.theta));
      worst_logr =
          std::max(worst_logr, std::abs(ps.log_R - (ref.log_R + log_norm)));
    }

    // Symmetry of the Wronskian Green kernel on a disordered box.
    lab::ModelConfig gm;
    gm.lambda = 2.0;
    lab::BoxSpec gbox{-30, 30};
    std::optional<lab::GreenSample> green;
    for (std::uint64_t seed = 0xACCE5504ull; !green; ++seed) {
      try {
        green.emplace(lab::sample_realization(gm, -30, 29, seed), gbox, 0.9);
      } catch (const lab::NumericalError&) {
        // near-eigenvalue draw: try the next seed
      }
    }
    lab::rng::Stream pts(0xACCE5505ull);
    double worst_sym = 0.0;
    for (int i = 0; i < 100; ++i) {
      double s = pts.uniform(-30.0, 30.0);
      double t = pts.uniform(-30.0, 30.0);
      double g_st = green->value(s, t);
      double g_ts = green->value(t, s);
      worst_sym = std::max(
          worst_sym, std::abs(g_st - g_ts) / std::max(1.0, std::abs(g_st)));
    }

    const double elapsed = seconds_since(t0);
    bool ok = worst_det < 1e-10 && worst_free < 1e-12 && worst_theta < 1e-6 &&
              worst_logr < 1e-6 && worst_sym < 1e-9 && elapsed < 10.0;
    report(1, "exactness", ok,
           "det=" + fmt(worst_det) + " free=" + fmt(worst_free) +
               " angle=" + fmt(worst_theta) + " radius=" + fmt(worst_logr) +
               " green_sym=" + fmt(worst_sym) + " t=" + fmt(elapsed, 3) + "s");
  });

  // ---- 2: the growth-rate estimate picks out exactly one of the two
  // closed-form conventions (within 3 SE) and excludes the other (>= 5 SE).
  double lyap_mean = 0.0, lyap_se = 0.0;
  bool have_lyap = false;
  lab::BetaConvention win_conv = lab::BetaConvention::twoK;
  guarded(2, "growth-rate convention selection", [&] {
    const auto& rec = run_config("lyapunov");
    const auto& p = rec.points.at(0);
    lyap_mean = p.mean;
    lyap_se = p.std_error;
    have_lyap = true;
    const auto& spec = g_runs.back().spec;
    double b2k = lab::beta_closed_form(spec.model, spec.energy,
                                       lab::BetaConvention::twoK);
    double bse = lab::beta_closed_form(spec.model, spec.energy,
                                       lab::BetaConvention::sqrtE);
    double z2k = (p.mean - b2k) / p.std_error;
    double zse = (p.mean - bse) / p.std_error;
    bool two_wins = std::abs(z2k) <= std::abs(zse);
    win_conv = two_wins ? lab::BetaConvention::twoK : lab::BetaConvention::sqrtE;
    double zw = two_wins ? z2k : zse;
    double zl = two_wins ? zse : z2k;
    bool ok = std::abs(zw) <= 3.0 && std::abs(zl) >= 5.0 &&
              rec.wall_time_s <= 300.0;
    report(2, "growth-rate convention selection", ok,
           "mean=" + fmt(p.mean, 6) + " se=" + fmt(p.std_error, 3) +
               " winner=" + (two_wins ? "twoK" : "sqrtE") + " z_win=" +
               fmt(zw, 3) + " z_lose=" + fmt(zl, 3) + " wall=" +
               fmt(rec.wall_time_s, 3) + "s");
  });

  // ---- 3: doubling lambda multiplies the rate by 4.0 +/- 0.4.
  guarded(3, "lambda-squared scaling", [&] {
    if (!have_lyap) {
      report(3, "lambda-squared scaling", false,
             "skipped: lambda=1 baseline unavailable");
      return;
    }
    const auto& rec = run_config("lyapunov_lambda2");
    const auto& p = rec.points.at(0);
    double ratio = p.mean / lyap_mean;
    double rel = std::sqrt(std::pow(p.std_error / p.mean, 2) +
                           std::pow(lyap_se / lyap_mean, 2));
    bool ok = ratio >= 3.6 && ratio <= 4.4;
    report(3, "lambda-squared scaling", ok,
           "ratio=" + fmt(ratio) + " (+/-" + fmt(ratio * rel, 2) + ")" +
               " wall=" + fmt(rec.wall_time_s, 3) + "s");
  });

  // ---- 4: log of the negative moment falls linearly in n^{1/2}.
  guarded(4, "negative-moment decay", [&] {
    const auto& rec = run_config("negative_moment");
    const auto& fit = rec.fits.at("negative_moment");
    bool ok = fit.rate > 0.0 && fit.r_squared >= 0.9 &&
              rec.wall_time_s <= 300.0;
    report(4, "negative-moment decay", ok,
           "slope=" + fmt(-fit.rate) + " r2=" + fmt(fit.r_squared, 5) +
               " wall=" + fmt(rec.wall_time_s, 3) + "s");
  });

  // ---- 5: fractional moments of the Green kernel decay stretched-
  // exponentially in distance, with a bounded rejection rate.
  guarded(5, "green fractional-moment decay", [&] {
    const auto& rec = run_config("green_decay");
    const auto& fit = rec.fits.at("green_decay");
    double rej = rec.scalars.at("rejection_rate");
    bool ok = fit.rate > 0.0 && fit.r_squared >= 0.9 && rej < 0.20 &&
              rec.wall_time_s <= 900.0;
    report(5, "green fractional-moment decay", ok,
           "rate=" + fmt(fit.rate) + " r2=" + fmt(fit.r_squared, 5) +
               " rejection_rate=" + fmt(rej, 3) + " wall=" +
               fmt(rec.wall_time_s, 3) + "s");
  });

  // ---- 6: eigenfunctions decay away from their centers: median stretched-fit
  // quality over >= 50 states from >= 10 realizations.
  guarded(6, "eigenfunction decay", [&] {
    const auto& rec = run_config("eigen_decay");
    double med_r2 = rec.scalars.at("median_r_squared");
    double med_rate = rec.scalars.at("median_rate");
    double n_states = rec.scalars.at("n_states");
    std::uint64_t n_real = g_runs.back().spec.n_samples;
    bool ok = med_r2 >= 0.85 && n_states >= 50.0 && n_real >= 10 &&
              med_rate > 0.0 && rec.wall_time_s <= 900.0;
    report(6, "eigenfunction decay", ok,
           "median_r2=" + fmt(med_r2, 5) + " median_rate=" + fmt(med_rate) +
               " states=" + fmt(n_states, 6) + " realizations=" +
               std::to_string(n_real) + " wall=" + fmt(rec.wall_time_s, 3) +
               "s");
  });

  // ---- 7: the averaged eigenfunction correlator decays with a positive
  // stretched rate; the gamma=0.5 vs 0.75 comparison verdict is recorded.
  guarded(7, "correlator decay", [&] {
    const auto& rec = run_config("correlator_decay");
    const std::string best = rec.verdicts.at("better_gamma");
    const auto& fit = rec.fits.at("gamma_" + best);
    const std::string other = (best == "0.5") ? "0.75" : "0.5";
    const auto& ofit = rec.fits.at("gamma_" + other);
    bool ok = (best == "0.5" || best == "0.75") && fit.rate > 0.0 &&
              fit.r_squared >= 0.85 && rec.wall_time_s <= 1800.0;
    report(7, "correlator decay", ok,
           "winner gamma=" + best + " rate=" + fmt(fit.rate) + " r2=" +
               fmt(fit.r_squared, 5) + " (other r2=" + fmt(ofit.r_squared, 5) +
               ") wall=" + fmt(rec.wall_time_s, 3) + "s");
  });

  // ---- 8: sup-moment dichotomy under box doubling at fixed horizon:
  // kappa=0.25 stays within 10%, kappa=0.75 grows by more than 50%.
  guarded(8, "kappa dichotomy", [&] {
    const auto& rec = run_config("kappa_dichotomy");
    double g25 = rec.scalars.at("growth_0.25");
    double g75 = rec.scalars.at("growth_0.75");
    bool ok = std::abs(g25) < 0.10 && g75 > 0.50;
    report(8, "kappa dichotomy", ok,
           "growth(0.25)=" + fmt(g25, 3) + " [" +
               rec.verdicts.at("kappa_0.25") + "] growth(0.75)=" +
               fmt(g75, 3) + " [" + rec.verdicts.at("kappa_0.75") + "] wall=" +
               fmt(rec.wall_time_s, 3) + "s");
  });

  // ---- 9: moment growth at the critical envelope exponent is positive at
  // 3 sigma; the localized control slope is flat within +/- 0.1.
  guarded(9, "critical transport", [&] {
    const auto& crit = run_config("transport_critical");
    double ms = crit.scalars.at("mean_slope");
    double se = crit.scalars.at("slope_se");
    const auto& ctl = run_config("transport_control");
    double cs = ctl.scalars.at("mean_slope");
    bool ok = ms > 0.0 && ms / se >= 3.0 && std::abs(cs) <= 0.1;
    report(9, "critical transport", ok,
           "critical_slope=" + fmt(ms) + " (se=" + fmt(se, 3) + ", " +
               fmt(ms / se, 3) + " sigma) control_slope=" + fmt(cs, 3) +
               " wall=" + fmt(crit.wall_time_s + ctl.wall_time_s, 3) + "s");
  });

  // ---- 10: radial-growth decomposition: centered terms within 3 SE of zero,
  // the drift term matches the winning closed-form rate within 3 sigma after
  // envelope normalization, and the relative residual shrinks as n doubles.
  guarded(10, "martingale diagnostic", [&] {
    const auto& rec = run_config("martingale");
    const auto& spec = g_runs.back().spec;
    double beta = lab::beta_closed_form(spec.model, spec.energy, win_conv);
    bool ok = true;
    double prev_ratio = std::numeric_limits<double>::infinity();
    std::ostringstream d;
    for (auto n : spec.n_cells) {
      const std::string key = std::to_string(n);
      const auto& p1 = point_at(rec, {key, "term1"});
      const auto& p3 = point_at(rec, {key, "term3"});
      const auto& p4 = point_at(rec, {key, "term4"});
      const auto& pr = point_at(rec, {key, "residual"});
      double S = rec.scalars.at("envelope_sum_" + key);
      double z1 = p1.mean / p1.std_error;
      double z3 = p3.mean / p3.std_error;
      double zb = (p4.mean / S - beta) / (p4.std_error / S);
      double ratio = std::abs(pr.mean) / S;
      ok = ok && std::abs(z1) <= 3.0 && std::abs(z3) <= 3.0 &&
           std::abs(zb) <= 3.0 && ratio < prev_ratio;
      prev_ratio = ratio;
      d << "n=" << n << " z1=" << fmt(z1, 3) << " z3=" << fmt(z3, 3)
        << " z_beta=" << fmt(zb, 3) << " res/S=" << fmt(ratio, 3) << "  ";
    }
    report(10, "martingale diagnostic", ok,
           d.str() + "wall=" + fmt(rec.wall_time_s, 3) + "s");
  });

  // ---- 11: every experiment above, rerun with the same root seed and a
  // different worker count, reproduces byte-identical numeric output.
  guarded(11, "worker determinism", [&] {
    bool ok = true;
    int n_checked = 0;
    std::ostringstream bad;
    for (const auto& sr : g_runs) {
      lab::RunRecord redo = lab::run(sr.spec, 3);
      bool same_csv = lab::to_csv(redo) == lab::to_csv(sr.record);
      auto j1 = lab::to_json(sr.record);
      auto j2 = lab::to_json(redo);
      j1.erase("wall_time_s");
      j2.erase("wall_time_s");
      if (!(same_csv && j1 == j2)) {
        ok = false;
        bad << sr.label << " differs; ";
      }
      ++n_checked;
    }
    ok = ok && n_checked == 10;
    report(11, "worker determinism", ok,
           ok ? std::to_string(n_checked) +
                    " experiments byte-identical at workers 1 vs 3"
              : bad.str() + "(" + std::to_string(n_checked) + " checked)");
  });

  std::cout << (11 - g_failures) << "/11 criteria passed" << std::endl;
  return g_failures;
}
