// lab: seeded Monte Carlo experiments for a 1-D random Schrödinger operator
// with a power-decaying disorder envelope.  One experiment kind per run,
// configured by a flat JSON file, exported as CSV or JSON.
#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"

#include "lab/errors.hpp"
#include "lab/harness.hpp"
#include "lab/kernels.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "lab - localization and transport experiments for a 1-D continuum "
      "Anderson operator with decaying disorder envelope"};
  std::string kind, config_path, out_override, format = "csv";
  std::uint64_t seed_override = 0;
  std::uint64_t samples_override = 0;
  unsigned workers = 0;
  bool have_seed = false, have_samples = false;

  app.add_option("kind", kind,
                 "experiment kind (lyapunov-scan, block-stats, "
                 "negative-moment, green-decay, eigen-decay, "
                 "correlator-decay, kappa-dichotomy, transport-critical, "
                 "martingale-diagnostic)")
      ->required();
  app.add_option("--config", config_path, "JSON experiment spec")->required();
  auto* seed_opt =
      app.add_option("--seed", seed_override, "override root_seed");
  auto* samples_opt =
      app.add_option("--samples", samples_override, "override n_samples");
  app.add_option("--out", out_override,
                 "override output path ('-' for stdout)");
  app.add_option("--workers", workers,
                 "worker threads (default: LAB_WORKERS, then hardware)");
  app.add_option("--format", format, "output format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  have_seed = seed_opt->count() > 0;
  have_samples = samples_opt->count() > 0;

  try {
    nlohmann::json doc;
    {
      lab::ExperimentSpec loaded = lab::load_spec(config_path);
      doc = loaded.raw;
    }
    if (doc.at("kind").get<std::string>() != kind)
      throw lab::ValidationError("config kind '" +
                                 doc.at("kind").get<std::string>() +
                                 "' does not match CLI kind '" + kind + "'");
    if (have_seed) doc["root_seed"] = seed_override;
    if (have_samples) doc["n_samples"] = samples_override;
    if (!out_override.empty()) doc["out"] = out_override;
    lab::ExperimentSpec spec = lab::parse_spec(doc);

    std::fprintf(stderr, "lab %s: kind=%s seed=%llu samples=%llu kernel=%s\n",
                 lab::kToolVersion, spec.kind.c_str(),
                 static_cast<unsigned long long>(spec.root_seed),
                 static_cast<unsigned long long>(spec.n_samples),
                 lab::kernels::active_kernel_name().c_str());
    lab::RunRecord record = lab::run(spec, workers);
    lab::write_output(record, spec.out, format);
    std::fprintf(stderr, "lab: done in %.2fs (%zu points)\n",
                 record.wall_time_s, record.points.size());
    return 0;
  } catch (const lab::ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 2;
  } catch (const lab::ResourceGuardError& e) {
    std::fprintf(stderr, "resource guard: %s\n", e.what());
    return 3;
  } catch (const lab::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
