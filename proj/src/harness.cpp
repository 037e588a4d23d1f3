#include "lab/harness.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "lab/dynamics.hpp"
#include "lab/errors.hpp"
#include "lab/parallel.hpp"
#include "lab/pruefer.hpp"
#include "lab/rng.hpp"

namespace lab {

using nlohmann::json;

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

std::uint64_t spec_hash(const json& spec) { return fnv1a64(spec.dump()); }

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

namespace {

std::string hash_string(std::uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t parse_hash(const std::string& s) {
  const std::string prefix = "fnv1a64:";
  if (s.rfind(prefix, 0) != 0)
    throw ValidationError("malformed spec_hash field: " + s);
  return std::strtoull(s.c_str() + prefix.size(), nullptr, 16);
}

// ---- spec parsing -------------------------------------------------------

void check_keys(const json& obj, const std::string& where,
                const std::set<std::string>& allowed) {
  if (!obj.is_object())
    throw ValidationError(where + " must be a JSON object");
  for (const auto& item : obj.items()) {
    if (item.key() == "_note") continue;
    if (!allowed.count(item.key()))
      throw ValidationError("unknown key '" + item.key() + "' in " + where);
  }
}

const json* find(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double req_num(const json& obj, const std::string& where,
               const std::string& key) {
  const json* v = find(obj, key);
  if (!v || !v->is_number())
    throw ValidationError("missing or non-numeric key '" + key + "' in " +
                          where);
  return v->get<double>();
}

double opt_num(const json& obj, const std::string& where,
               const std::string& key, double fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number())
    throw ValidationError("non-numeric key '" + key + "' in " + where);
  return v->get<double>();
}

std::int64_t req_int(const json& obj, const std::string& where,
                     const std::string& key) {
  const json* v = find(obj, key);
  if (!v || !v->is_number_integer())
    throw ValidationError("missing or non-integer key '" + key + "' in " +
                          where);
  return v->get<std::int64_t>();
}

std::int64_t opt_int(const json& obj, const std::string& where,
                     const std::string& key, std::int64_t fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number_integer())
    throw ValidationError("non-integer key '" + key + "' in " + where);
  return v->get<std::int64_t>();
}

std::vector<std::int64_t> req_int_list(const json& obj,
                                       const std::string& where,
                                       const std::string& key) {
  const json* v = find(obj, key);
  if (!v || !v->is_array() || v->empty())
    throw ValidationError("missing or empty list key '" + key + "' in " +
                          where);
  std::vector<std::int64_t> out;
  for (const auto& e : *v) {
    if (!e.is_number_integer())
      throw ValidationError("non-integer entry under key '" + key + "' in " +
                            where);
    out.push_back(e.get<std::int64_t>());
  }
  return out;
}

std::vector<double> req_num_list(const json& obj, const std::string& where,
                                 const std::string& key) {
  const json* v = find(obj, key);
  if (!v || !v->is_array() || v->empty())
    throw ValidationError("missing or empty list key '" + key + "' in " +
                          where);
  std::vector<double> out;
  for (const auto& e : *v) {
    if (!e.is_number())
      throw ValidationError("non-numeric entry under key '" + key + "' in " +
                            where);
    out.push_back(e.get<double>());
  }
  return out;
}

BoxSpec parse_box(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() ||
      !v[1].is_number_integer())
    throw ValidationError("box in " + where +
                          " must be a [a, b] pair of integers");
  BoxSpec box{v[0].get<std::int64_t>(), v[1].get<std::int64_t>()};
  box.validate();
  return box;
}

ModelConfig parse_model(const json& m) {
  check_keys(m, "model", {"alpha", "lambda", "envelope", "disorder",
                          "single_site"});
  ModelConfig cfg;
  cfg.alpha = opt_num(m, "model", "alpha", cfg.alpha);
  cfg.lambda = opt_num(m, "model", "lambda", cfg.lambda);
  if (const json* env = find(m, "envelope")) {
    check_keys(*env, "model.envelope", {"rule"});
    const json* rule = find(*env, "rule");
    if (!rule || !rule->is_string())
      throw ValidationError("missing string key 'rule' in model.envelope");
    cfg.envelope_rule = rule->get<std::string>();
  }
  if (const json* dis = find(m, "disorder")) {
    check_keys(*dis, "model.disorder", {"family"});
    const json* fam = find(*dis, "family");
    if (!fam || !fam->is_string())
      throw ValidationError("missing string key 'family' in model.disorder");
    const std::string name = fam->get<std::string>();
    DisorderFamily family;
    if (name == "uniform") {
      family = DisorderFamily::uniform;
    } else if (name == "triangular") {
      family = DisorderFamily::triangular;
    } else if (name == "degenerate") {
      family = DisorderFamily::degenerate;
    } else {
      throw ValidationError("unknown disorder family '" + name + "'");
    }
    cfg.disorder = DisorderSpec::make(family);
  }
  if (const json* ss = find(m, "single_site")) {
    check_keys(*ss, "model.single_site", {"segments"});
    const json* segs = find(*ss, "segments");
    if (!segs || !segs->is_array() || segs->empty())
      throw ValidationError(
          "missing or empty list key 'segments' in model.single_site");
    SingleSitePotential u;
    for (const auto& e : *segs) {
      if (!e.is_array() || e.size() != 3 || !e[0].is_number() ||
          !e[1].is_number() || !e[2].is_number())
        throw ValidationError(
            "each model.single_site.segments entry must be [lo, hi, height]");
      u.segments.push_back(
          {e[0].get<double>(), e[1].get<double>(), e[2].get<double>()});
    }
    // Derived envelope bounds: the widest segment plays the role of J.
    std::size_t widest = 0;
    for (std::size_t i = 0; i < u.segments.size(); ++i) {
      u.C_u = std::max(u.C_u, u.segments[i].height);
      if (u.segments[i].hi - u.segments[i].lo >
          u.segments[widest].hi - u.segments[widest].lo)
        widest = i;
    }
    u.c_u = u.segments[widest].height;
    u.j_lo = u.segments[widest].lo;
    u.j_hi = u.segments[widest].hi;
    cfg.single_site = u;
  }
  cfg.validate();
  return cfg;
}

json model_to_json(const ModelConfig& cfg) {
  json segs = json::array();
  for (const auto& s : cfg.single_site.segments)
    segs.push_back({s.lo, s.hi, s.height});
  const char* family = "uniform";
  switch (cfg.disorder.family) {
    case DisorderFamily::uniform: family = "uniform"; break;
    case DisorderFamily::triangular: family = "triangular"; break;
    case DisorderFamily::degenerate: family = "degenerate"; break;
  }
  return json{{"alpha", cfg.alpha},
              {"lambda", cfg.lambda},
              {"envelope", {{"rule", cfg.envelope_rule}}},
              {"disorder", {{"family", family}}},
              {"single_site", {{"segments", segs}}}};
}

const std::set<std::string> kKinds = {
    "lyapunov-scan",    "block-stats",     "negative-moment",
    "green-decay",      "eigen-decay",     "correlator-decay",
    "kappa-dichotomy",  "transport-critical", "martingale-diagnostic"};

}  // namespace

ExperimentSpec parse_spec(const json& doc) {
  if (!doc.is_object())
    throw ValidationError("experiment spec must be a JSON object");
  const json* kind_v = find(doc, "kind");
  if (!kind_v || !kind_v->is_string())
    throw ValidationError("missing string key 'kind' in experiment spec");
  ExperimentSpec spec;
  spec.kind = kind_v->get<std::string>();
  if (!kKinds.count(spec.kind))
    throw ValidationError("unknown experiment kind '" + spec.kind + "'");

  std::set<std::string> allowed = {"kind", "model", "n_samples", "root_seed",
                                   "out"};
  const std::string& k = spec.kind;
  if (k == "lyapunov-scan") {
    allowed.insert({"energy", "n_cells"});
  } else if (k == "block-stats") {
    allowed.insert({"energy", "block_length", "n_blocks"});
  } else if (k == "negative-moment") {
    allowed.insert({"energy", "s", "n_cells", "m"});
  } else if (k == "green-decay") {
    allowed.insert({"energy", "s", "box", "y", "xs"});
  } else if (k == "eigen-decay") {
    allowed.insert({"box", "e_lo", "e_hi"});
  } else if (k == "correlator-decay") {
    allowed.insert({"box", "e_lo", "e_hi", "y", "grid_per_cell", "gammas"});
  } else if (k == "kappa-dichotomy") {
    allowed.insert({"kappas", "boxes", "e_lo", "e_hi", "t_max", "t_points",
                    "grid_per_cell"});
  } else if (k == "transport-critical") {
    allowed.insert({"p", "e_lo", "e_hi", "t_grid", "box", "grid_per_cell"});
  } else if (k == "martingale-diagnostic") {
    allowed.insert({"energy", "m", "n_cells", "flow_step"});
  }
  check_keys(doc, "experiment spec", allowed);

  if (const json* m = find(doc, "model")) {
    spec.model = parse_model(*m);
  } else {
    spec.model.validate();
  }
  double ns = opt_num(doc, "experiment spec", "n_samples", 2.0);
  if (!(ns >= 2.0))
    throw ValidationError("key 'n_samples' must be at least 2");
  spec.n_samples = static_cast<std::uint64_t>(ns);
  double seed = opt_num(doc, "experiment spec", "root_seed", 1.0);
  if (!(seed >= 0.0))
    throw ValidationError("key 'root_seed' must be nonnegative");
  spec.root_seed = static_cast<std::uint64_t>(seed);
  if (const json* out = find(doc, "out")) {
    if (!out->is_string())
      throw ValidationError("key 'out' must be a string path");
    spec.out = out->get<std::string>();
  }

  if (k == "lyapunov-scan") {
    spec.energy = req_num(doc, k, "energy");
    spec.n_cells = req_int_list(doc, k, "n_cells");
    for (auto n : spec.n_cells)
      if (n < 1) throw ValidationError("key 'n_cells' entries must be >= 1");
  } else if (k == "block-stats") {
    spec.energy = req_num(doc, k, "energy");
    spec.block_length = req_int(doc, k, "block_length");
    spec.n_blocks = req_int(doc, k, "n_blocks");
    if (spec.block_length < 1 || spec.n_blocks < 1)
      throw ValidationError("keys 'block_length'/'n_blocks' must be >= 1");
  } else if (k == "negative-moment") {
    spec.energy = req_num(doc, k, "energy");
    spec.s = req_num(doc, k, "s");
    spec.n_cells = req_int_list(doc, k, "n_cells");
    spec.m_start = opt_int(doc, k, "m", 0);
  } else if (k == "green-decay") {
    spec.energy = req_num(doc, k, "energy");
    spec.s = req_num(doc, k, "s");
    spec.box = parse_box(*find(doc, "box"), k);
    spec.y = opt_int(doc, k, "y", 0);
    spec.xs = req_int_list(doc, k, "xs");
    if (!find(doc, "box")) throw ValidationError("missing key 'box' in " + k);
  } else if (k == "eigen-decay") {
    const json* b = find(doc, "box");
    if (!b) throw ValidationError("missing key 'box' in " + k);
    spec.box = parse_box(*b, k);
    spec.e_lo = req_num(doc, k, "e_lo");
    spec.e_hi = req_num(doc, k, "e_hi");
  } else if (k == "correlator-decay") {
    const json* b = find(doc, "box");
    if (!b) throw ValidationError("missing key 'box' in " + k);
    spec.box = parse_box(*b, k);
    spec.e_lo = req_num(doc, k, "e_lo");
    spec.e_hi = req_num(doc, k, "e_hi");
    spec.y = opt_int(doc, k, "y", 0);
    spec.grid_per_cell =
        static_cast<int>(opt_int(doc, k, "grid_per_cell", 32));
    if (const json* g = find(doc, "gammas")) {
      (void)g;
      spec.gammas = req_num_list(doc, k, "gammas");
    } else {
      spec.gammas = {0.5, 0.75};
    }
  } else if (k == "kappa-dichotomy") {
    spec.kappas = req_num_list(doc, k, "kappas");
    const json* bs = find(doc, "boxes");
    if (!bs || !bs->is_array() || bs->empty())
      throw ValidationError("missing or empty list key 'boxes' in " + k);
    for (const auto& e : *bs) spec.boxes.push_back(parse_box(e, k));
    spec.e_lo = req_num(doc, k, "e_lo");
    spec.e_hi = req_num(doc, k, "e_hi");
    spec.t_max = req_num(doc, k, "t_max");
    spec.t_points = static_cast<int>(opt_int(doc, k, "t_points", 41));
    spec.grid_per_cell =
        static_cast<int>(opt_int(doc, k, "grid_per_cell", 32));
    if (spec.t_points < 2)
      throw ValidationError("key 't_points' must be >= 2");
    for (double kp : spec.kappas)
      if (!(kp >= 0.0))
        throw ValidationError("key 'kappas' entries must be >= 0");
  } else if (k == "transport-critical") {
    spec.p = req_num(doc, k, "p");
    spec.e_lo = req_num(doc, k, "e_lo");
    spec.e_hi = req_num(doc, k, "e_hi");
    spec.t_grid = req_num_list(doc, k, "t_grid");
    const json* b = find(doc, "box");
    if (!b) throw ValidationError("missing key 'box' in " + k);
    spec.box = parse_box(*b, k);
    spec.grid_per_cell =
        static_cast<int>(opt_int(doc, k, "grid_per_cell", 32));
  } else if (k == "martingale-diagnostic") {
    spec.energy = req_num(doc, k, "energy");
    spec.m_start = opt_int(doc, k, "m", 1);
    if (spec.m_start < 1)
      throw ValidationError("key 'm' must be >= 1 in " + k);
    spec.n_cells = req_int_list(doc, k, "n_cells");
    for (auto n : spec.n_cells)
      if (n <= spec.m_start)
        throw ValidationError("key 'n_cells' entries must exceed m");
    spec.flow_step = opt_num(doc, k, "flow_step", 1.0 / 128);
    if (!(spec.flow_step > 0.0))
      throw ValidationError("key 'flow_step' must be positive");
  }

  // Normalized document: defaults made explicit, key order canonical.
  json raw;
  raw["kind"] = spec.kind;
  raw["model"] = model_to_json(spec.model);
  raw["n_samples"] = spec.n_samples;
  raw["root_seed"] = spec.root_seed;
  if (!spec.out.empty()) raw["out"] = spec.out;
  if (k == "lyapunov-scan") {
    raw["energy"] = spec.energy;
    raw["n_cells"] = spec.n_cells;
  } else if (k == "block-stats") {
    raw["energy"] = spec.energy;
    raw["block_length"] = spec.block_length;
    raw["n_blocks"] = spec.n_blocks;
  } else if (k == "negative-moment") {
    raw["energy"] = spec.energy;
    raw["s"] = spec.s;
    raw["n_cells"] = spec.n_cells;
    raw["m"] = spec.m_start;
  } else if (k == "green-decay") {
    raw["energy"] = spec.energy;
    raw["s"] = spec.s;
    raw["box"] = {spec.box.a, spec.box.b};
    raw["y"] = spec.y;
    raw["xs"] = spec.xs;
  } else if (k == "eigen-decay") {
    raw["box"] = {spec.box.a, spec.box.b};
    raw["e_lo"] = spec.e_lo;
    raw["e_hi"] = spec.e_hi;
  } else if (k == "correlator-decay") {
    raw["box"] = {spec.box.a, spec.box.b};
    raw["e_lo"] = spec.e_lo;
    raw["e_hi"] = spec.e_hi;
    raw["y"] = spec.y;
    raw["grid_per_cell"] = spec.grid_per_cell;
    raw["gammas"] = spec.gammas;
  } else if (k == "kappa-dichotomy") {
    raw["kappas"] = spec.kappas;
    json boxes = json::array();
    for (const auto& b : spec.boxes) boxes.push_back({b.a, b.b});
    raw["boxes"] = boxes;
    raw["e_lo"] = spec.e_lo;
    raw["e_hi"] = spec.e_hi;
    raw["t_max"] = spec.t_max;
    raw["t_points"] = spec.t_points;
    raw["grid_per_cell"] = spec.grid_per_cell;
  } else if (k == "transport-critical") {
    raw["p"] = spec.p;
    raw["e_lo"] = spec.e_lo;
    raw["e_hi"] = spec.e_hi;
    raw["t_grid"] = spec.t_grid;
    raw["box"] = {spec.box.a, spec.box.b};
    raw["grid_per_cell"] = spec.grid_per_cell;
  } else if (k == "martingale-diagnostic") {
    raw["energy"] = spec.energy;
    raw["m"] = spec.m_start;
    raw["n_cells"] = spec.n_cells;
    raw["flow_step"] = spec.flow_step;
  }
  spec.raw = std::move(raw);
  return spec;
}

ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_spec(doc);
}

// ---- per-kind runners ---------------------------------------------------

namespace {

// theta0 ~ U[0, pi) for the martingale diagnostic, drawn from the sample seed.
constexpr std::uint64_t kThetaSalt = 0x7E7A5EEDD1CE0101ull;

RecordPoint point_from(const EstimatorResult& r,
                       std::vector<std::string> coords,
                       std::uint64_t rejections = 0) {
  RecordPoint p;
  p.coords = std::move(coords);
  p.mean = r.mean;
  p.std_error = r.std_error;
  p.n_samples = r.n_samples;
  p.rejections = rejections;
  return p;
}

void run_lyapunov(const ExperimentSpec& spec, unsigned workers,
                  RunRecord& rec) {
  rec.coord_names = {"E", "n_cells"};
  for (auto n : spec.n_cells) {
    auto r = estimate_lyapunov(spec.model, spec.energy, n, spec.n_samples,
                               spec.root_seed, workers);
    rec.points.push_back(point_from(
        r, {format_double(spec.energy), std::to_string(n)}));
    rec.scalars["envelope_sum_" + std::to_string(n)] =
        r.metadata.at("envelope_sum");
  }
}

void run_block_stats(const ExperimentSpec& spec, unsigned workers,
                     RunRecord& rec) {
  rec.coord_names = {"l", "stat"};
  for (std::int64_t l = 1; l <= spec.n_blocks; ++l) {
    auto [m1, m2] =
        block_statistics(spec.model, spec.energy, l, spec.block_length,
                         spec.n_samples, spec.root_seed, workers);
    rec.points.push_back(
        point_from(m1, {std::to_string(l), "log_growth"}));
    rec.points.push_back(
        point_from(m2, {std::to_string(l), "log_growth_sq"}));
  }
}

void run_negative_moment(const ExperimentSpec& spec, unsigned workers,
                         RunRecord& rec) {
  rec.coord_names = {"n"};
  std::vector<double> xs, ys;
  for (auto n : spec.n_cells) {
    auto r = estimate_negative_moment(spec.model, spec.energy, spec.m_start, n,
                                      spec.s, spec.n_samples, spec.root_seed,
                                      workers);
    rec.points.push_back(point_from(r, {std::to_string(n)}));
    xs.push_back(static_cast<double>(n));
    ys.push_back(r.mean);
  }
  if (xs.size() >= 3)
    rec.fits["negative_moment"] = fit_stretched_exponential(xs, ys, 0.5);
}

void run_green_decay(const ExperimentSpec& spec, unsigned workers,
                     RunRecord& rec) {
  rec.coord_names = {"x"};
  auto profile = fractional_moment_green_profile(
      spec.model, spec.box, spec.xs, spec.y, spec.energy, spec.s,
      spec.n_samples, spec.root_seed, workers);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < spec.xs.size(); ++i) {
    const auto& r = profile.per_x[i];
    rec.points.push_back(
        point_from(r, {std::to_string(spec.xs[i])}, profile.rejections));
    double d = std::abs(static_cast<double>(spec.xs[i] - spec.y));
    if (d >= 1.0 && r.mean > 0.0) {
      xs.push_back(d);
      ys.push_back(r.mean);
    }
  }
  rec.rejections = profile.rejections;
  rec.scalars["rejection_rate"] =
      static_cast<double>(profile.rejections) /
      static_cast<double>(spec.n_samples);
  if (xs.size() >= 3) rec.fits["green_decay"] = fit_stretched_exponential(xs, ys, 0.5);
}

struct EigenRow {
  std::size_t state = 0;
  double energy = 0.0;
  std::int64_t center = 0;
  StretchedFit fit;
};

void run_eigen_decay(const ExperimentSpec& spec, unsigned workers,
                     RunRecord& rec) {
  rec.coord_names = {"realization", "state", "energy", "center_cell",
                     "r_squared"};
  std::vector<std::vector<EigenRow>> rows(spec.n_samples);
  std::vector<std::uint64_t> skipped(spec.n_samples, 0);
  parallel_for_samples(spec.n_samples, workers, [&](std::uint64_t i) {
    auto realization =
        sample_realization(spec.model, spec.box.a, spec.box.b - 1,
                           rng::sample_seed(spec.root_seed, i));
    auto energies = locate_eigenvalues(realization, spec.box, spec.e_lo,
                                       spec.e_hi, 1e-10);
    for (std::size_t k = 0; k < energies.size(); ++k) {
      try {
        EigenPair pair = eigenfunction(realization, spec.box, energies[k]);
        EigenRow row;
        row.state = k;
        row.energy = energies[k];
        row.fit = decay_profile(pair, spec.model.alpha, &row.center);
        rows[i].push_back(row);
      } catch (const ValidationError&) {
        ++skipped[i];  // edge-centered state: too few cells to fit
      }
    }
  });
  std::vector<double> r2s, rates;
  for (std::uint64_t i = 0; i < spec.n_samples; ++i) {
    for (const auto& row : rows[i]) {
      RecordPoint p;
      p.coords = {std::to_string(i), std::to_string(row.state),
                  format_double(row.energy), std::to_string(row.center),
                  format_double(row.fit.r_squared)};
      p.mean = row.fit.rate;
      p.std_error = row.fit.slope_se;
      p.n_samples = row.fit.n_points;
      p.rejections = 0;
      rec.points.push_back(p);
      r2s.push_back(row.fit.r_squared);
      rates.push_back(row.fit.rate);
    }
    rec.rejections += skipped[i];
  }
  if (!r2s.empty()) {
    auto med = [](std::vector<double> v) {
      std::sort(v.begin(), v.end());
      std::size_t n = v.size();
      return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    rec.scalars["median_r_squared"] = med(r2s);
    rec.scalars["median_rate"] = med(rates);
    rec.scalars["n_states"] = static_cast<double>(r2s.size());
  }
}

void run_correlator_decay(const ExperimentSpec& spec, unsigned workers,
                          RunRecord& rec) {
  rec.coord_names = {"x"};
  const std::int64_t n_cells = spec.box.n_cells();
  std::vector<std::vector<double>> rows(spec.n_samples);
  parallel_for_samples(spec.n_samples, workers, [&](std::uint64_t i) {
    auto realization =
        sample_realization(spec.model, spec.box.a, spec.box.b - 1,
                           rng::sample_seed(spec.root_seed, i));
    DiscretizedBox dbox(realization, spec.box, spec.grid_per_cell);
    auto profile = correlator_profile(dbox, spec.y, spec.e_lo, spec.e_hi);
    rows[i] = std::move(profile.values);
  });
  std::vector<double> column(spec.n_samples);
  std::vector<double> means(n_cells);
  for (std::int64_t c = 0; c < n_cells; ++c) {
    for (std::uint64_t i = 0; i < spec.n_samples; ++i) column[i] = rows[i][c];
    MeanSE ms = fold_mean_se(column);
    means[c] = ms.mean;
    RecordPoint p;
    p.coords = {std::to_string(spec.box.a + c)};
    p.mean = ms.mean;
    p.std_error = ms.std_error;
    p.n_samples = ms.n;
    p.rejections = 0;
    rec.points.push_back(p);
  }
  double peak = 0.0;
  for (double m : means) peak = std::max(peak, m);
  const double floor = 1e-12 * peak;
  std::vector<double> xs, ys;
  for (std::int64_t c = 0; c < n_cells; ++c) {
    double d = std::abs(static_cast<double>(spec.box.a + c - spec.y));
    if (d >= 1.0 && means[c] > floor) {
      xs.push_back(d);
      ys.push_back(means[c]);
    }
  }
  double best_r2 = -1.0;
  std::string best;
  for (double gamma : spec.gammas) {
    if (xs.size() < 3) break;
    StretchedFit fit = fit_stretched_exponential(xs, ys, gamma);
    std::string name = "gamma_" + format_double(gamma);
    rec.fits[name] = fit;
    if (fit.r_squared > best_r2) {
      best_r2 = fit.r_squared;
      best = format_double(gamma);
    }
  }
  if (!best.empty()) rec.verdicts["better_gamma"] = best;
}

void run_kappa_dichotomy(const ExperimentSpec& spec, unsigned workers,
                         RunRecord& rec) {
  rec.coord_names = {"kappa", "half_length"};
  for (const auto& box : spec.boxes) {
    const double half = 0.5 * static_cast<double>(box.b - box.a);
    const double horizon =
        std::min(-static_cast<double>(box.a), static_cast<double>(box.b)) /
        (2.0 * std::sqrt(spec.e_hi));
    if (spec.t_max > horizon)
      throw ResourceGuardError(
          "kappa-dichotomy: t_max exceeds the ballistic horizon of box [" +
          std::to_string(box.a) + ", " + std::to_string(box.b) + "]");
    (void)half;
  }
  std::vector<double> t_grid(spec.t_points);
  for (int i = 0; i < spec.t_points; ++i)
    t_grid[i] = spec.t_max * static_cast<double>(i) /
                static_cast<double>(spec.t_points - 1);

  // kappas x boxes x realizations; the eigensolve is shared across kappas.
  std::vector<std::vector<std::vector<double>>> log_sups(
      spec.boxes.size(),
      std::vector<std::vector<double>>(spec.kappas.size(),
                                       std::vector<double>(spec.n_samples)));
  for (std::size_t b = 0; b < spec.boxes.size(); ++b) {
    const BoxSpec& box = spec.boxes[b];
    parallel_for_samples(spec.n_samples, workers, [&](std::uint64_t i) {
      auto realization = sample_realization(
          spec.model, box.a, box.b - 1, rng::sample_seed(spec.root_seed, i));
      DiscretizedBox dbox(realization, box, spec.grid_per_cell);
      auto [g0, g1] = dbox.cell_span(0);
      std::vector<double> psi(dbox.n_points(), 0.0);
      for (auto g = g0; g < g1; ++g) psi[g] = 1.0;
      double nn = std::sqrt(dbox.h() * static_cast<double>(g1 - g0));
      for (auto g = g0; g < g1; ++g) psi[g] /= nn;
      for (std::size_t kk = 0; kk < spec.kappas.size(); ++kk) {
        auto km = kappa_moment(dbox, spec.kappas[kk], spec.e_lo, spec.e_hi,
                               psi, t_grid);
        log_sups[b][kk][i] = km.log_sup;
      }
    });
  }
  for (std::size_t kk = 0; kk < spec.kappas.size(); ++kk) {
    std::vector<double> per_box_mean;
    for (std::size_t b = 0; b < spec.boxes.size(); ++b) {
      MeanSE ms = fold_mean_se(log_sups[b][kk]);
      per_box_mean.push_back(ms.mean);
      RecordPoint p;
      p.coords = {format_double(spec.kappas[kk]),
                  format_double(0.5 * static_cast<double>(spec.boxes[b].b -
                                                          spec.boxes[b].a))};
      p.mean = ms.mean;
      p.std_error = ms.std_error;
      p.n_samples = ms.n;
      p.rejections = 0;
      rec.points.push_back(p);
    }
    if (per_box_mean.size() >= 2) {
      double growth =
          std::exp(per_box_mean.back() - per_box_mean.front()) - 1.0;
      std::string key = "growth_" + format_double(spec.kappas[kk]);
      rec.scalars[key] = growth;
      std::string verdict = "inconclusive";
      if (std::abs(growth) < 0.10) verdict = "stable";
      else if (growth > 0.50) verdict = "growing";
      rec.verdicts["kappa_" + format_double(spec.kappas[kk])] = verdict;
    }
  }
}

void run_transport(const ExperimentSpec& spec, unsigned workers,
                   RunRecord& rec) {
  rec.coord_names = {"T"};
  EnergyWindow f{spec.e_lo, spec.e_hi, nullptr};
  auto scan = transport_scan(spec.model, spec.p, f, spec.t_grid, spec.box,
                             spec.grid_per_cell, spec.n_samples,
                             spec.root_seed, workers);
  for (const auto& pt : scan.points) {
    RecordPoint p;
    p.coords = {format_double(pt.T)};
    p.mean = pt.mean_M;
    p.std_error = pt.std_error;
    p.n_samples = scan.n_samples;
    p.rejections = 0;
    rec.points.push_back(p);
  }
  rec.scalars["pooled_slope"] = scan.pooled_slope;
  rec.scalars["mean_slope"] = scan.mean_slope;
  rec.scalars["slope_se"] = scan.slope_se;
}

void run_martingale(const ExperimentSpec& spec, unsigned workers,
                    RunRecord& rec) {
  rec.coord_names = {"n", "term"};
  for (auto n : spec.n_cells) {
    std::vector<std::array<double, 5>> terms(spec.n_samples);
    std::vector<double> drift(spec.n_samples);
    parallel_for_samples(spec.n_samples, workers, [&](std::uint64_t i) {
      const std::uint64_t seed = rng::sample_seed(spec.root_seed, i);
      auto realization =
          sample_realization(spec.model, spec.m_start, n - 1, seed);
      const double pi = 3.14159265358979323846;
      const double theta0 = pi * rng::to_u01(rng::mix64(seed ^ kThetaSalt));
      auto md = martingale_decompose(realization, spec.m_start, n, spec.energy,
                                     theta0, spec.flow_step);
      terms[i] = {md.term1, md.term2, md.term3, md.term4, md.residual};
      drift[i] = md.drift_prediction;
    });
    static const char* kNames[5] = {"term1", "term2", "term3", "term4",
                                    "residual"};
    std::vector<double> column(spec.n_samples);
    for (int t = 0; t < 5; ++t) {
      for (std::uint64_t i = 0; i < spec.n_samples; ++i)
        column[i] = terms[i][t];
      MeanSE ms = fold_mean_se(column);
      RecordPoint p;
      p.coords = {std::to_string(n), kNames[t]};
      p.mean = ms.mean;
      p.std_error = ms.std_error;
      p.n_samples = ms.n;
      p.rejections = 0;
      rec.points.push_back(p);
    }
    MeanSE dm = fold_mean_se(drift);
    RecordPoint p;
    p.coords = {std::to_string(n), "drift_prediction"};
    p.mean = dm.mean;
    p.std_error = dm.std_error;  // zero: the prediction is sample-free
    p.n_samples = dm.n;
    p.rejections = 0;
    rec.points.push_back(p);
    rec.scalars["envelope_sum_" + std::to_string(n)] =
        sum_envelope(spec.m_start, n - 1, 2.0 * spec.model.alpha);
  }
}

}  // namespace

RunRecord run(const ExperimentSpec& spec, unsigned workers) {
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.kind = spec.kind;
  rec.tool_version = kToolVersion;
  rec.spec = spec.raw;
  rec.spec_hash = spec_hash(spec.raw);
  if (spec.kind == "lyapunov-scan") {
    run_lyapunov(spec, workers, rec);
  } else if (spec.kind == "block-stats") {
    run_block_stats(spec, workers, rec);
  } else if (spec.kind == "negative-moment") {
    run_negative_moment(spec, workers, rec);
  } else if (spec.kind == "green-decay") {
    run_green_decay(spec, workers, rec);
  } else if (spec.kind == "eigen-decay") {
    run_eigen_decay(spec, workers, rec);
  } else if (spec.kind == "correlator-decay") {
    run_correlator_decay(spec, workers, rec);
  } else if (spec.kind == "kappa-dichotomy") {
    run_kappa_dichotomy(spec, workers, rec);
  } else if (spec.kind == "transport-critical") {
    run_transport(spec, workers, rec);
  } else if (spec.kind == "martingale-diagnostic") {
    run_martingale(spec, workers, rec);
  } else {
    throw ValidationError("unknown experiment kind '" + spec.kind + "'");
  }
  rec.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return rec;
}

// ---- export -------------------------------------------------------------

std::string to_csv(const RunRecord& record) {
  std::string out = "# schema=" + record.kind + "/v1\n";
  for (const auto& name : record.coord_names) {
    out += name;
    out += ',';
  }
  out += "mean,std_error,n_samples,rejections\n";
  for (const auto& p : record.points) {
    for (const auto& c : p.coords) {
      out += c;
      out += ',';
    }
    out += format_double(p.mean);
    out += ',';
    out += format_double(p.std_error);
    out += ',';
    out += std::to_string(p.n_samples);
    out += ',';
    out += std::to_string(p.rejections);
    out += '\n';
  }
  return out;
}

nlohmann::json to_json(const RunRecord& record) {
  json j;
  j["kind"] = record.kind;
  j["tool_version"] = record.tool_version;
  j["spec"] = record.spec;
  j["spec_hash"] = hash_string(record.spec_hash);
  j["wall_time_s"] = record.wall_time_s;
  j["coord_names"] = record.coord_names;
  json points = json::array();
  for (const auto& p : record.points) {
    points.push_back({{"coords", p.coords},
                      {"mean", p.mean},
                      {"std_error", p.std_error},
                      {"n_samples", p.n_samples},
                      {"rejections", p.rejections}});
  }
  j["points"] = std::move(points);
  json fits = json::object();
  for (const auto& [name, f] : record.fits) {
    fits[name] = {{"rate", f.rate},          {"intercept", f.intercept},
                  {"gamma", f.gamma},        {"r_squared", f.r_squared},
                  {"slope_se", f.slope_se},  {"n_points", f.n_points}};
  }
  j["fits"] = std::move(fits);
  j["scalars"] = record.scalars;
  j["verdicts"] = record.verdicts;
  j["rejections"] = record.rejections;
  return j;
}

RunRecord record_from_json(const json& doc) {
  RunRecord rec;
  rec.kind = doc.at("kind").get<std::string>();
  rec.tool_version = doc.at("tool_version").get<std::string>();
  rec.spec = doc.at("spec");
  rec.spec_hash = parse_hash(doc.at("spec_hash").get<std::string>());
  rec.wall_time_s = doc.at("wall_time_s").get<double>();
  rec.coord_names = doc.at("coord_names").get<std::vector<std::string>>();
  for (const auto& pj : doc.at("points")) {
    RecordPoint p;
    p.coords = pj.at("coords").get<std::vector<std::string>>();
    p.mean = pj.at("mean").get<double>();
    p.std_error = pj.at("std_error").get<double>();
    p.n_samples = pj.at("n_samples").get<std::uint64_t>();
    p.rejections = pj.at("rejections").get<std::uint64_t>();
    rec.points.push_back(std::move(p));
  }
  for (const auto& [name, fj] : doc.at("fits").items()) {
    StretchedFit f;
    f.rate = fj.at("rate").get<double>();
    f.intercept = fj.at("intercept").get<double>();
    f.gamma = fj.at("gamma").get<double>();
    f.r_squared = fj.at("r_squared").get<double>();
    f.slope_se = fj.at("slope_se").get<double>();
    f.n_points = fj.at("n_points").get<std::size_t>();
    rec.fits[name] = f;
  }
  rec.scalars = doc.at("scalars").get<std::map<std::string, double>>();
  rec.verdicts = doc.at("verdicts").get<std::map<std::string, std::string>>();
  rec.rejections = doc.at("rejections").get<std::uint64_t>();
  return rec;
}

void write_output(const RunRecord& record, const std::string& path,
                  const std::string& format) {
  std::string body;
  if (format == "csv") {
    body = to_csv(record);
  } else if (format == "json") {
    body = to_json(record).dump(2) + "\n";
  } else {
    throw ValidationError("unknown output format '" + format + "'");
  }
  if (path.empty() || path == "-") {
    std::fwrite(body.data(), 1, body.size(), stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write output path: " + path);
  out << body;
  if (!out) throw ValidationError("cannot write output path: " + path);
}

}  // namespace lab
