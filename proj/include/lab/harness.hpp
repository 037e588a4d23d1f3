#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "lab/asymptotics.hpp"
#include "lab/model.hpp"
#include "lab/spectral.hpp"

namespace lab {

// One experiment = one flat JSON document.  Keys outside the kind's schema
// are rejected by name; "_note" keys are ignored everywhere.
struct ExperimentSpec {
  std::string kind;
  ModelConfig model;
  nlohmann::json raw;  // normalized document (defaults filled in)

  // Kind-specific payload; unused fields stay at their defaults.
  double energy = 1.0;
  double e_lo = 0.0, e_hi = 0.0;
  double s = 0.0;
  double p = 0.0;
  double flow_step = 1.0 / 128;
  double t_max = 0.0;
  std::int64_t y = 0;
  std::int64_t m_start = 1;
  std::int64_t block_length = 0;
  std::int64_t n_blocks = 0;
  int grid_per_cell = 32;
  int t_points = 0;
  BoxSpec box{0, 0};
  std::vector<BoxSpec> boxes;
  std::vector<std::int64_t> n_cells;
  std::vector<std::int64_t> xs;
  std::vector<double> t_grid;
  std::vector<double> kappas;
  std::vector<double> gammas;

  std::uint64_t n_samples = 0;
  std::uint64_t root_seed = 0;
  std::string out;  // empty or "-" -> stdout
};

// Parse + validate a spec document; throws ValidationError naming the
// offending key.
ExperimentSpec parse_spec(const nlohmann::json& doc);
ExperimentSpec load_spec(const std::string& path);

// One table row: rendered coordinate strings (aligned with
// RunRecord::coord_names) plus the estimator columns.
struct RecordPoint {
  std::vector<std::string> coords;
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t n_samples = 0;
  std::uint64_t rejections = 0;
};

struct RunRecord {
  std::string kind;
  std::string tool_version;
  nlohmann::json spec;
  std::uint64_t spec_hash = 0;
  double wall_time_s = 0.0;
  std::vector<std::string> coord_names;
  std::vector<RecordPoint> points;
  std::map<std::string, StretchedFit> fits;
  std::map<std::string, double> scalars;
  std::map<std::string, std::string> verdicts;
  std::uint64_t rejections = 0;
};

inline constexpr const char* kToolVersion = "0.1.0";

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t spec_hash(const nlohmann::json& spec);

// Shortest round-trip decimal rendering (to_chars), byte-stable.
std::string format_double(double v);

RunRecord run(const ExperimentSpec& spec, unsigned workers = 0);

// First row "# schema=<kind>/v1", then a header row, then one row per point:
// coordinates, mean, std_error, n_samples, rejections.  Comma, LF, UTF-8.
std::string to_csv(const RunRecord& record);
nlohmann::json to_json(const RunRecord& record);
RunRecord record_from_json(const nlohmann::json& doc);

// path empty or "-" writes to stdout; format is "csv" or "json".
void write_output(const RunRecord& record, const std::string& path,
                  const std::string& format);

}  // namespace lab
