#pragma once

#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lorentz/stats.hpp"

namespace lorentz {

struct MicroRegime {
  std::vector<double> radii;
  long flights = 0;           // per radius, summed over paths
  long flights_per_path = 0;
  double t_max = -1;          // negative: default 1e3 r^{-(d-1)}
};

struct LimitRegime {
  long paths = 0;
  std::vector<double> times;
};

// Serialisable description of one experiment. `procedure` selects the
// estimator pipeline; everything it reads comes from the other fields.
struct ExperimentSpec {
  std::string name;
  std::string procedure;
  int criterion = 0;  // 0: report only
  std::uint64_t seed = 1;
  nlohmann::ordered_json scatterers;  // null when unused
  nlohmann::ordered_json map = "specular";
  nlohmann::ordered_json model;       // null when unused
  std::optional<MicroRegime> micro;
  std::optional<LimitRegime> limit;
  std::vector<std::string> estimators;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  nlohmann::ordered_json tolerances = nlohmann::ordered_json::object();
  std::string out_dir;  // not part of the digest
};

nlohmann::ordered_json to_json(const ExperimentSpec& spec);
// Validates field names and types and the embedded configs; throws ConfigError.
ExperimentSpec experiment_spec_from_json(const nlohmann::ordered_json& j);
std::string spec_digest(const ExperimentSpec& spec);

// One preset per acceptance criterion plus the report-only quasicrystal run.
std::vector<ExperimentSpec> experiment_presets();
// Throws ConfigError for unknown names.
ExperimentSpec preset(const std::string& name);
std::vector<std::string> procedures();

struct RunOptions {
  int threads = 1;
  bool write_files = true;
  // Progress lines go here when set.
  std::FILE* log = nullptr;
};

// Runs the experiment and writes report.json plus CSV tables under
// spec.out_dir. Reports are byte-identical for a given spec, whatever the
// thread count.
ExperimentReport run(const ExperimentSpec& spec, const RunOptions& options = {});

// Runs fn(chunk) for chunk in [0, chunks) on up to `threads` workers.
void parallel_chunks(long chunks, int threads, const std::function<void(long)>& fn);

// CSV with a header row, '.' decimals and '\n' line ends. Throws
// std::runtime_error when the file cannot be opened.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;
  CsvWriter& cell(double x);
  CsvWriter& cell(long x);
  CsvWriter& cell(const std::string& s);
  void end_row();

 private:
  std::FILE* f_ = nullptr;
  bool first_ = true;
};

// Filesystem failure while writing artifacts.
struct OutputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lorentz
