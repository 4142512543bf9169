#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "slemc/flow.hpp"
#include "slemc/params.hpp"
#include "slemc/specfun.hpp"
#include "slemc/stats.hpp"

namespace slemc {

// Point-grid specification: count points spread over [min, max] by the
// spacing law ("uniform" cell midpoints, or "geometric" ratios).
struct XsSpec {
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
  std::string spacing = "uniform";

  std::vector<double> points() const;
  double uniform_width() const;  // cell width for uniform spacing
};

struct RunConfig {
  double kappa = 6.0;
  std::uint64_t seed = 1;
  std::size_t n_paths = 100;
  FlowConfig flow;
  XsSpec xs;
  std::vector<double> eps_ladder;
  std::vector<IntervalSpec> intervals;
  std::vector<double> obs_times;
  std::vector<std::string> tasks;
  std::string output_dir = "out";

  void validate() const;
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

// FNV-1a over the canonical JSON serialization, used as provenance digest
// and as the aggregate-cache key.
std::uint64_t config_digest(const RunConfig& config);

struct ValidationReport {
  std::string test_id;
  Estimate estimate;
  double reference = 0.0;
  double reference_error = 0.0;
  double allowance = 0.0;  // measured discretization allowance
  double tolerance = 0.0;  // 3*stderr + reference error + allowance (or exact)
  bool pass = false;
  std::string detail;
};

nlohmann::json report_to_json(const ValidationReport& report,
                              std::uint64_t seed, std::uint64_t digest);

// Run manifest: schema version, config echo, derived parameters printed to
// 17 significant digits, code version, and wall-clock timestamps.
nlohmann::json make_manifest(const RunConfig& config, const SleParams& params,
                             const std::string& started,
                             const std::string& finished);

std::string iso8601_now();
std::string format17(double v);

// Minimal CSV sink; numeric cells are written with 17 significant digits so
// identical runs produce byte-identical files.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  ~CsvWriter();
  void row(const std::vector<double>& values);
  void raw_row(const std::vector<std::string>& cells);

 private:
  struct Impl;
  Impl* impl_;
};

// Runs fn(path_id) for every path id in [0, n). The thread count comes from
// SLEMC_THREADS (default 1); results must go into preallocated per-path
// slots so aggregation order never depends on scheduling.
void parallel_paths(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace slemc
