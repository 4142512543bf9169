#include "slemc/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "slemc/version.hpp"

namespace slemc {

std::vector<double> XsSpec::points() const {
  if (!(min >= 0.0) || !(max > min) || count == 0)
    throw domain_error("invalid xs spec");
  std::vector<double> xs(count);
  if (spacing == "uniform") {
    const double w = (max - min) / static_cast<double>(count);
    for (std::size_t i = 0; i < count; ++i)
      xs[i] = min + (static_cast<double>(i) + 0.5) * w;
  } else if (spacing == "geometric") {
    if (!(min > 0.0)) throw domain_error("geometric spacing needs min > 0");
    if (count == 1) {
      xs[0] = min;
    } else {
      const double r = std::pow(max / min,
                                1.0 / static_cast<double>(count - 1));
      for (std::size_t i = 0; i < count; ++i)
        xs[i] = min * std::pow(r, static_cast<double>(i));
    }
  } else {
    throw domain_error("spacing must be uniform or geometric");
  }
  return xs;
}

double XsSpec::uniform_width() const {
  if (spacing != "uniform") throw domain_error("width needs uniform spacing");
  return (max - min) / static_cast<double>(count);
}

void RunConfig::validate() const {
  SleParams::derive(kappa);  // throws outside (4, 8)
  flow.validate();
  if (n_paths < 2) throw domain_error("n_paths must be >= 2");
  (void)xs.points();
  for (std::size_t j = 1; j < eps_ladder.size(); ++j)
    if (!(eps_ladder[j] < eps_ladder[j - 1]))
      throw domain_error("eps ladder must be strictly decreasing");
  bool wants_measure = false;
  for (const std::string& t : tasks) {
    if (t != "flow" && t != "measure" && t != "hitting" && t != "energy" &&
        t != "trace" && t != "validate")
      throw domain_error("unknown task: " + t);
    if (t == "measure" || t == "energy") wants_measure = true;
  }
  if (wants_measure) {
    if (eps_ladder.empty()) throw domain_error("measure tasks need an eps ladder");
    if (xs.spacing != "uniform")
      throw domain_error("measure tasks need a uniform grid");
    if (xs.uniform_width() > eps_ladder.back() / 8.0)
      throw domain_error("grid spacing must be <= min(eps)/8 for measure tasks");
    if (intervals.empty()) throw domain_error("measure tasks need intervals");
  }
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["kappa"] = kappa;
  j["seed"] = seed;
  j["n_paths"] = n_paths;
  j["flow"] = {{"dt_max", flow.dt_max},
               {"dt_scale", flow.dt_scale},
               {"kill_threshold", flow.kill_threshold},
               {"t_max", flow.t_max},
               {"max_steps", flow.max_steps}};
  j["xs"] = {{"min", xs.min},
             {"max", xs.max},
             {"count", xs.count},
             {"spacing", xs.spacing}};
  j["eps_ladder"] = eps_ladder;
  j["intervals"] = nlohmann::json::array();
  for (const IntervalSpec& iv : intervals)
    j["intervals"].push_back({{"x1", iv.x1}, {"x2", iv.x2}});
  j["obs_times"] = obs_times;
  j["tasks"] = tasks;
  j["output_dir"] = output_dir;
  return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  if (j.contains("schema_version") &&
      j.at("schema_version").get<int>() != kSchemaVersion)
    throw domain_error("unsupported config schema version");
  c.kappa = j.value("kappa", c.kappa);
  c.seed = j.value("seed", c.seed);
  c.n_paths = j.value("n_paths", c.n_paths);
  if (j.contains("flow")) {
    const nlohmann::json& f = j.at("flow");
    c.flow.dt_max = f.value("dt_max", c.flow.dt_max);
    c.flow.dt_scale = f.value("dt_scale", c.flow.dt_scale);
    c.flow.kill_threshold = f.value("kill_threshold", c.flow.kill_threshold);
    c.flow.t_max = f.value("t_max", c.flow.t_max);
    c.flow.max_steps = f.value("max_steps", c.flow.max_steps);
  }
  if (j.contains("xs")) {
    const nlohmann::json& x = j.at("xs");
    c.xs.min = x.value("min", 0.0);
    c.xs.max = x.value("max", 0.0);
    c.xs.count = x.value("count", std::size_t{0});
    c.xs.spacing = x.value("spacing", std::string("uniform"));
  }
  if (j.contains("eps_ladder"))
    c.eps_ladder = j.at("eps_ladder").get<std::vector<double>>();
  if (j.contains("intervals"))
    for (const nlohmann::json& iv : j.at("intervals"))
      c.intervals.push_back(
          IntervalSpec{iv.at("x1").get<double>(), iv.at("x2").get<double>()});
  if (j.contains("obs_times"))
    c.obs_times = j.at("obs_times").get<std::vector<double>>();
  if (j.contains("tasks"))
    c.tasks = j.at("tasks").get<std::vector<std::string>>();
  c.output_dir = j.value("output_dir", c.output_dir);
  return c;
}

std::uint64_t config_digest(const RunConfig& config) {
  const std::string s = config.to_json().dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json report_to_json(const ValidationReport& report,
                              std::uint64_t seed, std::uint64_t digest) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["test_id"] = report.test_id;
  j["estimate"] = {{"mean", report.estimate.mean},
                   {"stderr", report.estimate.stderr_},
                   {"n", report.estimate.n}};
  j["reference"] = report.reference;
  j["reference_error"] = report.reference_error;
  j["allowance"] = report.allowance;
  j["tolerance"] = report.tolerance;
  j["verdict"] = report.pass ? "pass" : "fail";
  j["detail"] = report.detail;
  j["provenance"] = {{"seed", seed},
                     {"config_digest", digest},
                     {"code_version", kCodeVersion}};
  return j;
}

nlohmann::json make_manifest(const RunConfig& config, const SleParams& params,
                             const std::string& started,
                             const std::string& finished) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["config"] = config.to_json();
  j["params"] = {{"kappa", format17(params.kappa)},
                 {"a", format17(params.a)},
                 {"beta", format17(params.beta)},
                 {"d", format17(params.d)},
                 {"nu", format17(params.nu)}};
  j["code_version"] = kCodeVersion;
  j["started"] = started;
  j["finished"] = finished;
  return j;
}

std::string iso8601_now() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm_utc;
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

struct CsvWriter::Impl {
  std::ofstream out;
};

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& header)
    : impl_(new Impl) {
  impl_->out.open(path);
  if (!impl_->out) throw std::runtime_error("cannot open " + path);
  raw_row(header);
}

CsvWriter::~CsvWriter() { delete impl_; }

void CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format17(v));
  raw_row(cells);
}

void CsvWriter::raw_row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) impl_->out << ',';
    impl_->out << cells[i];
  }
  impl_->out << '\n';
}

void parallel_paths(std::size_t n, const std::function<void(std::size_t)>& fn) {
  std::size_t n_threads = 1;
  if (const char* env = std::getenv("SLEMC_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) n_threads = static_cast<std::size_t>(v);
  }
  if (n_threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t)
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  for (std::thread& th : pool) th.join();
}

}  // namespace slemc
