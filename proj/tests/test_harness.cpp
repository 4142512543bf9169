#include <atomic>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "slemc/harness.hpp"
#include "slemc/version.hpp"

using slemc::RunConfig;
using slemc::XsSpec;

namespace {

RunConfig sample_config() {
  RunConfig c;
  c.kappa = 6.0;
  c.seed = 42;
  c.n_paths = 100;
  c.flow.dt_scale = 0.01;
  c.flow.t_max = 400.0;
  c.xs = XsSpec{1.0, 2.0, 320, "uniform"};
  c.eps_ladder = {0.2, 0.1, 0.05, 0.025};
  c.intervals = {{1.0, 2.0}};
  c.obs_times = {1.0};
  c.tasks = {"measure"};
  return c;
}

}  // namespace

TEST_CASE("xs spec generates uniform midpoints and geometric ladders") {
  XsSpec u{1.0, 2.0, 4, "uniform"};
  const std::vector<double> pu = u.points();
  REQUIRE(pu.size() == 4);
  CHECK(pu[0] == doctest::Approx(1.125).epsilon(1e-15));
  CHECK(pu[3] == doctest::Approx(1.875).epsilon(1e-15));
  CHECK(u.uniform_width() == doctest::Approx(0.25).epsilon(1e-15));

  XsSpec g{1.0, 8.0, 4, "geometric"};
  const std::vector<double> pg = g.points();
  CHECK(pg[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pg[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(pg[3] == doctest::Approx(8.0).epsilon(1e-12));
  CHECK_THROWS_AS(g.uniform_width(), slemc::domain_error);
  CHECK_THROWS_AS((XsSpec{1.0, 2.0, 0, "uniform"}.points()),
                  slemc::domain_error);
  CHECK_THROWS_AS((XsSpec{1.0, 2.0, 4, "log"}.points()), slemc::domain_error);
  CHECK_THROWS_AS((XsSpec{0.0, 2.0, 4, "geometric"}.points()),
                  slemc::domain_error);
}

TEST_CASE("run config survives a JSON round trip") {
  const RunConfig c = sample_config();
  const nlohmann::json j = c.to_json();
  const RunConfig r = RunConfig::from_json(j);
  CHECK(r.kappa == c.kappa);
  CHECK(r.seed == c.seed);
  CHECK(r.n_paths == c.n_paths);
  CHECK(r.flow.dt_scale == c.flow.dt_scale);
  CHECK(r.flow.t_max == c.flow.t_max);
  CHECK(r.xs.count == c.xs.count);
  CHECK(r.xs.spacing == c.xs.spacing);
  CHECK(r.eps_ladder == c.eps_ladder);
  REQUIRE(r.intervals.size() == 1);
  CHECK(r.intervals[0].x1 == 1.0);
  CHECK(r.intervals[0].x2 == 2.0);
  CHECK(r.tasks == c.tasks);
  CHECK(r.to_json() == j);

  nlohmann::json bad = j;
  bad["schema_version"] = slemc::kSchemaVersion + 1;
  CHECK_THROWS_AS(RunConfig::from_json(bad), slemc::domain_error);
}

TEST_CASE("run config validation rejects inconsistent setups") {
  CHECK_NOTHROW(sample_config().validate());

  RunConfig c = sample_config();
  c.kappa = 9.0;
  CHECK_THROWS(c.validate());

  c = sample_config();
  c.n_paths = 1;
  CHECK_THROWS_AS(c.validate(), slemc::domain_error);

  c = sample_config();
  c.eps_ladder = {0.1, 0.2};
  CHECK_THROWS_AS(c.validate(), slemc::domain_error);

  c = sample_config();
  c.tasks = {"simulate"};
  CHECK_THROWS_AS(c.validate(), slemc::domain_error);

  // grid too coarse for the smallest eps
  c = sample_config();
  c.xs.count = 40;
  CHECK_THROWS_AS(c.validate(), slemc::domain_error);

  c = sample_config();
  c.intervals.clear();
  CHECK_THROWS_AS(c.validate(), slemc::domain_error);

  // flow/trace tasks have no grid-resolution constraint
  c = sample_config();
  c.xs.count = 4;
  c.tasks = {"flow", "trace"};
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config digest is stable and sensitive to every field") {
  const RunConfig c = sample_config();
  const std::uint64_t d1 = slemc::config_digest(c);
  CHECK(d1 == slemc::config_digest(c));
  RunConfig c2 = c;
  c2.seed += 1;
  CHECK(slemc::config_digest(c2) != d1);
  c2 = c;
  c2.flow.dt_scale *= 0.5;
  CHECK(slemc::config_digest(c2) != d1);
}

TEST_CASE("manifest echoes the config and the derived exponents") {
  const RunConfig c = sample_config();
  const slemc::SleParams p = slemc::SleParams::derive(c.kappa);
  const nlohmann::json m =
      slemc::make_manifest(c, p, "2026-01-01T00:00:00Z", "2026-01-01T00:10:00Z");
  CHECK(m["schema_version"] == slemc::kSchemaVersion);
  CHECK(m["code_version"] == slemc::kCodeVersion);
  CHECK(m["config"] == c.to_json());
  CHECK(m["params"]["a"] == slemc::format17(p.a));
  // 17 significant digits round-trip the double exactly
  CHECK(std::stod(m["params"]["beta"].get<std::string>()) == p.beta);
  CHECK(m["started"] == "2026-01-01T00:00:00Z");
  const std::string now = slemc::iso8601_now();
  CHECK(now.size() == 20);
  CHECK(now.back() == 'Z');
}

TEST_CASE("csv writer emits headers and 17-digit values") {
  const std::string path = "test_harness_tmp.csv";
  {
    slemc::CsvWriter w(path, {"a", "b"});
    w.row({1.0, 0.1});
    w.row({-2.5, 3.0e-17});
  }
  std::ifstream in(path);
  std::string l1, l2, l3;
  std::getline(in, l1);
  std::getline(in, l2);
  std::getline(in, l3);
  CHECK(l1 == "a,b");
  CHECK(l2 == "1,0.10000000000000001");
  CHECK(l3.substr(0, 5) == "-2.5,");
  std::remove(path.c_str());
}

TEST_CASE("parallel path execution covers every index exactly once") {
  const std::size_t n = 257;
  std::vector<std::atomic<int>> hits(n);
  setenv("SLEMC_THREADS", "4", 1);
  slemc::parallel_paths(n, [&](std::size_t i) { hits[i].fetch_add(1); });
  unsetenv("SLEMC_THREADS");
  for (std::size_t i = 0; i < n; ++i) CHECK(hits[i].load() == 1);
  std::vector<int> serial(n, 0);
  slemc::parallel_paths(n, [&](std::size_t i) { serial[i] += 1; });
  for (std::size_t i = 0; i < n; ++i) CHECK(serial[i] == 1);
}
