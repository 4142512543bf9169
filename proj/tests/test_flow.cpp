#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "slemc/flow.hpp"
#include "slemc/specfun.hpp"

using slemc::DriverRecord;
using slemc::DriverStep;
using slemc::FlowConfig;
using slemc::FlowRunSpec;
using slemc::FlowState;
using slemc::IndexRange;
using slemc::PathResult;
using slemc::SleParams;

namespace {

DriverRecord zero_noise(int n_steps, double dt) {
  DriverRecord drv;
  drv.replay = true;
  drv.steps.assign(static_cast<std::size_t>(n_steps), DriverStep{dt, 0.0});
  return drv;
}

}  // namespace

TEST_CASE("zero-noise flow matches the deterministic closed form") {
  const SleParams p = SleParams::derive(6.0);
  FlowConfig cfg;
  cfg.t_max = 2.0;
  FlowRunSpec spec;
  spec.xs = {1.0, 2.0};
  spec.obs_times = {0.25, 1.0};
  const PathResult res = run_flow(p, cfg, spec, zero_noise(10000, 1e-4));
  REQUIRE(res.snapshots.size() == 2);
  CHECK(res.alive_count == 2);
  for (const FlowState& st : res.snapshots) {
    const double t = st.t;
    for (std::size_t i = 0; i < spec.xs.size(); ++i) {
      const double x = spec.xs[i];
      // without noise: h^2 = x^2 + 2 a t and h' = (1 + 2 a t / x^2)^{-1/2}
      const double h_exact = std::sqrt(x * x + 2.0 * p.a * t);
      const double lp_exact = -0.5 * std::log1p(2.0 * p.a * t / (x * x));
      CHECK(st.h[i] == doctest::Approx(h_exact).epsilon(1e-4));
      CHECK(st.log_hp[i] == doctest::Approx(lp_exact).epsilon(1e-3));
      // M = (h'/h)^beta = (x / (x^2 + 2 a t))^beta along this trajectory
      const double m = std::exp(p.beta * (st.log_hp[i] - std::log(st.h[i])));
      const double m_exact = std::pow(x / (x * x + 2.0 * p.a * t), p.beta);
      CHECK(m == doctest::Approx(m_exact).epsilon(1e-3));
    }
  }
}

TEST_CASE("recorded driver replays bit for bit") {
  const SleParams p = SleParams::derive(5.0);
  FlowConfig cfg;
  cfg.t_max = 3.0;
  FlowRunSpec spec;
  spec.xs = {0.3, 0.8, 1.0, 1.7};
  spec.obs_times = {0.5, 1.5, 3.0};
  spec.eps_ladder = {0.2, 0.1};
  spec.record_driver = true;

  DriverRecord drv;
  drv.seed = 20260823ULL;
  drv.path_id = 11;
  const PathResult a = run_flow(p, cfg, spec, drv);

  FlowRunSpec spec2 = spec;
  spec2.record_driver = false;
  DriverRecord replay = a.driver;
  replay.replay = true;
  const PathResult b = run_flow(p, cfg, spec2, replay);

  REQUIRE(a.snapshots.size() == b.snapshots.size());
  for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
    const FlowState& sa = a.snapshots[k];
    const FlowState& sb = b.snapshots[k];
    CHECK(sa.alive_begin == sb.alive_begin);
    CHECK(std::memcmp(sa.h.data(), sb.h.data(), sa.h.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(sa.log_hp.data(), sb.log_hp.data(),
                      sa.log_hp.size() * sizeof(double)) == 0);
  }
  CHECK(a.swallow_time == b.swallow_time);
  CHECK(a.t_cross == b.t_cross);
  CHECK(a.alive_count == b.alive_count);
}

TEST_CASE("restarted flow agrees with the direct run bit for bit") {
  const SleParams p = SleParams::derive(6.0);
  FlowConfig cfg;
  cfg.t_max = 4.0;
  FlowRunSpec spec;
  spec.xs = {0.5, 1.0, 1.5, 2.0};
  spec.obs_times = {1.0, 1e9};  // snapshot at s = 1 and the final state
  spec.record_driver = true;

  DriverRecord drv;
  drv.seed = 314159ULL;
  drv.path_id = 4;
  const PathResult direct = run_flow(p, cfg, spec, drv);
  REQUIRE(direct.snapshots.size() == 2);
  const FlowState& mid = direct.snapshots[0];
  const FlowState& fin = direct.snapshots[1];
  REQUIRE(mid.alive_begin < spec.xs.size());

  const PathResult re = slemc::restart_flow(p, cfg, mid, spec, direct.driver,
                                            mid.step, {1e9});
  REQUIRE(re.snapshots.size() == 1);
  const FlowState& rf = re.snapshots[0];
  const std::size_t n_alive_at_mid = spec.xs.size() - mid.alive_begin;
  REQUIRE(rf.h.size() == n_alive_at_mid);

  // identical per-element arithmetic: h values agree exactly
  for (std::size_t i = 0; i < n_alive_at_mid; ++i)
    CHECK(rf.h[i] == fin.h[mid.alive_begin + i]);
  // the same points are dead in both runs
  CHECK(rf.alive_begin + mid.alive_begin == fin.alive_begin);
  // log h' accumulates the same decrements from a different base value
  for (std::size_t i = rf.alive_begin; i < n_alive_at_mid; ++i) {
    const double expect = fin.log_hp[mid.alive_begin + i] -
                          mid.log_hp[mid.alive_begin + i];
    CHECK(rf.log_hp[i] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("grid ordering and derivative contraction hold along paths") {
  const SleParams p = SleParams::derive(7.0);
  FlowConfig cfg;
  cfg.t_max = 2.0;
  FlowRunSpec spec;
  spec.xs = {0.2, 0.4, 0.7, 1.0, 1.3, 1.9, 2.5, 3.0};
  spec.obs_times = {0.1, 0.3, 0.7, 1.2, 2.0};
  for (std::uint64_t pid = 0; pid < 20; ++pid) {
    DriverRecord drv;
    drv.seed = 88ULL;
    drv.path_id = pid;
    const PathResult res = run_flow(p, cfg, spec, drv);
    std::size_t prev_ab = 0;
    std::vector<double> prev_lp(spec.xs.size(), 0.0);
    for (const FlowState& st : res.snapshots) {
      CHECK(st.alive_begin >= prev_ab);
      prev_ab = st.alive_begin;
      for (std::size_t i = st.alive_begin; i < st.h.size(); ++i) {
        if (i > st.alive_begin) CHECK(st.h[i] > st.h[i - 1]);
        CHECK(st.log_hp[i] <= 0.0);
        CHECK(st.log_hp[i] <= prev_lp[i]);
        prev_lp[i] = st.log_hp[i];
      }
    }
  }
}

TEST_CASE("crossing times are ordered along the ladder and start at zero") {
  const SleParams p = SleParams::derive(6.0);
  FlowConfig cfg;
  cfg.t_max = 50.0;
  FlowRunSpec spec;
  spec.xs = {0.05, 1.0};
  spec.eps_ladder = {0.2, 0.1, 0.05};
  for (std::uint64_t pid = 0; pid < 10; ++pid) {
    DriverRecord drv;
    drv.seed = 5151ULL;
    drv.path_id = pid;
    const PathResult res = run_flow(p, cfg, spec, drv);
    // x = 0.05 starts at or below every ladder level
    CHECK(res.t_cross[0][0] == 0.0);
    CHECK(res.t_cross[1][0] == 0.0);
    CHECK(res.t_cross[2][0] == 0.0);
    for (std::size_t i = 0; i < spec.xs.size(); ++i) {
      CHECK(res.t_cross[0][i] <= res.t_cross[1][i]);
      CHECK(res.t_cross[1][i] <= res.t_cross[2][i]);
      // any crossing that did happen precedes the swallowing time (a point
      // may die uncrossed when the derivative has decayed past the kill level)
      for (std::size_t j = 0; j < 3; ++j)
        if (std::isfinite(res.t_cross[j][i]))
          CHECK(res.t_cross[j][i] <= res.swallow_time[i]);
    }
  }
}

TEST_CASE("survival probability of a single point matches the closed form") {
  const SleParams p = SleParams::derive(6.0);
  FlowConfig cfg;
  cfg.t_max = 2.0;
  FlowRunSpec spec;
  spec.xs = {1.0};
  spec.want_snapshots = false;
  const int n = 1500;
  int alive = 0;
  for (int pid = 0; pid < n; ++pid) {
    DriverRecord drv;
    drv.seed = 900ULL;
    drv.path_id = static_cast<std::uint64_t>(pid);
    const PathResult res = run_flow(p, cfg, spec, drv);
    if (res.alive_count == 1) ++alive;
  }
  // under the unweighted flow x^2 / (2 T_x) has the Gamma(1/2 - a) law
  const double want = slemc::reg_lower_gamma(0.5 - p.a, 1.0 / (2.0 * 2.0));
  CHECK(static_cast<double>(alive) / n == doctest::Approx(want).epsilon(0.05));
}

TEST_CASE("swallowing time distribution passes a KS check") {
  const SleParams p = SleParams::derive(6.0);
  FlowConfig cfg;
  cfg.dt_max = 1.0;  // adaptive step keeps accuracy; large cap speeds survivors
  cfg.t_max = 10000.0;
  FlowRunSpec spec;
  spec.xs = {1.0};
  spec.want_snapshots = false;
  const int n = 600;
  std::vector<double> u;  // model CDF evaluated at observed death times
  int censored = 0;
  for (int pid = 0; pid < n; ++pid) {
    DriverRecord drv;
    drv.seed = 901ULL;
    drv.path_id = static_cast<std::uint64_t>(pid);
    const PathResult res = run_flow(p, cfg, spec, drv);
    if (!std::isfinite(res.swallow_time[0])) {
      ++censored;
      continue;
    }
    const double shape = 0.5 - p.a;  // x^2/(2 T) ~ Gamma(1/2 - a)
    u.push_back(1.0 - slemc::reg_lower_gamma(shape, 1.0 / (2.0 * res.swallow_time[0])));
  }
  // the tail is heavy (t^{a - 1/2}); censored paths should match its mass:
  // T > t means the Gamma variable x^2/(2T) fell below x^2/(2t)
  const double tail = slemc::reg_lower_gamma(0.5 - p.a, 1.0 / (2.0 * cfg.t_max));
  CHECK(static_cast<double>(censored) / n == doctest::Approx(tail).epsilon(0.25));
  // KS over the uncensored region; censored points all lie above F(t_max)
  std::sort(u.begin(), u.end());
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    d = std::max(d, std::abs((i + 1.0) / n - u[i]));
    d = std::max(d, std::abs(static_cast<double>(i) / n - u[i]));
  }
  CHECK(d < 0.08);  // 1.36/sqrt(600) = 0.056 plus discretization slack
}

TEST_CASE("nearby points are often swallowed in the same step") {
  const SleParams p = SleParams::derive(6.0);
  FlowConfig cfg;
  cfg.dt_max = 1.0;
  cfg.t_max = 2000.0;
  FlowRunSpec spec;
  spec.xs = {1.0, 1.03};
  spec.want_snapshots = false;
  const int n = 300;
  int together = 0;
  for (int pid = 0; pid < n; ++pid) {
    DriverRecord drv;
    drv.seed = 902ULL;
    drv.path_id = static_cast<std::uint64_t>(pid);
    const PathResult res = run_flow(p, cfg, spec, drv);
    if (std::isfinite(res.swallow_time[0]) &&
        res.swallow_time[0] == res.swallow_time[1])
      ++together;
  }
  CHECK(together > n / 20);
}

TEST_CASE("compute_Y reads the leftmost alive point") {
  FlowState st;
  st.h = {0.1, 0.4, 0.9, 1.5};
  st.log_hp = {0, 0, 0, 0};
  st.alive_begin = 1;
  CHECK(slemc::compute_Y(st, IndexRange{0, 4}) == 0.4);
  CHECK(slemc::compute_Y(st, IndexRange{2, 4}) == 0.9);
  CHECK(slemc::compute_Y(st, IndexRange{0, 1}) == 0.0);  // fully dead range
  st.alive_begin = 4;
  CHECK(slemc::compute_Y(st, IndexRange{0, 4}) == 0.0);
  CHECK_THROWS_AS(slemc::compute_Y(st, IndexRange{3, 3}), slemc::domain_error);
}

TEST_CASE("crossing_times alternates eps downcrossings and 2eps upcrossings") {
  const double eps = 0.5;
  const std::vector<double> t{0, 1, 2, 3, 4, 5, 6, 7};
  const std::vector<double> y{2.0, 0.4, 0.8, 1.2, 0.9, 0.3, 0.9, 0.0};
  // tau_1 = 1 (y <= eps), tau_2 = 3 (y > 2 eps), tau_3 = 5 (y <= eps);
  // y never again exceeds 2 eps before dying
  const std::vector<double> taus = slemc::crossing_times(t, y, eps);
  REQUIRE(taus.size() == 3);
  CHECK(taus[0] == 1.0);
  CHECK(taus[1] == 3.0);
  CHECK(taus[2] == 5.0);

  // a monotone decrease from 3 eps to 0 yields exactly one crossing
  const std::vector<double> t2{0, 1, 2, 3};
  const std::vector<double> y2{1.5, 0.9, 0.45, 0.0};
  const std::vector<double> taus2 = slemc::crossing_times(t2, y2, eps);
  REQUIRE(taus2.size() == 1);
  CHECK(taus2[0] == 2.0);
}

TEST_CASE("Y tracking accumulates consistent window statistics") {
  const SleParams p = SleParams::derive(6.0);
  FlowConfig cfg;
  cfg.t_max = 40.0;
  FlowRunSpec spec;
  spec.xs = {0.5, 0.75, 1.0, 1.25, 1.5};
  spec.eps_ladder = {0.1};
  spec.quad_w.assign(5, 0.25);
  slemc::YTrackSpec yt;
  yt.range = IndexRange{1, 4};
  yt.eps_y = 0.15;
  yt.eps_idx = 0;
  yt.record_x = true;
  spec.y_tracks.push_back(yt);
  for (std::uint64_t pid = 0; pid < 15; ++pid) {
    DriverRecord drv;
    drv.seed = 903ULL;
    drv.path_id = pid;
    const PathResult res = run_flow(p, cfg, spec, drv);
    REQUIRE(res.y_tracks.size() == 1);
    const slemc::YTrackResult& yr = res.y_tracks[0];
    for (std::size_t k = 1; k < yr.taus.size(); ++k)
      CHECK(yr.taus[k] > yr.taus[k - 1]);
    CHECK(yr.steps_down_cross <= yr.steps_down);
    CHECK(yr.deaths_down <= yr.steps_down);
    CHECK(yr.x_at_tau.size() == yr.taus.size());
    // in-range ladder crossings and deaths can only occur inside a
    // downcrossing window: the window opens before Y can reach eps-scale
    if (yr.steps_down == 0) {
      CHECK(yr.steps_down_cross == 0);
      CHECK(yr.deaths_down == 0);
    }
    CHECK(yr.hit_proxy == std::isfinite(yr.t_first_hit));
    if (yr.hit_proxy && yt.record_x) CHECK(yr.x_at_first_hit >= 0.0);
  }
}

TEST_CASE("q-process survival matches the closed form") {
  const SleParams p = SleParams::derive(5.0);
  FlowConfig cfg;
  const int n = 2000;
  int survived = 0;
  for (int pid = 0; pid < n; ++pid) {
    const slemc::QProcessResult r = slemc::simulate_q_process(
        p, 1.0, 0.5, cfg, 904ULL, static_cast<std::uint64_t>(pid));
    if (r.survived) ++survived;
  }
  const double want = slemc::reg_lower_gamma(p.nu, 1.0 / (2.0 * 0.5));
  CHECK(static_cast<double>(survived) / n == doctest::Approx(want).epsilon(0.05));
}

TEST_CASE("flow spec validation rejects malformed input") {
  const SleParams p = SleParams::derive(6.0);
  FlowConfig cfg;
  DriverRecord drv;
  FlowRunSpec s1;  // empty grid
  CHECK_THROWS_AS(run_flow(p, cfg, s1, drv), slemc::domain_error);
  FlowRunSpec s2;
  s2.xs = {1.0, 0.5};  // not increasing
  CHECK_THROWS_AS(run_flow(p, cfg, s2, drv), slemc::domain_error);
  FlowRunSpec s3;
  s3.xs = {1.0};
  s3.eps_ladder = {0.1, 0.2};  // not decreasing
  CHECK_THROWS_AS(run_flow(p, cfg, s3, drv), slemc::domain_error);
  FlowRunSpec s4;
  s4.xs = {1.0};
  slemc::YTrackSpec yt;
  yt.range = IndexRange{0, 2};  // out of range
  yt.eps_y = 0.1;
  s4.y_tracks.push_back(yt);
  CHECK_THROWS_AS(run_flow(p, cfg, s4, drv), slemc::domain_error);
  FlowConfig bad;
  bad.dt_scale = 0.0;
  FlowRunSpec ok;
  ok.xs = {1.0};
  CHECK_THROWS_AS(run_flow(p, bad, ok, drv), slemc::domain_error);
}

TEST_CASE("stop_h records the state at the first dip below the threshold") {
  const SleParams p = SleParams::derive(6.0);
  FlowConfig cfg;
  cfg.t_max = 10.0;
  FlowRunSpec spec;
  spec.xs = {0.5, 1.5};
  spec.want_snapshots = false;
  spec.stop_h = 0.3;

  // zero noise: h grows, the threshold is never reached
  PathResult grow = run_flow(p, cfg, spec, zero_noise(2000, 1e-3));
  CHECK(!grow.has_stop_state);

  // steady negative driver pushes the left point down through the threshold
  DriverRecord down;
  down.replay = true;
  down.steps.assign(2000, DriverStep{1e-3, -0.02});
  PathResult res = run_flow(p, cfg, spec, down);
  REQUIRE(res.has_stop_state);
  CHECK(res.stop_state.alive_begin == 0);
  CHECK(res.stop_state.h[0] < 0.3);
  CHECK(res.stop_state.t > 0.0);
  CHECK(res.stop_state.h[0] > 0.3 - 3.0 * 0.02);  // one-step overshoot bound
}

TEST_CASE("hitting vs swallowing oracle selects the right-endpoint convention") {
  // P(T_x strictly before T_y) equals F((y-x)/y): the ratio h_x/h_y is a
  // diffusion whose scale function is the F integral, boundary 1 (simultaneous
  // swallowing) is inaccessible and boundary 0 (strict ordering) accessible.
  // Estimated by optional stopping: score F(1 - h_x/h_y) at the first step
  // where h_x < 0.2 (or at t_max), which avoids the kill-threshold regime.
  const SleParams p = SleParams::derive(6.0);
  const double x = 1.0, y = 1.4;
  FlowConfig cfg;
  cfg.dt_max = 1.0;
  cfg.dt_scale = 0.01;
  cfg.t_max = 2000.0;
  FlowRunSpec spec;
  spec.xs = {x, y};
  spec.obs_times = {1e18};
  spec.stop_h = 0.2;
  const int n = 1200;
  double sum = 0.0, sum2 = 0.0;
  for (int pid = 0; pid < n; ++pid) {
    DriverRecord drv;
    drv.seed = 4242ULL;
    drv.path_id = static_cast<std::uint64_t>(pid);
    const PathResult res = run_flow(p, cfg, spec, drv);
    const FlowState& st = res.has_stop_state ? res.stop_state
                                             : res.snapshots.back();
    double v;
    if (st.alive_begin >= 2) v = 0.0;        // simultaneous kill (never seen)
    else if (st.alive_begin == 1) v = 1.0;   // left died with right alive
    else v = slemc::hitting_probability(p, 1.0 - st.h[0] / st.h[1]);
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / n);
  const double f_right =
      slemc::interval_hit_probability(p, x, y, slemc::HitArg::RatioToRight);
  const double f_left =
      slemc::interval_hit_probability(p, x, y, slemc::HitArg::RatioToLeft);
  CHECK(std::abs(mean - f_right) < 3.0 * se + 0.01);
  // the left convention is distinguishable at this separation
  CHECK(std::abs(mean - f_right) < std::abs(mean - f_left));
}
