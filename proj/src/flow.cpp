#include "slemc/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "slemc/kernels.hpp"

namespace slemc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double m_value(double log_hp, double h, double beta) {
  return std::exp(beta * (log_hp - std::log(h)));
}

// Quadrature of M_t over the alive points of a range (dead points carry no
// mass in the unstopped field).
double quad_x(const std::vector<double>& w, const std::vector<double>& h,
              const std::vector<double>& log_hp, std::size_t alive_begin,
              const IndexRange& r, double beta) {
  double s = 0.0;
  for (std::size_t i = std::max(r.lo, alive_begin); i < r.hi; ++i)
    s += w[i] * m_value(log_hp[i], h[i], beta);
  return s;
}

struct YTracker {
  YTrackSpec spec;
  YTrackResult res;
  int state = 0;      // 0: downcrossing window, 1: waiting for Y > 2 eps
  bool done = false;  // Y reached 0 (range fully dead)
  bool cross_flag = false;  // a ladder crossing in range this step
};

void validate_spec(const FlowRunSpec& spec) {
  if (spec.xs.empty()) throw domain_error("empty point grid");
  for (std::size_t i = 0; i < spec.xs.size(); ++i) {
    if (!(spec.xs[i] > 0.0)) throw domain_error("grid points must be positive");
    if (i > 0 && !(spec.xs[i] > spec.xs[i - 1]))
      throw domain_error("grid points must be strictly increasing");
  }
  for (std::size_t j = 1; j < spec.eps_ladder.size(); ++j)
    if (!(spec.eps_ladder[j] < spec.eps_ladder[j - 1]))
      throw domain_error("eps ladder must be strictly decreasing");
  for (const auto& yt : spec.y_tracks) {
    if (yt.range.lo >= yt.range.hi || yt.range.hi > spec.xs.size())
      throw domain_error("empty Y tracking range");
    if (!(yt.eps_y > 0.0)) throw domain_error("Y tracking needs eps_y > 0");
    if (yt.eps_idx >= static_cast<int>(spec.eps_ladder.size()))
      throw domain_error("Y tracking eps index out of range");
    if (yt.record_x && spec.quad_w.size() != spec.xs.size())
      throw domain_error("X recording needs quadrature weights");
  }
}

}  // namespace

PathResult run_flow(const SleParams& params, const FlowConfig& config,
                    const FlowRunSpec& spec, const DriverRecord& driver) {
  config.validate();
  validate_spec(spec);

  const std::size_t n = spec.xs.size();
  const std::size_t n_eps = spec.eps_ladder.size();
  const double a = params.a;
  const double beta = params.beta;
  const double theta = config.resolved_kill_threshold(spec.xs.front());
  const double m_watch = spec.m_watch > 0.0 ? spec.m_watch : 64.0 * theta;
  const double scan_cap =
      std::max(m_watch, n_eps != 0 ? spec.eps_ladder.front() : 0.0);

  PathResult out;
  out.swallow_time.assign(n, kInf);
  out.last_alive_m.assign(n, 0.0);
  out.t_cross.assign(n_eps, std::vector<double>(n, kInf));
  out.driver.seed = driver.seed;
  out.driver.path_id = driver.path_id;

  std::vector<double> h = spec.xs;
  std::vector<double> log_hp(n, 0.0);
  std::size_t ab = 0;  // alive_begin
  double t = 0.0;

  // Crossing state per point: the next uncrossed ladder level, and a cached
  // upper bound eps * h' evaluated at some past step. h' only decreases, so
  // the stale bound can never hide a crossing, only trigger a refresh.
  std::vector<int> next_eps(n, 0);
  std::vector<double> cross_bound(n, -kInf);
  for (std::size_t i = 0; i < n; ++i) {
    out.last_alive_m[i] = std::pow(spec.xs[i], -beta);
    int j = 0;
    while (j < static_cast<int>(n_eps) && h[i] <= spec.eps_ladder[j]) {
      out.t_cross[j][i] = 0.0;
      ++j;
    }
    next_eps[i] = j;
    if (j < static_cast<int>(n_eps)) cross_bound[i] = spec.eps_ladder[j];
  }

  std::vector<YTracker> trackers;
  trackers.reserve(spec.y_tracks.size());
  for (const auto& yt : spec.y_tracks) {
    YTracker tr;
    tr.spec = yt;
    const double y0 = h[yt.range.lo];
    if (y0 <= yt.eps_y) {
      tr.res.taus.push_back(0.0);
      if (yt.record_x)
        tr.res.x_at_tau.push_back(quad_x(spec.quad_w, h, log_hp, ab, yt.range, beta));
      tr.state = 1;
    }
    trackers.push_back(std::move(tr));
  }

  std::size_t obs_ptr = 0;
  auto take_snapshots = [&]() {
    while (obs_ptr < spec.obs_times.size() && t >= spec.obs_times[obs_ptr]) {
      if (spec.want_snapshots) out.snapshots.push_back(FlowState{t, h, log_hp, ab, out.n_steps});
      ++obs_ptr;
    }
  };
  take_snapshots();

  Philox rng(driver.seed, driver.path_id);
  const StepKernel& kernel = active_kernel();
  std::size_t replay_ptr = 0;

  while (ab < n && t < config.t_max) {
    double dt, db;
    if (driver.replay) {
      if (replay_ptr >= driver.steps.size()) break;
      dt = driver.steps[replay_ptr].dt;
      db = driver.steps[replay_ptr].db;
      ++replay_ptr;
    } else {
      const double hm = h[ab];
      dt = std::min(config.dt_max, config.dt_scale * hm * hm);
      db = std::sqrt(dt) * rng.next_normal();
    }
    const double min_h = kernel.flow_step(h.data() + ab, log_hp.data() + ab,
                                          n - ab, a, dt, db);
    t += dt;
    if (++out.n_steps > config.max_steps)
      throw FlowError("step budget exhausted before t_max");
    if (spec.record_driver) out.driver.steps.push_back(DriverStep{dt, db});

    // Swallowed points form a prefix of the alive span because the Euler map
    // is order preserving at these step sizes; anything else is an
    // integration failure.
    const std::size_t old_ab = ab;
    while (ab < n && h[ab] <= theta) {
      out.swallow_time[ab] = t;
      ++ab;
    }
    if (min_h <= theta) {
      for (std::size_t i = ab; i < n; ++i)
        if (h[i] <= theta)
          throw FlowError("grid ordering violated at step " +
                          std::to_string(out.n_steps) + " (t=" +
                          std::to_string(t) + "); reduce dt_scale");
    }

    if (spec.stop_h > 0.0 && !out.has_stop_state &&
        (ab > 0 || h[0] < spec.stop_h)) {
      out.stop_state = FlowState{t, h, log_hp, ab, out.n_steps};
      out.has_stop_state = true;
    }

    for (auto& tr : trackers) tr.cross_flag = false;
    for (std::size_t i = ab; i < n && h[i] <= scan_cap; ++i) {
      const bool want_cross = next_eps[i] < static_cast<int>(n_eps) &&
                              h[i] <= cross_bound[i];
      const bool want_watch = h[i] < m_watch;
      if (!want_cross && !want_watch) continue;
      const double hp = std::exp(log_hp[i]);
      if (want_watch) out.last_alive_m[i] = m_value(log_hp[i], h[i], beta);
      if (want_cross) {
        int j = next_eps[i];
        while (j < static_cast<int>(n_eps) && h[i] <= spec.eps_ladder[j] * hp) {
          out.t_cross[j][i] = t;
          for (auto& tr : trackers)
            if (tr.spec.eps_idx == j && tr.spec.range.lo <= i &&
                i < tr.spec.range.hi)
              tr.cross_flag = true;
          ++j;
        }
        next_eps[i] = j;
        cross_bound[i] =
            j < static_cast<int>(n_eps) ? spec.eps_ladder[j] * hp : -kInf;
      }
    }

    for (auto& tr : trackers) {
      if (tr.done) continue;
      const IndexRange& r = tr.spec.range;
      const bool death_in_range = old_ab < r.hi && ab > std::max(old_ab, r.lo);
      if (tr.state == 0) {
        ++tr.res.steps_down;
        if (tr.cross_flag) ++tr.res.steps_down_cross;
        if (death_in_range) ++tr.res.deaths_down;
      }
      if (death_in_range && ab < r.hi && !tr.res.hit_proxy) {
        tr.res.hit_proxy = true;
        tr.res.t_first_hit = t;
        if (tr.spec.record_x)
          tr.res.x_at_first_hit = quad_x(spec.quad_w, h, log_hp, ab, r, beta);
      }
      const std::size_t lo = std::max(r.lo, ab);
      const double y = lo < r.hi ? h[lo] : 0.0;
      if (y == 0.0) {
        tr.done = true;
      } else if (tr.state == 0 && y <= tr.spec.eps_y) {
        tr.res.taus.push_back(t);
        if (tr.spec.record_x)
          tr.res.x_at_tau.push_back(quad_x(spec.quad_w, h, log_hp, ab, r, beta));
        tr.state = 1;
      } else if (tr.state == 1 && y > 2.0 * tr.spec.eps_y) {
        tr.res.taus.push_back(t);
        if (tr.spec.record_x)
          tr.res.x_at_tau.push_back(quad_x(spec.quad_w, h, log_hp, ab, r, beta));
        tr.state = 0;
      }
    }

    take_snapshots();
  }

  // Late observation times see the final state.
  while (obs_ptr < spec.obs_times.size()) {
    if (spec.want_snapshots) out.snapshots.push_back(FlowState{t, h, log_hp, ab, out.n_steps});
    ++obs_ptr;
  }

  out.t_end = t;
  out.alive_count = n - ab;
  for (auto& tr : trackers) out.y_tracks.push_back(std::move(tr.res));
  if (!spec.record_driver && driver.replay) out.driver = driver;
  return out;
}

PathResult restart_flow(const SleParams& params, const FlowConfig& config,
                        const FlowState& state, const FlowRunSpec& base_spec,
                        const DriverRecord& full_record, std::size_t step_offset,
                        const std::vector<double>& obs_s) {
  if (step_offset > full_record.steps.size())
    throw domain_error("restart offset beyond recorded driver");
  FlowRunSpec spec;
  spec.xs.assign(state.h.begin() + static_cast<std::ptrdiff_t>(state.alive_begin),
                 state.h.end());
  spec.obs_times = obs_s;
  spec.want_snapshots = true;

  FlowConfig cfg = config;
  // Keep the original kill level: it is defined by the initial grid, not by
  // the restarted one.
  cfg.kill_threshold = config.resolved_kill_threshold(base_spec.xs.front());

  DriverRecord tail;
  tail.seed = full_record.seed;
  tail.path_id = full_record.path_id;
  tail.replay = true;
  tail.steps.assign(full_record.steps.begin() +
                        static_cast<std::ptrdiff_t>(step_offset),
                    full_record.steps.end());
  return run_flow(params, cfg, spec, tail);
}

double compute_Y(const FlowState& state, const IndexRange& range) {
  if (range.lo >= range.hi || range.hi > state.h.size())
    throw domain_error("empty Y range");
  double y = kInf;
  for (std::size_t i = std::max(range.lo, state.alive_begin); i < range.hi; ++i)
    y = std::min(y, state.h[i]);
  return std::isfinite(y) ? y : 0.0;
}

std::vector<double> crossing_times(const std::vector<double>& t,
                                   const std::vector<double>& y, double eps) {
  if (t.size() != y.size()) throw domain_error("mismatched Y path arrays");
  if (!(eps > 0.0)) throw domain_error("eps must be positive");
  std::vector<double> taus;
  int state = 0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (state == 0 && y[k] <= eps) {
      taus.push_back(t[k]);
      state = 1;
    } else if (state == 1 && y[k] > 2.0 * eps) {
      taus.push_back(t[k]);
      state = 0;
    }
    if (y[k] == 0.0) break;
  }
  return taus;
}

QProcessResult simulate_q_process(const SleParams& params, double x, double t,
                                  const FlowConfig& config, std::uint64_t seed,
                                  std::uint64_t path_id) {
  if (!(x > 0.0) || !(t > 0.0)) throw domain_error("need x > 0 and t > 0");
  config.validate();
  const double c = 1.0 - 3.0 * params.a;
  const double theta = config.resolved_kill_threshold(x);
  const StepKernel& kernel = active_kernel();
  Philox rng(seed, path_id);
  double h = x;
  double s = 0.0;
  std::uint64_t steps = 0;
  while (s < t) {
    const double dt = std::min(config.dt_max, config.dt_scale * h * h);
    const double db = std::sqrt(dt) * rng.next_normal();
    kernel.bessel_step(&h, 1, c, dt, db);
    s += dt;
    if (h <= theta) return QProcessResult{false, s};
    if (++steps > config.max_steps)
      throw FlowError("step budget exhausted in q-process");
  }
  return QProcessResult{true, s};
}

}  // namespace slemc
