#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "slemc/params.hpp"
#include "slemc/rng.hpp"

namespace slemc {

struct FlowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FlowConfig {
  double dt_max = 1e-2;
  double dt_scale = 1e-2;       // dt = min(dt_max, dt_scale * h_min^2)
  double kill_threshold = 0.0;  // 0 -> 1e-6 * min(xs)
  double t_max = 100.0;
  std::uint64_t max_steps = 400000000;

  void validate() const {
    if (!(dt_max > 0.0) || !(dt_scale > 0.0 && dt_scale <= 0.1) ||
        kill_threshold < 0.0 || !(t_max > 0.0))
      throw domain_error("invalid FlowConfig");
  }
  double resolved_kill_threshold(double x_min) const {
    return kill_threshold > 0.0 ? kill_threshold : 1e-6 * x_min;
  }
};

// One Euler step actually taken. Replaying a record reproduces the
// trajectory bit for bit.
struct DriverStep {
  double dt;
  double db;
};

struct DriverRecord {
  std::uint64_t seed = 0;
  std::uint64_t path_id = 0;
  bool replay = false;             // take (dt, db) from steps instead of RNG
  std::vector<DriverStep> steps;   // recorded steps (or the replay source)
};

// Snapshot of the coupled flow at one time.
struct FlowState {
  double t = 0.0;
  std::vector<double> h;        // current flow values (stale for dead points)
  std::vector<double> log_hp;   // log of the spatial derivative, <= 0
  std::size_t alive_begin = 0;  // points [alive_begin, n) are alive
  std::uint64_t step = 0;       // index into the driver record at this time
};

struct IndexRange {
  std::size_t lo = 0;
  std::size_t hi = 0;  // [lo, hi)
};

// Per-interval observation of the leftmost-point process Y and its
// eps -> 2eps crossing windows, accumulated during integration.
struct YTrackSpec {
  IndexRange range;
  double eps_y = 0.0;
  int eps_idx = -1;      // ladder level whose crossings are counted in-window
  bool record_x = false; // record quadrature of M over the range at events
};

struct YTrackResult {
  std::vector<double> taus;      // tau_1, tau_2, ... (tau_0 = 0 implicit)
  std::vector<double> x_at_tau;  // X(I) at each tau (when record_x)
  std::uint64_t steps_down = 0;        // steps inside downcrossing windows
  std::uint64_t steps_down_cross = 0;  // ... that saw a new eps-crossing in range
  std::uint64_t deaths_down = 0;       // ... that saw a swallowing in range
  bool hit_proxy = false;  // a point of the range died before its right end
  double t_first_hit = std::numeric_limits<double>::infinity();
  double x_at_first_hit = 0.0;  // X(I) at the hit-proxy step (when record_x)
};

struct FlowRunSpec {
  std::vector<double> xs;          // strictly increasing, all > 0
  std::vector<double> obs_times;   // sorted; snapshot = first step at/after t
  std::vector<double> eps_ladder;  // strictly decreasing; crossing thresholds
  std::vector<double> quad_w;      // per-point quadrature weights (optional)
  std::vector<YTrackSpec> y_tracks;
  bool record_driver = false;
  bool want_snapshots = true;
  double m_watch = 0.0;  // h level below which last-alive M is refreshed; 0 -> auto
  double stop_h = 0.0;   // > 0: record stop_state when point 0 first drops below
};

struct PathResult {
  double t_end = 0.0;
  std::uint64_t n_steps = 0;
  std::vector<double> swallow_time;           // inf while alive at t_end
  std::vector<double> last_alive_m;           // M at the last watched alive step
  std::vector<std::vector<double>> t_cross;   // [eps][point], inf if never
  std::vector<FlowState> snapshots;           // one per obs time
  std::vector<YTrackResult> y_tracks;
  DriverRecord driver;
  std::size_t alive_count = 0;
  FlowState stop_state;        // state at the stop_h trigger (see FlowRunSpec)
  bool has_stop_state = false;
};

PathResult run_flow(const SleParams& params, const FlowConfig& config,
                    const FlowRunSpec& spec, const DriverRecord& driver);

// Restarted flow h_{t,s} applied to the alive images of a snapshot, driven
// by the original record's continuation. Executes the identical arithmetic
// as the direct run, so the trajectories agree bit for bit.
PathResult restart_flow(const SleParams& params, const FlowConfig& config,
                        const FlowState& state, const FlowRunSpec& base_spec,
                        const DriverRecord& full_record, std::size_t step_offset,
                        const std::vector<double>& obs_s);

// Y_t(I): min of h over alive grid points of the range, 0 once the whole
// range is dead.
double compute_Y(const FlowState& state, const IndexRange& range);

// Alternating eps/2eps crossing times of a sampled Y path.
std::vector<double> crossing_times(const std::vector<double>& t,
                                   const std::vector<double>& y, double eps);

struct QProcessResult {
  bool survived;
  double t_end;
};

// Drifted process dh = (1-3a)/h dt + dW, absorbed at the kill threshold.
QProcessResult simulate_q_process(const SleParams& params, double x, double t,
                                  const FlowConfig& config, std::uint64_t seed,
                                  std::uint64_t path_id);

}  // namespace slemc
