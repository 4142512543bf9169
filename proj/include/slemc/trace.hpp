#pragma once

#include <complex>
#include <vector>

#include "slemc/flow.hpp"
#include "slemc/params.hpp"

namespace slemc {

// Approximate trace tip path reconstructed from a recorded driver via
// backward composition of elementary slit maps.
struct TraceApprox {
  std::vector<double> t;
  std::vector<std::complex<double>> tip;
};

// Driver values U_k at step starts (U_0 = 0, U_{k+1} = U_k - dB_k).
std::vector<double> driver_values(const DriverRecord& record);

// Tip after the first n_steps recorded steps: backward composition of the
// per-step inverse w -> U_k + sqrt((w - U_k)^2 - 2 a dt_k), upper-half-plane
// branch, seeded at the terminal driver value (+ i*1e-15 to settle the
// branch at exact-real intermediates).
std::complex<double> tip_at(const DriverRecord& record, std::size_t n_steps,
                            const SleParams& params);

// Tips at <= max_tips times spread evenly over the recorded steps.
TraceApprox sample_trace(const DriverRecord& record, const SleParams& params,
                         std::size_t max_tips = 512);

struct KoebeSample {
  double dist = 0.0;       // to sampled tips up to t and the dead real segment
  double conformal = 0.0;  // 4 h_t(x) / h_t'(x)
  double ratio = 0.0;      // dist / conformal; the lemma bounds this by 1
  double slack = 0.0;      // 2 * max inter-tip gap / conformal
};

// Koebe distance check for an alive point x with flow values (h, log_hp) at
// time t, against the trace sampled up to t. dead_x_max is the rightmost
// swallowed grid point (NaN if none): the real segment up to it belongs to
// the hull, which prevents false violations from sparse tip sampling.
KoebeSample koebe_check(double x, double h, double log_hp, double t,
                        const TraceApprox& trace, double dead_x_max);

}  // namespace slemc
