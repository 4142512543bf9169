#if defined(__aarch64__)

#include <arm_neon.h>

#include <limits>

#include "slemc/kernels.hpp"

namespace slemc {
namespace {

double flow_step_neon(double* h, double* log_hp, std::size_t n, double c,
                      double dt, double db) {
  const double s = dt / c;
  const float64x2_t vc = vdupq_n_f64(c);
  const float64x2_t vdt = vdupq_n_f64(dt);
  const float64x2_t vdb = vdupq_n_f64(db);
  const float64x2_t vs = vdupq_n_f64(s);
  float64x2_t vmin = vdupq_n_f64(std::numeric_limits<double>::infinity());
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t vh = vld1q_f64(h + i);
    const float64x2_t vr = vdivq_f64(vc, vh);
    const float64x2_t vhn = vaddq_f64(vaddq_f64(vh, vmulq_f64(vr, vdt)), vdb);
    const float64x2_t vl = vld1q_f64(log_hp + i);
    vst1q_f64(log_hp + i, vsubq_f64(vl, vmulq_f64(vmulq_f64(vr, vr), vs)));
    vst1q_f64(h + i, vhn);
    vmin = vminq_f64(vmin, vhn);
  }
  double m = vgetq_lane_f64(vmin, 0);
  const double m1 = vgetq_lane_f64(vmin, 1);
  m = m1 < m ? m1 : m;
  for (; i < n; ++i) {
    const double r = c / h[i];
    const double hn = h[i] + r * dt + db;
    log_hp[i] -= r * r * s;
    h[i] = hn;
    m = hn < m ? hn : m;
  }
  return m;
}

double bessel_step_neon(double* h, std::size_t n, double c, double dt,
                        double db) {
  const float64x2_t vc = vdupq_n_f64(c);
  const float64x2_t vdt = vdupq_n_f64(dt);
  const float64x2_t vdb = vdupq_n_f64(db);
  float64x2_t vmin = vdupq_n_f64(std::numeric_limits<double>::infinity());
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t vh = vld1q_f64(h + i);
    const float64x2_t vr = vdivq_f64(vc, vh);
    const float64x2_t vhn = vaddq_f64(vaddq_f64(vh, vmulq_f64(vr, vdt)), vdb);
    vst1q_f64(h + i, vhn);
    vmin = vminq_f64(vmin, vhn);
  }
  double m = vgetq_lane_f64(vmin, 0);
  const double m1 = vgetq_lane_f64(vmin, 1);
  m = m1 < m ? m1 : m;
  for (; i < n; ++i) {
    const double r = c / h[i];
    const double hn = h[i] + r * dt + db;
    h[i] = hn;
    m = hn < m ? hn : m;
  }
  return m;
}

}  // namespace

const StepKernel& neon_kernel() {
  static const StepKernel k{"neon", flow_step_neon, bessel_step_neon};
  return k;
}

}  // namespace slemc

#endif
