#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <limits>

#include "slemc/kernels.hpp"

namespace slemc {
namespace {

// vdivpd / vmulpd / vaddpd are IEEE-exact per lane, so these loops reproduce
// the scalar kernel bit for bit. FMA is deliberately not used.

double flow_step_avx2(double* h, double* log_hp, std::size_t n, double c,
                      double dt, double db) {
  const double s = dt / c;
  const __m256d vc = _mm256_set1_pd(c);
  const __m256d vdt = _mm256_set1_pd(dt);
  const __m256d vdb = _mm256_set1_pd(db);
  const __m256d vs = _mm256_set1_pd(s);
  __m256d vmin = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vh = _mm256_loadu_pd(h + i);
    const __m256d vr = _mm256_div_pd(vc, vh);
    const __m256d vhn =
        _mm256_add_pd(_mm256_add_pd(vh, _mm256_mul_pd(vr, vdt)), vdb);
    const __m256d vl = _mm256_loadu_pd(log_hp + i);
    _mm256_storeu_pd(log_hp + i,
                     _mm256_sub_pd(vl, _mm256_mul_pd(_mm256_mul_pd(vr, vr), vs)));
    _mm256_storeu_pd(h + i, vhn);
    vmin = _mm256_min_pd(vmin, vhn);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, vmin);
  double m = lanes[0];
  for (int k = 1; k < 4; ++k) m = lanes[k] < m ? lanes[k] : m;
  for (; i < n; ++i) {
    const double r = c / h[i];
    const double hn = h[i] + r * dt + db;
    log_hp[i] -= r * r * s;
    h[i] = hn;
    m = hn < m ? hn : m;
  }
  return m;
}

double bessel_step_avx2(double* h, std::size_t n, double c, double dt,
                        double db) {
  const __m256d vc = _mm256_set1_pd(c);
  const __m256d vdt = _mm256_set1_pd(dt);
  const __m256d vdb = _mm256_set1_pd(db);
  __m256d vmin = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vh = _mm256_loadu_pd(h + i);
    const __m256d vr = _mm256_div_pd(vc, vh);
    const __m256d vhn =
        _mm256_add_pd(_mm256_add_pd(vh, _mm256_mul_pd(vr, vdt)), vdb);
    _mm256_storeu_pd(h + i, vhn);
    vmin = _mm256_min_pd(vmin, vhn);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, vmin);
  double m = lanes[0];
  for (int k = 1; k < 4; ++k) m = lanes[k] < m ? lanes[k] : m;
  for (; i < n; ++i) {
    const double r = c / h[i];
    const double hn = h[i] + r * dt + db;
    h[i] = hn;
    m = hn < m ? hn : m;
  }
  return m;
}

}  // namespace

bool avx2_available() { return __builtin_cpu_supports("avx2"); }

const StepKernel& avx2_kernel() {
  static const StepKernel k{"avx2", flow_step_avx2, bessel_step_avx2};
  return k;
}

}  // namespace slemc

#endif
