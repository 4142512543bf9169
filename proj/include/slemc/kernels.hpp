#pragma once

#include <cstddef>

namespace slemc {

// One shared-driver Euler step over a contiguous span of points:
//
//   r        = c / h[i]
//   h[i]    += r * dt + db          (same dt, db for every point)
//   log_hp[i] -= r * r * (dt / c)   (flow variant only)
//
// Both entry points return the minimum of the updated h over the span.
// Every variant performs the identical elementwise IEEE operations (no FMA
// contraction), so scalar and SIMD results agree bit for bit; the
// equivalence suite asserts this.
struct StepKernel {
  const char* name;
  double (*flow_step)(double* h, double* log_hp, std::size_t n, double c,
                      double dt, double db);
  double (*bessel_step)(double* h, std::size_t n, double c, double dt, double db);
};

const StepKernel& scalar_kernel();

#if defined(__x86_64__) || defined(_M_X64)
bool avx2_available();
const StepKernel& avx2_kernel();
#endif
#if defined(__aarch64__)
const StepKernel& neon_kernel();
#endif

// Best kernel for this machine. The SLEMC_KERNEL environment variable
// ("scalar", "avx2", "neon") overrides the choice.
const StepKernel& active_kernel();

}  // namespace slemc
