#include <cstdlib>
#include <cstring>

#include "slemc/kernels.hpp"

namespace slemc {

const StepKernel& active_kernel() {
  static const StepKernel* chosen = [] {
    const char* env = std::getenv("SLEMC_KERNEL");
    if (env != nullptr) {
      if (std::strcmp(env, "scalar") == 0) return &scalar_kernel();
#if defined(__x86_64__) || defined(_M_X64)
      if (std::strcmp(env, "avx2") == 0 && avx2_available()) return &avx2_kernel();
#endif
#if defined(__aarch64__)
      if (std::strcmp(env, "neon") == 0) return &neon_kernel();
#endif
      return &scalar_kernel();
    }
#if defined(__x86_64__) || defined(_M_X64)
    if (avx2_available()) return &avx2_kernel();
#endif
#if defined(__aarch64__)
    return &neon_kernel();
#endif
    return &scalar_kernel();
  }();
  return *chosen;
}

}  // namespace slemc
