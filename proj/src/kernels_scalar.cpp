#include <limits>

#include "slemc/kernels.hpp"

namespace slemc {
namespace {

double flow_step_scalar(double* h, double* log_hp, std::size_t n, double c,
                        double dt, double db) {
  const double s = dt / c;
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double r = c / h[i];
    const double hn = h[i] + r * dt + db;
    log_hp[i] -= r * r * s;
    h[i] = hn;
    m = hn < m ? hn : m;
  }
  return m;
}

double bessel_step_scalar(double* h, std::size_t n, double c, double dt,
                          double db) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double r = c / h[i];
    const double hn = h[i] + r * dt + db;
    h[i] = hn;
    m = hn < m ? hn : m;
  }
  return m;
}

}  // namespace

const StepKernel& scalar_kernel() {
  static const StepKernel k{"scalar", flow_step_scalar, bessel_step_scalar};
  return k;
}

}  // namespace slemc
