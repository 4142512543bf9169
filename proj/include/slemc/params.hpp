#pragma once

#include <cmath>
#include <stdexcept>

namespace slemc {

struct domain_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// kappa together with the exponents derived from it. Every formula in the
// project pulls its constants from here.
//
// Only the regime 4 < kappa < 8 is supported: below it the curve misses the
// real line, at and above 8 it swallows points one at a time, and several
// downstream formulas divide by beta or d.
struct SleParams {
  double kappa;
  double a;     // 2/kappa
  double beta;  // 4a - 1
  double d;     // 2 - 4a, dimension of the boundary hit set; beta + d = 1
  double nu;    // 3a - 1/2, shape parameter of the swallowing-time law

  static SleParams derive(double kappa);
};

inline SleParams SleParams::derive(double kappa) {
  if (!(kappa > 4.0 && kappa < 8.0))
    throw domain_error("kappa must lie strictly inside (4, 8)");
  SleParams p;
  p.kappa = kappa;
  p.a = 2.0 / kappa;
  p.beta = 4.0 * p.a - 1.0;
  p.d = 2.0 - 4.0 * p.a;
  p.nu = 3.0 * p.a - 0.5;
  // second route to the shape parameter, guards against transcription drift
  const double nu_alt = (12.0 - kappa) / (2.0 * kappa);
  if (std::abs(p.nu - nu_alt) > 1e-15 * std::abs(nu_alt))
    throw domain_error("shape parameter routes disagree");
  return p;
}

}  // namespace slemc
