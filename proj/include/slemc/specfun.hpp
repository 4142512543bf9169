#pragma once

#include <functional>

#include "slemc/params.hpp"

namespace slemc {

// A closed-form reference together with an absolute error bound for the
// series / quadrature that produced it.
struct ReferenceValue {
  double value = 0.0;
  double abs_error_bound = 0.0;
};

struct IntervalSpec {
  double x1;
  double x2;  // half-open (x1, x2]

  IntervalSpec(double lo, double hi) : x1(lo), x2(hi) {
    if (!(0.0 < lo && lo < hi)) throw domain_error("interval needs 0 < x1 < x2");
  }
  double length() const { return x2 - x1; }
};

// Regularized lower incomplete gamma P(s, z), series for z < s+1 and
// continued fraction otherwise.
double reg_lower_gamma(double s, double z);

// Q_x(T_x > t) = P(nu, x^2 / (2t)).
double survival_probability(const SleParams& p, double x, double t);

// F(rel): probability that the curve hits [1, 1+eps] expressed through the
// regularized incomplete beta with parameters (4a-1, 1-2a).
double hitting_probability(const SleParams& p, double rel);

// Small-argument coefficient in F(rel) ~ c_a rel^{4a-1}.
double c_a(const SleParams& p);

// The hitting probability of [x, y] carries an argument-convention
// ambiguity at finite separation; both are exposed and the Monte Carlo
// suite selects the matching one.
enum class HitArg { RatioToLeft, RatioToRight };
double interval_hit_probability(const SleParams& p, double x, double y, HitArg conv);

// Two-point kernel u(z) = (1-z)^{-beta} 2F1(2a, 1-4a, 4a; 1-z), z in (0,1].
double two_point_u(const SleParams& p, double z);

// Extremal constants of u over a uniform grid on (0,1):
// q1 = min u(z), q2 = max (1-z)^beta u(z).
struct QConstants {
  double q1;
  double q2;
};
QConstants estimate_q_constants(const SleParams& p, std::size_t grid_size);

// integral over I of x^{-beta} (1 - P(nu, x^2/2t)) dx, adaptive quadrature.
ReferenceValue expected_swallowed_mass(const SleParams& p, const IntervalSpec& I,
                                       double t, std::size_t max_intervals = 1 << 16);

// Adaptive Simpson on [lo, hi] with an absolute tolerance; returns value and
// an error estimate. Shared by the reference integrals above.
ReferenceValue adaptive_simpson(const std::function<double(double)>& f, double lo,
                                double hi, double abs_tol,
                                std::size_t max_intervals = 1 << 16);

// Gauss hypergeometric 2F1(a, b; c; w) for 0 <= w < 1. Power series for
// w <= 0.5; for larger w a linear transformation toward the opposite
// endpoint, falling back to a longer direct series when c-a-b is too close
// to an integer for the transformation to be stable.
double hyp2f1(double a, double b, double c, double w);

}  // namespace slemc
