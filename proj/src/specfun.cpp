#include "slemc/specfun.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace slemc {

namespace {

constexpr int kMaxIter = 2000000;
constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = 1e-300;

// series expansion of P(s, z), valid (and fast) for z < s + 1
double gamma_p_series(double s, double z) {
  double ap = s;
  double sum = 1.0 / s;
  double del = sum;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    del *= z / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-z + s * std::log(z) - std::lgamma(s));
}

// modified Lentz continued fraction for Q(s, z), z >= s + 1
double gamma_q_contfrac(double s, double z) {
  double b = z + 1.0 - s;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    const double an = -i * (i - s);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h * std::exp(-z + s * std::log(z) - std::lgamma(s));
}

// continued fraction for the regularized incomplete beta (Lentz)
double betacf(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

double reg_inc_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  const double front =
      std::exp(a * std::log(x) + b * std::log1p(-x) - lbeta);
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * betacf(a, b, x) / a;
  return 1.0 - std::exp(b * std::log1p(-x) + a * std::log(x) - lbeta) *
                   betacf(b, a, 1.0 - x) / b;
}

// log |Gamma(x)| together with the sign of Gamma(x)
double lgamma_signed(double x, double& sign) {
  if (x > 0.0) {
    sign = 1.0;
  } else {
    // Gamma alternates sign between negative integers
    const double fl = std::floor(x);
    if (fl == x) throw domain_error("gamma pole");
    sign = std::fmod(fl, 2.0) == 0.0 ? 1.0 : -1.0;
  }
  return std::lgamma(x);
}

double hyp2f1_series(double a, double b, double c, double w, int max_terms) {
  double term = 1.0;
  double sum = 1.0;
  for (int k = 0; k < max_terms; ++k) {
    term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * w;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) return sum;
  }
  return sum;
}

}  // namespace

double reg_lower_gamma(double s, double z) {
  if (!(s > 0.0)) throw domain_error("reg_lower_gamma: s must be positive");
  if (z < 0.0) throw domain_error("reg_lower_gamma: z must be nonnegative");
  if (z == 0.0) return 0.0;
  if (z < s + 1.0) return gamma_p_series(s, z);
  return 1.0 - gamma_q_contfrac(s, z);
}

double survival_probability(const SleParams& p, double x, double t) {
  if (!(x > 0.0 && t > 0.0)) throw domain_error("survival_probability: x, t > 0");
  return reg_lower_gamma(p.nu, x * x / (2.0 * t));
}

double hitting_probability(const SleParams& p, double rel) {
  if (!(rel >= 0.0 && rel < 1.0))
    throw domain_error("hitting_probability: rel must be in [0, 1)");
  return reg_inc_beta(4.0 * p.a - 1.0, 1.0 - 2.0 * p.a, rel);
}

double c_a(const SleParams& p) {
  return std::exp(std::lgamma(2.0 * p.a) - std::lgamma(1.0 - 2.0 * p.a) -
                  std::lgamma(4.0 * p.a));
}

double interval_hit_probability(const SleParams& p, double x, double y, HitArg conv) {
  if (!(0.0 < x && x < y)) throw domain_error("interval_hit_probability: 0 < x < y");
  const double rel =
      conv == HitArg::RatioToLeft ? (y - x) / x : (y - x) / y;
  if (rel >= 1.0) return 1.0;
  return hitting_probability(p, rel);
}

double hyp2f1(double a, double b, double c, double w) {
  if (!(w >= 0.0 && w < 1.0)) throw domain_error("hyp2f1: need 0 <= w < 1");
  if (w <= 0.5) return hyp2f1_series(a, b, c, w, 20000);
  const double cab = c - a - b;
  const double dist = std::abs(cab - std::round(cab));
  if (dist > 0.05) {
    // linear transformation toward w = 1: both inner series run at 1 - w <= 0.5
    const double z = 1.0 - w;
    // gamma-ratio prefactors with explicit signs (several arguments are
    // negative for this parameter family)
    auto gamma_ratio = [](double n1, double n2, double d1, double d2) {
      double sn1, sn2, sd1, sd2;
      const double lg = lgamma_signed(n1, sn1) + lgamma_signed(n2, sn2) -
                        lgamma_signed(d1, sd1) - lgamma_signed(d2, sd2);
      return std::exp(lg) * sn1 * sn2 * sd1 * sd2;
    };
    const double g1 = gamma_ratio(c, cab, c - a, c - b);
    const double g2 = gamma_ratio(c, -cab, a, b);
    return g1 * hyp2f1_series(a, b, 1.0 - cab, z, 20000) +
           g2 * std::pow(z, cab) * hyp2f1_series(c - a, c - b, 1.0 + cab, z, 20000);
  }
  // degenerate transformation (c-a-b near an integer): direct series with a
  // large term budget; the tail decays like w^k k^{cab-1}
  return hyp2f1_series(a, b, c, w, kMaxIter);
}

double two_point_u(const SleParams& p, double z) {
  if (!(z > 0.0 && z <= 1.0)) throw domain_error("two_point_u: z in (0, 1]");
  if (z == 1.0) return 1.0;
  const double w = 1.0 - z;
  return std::pow(w, -p.beta) * hyp2f1(2.0 * p.a, 1.0 - 4.0 * p.a, 4.0 * p.a, w);
}

QConstants estimate_q_constants(const SleParams& p, std::size_t grid_size) {
  if (grid_size < 1000) throw domain_error("estimate_q_constants: grid_size >= 1000");
  // Endpoint limits participate in the extrema: as z -> 0 the hypergeometric
  // argument reaches 1, where Gauss's summation gives the limit of u; as
  // z -> 1 the weighted kernel (1-z)^beta u tends to 1.
  const double a1 = 2.0 * p.a, b1 = 1.0 - 4.0 * p.a, c = 4.0 * p.a;
  const double u0 = std::exp(std::lgamma(c) + std::lgamma(c - a1 - b1) -
                             std::lgamma(c - a1) - std::lgamma(c - b1));
  double q1 = std::min(u0, 1.0);  // u(1) = 1 also participates
  double q2 = std::max(u0, 1.0);
  for (std::size_t i = 0; i < grid_size; ++i) {
    const double z = (i + 0.5) / static_cast<double>(grid_size);
    const double u = two_point_u(p, z);
    if (!std::isfinite(u))
      throw std::runtime_error("estimate_q_constants: non-finite u at z=" +
                               std::to_string(z));
    q1 = std::min(q1, u);
    q2 = std::max(q2, std::pow(1.0 - z, p.beta) * u);
  }
  return {q1, q2};
}

ReferenceValue adaptive_simpson(const std::function<double(double)>& f, double lo,
                                double hi, double abs_tol, std::size_t max_intervals) {
  struct Seg {
    double a, b, fa, fm, fb, whole;
  };
  auto simpson = [&](double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  };
  std::vector<Seg> stack;
  {
    const double m = 0.5 * (lo + hi);
    const double fa = f(lo), fm = f(m), fb = f(hi);
    stack.push_back({lo, hi, fa, fm, fb, simpson(lo, hi, fa, fm, fb)});
  }
  double total = 0.0;
  double err = 0.0;
  std::size_t used = 0;
  while (!stack.empty()) {
    const Seg s = stack.back();
    stack.pop_back();
    const double m = 0.5 * (s.a + s.b);
    const double lm = 0.5 * (s.a + m), rm = 0.5 * (m + s.b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(s.a, m, s.fa, flm, s.fm);
    const double right = simpson(m, s.b, s.fm, frm, s.fb);
    const double delta = left + right - s.whole;
    const double local_tol = abs_tol * (s.b - s.a) / (hi - lo);
    if (std::abs(delta) <= 15.0 * local_tol || ++used >= max_intervals) {
      total += left + right + delta / 15.0;
      err += std::abs(delta) / 15.0;
      if (used >= max_intervals && std::abs(delta) > 15.0 * local_tol)
        throw std::runtime_error("adaptive_simpson: did not converge");
    } else {
      stack.push_back({s.a, m, s.fa, flm, s.fm, left});
      stack.push_back({m, s.b, s.fm, frm, s.fb, right});
    }
  }
  return {total, err};
}

ReferenceValue expected_swallowed_mass(const SleParams& p, const IntervalSpec& I,
                                       double t, std::size_t max_intervals) {
  if (!(t > 0.0)) throw domain_error("expected_swallowed_mass: t > 0");
  auto integrand = [&](double x) {
    return std::pow(x, -p.beta) * (1.0 - survival_probability(p, x, t));
  };
  return adaptive_simpson(integrand, I.x1, I.x2, 1e-12, max_intervals);
}

}  // namespace slemc
