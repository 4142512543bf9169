#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "slemc/params.hpp"

namespace slemc {

struct Estimate {
  double mean = 0.0;
  double stderr_ = 0.0;  // sample standard deviation / sqrt(n)
  std::size_t n = 0;
};

// Streaming accumulator for (sum, sum of squares, count).
struct Accumulator {
  double sum = 0.0;
  double sumsq = 0.0;
  std::size_t n = 0;

  void add(double v) {
    sum += v;
    sumsq += v * v;
    ++n;
  }
  void merge(const Accumulator& o) {
    sum += o.sum;
    sumsq += o.sumsq;
    n += o.n;
  }
  Estimate estimate() const {
    Estimate e;
    e.n = n;
    if (n == 0) return e;
    e.mean = sum / static_cast<double>(n);
    if (n > 1) {
      const double var =
          std::max(0.0, (sumsq - sum * e.mean) / static_cast<double>(n - 1));
      e.stderr_ = std::sqrt(var / static_cast<double>(n));
    }
    return e;
  }
};

inline Estimate estimate(const std::vector<double>& samples) {
  Accumulator acc;
  for (double v : samples) acc.add(v);
  return acc.estimate();
}

inline Estimate binomial_estimate(std::size_t successes, std::size_t n) {
  Estimate e;
  e.n = n;
  if (n == 0) return e;
  e.mean = static_cast<double>(successes) / static_cast<double>(n);
  e.stderr_ = std::sqrt(std::max(0.0, e.mean * (1.0 - e.mean)) /
                        static_cast<double>(n));
  return e;
}

struct LineFit {
  double slope = 0.0;
  double slope_stderr = 0.0;
  double intercept = 0.0;
  double intercept_stderr = 0.0;
};

// Weighted least squares y = a + b x with per-point standard deviations.
// Pass empty sigma for an ordinary unweighted fit (unit errors).
inline LineFit fit_line(const std::vector<double>& x,
                        const std::vector<double>& y,
                        const std::vector<double>& sigma = {}) {
  if (x.size() != y.size() || x.size() < 2)
    throw domain_error("fit_line needs >= 2 matching points");
  double s = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double sg = sigma.empty() ? 1.0 : sigma[i];
    if (!(sg > 0.0)) throw domain_error("fit_line sigma must be positive");
    const double w = 1.0 / (sg * sg);
    s += w;
    sx += w * x[i];
    sy += w * y[i];
    sxx += w * x[i] * x[i];
    sxy += w * x[i] * y[i];
  }
  const double det = s * sxx - sx * sx;
  if (!(det > 0.0)) throw domain_error("fit_line degenerate abscissae");
  LineFit f;
  f.slope = (s * sxy - sx * sy) / det;
  f.intercept = (sxx * sy - sx * sxy) / det;
  f.slope_stderr = std::sqrt(s / det);
  f.intercept_stderr = std::sqrt(sxx / det);
  return f;
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw domain_error("median of empty sample");
  const std::size_t m = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m),
                   v.end());
  double hi = v[m];
  if (v.size() % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m) - 1,
                   v.begin() + static_cast<std::ptrdiff_t>(m));
  return 0.5 * (v[m - 1] + hi);
}

}  // namespace slemc
