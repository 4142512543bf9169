#include "slemc/trace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace slemc {
namespace {

std::complex<double> sqrt_uhp(std::complex<double> z) {
  std::complex<double> s = std::sqrt(z);
  return s.imag() < 0.0 ? -s : s;
}

}  // namespace

std::vector<double> driver_values(const DriverRecord& record) {
  std::vector<double> u(record.steps.size() + 1);
  u[0] = 0.0;
  for (std::size_t k = 0; k < record.steps.size(); ++k)
    u[k + 1] = u[k] - record.steps[k].db;
  return u;
}

std::complex<double> tip_at(const DriverRecord& record, std::size_t n_steps,
                            const SleParams& params) {
  if (n_steps > record.steps.size())
    throw domain_error("tip requested beyond recorded steps");
  const std::vector<double> u = driver_values(record);
  std::complex<double> w(u[n_steps], 1e-15);
  for (std::size_t k = n_steps; k-- > 0;) {
    const std::complex<double> dz = w - u[k];
    w = u[k] + sqrt_uhp(dz * dz - 2.0 * params.a * record.steps[k].dt);
  }
  return w;
}

TraceApprox sample_trace(const DriverRecord& record, const SleParams& params,
                         std::size_t max_tips) {
  if (max_tips < 2) throw domain_error("need at least two tips");
  const std::size_t n = record.steps.size();
  TraceApprox tr;
  std::vector<std::size_t> idx;
  if (n + 1 <= max_tips) {
    for (std::size_t k = 0; k <= n; ++k) idx.push_back(k);
  } else {
    for (std::size_t j = 0; j < max_tips; ++j)
      idx.push_back((j * n) / (max_tips - 1));
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  }
  double t = 0.0;
  std::size_t step = 0;
  for (std::size_t k : idx) {
    while (step < k) t += record.steps[step++].dt;
    tr.t.push_back(t);
    tr.tip.push_back(tip_at(record, k, params));
  }
  return tr;
}

KoebeSample koebe_check(double x, double h, double log_hp, double t,
                        const TraceApprox& trace, double dead_x_max) {
  if (!(x > 0.0) || !(h > 0.0)) throw domain_error("koebe_check needs an alive point");
  KoebeSample s;
  s.conformal = 4.0 * h * std::exp(-log_hp);
  double dist = std::numeric_limits<double>::infinity();
  double max_gap = 0.0;
  std::complex<double> prev;
  bool have_prev = false;
  for (std::size_t k = 0; k < trace.tip.size() && trace.t[k] <= t; ++k) {
    dist = std::min(dist, std::abs(std::complex<double>(x, 0.0) - trace.tip[k]));
    if (have_prev) max_gap = std::max(max_gap, std::abs(trace.tip[k] - prev));
    prev = trace.tip[k];
    have_prev = true;
  }
  if (std::isfinite(dead_x_max)) dist = std::min(dist, std::max(0.0, x - dead_x_max));
  if (!std::isfinite(dist)) throw domain_error("no trace samples up to t");
  s.dist = dist;
  s.slack = 2.0 * max_gap / s.conformal;
  s.ratio = dist / s.conformal;
  return s;
}

}  // namespace slemc
