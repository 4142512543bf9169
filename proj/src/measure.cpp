#include "slemc/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace slemc {

Grid Grid::uniform(double x1, double x2, std::size_t n_cells) {
  if (!(x1 >= 0.0) || !(x2 > x1)) throw domain_error("invalid grid interval");
  if (n_cells == 0) throw domain_error("grid needs at least one cell");
  Grid g;
  g.x1 = x1;
  g.x2 = x2;
  g.n_cells = n_cells;
  g.width = (x2 - x1) / static_cast<double>(n_cells);
  g.mid.resize(n_cells);
  for (std::size_t i = 0; i < n_cells; ++i)
    g.mid[i] = x1 + (static_cast<double>(i) + 0.5) * g.width;
  return g;
}

IndexRange Grid::cell_range(const IntervalSpec& iv) const {
  IndexRange r;
  r.lo = static_cast<std::size_t>(
      std::lower_bound(mid.begin(), mid.end(), iv.x1) - mid.begin());
  // midpoints strictly above x1 ...
  while (r.lo < n_cells && mid[r.lo] <= iv.x1) ++r.lo;
  r.hi = static_cast<std::size_t>(
      std::upper_bound(mid.begin(), mid.end(), iv.x2) - mid.begin());
  if (r.lo >= r.hi) throw domain_error("interval resolves no grid cells");
  return r;
}

double quadrature_X(const MartingaleSnapshot& snap, const Grid& grid,
                    const IndexRange& range, std::size_t min_cells) {
  if (range.hi > grid.n_cells || range.lo >= range.hi)
    throw domain_error("bad quadrature range");
  if (range.hi - range.lo < min_cells)
    throw domain_error("interval under-resolved for quadrature");
  double s = 0.0;
  for (std::size_t i = range.lo; i < range.hi; ++i) s += grid.width * snap.m[i];
  return s;
}

std::vector<SplitPoint> doob_meyer_split(const PathResult& path,
                                         const Grid& grid,
                                         const IndexRange& range, double eps,
                                         std::size_t eps_idx,
                                         const SleParams& params) {
  if (eps_idx >= path.t_cross.size())
    throw domain_error("eps level not tracked");
  const double cap = std::pow(eps, -params.beta);
  const std::vector<double>& tc = path.t_cross[eps_idx];
  std::vector<SplitPoint> series;
  series.reserve(path.snapshots.size());
  for (const FlowState& snap : path.snapshots) {
    SplitPoint p{snap.t, 0.0, 0.0};
    for (std::size_t i = range.lo; i < range.hi; ++i) {
      if (tc[i] <= snap.t) {
        p.a_eps += grid.width * cap;
      } else if (path.swallow_time[i] <= snap.t) {
        p.x_eps +=
            grid.width * std::min(path.last_alive_m[i], cap);
      } else {
        const double m = std::exp(params.beta *
                                  (snap.log_hp[i] - std::log(snap.h[i])));
        p.x_eps += grid.width * std::min(m, cap);
      }
    }
    series.push_back(p);
  }
  return series;
}

double a_eps_at(const PathResult& path, const Grid& grid,
                const IndexRange& range, double eps, std::size_t eps_idx,
                const SleParams& params, double t) {
  if (eps_idx >= path.t_cross.size())
    throw domain_error("eps level not tracked");
  const double cap = std::pow(eps, -params.beta);
  const std::vector<double>& tc = path.t_cross[eps_idx];
  double len = 0.0;
  for (std::size_t i = range.lo; i < range.hi; ++i)
    if (std::isfinite(tc[i]) && tc[i] <= t) len += grid.width;
  return cap * len;
}

double mu_eps_mass(const PathResult& path, const Grid& grid,
                   const IndexRange& range, double eps, std::size_t eps_idx,
                   const SleParams& params, double max_alive_frac) {
  std::size_t alive = 0;
  for (std::size_t i = range.lo; i < range.hi; ++i)
    if (!std::isfinite(path.swallow_time[i])) ++alive;
  if (static_cast<double>(alive) >
      max_alive_frac * static_cast<double>(range.hi - range.lo))
    throw HorizonError("too many alive points for a terminal mass; raise t_max");
  if (eps_idx >= path.t_cross.size())
    throw domain_error("eps level not tracked");
  const std::vector<double>& tc = path.t_cross[eps_idx];
  double len = 0.0;
  for (std::size_t i = range.lo; i < range.hi; ++i)
    if (std::isfinite(tc[i])) len += grid.width;
  return std::pow(eps, -params.beta) * len;
}

std::vector<double> mu_eps_cells(const PathResult& path, const Grid& grid,
                                 const IndexRange& range, double eps,
                                 std::size_t eps_idx, const SleParams& params) {
  if (eps_idx >= path.t_cross.size())
    throw domain_error("eps level not tracked");
  const double cell_mass = std::pow(eps, -params.beta) * grid.width;
  const std::vector<double>& tc = path.t_cross[eps_idx];
  std::vector<double> out(range.hi - range.lo, 0.0);
  for (std::size_t i = range.lo; i < range.hi; ++i)
    if (std::isfinite(tc[i])) out[i - range.lo] = cell_mass;
  return out;
}

double cell_energy(const std::vector<double>& centers,
                   const std::vector<double>& mass, double alpha, double d) {
  if (centers.size() != mass.size()) throw domain_error("mismatched cells");
  if (!(alpha > 0.0) || alpha >= d)
    throw domain_error("energy exponent must satisfy 0 < alpha < d");
  const std::size_t n = centers.size();
  // Uniform spacing lets |x_i - x_j|^{-alpha} be tabulated by index gap.
  std::vector<double> inv_pow(n, 0.0);
  const double w = n > 1 ? centers[1] - centers[0] : 1.0;
  bool uniform = true;
  for (std::size_t i = 1; i + 1 < n && uniform; ++i)
    uniform = std::abs((centers[i + 1] - centers[i]) - w) <= 1e-12 * w;
  if (uniform) {
    for (std::size_t k = 2; k < n; ++k)
      inv_pow[k] = std::pow(w * static_cast<double>(k), -alpha);
  }
  double e = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mass[i] == 0.0) continue;
    for (std::size_t j = i + 2; j < n; ++j) {
      if (mass[j] == 0.0) continue;
      const double g = uniform ? inv_pow[j - i]
                               : std::pow(std::abs(centers[j] - centers[i]),
                                          -alpha);
      e += mass[i] * mass[j] * g;
    }
  }
  return 2.0 * e;  // both pair orders, matching the double integral
}

std::vector<double> dyadic_max_mass(const std::vector<double>& cell_mass,
                                    std::size_t n_max) {
  const std::size_t leaves = std::size_t{1} << n_max;
  if (cell_mass.size() % leaves != 0 || cell_mass.size() / leaves < 8)
    throw domain_error("grid does not resolve the dyadic level");
  const std::size_t per_leaf = cell_mass.size() / leaves;
  std::vector<double> level(leaves, 0.0);
  for (std::size_t k = 0; k < leaves; ++k)
    for (std::size_t j = 0; j < per_leaf; ++j)
      level[k] += cell_mass[k * per_leaf + j];
  std::vector<double> maxes(n_max + 1);
  for (std::size_t n = n_max;; --n) {
    maxes[n] = *std::max_element(level.begin(), level.end());
    if (n == 0) break;
    std::vector<double> up(level.size() / 2);
    for (std::size_t k = 0; k < up.size(); ++k)
      up[k] = level[2 * k] + level[2 * k + 1];
    level.swap(up);
  }
  return maxes;
}

LadderFit minkowski_ladder(const std::vector<double>& eps_ladder,
                           const std::vector<Estimate>& per_eps, double beta) {
  if (eps_ladder.size() != per_eps.size() || eps_ladder.size() < 4)
    throw domain_error("ladder needs >= 4 epsilons");
  for (std::size_t j = 1; j < eps_ladder.size(); ++j)
    if (std::abs(eps_ladder[j] - 0.5 * eps_ladder[j - 1]) >
        1e-9 * eps_ladder[j - 1])
      throw domain_error("ladder must halve eps");
  LadderFit f;
  f.eps = eps_ladder;
  f.per_eps = per_eps;
  std::vector<double> xs, ys, sg;
  for (std::size_t j = 0; j < eps_ladder.size(); ++j) {
    xs.push_back(std::pow(eps_ladder[j], beta));
    ys.push_back(per_eps[j].mean);
    sg.push_back(per_eps[j].stderr_ > 0.0 ? per_eps[j].stderr_ : 1.0);
  }
  const LineFit lf = fit_line(xs, ys, sg);
  f.extrapolated = lf.intercept;
  f.extrapolated_stderr = lf.intercept_stderr;
  // Empirical order from successive mean differences along the halving ladder.
  double order_sum = 0.0;
  int order_n = 0;
  for (std::size_t j = 0; j + 2 < per_eps.size(); ++j) {
    const double d1 = per_eps[j].mean - per_eps[j + 1].mean;
    const double d2 = per_eps[j + 1].mean - per_eps[j + 2].mean;
    if (d1 != 0.0 && d2 != 0.0 && d1 / d2 > 0.0) {
      order_sum += std::log2(d1 / d2);
      ++order_n;
    }
  }
  f.fitted_order = order_n > 0 ? order_sum / order_n : 0.0;
  return f;
}

std::vector<WeightedCell> covariant_transform(
    const std::vector<WeightedCell>& cells, const std::vector<MapPoint>& table,
    const SleParams& params) {
  std::vector<WeightedCell> out;
  out.reserve(cells.size());
  for (const WeightedCell& c : cells) {
    const MapPoint* hit = nullptr;
    double best = std::numeric_limits<double>::infinity();
    for (const MapPoint& p : table) {
      const double dd = std::abs(p.x - c.x);
      if (dd < best) {
        best = dd;
        hit = &p;
      }
    }
    if (hit == nullptr || best > 1e-9 * std::max(1.0, std::abs(c.x)))
      throw domain_error("map table does not cover a cell center");
    out.push_back(WeightedCell{
        hit->phi, c.mass * std::pow(std::abs(hit->dphi), params.d)});
  }
  return out;
}

}  // namespace slemc
