#pragma once

#include <cstddef>
#include <vector>

#include "slemc/flow.hpp"
#include "slemc/martingale.hpp"
#include "slemc/params.hpp"
#include "slemc/specfun.hpp"
#include "slemc/stats.hpp"

namespace slemc {

// Uniform cell grid over (x1, x2]; quadrature points are cell midpoints, so
// the Doob-Meyer split below shares cells and weights with quadrature_X and
// the split identity is exact by construction.
struct Grid {
  double x1 = 0.0;
  double x2 = 0.0;
  std::size_t n_cells = 0;
  std::vector<double> mid;  // cell midpoints (the flow grid)
  double width = 0.0;       // common cell width

  static Grid uniform(double x1, double x2, std::size_t n_cells);
  // Cells whose midpoint lies in (a, b].
  IndexRange cell_range(const IntervalSpec& iv) const;
};

struct HorizonError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// X_t(I): midpoint quadrature of the field over the cells of I (dead cells
// carry 0 through the field convention). Requires >= min_cells resolution.
double quadrature_X(const MartingaleSnapshot& snap, const Grid& grid,
                    const IndexRange& range, std::size_t min_cells = 64);

struct SplitPoint {
  double t;
  double x_eps;  // quadrature of M^eps over cells not yet crossed
  double a_eps;  // eps^{-beta} * length of crossed cells
};

// The explicit eps-level Doob-Meyer split along the recorded snapshots.
std::vector<SplitPoint> doob_meyer_split(const PathResult& path,
                                         const Grid& grid,
                                         const IndexRange& range, double eps,
                                         std::size_t eps_idx,
                                         const SleParams& params);

// Terminal mass mu^eps(I) = eps^{-beta} * length of cells of I crossed at
// any time. Requires the range to be (nearly) fully swallowed.
double mu_eps_mass(const PathResult& path, const Grid& grid,
                   const IndexRange& range, double eps, std::size_t eps_idx,
                   const SleParams& params, double max_alive_frac = 0.01);

// A_eps(t) for one path: eps^{-beta} * length of cells crossed by time t.
double a_eps_at(const PathResult& path, const Grid& grid,
                const IndexRange& range, double eps, std::size_t eps_idx,
                const SleParams& params, double t);

// alpha-energy of the per-cell masses: sum over cell pairs at least two
// cells apart of m_i m_j / |x_i - x_j|^alpha (both orders counted, matching
// the double integral). Same-cell and adjacent-cell pairs are grid
// artifacts and are excluded.
double cell_energy(const std::vector<double>& centers,
                   const std::vector<double>& mass, double alpha, double d);

// Per-cell masses of mu^eps on a range (eps^{-beta} * width per crossed cell).
std::vector<double> mu_eps_cells(const PathResult& path, const Grid& grid,
                                 const IndexRange& range, double eps,
                                 std::size_t eps_idx, const SleParams& params);

// Max dyadic subinterval mass per level n = 0..n_max. Level sums are built
// bottom-up by pairwise addition, so max at level n+1 <= max at level n
// holds exactly. Needs >= 8 cells per smallest subinterval.
std::vector<double> dyadic_max_mass(const std::vector<double>& cell_mass,
                                    std::size_t n_max);

struct LadderFit {
  std::vector<double> eps;
  std::vector<Estimate> per_eps;
  double extrapolated = 0.0;        // intercept of mean vs eps^beta
  double extrapolated_stderr = 0.0;
  double fitted_order = 0.0;        // empirical convergence order diagnostic
};

// Linear extrapolation of E[mu^eps(I)] in eps^beta along a halving ladder.
LadderFit minkowski_ladder(const std::vector<double>& eps_ladder,
                           const std::vector<Estimate>& per_eps, double beta);

struct WeightedCell {
  double x;
  double mass;
};
struct MapPoint {
  double x;
  double phi;
  double dphi;
};

// d-dimensional covariant transform: (x, m) -> (phi(x), m * |phi'(x)|^d).
// The table must cover every cell center.
std::vector<WeightedCell> covariant_transform(
    const std::vector<WeightedCell>& cells, const std::vector<MapPoint>& table,
    const SleParams& params);

}  // namespace slemc
