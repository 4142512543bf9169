#pragma once

#include <vector>

#include "slemc/flow.hpp"
#include "slemc/params.hpp"

namespace slemc {

// The field M_t(x) = (h_t'(x)/h_t(x))^beta on the grid, 0 after T_x.
struct MartingaleSnapshot {
  double t = 0.0;
  std::vector<double> m;
};

MartingaleSnapshot compute_M(const FlowState& state, const SleParams& params);

// Stopped field M_t^eps at a recorded snapshot: capped at eps^{-beta} once
// the crossing time T_x^eps has passed, frozen at the last alive value for
// points that died without crossing, and equal to the live field otherwise.
MartingaleSnapshot stopped_field(const FlowState& snap, const PathResult& path,
                                 double eps, std::size_t eps_idx,
                                 const SleParams& params);

}  // namespace slemc
