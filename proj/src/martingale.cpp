#include "slemc/martingale.hpp"

#include <algorithm>
#include <cmath>

namespace slemc {

MartingaleSnapshot compute_M(const FlowState& state, const SleParams& params) {
  MartingaleSnapshot snap;
  snap.t = state.t;
  snap.m.assign(state.h.size(), 0.0);
  for (std::size_t i = state.alive_begin; i < state.h.size(); ++i)
    snap.m[i] = std::exp(params.beta * (state.log_hp[i] - std::log(state.h[i])));
  return snap;
}

MartingaleSnapshot stopped_field(const FlowState& snap, const PathResult& path,
                                 double eps, std::size_t eps_idx,
                                 const SleParams& params) {
  if (eps_idx >= path.t_cross.size())
    throw domain_error("eps index not tracked by this path");
  if (!(eps > 0.0)) throw domain_error("eps must be positive");
  const double cap = std::pow(eps, -params.beta);
  const std::vector<double>& t_cross = path.t_cross[eps_idx];
  MartingaleSnapshot out;
  out.t = snap.t;
  out.m.assign(snap.h.size(), 0.0);
  for (std::size_t i = 0; i < snap.h.size(); ++i) {
    if (t_cross[i] <= snap.t) {
      out.m[i] = cap;
    } else if (path.swallow_time[i] <= snap.t) {
      // Died without crossing: frozen at the last alive value, which stays
      // under the cap up to rounding.
      out.m[i] = std::min(path.last_alive_m[i], cap);
    } else {
      out.m[i] = std::min(
          std::exp(params.beta * (snap.log_hp[i] - std::log(snap.h[i]))), cap);
    }
  }
  return out;
}

}  // namespace slemc
