#pragma once

#include <string>
#include <vector>

#include "slemc/harness.hpp"

namespace slemc {

// Options shared by every validation run. paths_scale scales all path
// budgets (down for smoke tests); results are cached per run in cache_dir
// keyed by code version and every option that affects the numbers.
struct ValidationOptions {
  double kappa = 6.0;
  std::uint64_t seed = 20260823ULL;
  double dt_scale = 0.01;
  double paths_scale = 1.0;
  std::string cache_dir;  // empty -> no on-disk caching
};

// Runs the requested acceptance criteria (1..16; empty means all) and
// returns one report per criterion, in ascending order.
std::vector<ValidationReport> run_validation(const ValidationOptions& options,
                                             std::vector<int> criteria = {});

}  // namespace slemc
