#pragma once

#include <memory>
#include <random>
#include <vector>

#include "qmt/refpath.hpp"
#include "qmt/transverse.hpp"

namespace qmt::test {

inline std::mt19937_64& rng() {
  static std::mt19937_64 gen(20240917);
  return gen;
}

inline double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }

inline GridPtr grid_for(const PathSpec& spec, int N, GridRefinement refine = {}) {
  return std::make_shared<const SpatialGrid>(make_analytic_path(spec), N, refine);
}

// Curve with the same state and input at every station.
inline TrajectoryCurve constant_curve(const GridPtr& grid, const TransverseState& q, const SpaceInput& u) {
  TrajectoryCurve xi;
  xi.grid = grid;
  xi.states.assign(static_cast<size_t>(grid->intervals()) + 1, q);
  xi.inputs.assign(static_cast<size_t>(grid->intervals()) + 1, u);
  return xi;
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace qmt::test
