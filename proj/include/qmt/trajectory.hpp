#pragma once

#include <memory>
#include <vector>

#include "qmt/refpath.hpp"
#include "qmt/types.hpp"

namespace qmt {

/// Transverse state [w1 w2 v_t v_n v_b phi theta psi]: offsets along the
/// Frenet normal and binormal (m), velocity in the Frenet frame (m/s) and
/// roll/pitch/yaw (rad).
class TransverseState {
 public:
  enum Index { kW1 = 0, kW2, kVt, kVn, kVb, kPhi, kTheta, kPsi };

  TransverseState() : x_(StateVec::Zero()) {}
  explicit TransverseState(const StateVec& x) : x_(x) {}

  double& w1() { return x_[kW1]; }
  double& w2() { return x_[kW2]; }
  double& vt() { return x_[kVt]; }
  double& vn() { return x_[kVn]; }
  double& vb() { return x_[kVb]; }
  double& phi() { return x_[kPhi]; }
  double& theta() { return x_[kTheta]; }
  double& psi() { return x_[kPsi]; }
  double w1() const { return x_[kW1]; }
  double w2() const { return x_[kW2]; }
  double vt() const { return x_[kVt]; }
  double vn() const { return x_[kVn]; }
  double vb() const { return x_[kVb]; }
  double phi() const { return x_[kPhi]; }
  double theta() const { return x_[kTheta]; }
  double psi() const { return x_[kPsi]; }

  Eigen::Vector2d w() const { return x_.segment<2>(kW1); }
  Vec3 v_sf() const { return x_.segment<3>(kVt); }
  Vec3 attitude() const { return x_.segment<3>(kPhi); }

  const StateVec& vec() const { return x_; }
  StateVec& vec() { return x_; }

 private:
  StateVec x_;
};

/// Space-domain input [omega1 omega2 omega3 f].
class SpaceInput {
 public:
  SpaceInput() : u_(InputVec::Zero()) {}
  explicit SpaceInput(const InputVec& u) : u_(u) {}
  SpaceInput(const Vec3& omega, double thrust) {
    u_.head<3>() = omega;
    u_[3] = thrust;
  }

  Vec3 omega() const { return u_.head<3>(); }
  double thrust() const { return u_[3]; }
  double& thrust() { return u_[3]; }

  const InputVec& vec() const { return u_; }
  InputVec& vec() { return u_; }

 private:
  InputVec u_;
};

/// Station density 1 + strength / (L - s + offset) per unit arc length.
/// strength = 0 gives a uniform grid.
struct GridRefinement {
  double strength = 0.0;  // m
  double offset = 1e-3;   // m
};

/// Arc-length grid over [0, L], optionally refined toward s = L, with Frenet
/// frames cached at every station and every interval midpoint (the RK4 stage
/// locations).
class SpatialGrid {
 public:
  SpatialGrid(ReferencePath path, int intervals, GridRefinement refinement = {});

  int intervals() const { return intervals_; }
  double step(int i) const { return stations_[static_cast<size_t>(i) + 1] - stations_[static_cast<size_t>(i)]; }
  /// Trapezoid weight of station i.
  double weight(int i) const { return weights_[static_cast<size_t>(i)]; }
  const GridRefinement& refinement() const { return refinement_; }
  double station(int i) const { return stations_[static_cast<size_t>(i)]; }
  const std::vector<double>& stations() const { return stations_; }
  const FrenetSample& frame(int i) const { return frames_[static_cast<size_t>(i)]; }
  const FrenetSample& midpoint_frame(int i) const { return midpoints_[static_cast<size_t>(i)]; }
  const ReferencePath& path() const { return path_; }

 private:
  ReferencePath path_;
  int intervals_;
  GridRefinement refinement_;
  std::vector<double> stations_;
  std::vector<double> weights_;
  std::vector<FrenetSample> frames_;
  std::vector<FrenetSample> midpoints_;
};

using GridPtr = std::shared_ptr<const SpatialGrid>;

/// States and inputs sampled at the N+1 grid stations. Inputs are held
/// constant over each interval [s_i, s_{i+1}); the last input mirrors the one
/// before it.
struct TrajectoryCurve {
  GridPtr grid;
  std::vector<TransverseState> states;
  std::vector<SpaceInput> inputs;

  int intervals() const { return grid->intervals(); }
  double max_abs_difference(const TrajectoryCurve& other) const;
};

}  // namespace qmt
