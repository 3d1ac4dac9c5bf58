#pragma once

// Arc-length parameterized reference paths with Serret-Frenet frames.
//
// Every family is described analytically in some parameter u and
// reparameterized numerically by arc length. Unit speed then holds to
// machine precision because derivatives are formed through the chain rule
// with du/ds = 1/|dp/du|; the quadrature only has to get s(u) right.

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qmt/types.hpp"

namespace qmt {

/// Frenet normal is undefined at zero curvature; paths must bend at least
/// this much everywhere (1/m).
inline constexpr double kCurvatureFloor = 1e-4;

/// (R cos u, R sin u, 0) for u in [angle_begin, angle_end].
struct CircleArcSpec {
  double radius = 1.0;
  double angle_begin = 0.0;
  double angle_end = 6.283185307179586;
};

/// (R cos u, R sin u, c u) for u in [u_begin, u_end].
struct HelixSpec {
  double radius = 1.0;
  double climb = 0.5;
  double u_begin = 0.0;
  double u_end = 6.283185307179586;
};

/// Planar (u, a atan(b u), 0) for u in [u_begin, u_end]. The inflection at
/// u = 0 has zero curvature, so the range must stay on one side of it.
struct AtanSCurveSpec {
  double a = 2.0;
  double b = 1.5;
  double u_begin = -5.0;
  double u_end = -0.3;
};

/// Horizontal circular turn of radius R over u in [0, u_end] combined with an
/// arctangent-blended altitude change of `height` metres (negative z is up):
///   (R sin u, R (1 - cos u), -height * blend(u)),
///   blend(u) = (atan(k (u - uc)) - atan(-k uc)) / (atan(k (u_end - uc)) - atan(-k uc)).
struct AtanHelixSpec {
  double radius = 3.0;
  double height = 1.0;
  double sharpness = 2.0;
  double u_center = 2.0;
  double u_end = 4.0;
};

/// Nominally straight segment along +x. It is a circular arc with a tiny
/// regularizing curvature so the Frenet frame stays defined.
struct StraightSpec {
  double length = 10.0;
  double curvature = 1e-3;
};

using PathSpec = std::variant<CircleArcSpec, HelixSpec, AtanSCurveSpec, AtanHelixSpec, StraightSpec>;

std::string family_name(const PathSpec& spec);

struct PathDerivatives {
  Vec3 p;   // p_r(s)
  Vec3 d1;  // p_r'(s), unit length
  Vec3 d2;
  Vec3 d3;
};

class ReferencePath {
 public:
  /// Immutable after construction; copies share the underlying tables.
  explicit ReferencePath(const PathSpec& spec);

  double length() const;
  const PathSpec& spec() const;

  /// Arguments are clamped to [0, L].
  Vec3 eval(double s) const;
  Vec3 eval_d1(double s) const;
  Vec3 eval_d2(double s) const;
  Vec3 eval_d3(double s) const;
  PathDerivatives derivatives(double s) const;

  /// Curvature extremes over a dense sampling of [0, L].
  double min_curvature() const;
  double max_curvature() const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

/// Builds a path and checks the curvature floor. Throws CurvatureError when
/// the curvature drops below kCurvatureFloor anywhere on [0, L].
ReferencePath make_analytic_path(const PathSpec& spec);

struct FrenetSample {
  double s = 0.0;
  Vec3 p_r = Vec3::Zero();
  Vec3 t = Vec3::UnitX();
  Vec3 n = Vec3::UnitY();
  Vec3 b = Vec3::UnitZ();
  double k = 0.0;
  double tau = 0.0;
  Mat3 R_SF = Mat3::Identity();  // columns [t n b]
};

/// Frame, curvature and torsion at s. Torsion uses the triple product
/// (p' x p'') . p''' / k^2. Throws CurvatureError when k < kCurvatureFloor.
FrenetSample frenet_at(const ReferencePath& path, double s);

/// Skew generator of the Serret-Frenet equations: R_SF' = R_SF * frenet_generator(k, tau).
Mat3 frenet_generator(double k, double tau);

/// Orthogonal projection of p onto the path (arg min_s |p - p_r(s)|^2).
/// Without a hint the global minimizer over a coarse sampling is refined by
/// Newton; with a hint the local minimizer continuous with it is returned.
/// Throws ProjectionError on non-convergence or an ambiguous global minimum.
double project_point(const ReferencePath& path, const Vec3& p,
                     std::optional<double> s_hint = std::nullopt);

}  // namespace qmt
