#include "qmt/refpath.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qmt/errors.hpp"

namespace qmt {

namespace {

// Derivatives of the analytic parameterization with respect to u.
struct CurveJet {
  Vec3 p, pu, puu, puuu;
};

// Value and first three derivatives of scale * atan(rate * (u - center)).
struct AtanJet {
  double f, d1, d2, d3;
};

AtanJet atan_jet(double u, double rate, double center, double scale) {
  const double z = rate * (u - center);
  const double q = 1.0 + z * z;
  return {scale * std::atan(z), scale * rate / q, scale * (-2.0 * rate * rate * z / (q * q)),
          scale * (-2.0 * rate * rate * rate * (1.0 - 3.0 * z * z) / (q * q * q))};
}

struct ParamCurve {
  double u_begin = 0.0;
  double u_end = 1.0;

  CurveJet jet(const PathSpec& spec, double u) const {
    return std::visit([u](const auto& s) { return jet_of(s, u); }, spec);
  }

  static CurveJet jet_of(const CircleArcSpec& c, double u) {
    const double R = c.radius, cu = std::cos(u), su = std::sin(u);
    return {Vec3(R * cu, R * su, 0.0), Vec3(-R * su, R * cu, 0.0), Vec3(-R * cu, -R * su, 0.0),
            Vec3(R * su, -R * cu, 0.0)};
  }
  static CurveJet jet_of(const HelixSpec& h, double u) {
    const double R = h.radius, cu = std::cos(u), su = std::sin(u);
    return {Vec3(R * cu, R * su, h.climb * u), Vec3(-R * su, R * cu, h.climb),
            Vec3(-R * cu, -R * su, 0.0), Vec3(R * su, -R * cu, 0.0)};
  }
  static CurveJet jet_of(const AtanSCurveSpec& a, double u) {
    const AtanJet y = atan_jet(u, a.b, 0.0, a.a);
    return {Vec3(u, y.f, 0.0), Vec3(1.0, y.d1, 0.0), Vec3(0.0, y.d2, 0.0), Vec3(0.0, y.d3, 0.0)};
  }
  static CurveJet jet_of(const AtanHelixSpec& h, double u) {
    const double R = h.radius, cu = std::cos(u), su = std::sin(u);
    const double a0 = std::atan(-h.sharpness * h.u_center);
    const double span = std::atan(h.sharpness * (h.u_end - h.u_center)) - a0;
    const AtanJet z = atan_jet(u, h.sharpness, h.u_center, -h.height / span);
    const double z0 = -h.height / span * a0;
    return {Vec3(R * su, R * (1.0 - cu), z.f - z0), Vec3(R * cu, R * su, z.d1),
            Vec3(-R * su, R * cu, z.d2), Vec3(-R * cu, -R * su, z.d3)};
  }
  static CurveJet jet_of(const StraightSpec& st, double u) {
    const double R = 1.0 / st.curvature, cu = std::cos(u), su = std::sin(u);
    return {Vec3(R * su, R * (1.0 - cu), 0.0), Vec3(R * cu, R * su, 0.0),
            Vec3(-R * su, R * cu, 0.0), Vec3(-R * cu, -R * su, 0.0)};
  }
};

ParamCurve param_range(const PathSpec& spec) {
  return std::visit(
      [](const auto& s) -> ParamCurve {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, CircleArcSpec>) {
          if (!(s.radius > 0.0)) throw Error("circle: radius must be positive");
          return {s.angle_begin, s.angle_end};
        } else if constexpr (std::is_same_v<T, HelixSpec>) {
          if (!(s.radius > 0.0)) throw Error("helix: radius must be positive");
          return {s.u_begin, s.u_end};
        } else if constexpr (std::is_same_v<T, AtanSCurveSpec>) {
          if (!(s.b > 0.0)) throw Error("atan_s_curve: b must be positive");
          return {s.u_begin, s.u_end};
        } else if constexpr (std::is_same_v<T, AtanHelixSpec>) {
          if (!(s.radius > 0.0) || !(s.sharpness > 0.0) || !(s.u_end > 0.0)) {
            throw Error("atan_helix: radius, sharpness and u_end must be positive");
          }
          return {0.0, s.u_end};
        } else {
          if (!(s.curvature > 0.0) || !(s.length > 0.0)) {
            throw Error("straight: length and curvature must be positive");
          }
          return {0.0, s.length * s.curvature};
        }
      },
      spec);
}

constexpr int kKnots = 4096;
constexpr int kCurvatureSamples = 4001;

}  // namespace

std::string family_name(const PathSpec& spec) {
  struct Namer {
    std::string operator()(const CircleArcSpec&) const { return "circle"; }
    std::string operator()(const HelixSpec&) const { return "helix"; }
    std::string operator()(const AtanSCurveSpec&) const { return "atan_s_curve"; }
    std::string operator()(const AtanHelixSpec&) const { return "atan_helix"; }
    std::string operator()(const StraightSpec&) const { return "straight"; }
  };
  return std::visit(Namer{}, spec);
}

struct ReferencePath::Impl {
  PathSpec spec;
  ParamCurve curve;
  std::vector<double> u_knots;
  std::vector<double> s_knots;
  double length = 0.0;
  double k_min = 0.0;
  double k_max = 0.0;

  double speed(double u) const { return curve.jet(spec, u).pu.norm(); }

  double arc_between(double ua, double ub) const {
    return boost::math::quadrature::gauss<double, 10>::integrate(
        [this](double u) { return speed(u); }, ua, ub);
  }

  double u_of_s(double s) const {
    if (s <= 0.0) return u_knots.front();
    if (s >= length) return u_knots.back();
    auto it = std::upper_bound(s_knots.begin(), s_knots.end(), s);
    const auto j = static_cast<size_t>(std::max<std::ptrdiff_t>(0, it - s_knots.begin() - 1));
    const size_t j1 = std::min(j + 1, s_knots.size() - 1);
    const double s0 = s_knots[j], s1 = s_knots[j1];
    const double u0 = u_knots[j], u1 = u_knots[j1];
    double u = u0;
    const double ds = s1 - s0;
    if (ds > 0.0) {
      // Cubic Hermite in s with du/ds = 1/|p_u| at the knots as initial guess.
      const double x = (s - s0) / ds;
      const double m0 = ds / speed(u0), m1 = ds / speed(u1);
      const double x2 = x * x, x3 = x2 * x;
      u = (2 * x3 - 3 * x2 + 1) * u0 + (x3 - 2 * x2 + x) * m0 + (-2 * x3 + 3 * x2) * u1 +
          (x3 - x2) * m1;
    }
    for (int it_n = 0; it_n < 8; ++it_n) {
      const double F = s0 + arc_between(u0, u) - s;
      u -= F / speed(u);
      if (std::abs(F) < 1e-14 * std::max(1.0, length)) break;
    }
    return u;
  }

  PathDerivatives derivatives(double s) const {
    const double u = u_of_s(std::clamp(s, 0.0, length));
    const CurveJet j = curve.jet(spec, u);
    const double sig = j.pu.norm();
    const double a = j.pu.dot(j.puu);
    const double u1 = 1.0 / sig;
    const double u2 = -a / std::pow(sig, 4);
    const double u3 = -((j.puu.squaredNorm() + j.pu.dot(j.puuu)) / std::pow(sig, 5) -
                        4.0 * a * a / std::pow(sig, 7));
    PathDerivatives d;
    d.p = j.p;
    d.d1 = j.pu * u1;
    d.d2 = j.puu * (u1 * u1) + j.pu * u2;
    d.d3 = j.puuu * (u1 * u1 * u1) + 3.0 * j.puu * (u1 * u2) + j.pu * u3;
    return d;
  }
};

ReferencePath::ReferencePath(const PathSpec& spec) {
  auto impl = std::make_shared<Impl>();
  impl->spec = spec;
  impl->curve = param_range(spec);
  const double ua = impl->curve.u_begin, ub = impl->curve.u_end;
  if (!(ub > ua)) throw Error(family_name(spec) + ": empty parameter range");
  impl->u_knots.resize(kKnots + 1);
  impl->s_knots.resize(kKnots + 1);
  impl->s_knots[0] = 0.0;
  for (int j = 0; j <= kKnots; ++j) {
    impl->u_knots[j] = ua + (ub - ua) * static_cast<double>(j) / kKnots;
  }
  for (int j = 0; j < kKnots; ++j) {
    const double seg = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        [&](double u) { return impl->speed(u); }, impl->u_knots[j], impl->u_knots[j + 1], 5,
        1e-14);
    impl->s_knots[j + 1] = impl->s_knots[j] + seg;
  }
  impl->length = impl->s_knots.back();

  impl->k_min = std::numeric_limits<double>::infinity();
  impl->k_max = 0.0;
  for (int i = 0; i < kCurvatureSamples; ++i) {
    const double s = impl->length * static_cast<double>(i) / (kCurvatureSamples - 1);
    const double k = impl->derivatives(s).d2.norm();
    impl->k_min = std::min(impl->k_min, k);
    impl->k_max = std::max(impl->k_max, k);
  }
  impl_ = std::move(impl);
}

double ReferencePath::length() const { return impl_->length; }
const PathSpec& ReferencePath::spec() const { return impl_->spec; }
Vec3 ReferencePath::eval(double s) const { return impl_->derivatives(s).p; }
Vec3 ReferencePath::eval_d1(double s) const { return impl_->derivatives(s).d1; }
Vec3 ReferencePath::eval_d2(double s) const { return impl_->derivatives(s).d2; }
Vec3 ReferencePath::eval_d3(double s) const { return impl_->derivatives(s).d3; }
PathDerivatives ReferencePath::derivatives(double s) const { return impl_->derivatives(s); }
double ReferencePath::min_curvature() const { return impl_->k_min; }
double ReferencePath::max_curvature() const { return impl_->k_max; }

ReferencePath make_analytic_path(const PathSpec& spec) {
  ReferencePath path(spec);
  if (path.min_curvature() < kCurvatureFloor) {
    std::ostringstream os;
    os << family_name(spec) << ": curvature " << path.min_curvature()
       << " falls below the floor " << kCurvatureFloor;
    throw CurvatureError(os.str());
  }
  return path;
}

Mat3 frenet_generator(double k, double tau) {
  Mat3 m;
  m << 0.0, -k, 0.0,
       k, 0.0, -tau,
       0.0, tau, 0.0;
  return m;
}

FrenetSample frenet_at(const ReferencePath& path, double s) {
  const PathDerivatives d = path.derivatives(s);
  FrenetSample f;
  f.s = std::clamp(s, 0.0, path.length());
  f.p_r = d.p;
  f.k = d.d2.norm();
  if (f.k < kCurvatureFloor) {
    std::ostringstream os;
    os << "curvature " << f.k << " below floor at s = " << s;
    throw CurvatureError(os.str());
  }
  f.t = d.d1;
  f.n = d.d2 / f.k;
  f.b = f.t.cross(f.n);
  f.tau = d.d1.cross(d.d2).dot(d.d3) / (f.k * f.k);
  f.R_SF.col(0) = f.t;
  f.R_SF.col(1) = f.n;
  f.R_SF.col(2) = f.b;
  return f;
}

namespace {

constexpr double kStationarityTol = 1e-10;
constexpr int kMaxProjectionIterations = 50;

// Newton on g(s) = (p - p_r(s)) . p_r'(s) = 0 restricted to [0, L].
std::optional<double> newton_project(const ReferencePath& path, const Vec3& p, double s) {
  const double L = path.length();
  s = std::clamp(s, 0.0, L);
  for (int it = 0; it < kMaxProjectionIterations; ++it) {
    const PathDerivatives d = path.derivatives(s);
    const Vec3 r = p - d.p;
    const double g = r.dot(d.d1);
    if (std::abs(g) < kStationarityTol) return s;
    if ((s <= 0.0 && g < 0.0) || (s >= L && g > 0.0)) return s;
    const double h = 1.0 - r.dot(d.d2);
    double step = (h > 1e-3) ? g / h : g;
    // Keep steps local; the coarse start is within a sampling interval.
    const double cap = 0.25 / std::max(path.max_curvature(), 1e-3);
    step = std::clamp(step, -cap, cap);
    s = std::clamp(s + step, 0.0, L);
  }
  return std::nullopt;
}

}  // namespace

double project_point(const ReferencePath& path, const Vec3& p, std::optional<double> s_hint) {
  const double L = path.length();
  if (s_hint) {
    if (auto s = newton_project(path, p, *s_hint)) return *s;
    throw ProjectionError(ProjectionError::Kind::kNoConvergence,
                          "projection did not converge from the hint");
  }
  constexpr int kSamples = 401;  // grid step 0.0025 L
  std::vector<double> d2(kSamples);
  for (int i = 0; i < kSamples; ++i) {
    d2[i] = (p - path.eval(L * i / (kSamples - 1))).squaredNorm();
  }
  struct Candidate {
    double s;
    double value;
  };
  std::vector<Candidate> minima;
  for (int i = 0; i < kSamples; ++i) {
    const bool left = (i == 0) || d2[i] <= d2[i - 1];
    const bool right = (i == kSamples - 1) || d2[i] <= d2[i + 1];
    if (!(left && right)) continue;
    if (auto s = newton_project(path, p, L * i / (kSamples - 1))) {
      minima.push_back({*s, (p - path.eval(*s)).squaredNorm()});
    }
  }
  if (minima.empty()) {
    throw ProjectionError(ProjectionError::Kind::kNoConvergence, "projection did not converge");
  }
  const auto best = std::min_element(minima.begin(), minima.end(),
                                     [](const auto& a, const auto& b) { return a.value < b.value; });
  const double separation = 1.0 / std::max(path.max_curvature(), kCurvatureFloor);
  for (const auto& c : minima) {
    if (std::abs(c.s - best->s) > separation && std::abs(c.value - best->value) < 1e-6) {
      std::ostringstream os;
      os << "ambiguous projection: minima at s = " << best->s << " and s = " << c.s;
      throw ProjectionError(ProjectionError::Kind::kAmbiguous, os.str());
    }
  }
  return best->s;
}

}  // namespace qmt
