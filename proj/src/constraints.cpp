#include "qmt/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "qmt/errors.hpp"

namespace qmt {

double Profile::operator()(double s) const {
  double v = base_;
  for (const auto& st : steps_) {
    const double x = st.sharpness * (s - st.at);
    v += st.delta * (st.shape == StepShape::kTanh ? 0.5 * (1.0 + std::tanh(x)) : 0.5 + std::atan(x) / std::numbers::pi);
  }
  return v;
}

int ConstraintSet::count() const {
  return std::holds_alternative<RectObstacle>(obstacle) ? 8 : 7;
}

void ConstraintSet::validate(double length) const {
  for (int i = 0; i < 3; ++i) {
    if (!(omega_max[i] > 0.0)) throw ConfigError("constraints.omega_max", "bounds must be positive");
  }
  if (!(f_min > 0.0) || !(f_max > f_min)) {
    throw ConfigError("constraints.thrust", "need 0 < f_min < f_max");
  }
  constexpr int kSamples = 2001;
  const double half_pi = 0.5 * std::numbers::pi;
  for (int i = 0; i < kSamples; ++i) {
    const double s = length * i / (kSamples - 1);
    const double pm = phi_max(s), tm = theta_max(s);
    if (!(pm > 0.0 && pm < half_pi)) throw ConfigError("constraints.phi_max", "must lie in (0, pi/2)");
    if (!(tm > 0.0 && tm < half_pi)) throw ConfigError("constraints.theta_max", "must lie in (0, pi/2)");
    if (const auto* c = std::get_if<CircObstacle>(&obstacle)) {
      if (!(c->r_obs(s) > 0.0)) throw ConfigError("constraints.obstacle.r_obs", "must be positive");
    } else {
      const auto& r = std::get<RectObstacle>(obstacle);
      if (!(r.w1_min(s) < r.w1_max(s))) {
        std::ostringstream os;
        os << "w1_min must stay below w1_max (violated at s = " << s << ")";
        throw ConfigError("constraints.obstacle.w1", os.str());
      }
      if (!(r.w2_min(s) < r.w2_max(s))) {
        std::ostringstream os;
        os << "w2_min must stay below w2_max (violated at s = " << s << ")";
        throw ConfigError("constraints.obstacle.w2", os.str());
      }
    }
  }
}

namespace {

// (2x - (hi + lo)) / (hi - lo): maps [lo, hi] onto [-1, 1].
struct Normalized {
  double value;
  double slope;  // d value / d x
};

Normalized centered(double x, double lo, double hi) {
  return {(2.0 * x - (hi + lo)) / (hi - lo), 2.0 / (hi - lo)};
}

}  // namespace

Eigen::VectorXd eval_constraints(const TransverseState& q, const SpaceInput& u, double s,
                                 const ConstraintSet& cs) {
  Eigen::VectorXd c(cs.count());
  const Vec3 w = u.omega();
  for (int i = 0; i < 3; ++i) {
    const double r = w[i] / cs.omega_max[i];
    c[kRate1 + i] = r * r - 1.0;
  }
  const double a = centered(u.thrust(), cs.f_min, cs.f_max).value;
  c[kThrust] = a * a - 1.0;
  const double rr = q.phi() / cs.phi_max(s);
  c[kRoll] = rr * rr - 1.0;
  const double pr = q.theta() / cs.theta_max(s);
  c[kPitch] = pr * pr - 1.0;
  if (const auto* circ = std::get_if<CircObstacle>(&cs.obstacle)) {
    const double r = circ->r_obs(s);
    c[kPosition] = q.w().squaredNorm() / (r * r) - 1.0;
  } else {
    const auto& rect = std::get<RectObstacle>(cs.obstacle);
    const double a1 = centered(q.w1(), rect.w1_min(s), rect.w1_max(s)).value;
    const double a2 = centered(q.w2(), rect.w2_min(s), rect.w2_max(s)).value;
    c[kPosition] = a1 * a1 - 1.0;
    c[kPosition + 1] = a2 * a2 - 1.0;
  }
  return c;
}

BarrierValue beta_nu(double x, double nu) {
  if (x > nu) return {-std::log(x), -1.0 / x, 1.0 / (x * x)};
  const double r = (x - 2.0 * nu) / nu;
  return {-std::log(nu) + 0.5 * (r * r - 1.0), (x - 2.0 * nu) / (nu * nu), 1.0 / (nu * nu)};
}

double barrier_cost(const TrajectoryCurve& xi, const ConstraintSet& cs, const BarrierParams& bp) {
  const SpatialGrid& grid = *xi.grid;
  const int N = grid.intervals();
  double sum = 0.0;
  for (int i = 0; i <= N; ++i) {
    const auto c = eval_constraints(xi.states[static_cast<size_t>(i)],
                                    xi.inputs[static_cast<size_t>(i)], grid.station(i), cs);
    double b = 0.0;
    for (Eigen::Index j = 0; j < c.size(); ++j) b += beta_nu(-c[j], bp.nu).value;
    sum += grid.weight(i) * b;
  }
  return sum;
}

double max_constraint(const TrajectoryCurve& xi, const ConstraintSet& cs) {
  double m = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= xi.intervals(); ++i) {
    const auto c = eval_constraints(xi.states[static_cast<size_t>(i)],
                                    xi.inputs[static_cast<size_t>(i)], xi.grid->station(i), cs);
    m = std::max(m, c.maxCoeff());
  }
  return m;
}

double terminal_penalty(const TransverseState& q_end, const TerminalTarget& target) {
  return 0.5 * target.rho * (target.q_d.vec() - q_end.vec()).squaredNorm();
}

namespace {

// Adds beta(-c) for c = a^2 - 1 with a = slope * z[k] + offset.
template <int Dim>
void add_square_term(double a, double slope, int k, double nu, double& value,
                     Eigen::Matrix<double, Dim, 1>& grad, Eigen::Matrix<double, Dim, Dim>& hess) {
  const double c = a * a - 1.0;
  const BarrierValue b = beta_nu(-c, nu);
  const double dc = 2.0 * a * slope;
  const double d2c = 2.0 * slope * slope;
  value += b.value;
  grad[k] += -b.d1 * dc;
  hess(k, k) += b.d2 * dc * dc - b.d1 * d2c;
}

}  // namespace

StateBarrier state_barrier(const TransverseState& q, double s, const ConstraintSet& cs, double nu) {
  using I = TransverseState;
  StateBarrier out;
  const double pm = cs.phi_max(s), tm = cs.theta_max(s);
  add_square_term<kStateDim>(q.phi() / pm, 1.0 / pm, I::kPhi, nu, out.value, out.grad, out.hess);
  add_square_term<kStateDim>(q.theta() / tm, 1.0 / tm, I::kTheta, nu, out.value, out.grad, out.hess);
  if (const auto* circ = std::get_if<CircObstacle>(&cs.obstacle)) {
    const double r2 = circ->r_obs(s) * circ->r_obs(s);
    const Eigen::Vector2d w = q.w();
    const double c = w.squaredNorm() / r2 - 1.0;
    const BarrierValue b = beta_nu(-c, nu);
    const Eigen::Vector2d dc = 2.0 * w / r2;
    out.value += b.value;
    out.grad.segment<2>(I::kW1) += -b.d1 * dc;
    out.hess.block<2, 2>(I::kW1, I::kW1) +=
        b.d2 * dc * dc.transpose() - b.d1 * (2.0 / r2) * Eigen::Matrix2d::Identity();
  } else {
    const auto& rect = std::get<RectObstacle>(cs.obstacle);
    const Normalized a1 = centered(q.w1(), rect.w1_min(s), rect.w1_max(s));
    const Normalized a2 = centered(q.w2(), rect.w2_min(s), rect.w2_max(s));
    add_square_term<kStateDim>(a1.value, a1.slope, I::kW1, nu, out.value, out.grad, out.hess);
    add_square_term<kStateDim>(a2.value, a2.slope, I::kW2, nu, out.value, out.grad, out.hess);
  }
  return out;
}

InputBarrier input_barrier(const SpaceInput& u, const ConstraintSet& cs, double nu) {
  InputBarrier out;
  for (int i = 0; i < 3; ++i) {
    add_square_term<kInputDim>(u.vec()[i] / cs.omega_max[i], 1.0 / cs.omega_max[i], i, nu,
                               out.value, out.grad, out.hess);
  }
  const Normalized a = centered(u.thrust(), cs.f_min, cs.f_max);
  add_square_term<kInputDim>(a.value, a.slope, 3, nu, out.value, out.grad, out.hess);
  return out;
}

}  // namespace qmt
