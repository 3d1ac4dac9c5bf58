#include "qmt/pronto.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "qmt/errors.hpp"
#include "qmt/transverse.hpp"

namespace qmt {

namespace {

size_t at(int i) { return static_cast<size_t>(i); }

constexpr double kRiccatiLimit = 1e9;
constexpr int kMaxBacktracks = 30;

template <typename M>
bool symmetric_positive_definite(const M& m) {
  if (!m.isApprox(m.transpose(), 1e-12)) return false;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  return llt.info() == Eigen::Success;
}

}  // namespace

namespace {
constexpr double kFeasibilityNuFactor = 0.1;
}  // namespace

void SolverConfig::validate() const {
  if (grid_intervals < 1) throw ConfigError("solver.grid_intervals", "must be at least 1");
  if (!symmetric_positive_definite(Qr)) throw ConfigError("solver.Qr", "must be symmetric positive definite");
  if (!symmetric_positive_definite(Rr)) throw ConfigError("solver.Rr", "must be symmetric positive definite");
  if (!(armijo_alpha > 0.0 && armijo_alpha < 1.0)) throw ConfigError("solver.armijo_alpha", "must lie in (0, 1)");
  if (!(armijo_beta > 0.0 && armijo_beta < 1.0)) throw ConfigError("solver.armijo_beta", "must lie in (0, 1)");
  if (!(eps0 > 0.0)) throw ConfigError("solver.eps0", "must be positive");
  if (!(nu0 > 0.0)) throw ConfigError("solver.nu0", "must be positive");
  if (!(shrink > 0.0 && shrink <= 1.0)) throw ConfigError("solver.shrink", "must lie in (0, 1]");
  if (!(tol_grad > 0.0)) throw ConfigError("solver.tol_grad", "must be positive");
  if (max_newton < 1) throw ConfigError("solver.max_newton", "must be at least 1");
  if (max_outer < 1) throw ConfigError("solver.max_outer", "must be at least 1");
  if (max_feasibility_rounds < 0) throw ConfigError("solver.max_feasibility_rounds", "must be non-negative");
  if (!(feasibility_tol >= 0.0)) throw ConfigError("solver.feasibility_tol", "must be non-negative");
}

// ---------------------------------------------------------------------------
// Linearization and projection

LinearizedSystem linearize(const TrajectoryCurve& xi, const QuadParams& params, JacobianMode mode,
                           double fd_step) {
  const SpatialGrid& grid = *xi.grid;
  const int N = grid.intervals();
  LinearizedSystem lin;
  lin.stations = grid.stations();
  lin.A.resize(at(N) + 1);
  lin.B.resize(at(N) + 1);
  lin.Ad.resize(at(N));
  lin.Bd.resize(at(N));

  for (int i = 0; i <= N; ++i) {
    const TransverseState& q = xi.states[at(i)];
    const SpaceInput& u = xi.inputs[at(i)];
    try {
      if (mode == JacobianMode::kAnalytic) {
        const auto j = space_dynamics_jacobian(q, u, grid.frame(i), params);
        lin.A[at(i)] = j.A;
        lin.B[at(i)] = j.B;
      } else {
        for (int c = 0; c < kStateDim; ++c) {
          StateVec p = q.vec(), m = q.vec();
          p[c] += fd_step;
          m[c] -= fd_step;
          lin.A[at(i)].col(c) = (transverse_space_dynamics(TransverseState(p), u, grid.frame(i), params) -
                                 transverse_space_dynamics(TransverseState(m), u, grid.frame(i), params)) /
                                (2.0 * fd_step);
        }
        for (int c = 0; c < kInputDim; ++c) {
          InputVec p = u.vec(), m = u.vec();
          p[c] += fd_step;
          m[c] -= fd_step;
          lin.B[at(i)].col(c) = (transverse_space_dynamics(q, SpaceInput(p), grid.frame(i), params) -
                                 transverse_space_dynamics(q, SpaceInput(m), grid.frame(i), params)) /
                                (2.0 * fd_step);
        }
      }
      if (i == N) break;
      if (mode == JacobianMode::kAnalytic) {
        const auto j = rk4_space_step_jacobian(grid, i, q.vec(), u.vec(), params);
        lin.Ad[at(i)] = j.A;
        lin.Bd[at(i)] = j.B;
      } else {
        for (int c = 0; c < kStateDim; ++c) {
          StateVec p = q.vec(), m = q.vec();
          p[c] += fd_step;
          m[c] -= fd_step;
          lin.Ad[at(i)].col(c) = (rk4_space_step(grid, i, p, u.vec(), params).q_next -
                                  rk4_space_step(grid, i, m, u.vec(), params).q_next) /
                                 (2.0 * fd_step);
        }
        for (int c = 0; c < kInputDim; ++c) {
          InputVec p = u.vec(), m = u.vec();
          p[c] += fd_step;
          m[c] -= fd_step;
          lin.Bd[at(i)].col(c) = (rk4_space_step(grid, i, q.vec(), p, params).q_next -
                                  rk4_space_step(grid, i, q.vec(), m, params).q_next) /
                                 (2.0 * fd_step);
        }
      }
    } catch (DynamicsError& e) {
      e.set_station(i);
      throw;
    }
    if (!lin.A[at(i)].allFinite() || !lin.B[at(i)].allFinite() ||
        !lin.Ad[at(i)].allFinite() || !lin.Bd[at(i)].allFinite()) {
      std::ostringstream os;
      os << "non-finite linearization at station " << i;
      throw NonFiniteError(os.str());
    }
  }
  return lin;
}

GainSchedule lqr_gain(const LinearizedSystem& lin, const StateMat& Qr, const InputWeight& Rr) {
  const int N = static_cast<int>(lin.A.size()) - 1;
  const InputWeight Rinv = Rr.inverse();
  // dP/dsigma with sigma = -s running backward from the end of the path.
  auto rhs = [&](const StateMat& P, const StateMat& A, const InputMat& B) -> StateMat {
    const StateMat PB_Rinv_BtP = P * B * Rinv * B.transpose() * P;
    return A.transpose() * P + P * A - PB_Rinv_BtP + Qr;
  };

  GainSchedule K(at(N) + 1);
  StateMat P = Qr;
  K[at(N)] = Rinv * lin.B[at(N)].transpose() * P;
  for (int i = N - 1; i >= 0; --i) {
    const double h = lin.stations[at(i) + 1] - lin.stations[at(i)];
    const StateMat A1 = lin.A[at(i) + 1], A0 = lin.A[at(i)];
    const InputMat B1 = lin.B[at(i) + 1], B0 = lin.B[at(i)];
    // Substeps keep h_sub * |A - B Rr^-1 B^T P| inside the RK4 stability region.
    const StateMat Acl = A1 - B1 * Rinv * B1.transpose() * P;
    const int m = static_cast<int>(std::clamp(std::ceil(h * Acl.norm()), 1.0, 1e6));
    const double hs = h / m;
    for (int j = 0; j < m; ++j) {
      const double a = static_cast<double>(j) / m, b = (j + 0.5) / m, c = (j + 1.0) / m;
      const StateMat Aa = A1 + a * (A0 - A1), Ab = A1 + b * (A0 - A1), Ac = A1 + c * (A0 - A1);
      const InputMat Ba = B1 + a * (B0 - B1), Bb = B1 + b * (B0 - B1), Bc = B1 + c * (B0 - B1);
      const StateMat k1 = rhs(P, Aa, Ba);
      const StateMat k2 = rhs(P + 0.5 * hs * k1, Ab, Bb);
      const StateMat k3 = rhs(P + 0.5 * hs * k2, Ab, Bb);
      const StateMat k4 = rhs(P + hs * k3, Ac, Bc);
      P += (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      P = 0.5 * (P + P.transpose()).eval();
    }
    if (!(P.norm() < kRiccatiLimit)) {
      std::ostringstream os;
      os << "Riccati solution exceeded " << kRiccatiLimit << " at station " << i;
      throw RiccatiBlowUpError(os.str());
    }
    K[at(i)] = Rinv * B0.transpose() * P;
  }
  return K;
}

TrajectoryCurve project(const TrajectoryCurve& curve, const GainSchedule& K,
                        const TransverseState& q0, const QuadParams& params) {
  const SpatialGrid& grid = *curve.grid;
  const int N = grid.intervals();
  TrajectoryCurve out;
  out.grid = curve.grid;
  out.states.resize(at(N) + 1);
  out.inputs.resize(at(N) + 1);
  out.states[0] = q0;
  for (int i = 0; i < N; ++i) {
    const StateVec& q = out.states[at(i)].vec();
    const InputVec u =
        curve.inputs[at(i)].vec() + K[at(i)] * (curve.states[at(i)].vec() - q);
    out.inputs[at(i)] = SpaceInput(u);
    StateVec next;
    try {
      next = rk4_space_step(grid, i, q, u, params).q_next;
    } catch (DynamicsError& e) {
      e.set_station(i);
      throw;
    }
    if (!next.allFinite() || !u.allFinite()) {
      std::ostringstream os;
      os << "projection produced a non-finite value at station " << i;
      throw NonFiniteError(os.str());
    }
    out.states[at(i) + 1] = TransverseState(next);
  }
  out.inputs[at(N)] = out.inputs[at(N) - 1];
  if (!(out.states[at(N)].vt() >= kMinForwardSpeed)) {
    SlowSpeedError e("projection ended below the forward speed floor");
    e.set_station(N);
    throw e;
  }
  return out;
}

BarrierValue terminal_speed_guard(double vt, double nu) {
  constexpr double v_guard = 2.0 * kMinForwardSpeed;
  const BarrierValue b = beta_nu(vt / v_guard - 1.0, nu);
  return {b.value, b.d1 / v_guard, b.d2 / (v_guard * v_guard)};
}

double cost_g(const TrajectoryCurve& xi, const Problem& problem, const BarrierParams& bp) {
  double g = time_of_flight(xi) + bp.epsilon * barrier_cost(xi, problem.constraints, bp);
  if (problem.target) {
    g += terminal_penalty(xi.states.back(), *problem.target);
    g += bp.epsilon * terminal_speed_guard(xi.states.back().vt(), bp.nu).value;
  }
  return g;
}

// ---------------------------------------------------------------------------
// Quadratic model of the discrete cost

namespace {

// Trapezoid weight of input i. The last station input mirrors input N-1, so
// its weight lands on u_{N-1}.
double input_weight(const SpatialGrid& grid, int i) {
  const int N = grid.intervals();
  return (i == N - 1) ? grid.weight(i) + grid.weight(N) : grid.weight(i);
}

struct StageModel {
  std::vector<StateVec> a;     // dG/dq_i, N+1
  std::vector<InputVec> b;     // dG/du_i, N
  std::vector<StateMat> Q;     // N+1
  std::vector<InputWeight> R;  // N
  std::vector<GainMat> S;      // d2G/du dq, N
};

// Hessian of (1 - k w1)/v_t in (w1, v_t).
Eigen::Matrix2d time_hessian(const TransverseState& q, double k, bool clip) {
  const double vt = q.vt();
  Eigen::Matrix2d H;
  H << 0.0, k / (vt * vt), k / (vt * vt), 2.0 * (1.0 - k * q.w1()) / (vt * vt * vt);
  if (!clip) return H;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(H);
  const Eigen::Vector2d lam = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

StageModel stage_model(const TrajectoryCurve& xi, const Problem& problem, const BarrierParams& bp,
                       bool gauss_newton) {
  using I = TransverseState;
  const SpatialGrid& grid = *xi.grid;
  const int N = grid.intervals();
  StageModel m;
  m.a.resize(at(N) + 1);
  m.Q.resize(at(N) + 1);
  m.b.resize(at(N));
  m.R.resize(at(N));
  m.S.assign(at(N), GainMat::Zero());

  for (int i = 0; i <= N; ++i) {
    const TransverseState& q = xi.states[at(i)];
    const double k = grid.frame(i).k;
    const double w = grid.weight(i);
    const StateBarrier sb = state_barrier(q, grid.station(i), problem.constraints, bp.nu);
    StateVec grad = bp.epsilon * sb.grad;
    grad[I::kW1] += -k / q.vt();
    grad[I::kVt] += -(1.0 - k * q.w1()) / (q.vt() * q.vt());
    StateMat hess = bp.epsilon * sb.hess;
    const Eigen::Matrix2d Ht = time_hessian(q, k, gauss_newton);
    hess(I::kW1, I::kW1) += Ht(0, 0);
    hess(I::kW1, I::kVt) += Ht(0, 1);
    hess(I::kVt, I::kW1) += Ht(1, 0);
    hess(I::kVt, I::kVt) += Ht(1, 1);
    m.a[at(i)] = w * grad;
    m.Q[at(i)] = w * hess;
    if (i < N) {
      const double wu = input_weight(grid, i);
      const InputBarrier ib = input_barrier(xi.inputs[at(i)], problem.constraints, bp.nu);
      m.b[at(i)] = wu * bp.epsilon * ib.grad;
      m.R[at(i)] = wu * bp.epsilon * ib.hess;
    }
  }
  if (problem.target) {
    const double rho = problem.target->rho;
    m.a[at(N)] += rho * (xi.states[at(N)].vec() - problem.target->q_d.vec());
    m.Q[at(N)] += rho * StateMat::Identity();
    const BarrierValue g = terminal_speed_guard(xi.states[at(N)].vt(), bp.nu);
    m.a[at(N)][TransverseState::kVt] += bp.epsilon * g.d1;
    m.Q[at(N)](TransverseState::kVt, TransverseState::kVt) += bp.epsilon * g.d2;
  }
  return m;
}

// Second derivative of lambda^T F_i(q, u) by central differences of the
// contracted step Jacobian, laid out over z = (q, u).
Eigen::Matrix<double, 12, 12> contracted_step_hessian(const SpatialGrid& grid, int i,
                                                      const StateVec& q, const InputVec& u,
                                                      const StateVec& lambda,
                                                      const QuadParams& params) {
  using Z = Eigen::Matrix<double, 12, 1>;
  auto grad = [&](const Z& z) -> Z {
    const auto j = rk4_space_step_jacobian(grid, i, z.head<kStateDim>(), z.tail<kInputDim>(), params);
    Z g;
    g.head<kStateDim>() = j.A.transpose() * lambda;
    g.tail<kInputDim>() = j.B.transpose() * lambda;
    return g;
  };
  Z z;
  z << q, u;
  const Z g0 = grad(z);
  Eigen::Matrix<double, 12, 12> H;
  for (int c = 0; c < 12; ++c) {
    const double d = 1e-6 * std::max(1.0, std::abs(z[c]));
    Z zp = z, zm = z;
    zp[c] += d;
    zm[c] -= d;
    try {
      H.col(c) = (grad(zp) - grad(zm)) / (2.0 * d);
    } catch (const DynamicsError&) {
      // One side crossed a domain boundary; fall back to a one-sided difference.
      try {
        H.col(c) = (grad(zp) - g0) / d;
      } catch (const DynamicsError&) {
        H.col(c) = (g0 - grad(zm)) / d;
      }
    }
  }
  return 0.5 * (H + H.transpose());
}

}  // namespace

double directional_derivative(const TrajectoryCurve& xi, const Direction& zeta,
                              const Problem& problem, const BarrierParams& bp) {
  const StageModel m = stage_model(xi, problem, bp, true);
  const int N = xi.intervals();
  double d = 0.0;
  for (int i = 0; i <= N; ++i) d += m.a[at(i)].dot(zeta.dq[at(i)]);
  for (int i = 0; i < N; ++i) d += m.b[at(i)].dot(zeta.du[at(i)]);
  return d;
}

Direction tangent_direction(const TrajectoryCurve& xi, const std::vector<InputVec>& du,
                            const QuadParams& params) {
  const int N = xi.intervals();
  if (static_cast<int>(du.size()) < N) throw Error("tangent_direction: need one input per interval");
  Direction z;
  z.dq.assign(at(N) + 1, StateVec::Zero());
  z.du.assign(du.begin(), du.begin() + N);
  z.du.push_back(z.du.back());
  for (int i = 0; i < N; ++i) {
    const auto j = rk4_space_step_jacobian(*xi.grid, i, xi.states[at(i)].vec(), xi.inputs[at(i)].vec(), params);
    z.dq[at(i) + 1] = j.A * z.dq[at(i)] + j.B * z.du[at(i)];
  }
  return z;
}

Direction newton_direction(const TrajectoryCurve& xi, const Problem& problem,
                           const BarrierParams& bp, const SolverConfig& cfg,
                           double regularization) {
  const SpatialGrid& grid = *xi.grid;
  const int N = grid.intervals();
  const bool gn = cfg.use_gauss_newton;
  const LinearizedSystem lin = linearize(xi, problem.params);
  StageModel m = stage_model(xi, problem, bp, gn);

  if (!gn) {
    // Closed-loop costate along the projection gain, then the dynamics
    // curvature lambda_{i+1}^T F_i''.
    const GainSchedule Kp = lqr_gain(lin, cfg.Qr, cfg.Rr);
    std::vector<StateVec> lambda(at(N) + 1);
    lambda[at(N)] = m.a[at(N)];
    for (int i = N - 1; i >= 0; --i) {
      const StateMat Acl = lin.Ad[at(i)] - lin.Bd[at(i)] * Kp[at(i)];
      lambda[at(i)] = (m.a[at(i)] - Kp[at(i)].transpose() * m.b[at(i)]) + Acl.transpose() * lambda[at(i) + 1];
    }
    for (int i = 0; i < N; ++i) {
      const auto H = contracted_step_hessian(grid, i, xi.states[at(i)].vec(), xi.inputs[at(i)].vec(),
                                             lambda[at(i) + 1], problem.params);
      m.Q[at(i)] += H.topLeftCorner<kStateDim, kStateDim>();
      m.R[at(i)] += H.bottomRightCorner<kInputDim, kInputDim>();
      m.S[at(i)] += H.bottomLeftCorner<kInputDim, kStateDim>();
    }
  }
  if (regularization > 0.0) {
    for (int i = 0; i <= N; ++i) m.Q[at(i)] += regularization * grid.weight(i) * StateMat::Identity();
    for (int i = 0; i < N; ++i) m.R[at(i)] += regularization * input_weight(grid, i) * InputWeight::Identity();
  }

  std::vector<GainMat> Kf(at(N));
  std::vector<InputVec> kf(at(N));
  StateMat P = m.Q[at(N)];
  StateVec p = m.a[at(N)];
  for (int i = N - 1; i >= 0; --i) {
    const StateMat& A = lin.Ad[at(i)];
    const InputMat& B = lin.Bd[at(i)];
    const InputMat PB = P * B;
    InputWeight Huu = m.R[at(i)] + B.transpose() * PB;
    Huu = 0.5 * (Huu + Huu.transpose()).eval();
    const GainMat Huq = m.S[at(i)] + PB.transpose() * A;
    const InputVec hu = m.b[at(i)] + B.transpose() * p;
    Eigen::LLT<InputWeight> llt(Huu);
    if (llt.info() != Eigen::Success) {
      if (!gn) {
        std::ostringstream os;
        os << "Newton subproblem is not convex at station " << i;
        throw IndefiniteHessianError(os.str());
      }
      llt.compute(Huu + 1e-12 * std::max(1.0, Huu.diagonal().cwiseAbs().maxCoeff()) *
                            InputWeight::Identity());
    }
    Kf[at(i)] = -llt.solve(Huq);
    kf[at(i)] = -llt.solve(hu);
    P = m.Q[at(i)] + A.transpose() * P * A + Huq.transpose() * Kf[at(i)];
    P = 0.5 * (P + P.transpose()).eval();
    p = m.a[at(i)] + A.transpose() * p + Huq.transpose() * kf[at(i)];
  }

  Direction z;
  z.dq.assign(at(N) + 1, StateVec::Zero());
  z.du.resize(at(N) + 1);
  double pd = 0.0;
  for (int i = 0; i < N; ++i) {
    z.du[at(i)] = Kf[at(i)] * z.dq[at(i)] + kf[at(i)];
    z.dq[at(i) + 1] = lin.Ad[at(i)] * z.dq[at(i)] + lin.Bd[at(i)] * z.du[at(i)];
    pd += m.a[at(i)].dot(z.dq[at(i)]) + m.b[at(i)].dot(z.du[at(i)]);
  }
  pd += m.a[at(N)].dot(z.dq[at(N)]);
  z.du[at(N)] = z.du[at(N) - 1];
  z.predicted_decrease = pd;
  if (!std::isfinite(pd)) throw NonFiniteError("search direction is not finite");
  return z;
}

TrajectoryCurve displace(const TrajectoryCurve& xi, const Direction& zeta, double gamma) {
  TrajectoryCurve out = xi;
  for (size_t i = 0; i < out.states.size(); ++i) {
    out.states[i].vec() += gamma * zeta.dq[i];
    out.inputs[i].vec() += gamma * zeta.du[i];
  }
  return out;
}

LineSearchResult line_search(const TrajectoryCurve& xi, double cost_at_xi, const Direction& zeta,
                             const GainSchedule& K, const Problem& problem,
                             const BarrierParams& bp, const SolverConfig& cfg) {
  double gamma = 1.0;
  for (int k = 0; k <= kMaxBacktracks; ++k, gamma *= cfg.armijo_beta) {
    double c = std::numeric_limits<double>::infinity();
    TrajectoryCurve trial;
    try {
      trial = project(displace(xi, zeta, gamma), K, problem.q0, problem.params);
      c = cost_g(trial, problem, bp);
    } catch (const DynamicsError&) {
      continue;
    } catch (const NonFiniteError&) {
      continue;
    }
    if (std::isfinite(c) && c <= cost_at_xi + cfg.armijo_alpha * gamma * zeta.predicted_decrease) {
      return {gamma, std::move(trial), c};
    }
  }
  return {0.0, xi, cost_at_xi};
}

InnerResult solve_inner(const TrajectoryCurve& xi0, const Problem& problem,
                        const BarrierParams& bp, const SolverConfig& cfg, int round,
                        const IterationCallback& on_iteration) {
  InnerResult res;
  res.trajectory = xi0;
  res.cost = cost_g(xi0, problem, bp);
  double mu = 0.0;
  int failures = 0;
  while (res.iterations < cfg.max_newton) {
    const LinearizedSystem lin = linearize(res.trajectory, problem.params);
    const GainSchedule K = lqr_gain(lin, cfg.Qr, cfg.Rr);
    Direction zeta;
    try {
      zeta = newton_direction(res.trajectory, problem, bp, cfg, mu);
    } catch (const IndefiniteHessianError&) {
      SolverConfig gn = cfg;
      gn.use_gauss_newton = true;
      zeta = newton_direction(res.trajectory, problem, bp, gn, mu);
    }
    res.predicted_decrease = zeta.predicted_decrease;
    if (std::abs(zeta.predicted_decrease) < cfg.tol_grad) {
      res.converged = true;
      break;
    }
    LineSearchResult ls = line_search(res.trajectory, res.cost, zeta, K, problem, bp, cfg);
    if (ls.step == 0.0) {
      if (std::abs(zeta.predicted_decrease) < 1e-9 * std::max(1.0, std::abs(res.cost))) {
        res.converged = true;
        break;
      }
      if (++failures >= 2) {
        res.stalled = true;
        break;
      }
      mu = (mu == 0.0) ? 1e-4 : 100.0 * mu;
      continue;
    }
    failures = 0;
    mu = (mu > 1e-8) ? 0.1 * mu : 0.0;
    res.trajectory = std::move(ls.trajectory);
    res.cost = ls.cost;
    ++res.iterations;
    if (on_iteration) {
      IterationRecord rec;
      rec.round = round;
      rec.iteration = res.iterations;
      rec.step = ls.step;
      rec.cost = ls.cost;
      rec.time_of_flight = time_of_flight(res.trajectory);
      rec.max_constraint = max_constraint(res.trajectory, problem.constraints);
      rec.predicted_decrease = zeta.predicted_decrease;
      on_iteration(rec);
    }
  }
  return res;
}

ContinuationResult solve_continuation(const Problem& problem, const TrajectoryCurve& initial,
                                      const SolverConfig& cfg, const IterationCallback& on_iteration) {
  cfg.validate();
  ContinuationResult out;
  ContinuationReport& rep = out.report;
  BarrierParams bp{cfg.eps0, cfg.nu0};
  try {
    rep.initial_cost = cost_g(initial, problem, bp);
    rep.initial_time_of_flight = time_of_flight(initial);
  } catch (const DynamicsError& e) {
    throw InfeasibleStartError(std::string("initial trajectory: ") + e.what());
  }
  if (!std::isfinite(rep.initial_cost)) throw InfeasibleStartError("initial cost is not finite");

  TrajectoryCurve xi = initial;
  auto run_round = [&](const BarrierParams& round_bp, bool feasibility) -> const RoundReport& {
    const int r = static_cast<int>(rep.rounds.size());
    const InnerResult inner = solve_inner(xi, problem, round_bp, cfg, r, [&](const IterationRecord& rec) {
      rep.iterations.push_back(rec);
      if (on_iteration) on_iteration(rec);
    });
    xi = inner.trajectory;
    RoundReport rr;
    rr.round = r;
    rr.epsilon = round_bp.epsilon;
    rr.nu = round_bp.nu;
    rr.cost = inner.cost;
    rr.time_of_flight = time_of_flight(xi);
    rr.max_constraint = max_constraint(xi, problem.constraints);
    rr.iterations = inner.iterations;
    rr.converged = inner.converged;
    rr.stalled = inner.stalled;
    rr.feasibility = feasibility;
    rep.rounds.push_back(rr);
    rep.round_trajectories.push_back(xi);
    rep.stalled = rep.stalled || inner.stalled;
    return rep.rounds.back();
  };

  double T_prev = rep.initial_time_of_flight;
  for (int r = 0; r < cfg.max_outer; ++r) {
    if (r > 0) {
      bp.epsilon *= cfg.shrink;
      bp.nu *= cfg.shrink;
    }
    const RoundReport& rr = run_round(bp, false);
    if (cfg.shrink == 1.0) break;
    if (r > 0 && std::abs(T_prev - rr.time_of_flight) < 1e-4 * rr.time_of_flight) break;
    T_prev = rr.time_of_flight;
  }
  // Sharpen the relaxation at fixed epsilon until the margins close.
  for (int k = 0; k < cfg.max_feasibility_rounds && rep.rounds.back().max_constraint > cfg.feasibility_tol;
       ++k) {
    bp.nu *= kFeasibilityNuFactor;
    run_round(bp, true);
  }
  out.trajectory = std::move(xi);
  return out;
}

}  // namespace qmt
