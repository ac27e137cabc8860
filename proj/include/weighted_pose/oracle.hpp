#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "weighted_pose/geometry.hpp"
#include "weighted_pose/problem.hpp"
#include "weighted_pose/solver.hpp"

// Numerical minimizer of the blended objective over SE(3). It shares only
// objective_value with the closed-form solver and is used to certify it.
//
// Tangent coordinates are (xi, tau) in R^6 with the retraction
//   R <- Exp(xi) R,  t <- t + tau.

namespace wpose {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

// Analytic and finite-difference gradients disagree: the oracle refuses to run.
class OracleSelfCheckError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct OracleOptions {
  int restarts = 8;
  int max_iters = 500;
  std::uint64_t seed = 0;
  FlowWeighting flow_weighting = FlowWeighting::kPaperLiteral;
  double step_tol = 1e-10;
  bool check_gradients = true;
};

struct OracleResult {
  RigidTransform transform;
  double objective = std::numeric_limits<double>::infinity();
  int restarts_used = 0;
  bool converged = false;
};

inline RigidTransform retract(const RigidTransform& t, const Vec6& d) {
  const Vec3 xi = d.head<3>();
  const double angle = xi.norm();
  const Mat3 step = angle > 0.0 ? Eigen::AngleAxisd(angle, xi / angle).toRotationMatrix()
                                : Mat3::Identity();
  return RigidTransform(step * t.rotation(), t.translation() + d.tail<3>());
}

inline Vec6 finite_difference_gradient(const CrossPoseProblem& p, const RigidTransform& t, double h,
                                       FlowWeighting fw = FlowWeighting::kPaperLiteral) {
  if (!(h > 0.0)) throw InvalidInput("finite-difference step must be positive");
  Vec6 g;
  for (int i = 0; i < 6; ++i) {
    const Vec6 e = Vec6::Unit(i) * h;
    g(i) = (objective_value(p, retract(t, e), fw) - objective_value(p, retract(t, -e), fw)) / (2.0 * h);
  }
  return g;
}

namespace detail {

// Accumulates, per residual block, the weighted gradient of J, the
// Gauss-Newton matrix, and the exact Hessian in the (xi, tau) chart.
// Each block is derived from its own term of J.
struct NormalEquations {
  Vec6 grad = Vec6::Zero();  // dJ/d(xi, tau)
  Mat6 gn = Mat6::Zero();    // 2 sum w J^T J
  Mat6 hess = Mat6::Zero();  // gn plus second-order residual terms
};

// Second-order part of res . (1/2)[xi]x^2 q, as a symmetric matrix in xi.
inline Mat3 curvature(const Vec3& res, const Vec3& q) {
  const Mat3 outer = res * q.transpose();
  return 0.5 * (outer + outer.transpose()) - res.dot(q) * Mat3::Identity();
}

inline NormalEquations linearize(const CrossPoseProblem& p, const RigidTransform& t, FlowWeighting fw) {
  const double w = p.blend();
  const Mat3& r = t.rotation();
  const Vec3& tr = t.translation();
  const Points& pa = p.action_cloud().points();
  const Points& pb = p.anchor_cloud().points();
  const double gf = w * flow_row_weight(p, fw);

  NormalEquations ne;
  Eigen::Matrix<double, 3, 6> jac;
  auto add = [&](double weight, const Vec3& res) {
    if (weight == 0.0) return;
    ne.grad += 2.0 * weight * jac.transpose() * res;
    ne.gn += 2.0 * weight * jac.transpose() * jac;
  };

  // ||R p + t - v||^2: dr = -[Rp]x xi + tau
  for (Eigen::Index i = 0; i < pa.rows(); ++i) {
    const Vec3 rp = r * pa.row(i).transpose();
    jac.leftCols<3>() = -detail::skew(rp);
    jac.rightCols<3>() = Mat3::Identity();
    const Vec3 res_c = rp + tr - p.corr_action().row(i).transpose();
    const Vec3 res_f = rp + tr - (pa.row(i) + p.goal_flow().row(i)).transpose();
    const double wc = (1.0 - w) * p.alpha_action()(i);
    add(wc, res_c);
    add(gf, res_f);
    ne.hess.topLeftCorner<3, 3>() += 2.0 * curvature(wc * res_c + gf * res_f, rp);
  }
  // ||R^T (p - t) - v||^2: dr = R^T [p - t]x xi - R^T tau
  for (Eigen::Index i = 0; i < pb.rows(); ++i) {
    const Vec3 rel = pb.row(i).transpose() - tr;
    jac.leftCols<3>() = r.transpose() * detail::skew(rel);
    jac.rightCols<3>() = -r.transpose();
    const Vec3 res = r.transpose() * rel - p.corr_anchor().row(i).transpose();
    const double wb = (1.0 - w) * p.alpha_anchor()(i);
    add(wb, res);
    // r(xi, tau) = R^T Exp(-xi) (rel - tau): xi-xi and xi-tau second-order terms
    const Vec3 rr = wb * (r * res);
    ne.hess.topLeftCorner<3, 3>() += 2.0 * curvature(rr, rel);
    ne.hess.topRightCorner<3, 3>() -= 2.0 * detail::skew(rr);
    ne.hess.bottomLeftCorner<3, 3>() += 2.0 * detail::skew(rr);
  }
  ne.hess += ne.gn;
  return ne;
}

inline std::vector<Mat3> restart_rotations(int restarts, std::uint64_t seed) {
  std::vector<Mat3> starts;
  starts.push_back(Mat3::Identity());
  const std::array<Vec3, 3> axes = {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
  for (double angle : {std::numbers::pi / 2.0, std::numbers::pi})
    for (const Vec3& axis : axes)
      starts.push_back(Eigen::AngleAxisd(angle, axis).toRotationMatrix());
  starts.resize(std::min<std::size_t>(starts.size(), static_cast<std::size_t>(restarts)));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  while (starts.size() < static_cast<std::size_t>(restarts)) {
    Eigen::Vector4d q(g(rng), g(rng), g(rng), g(rng));
    if (q.norm() < 1e-6) continue;
    q.normalize();
    starts.push_back(Eigen::Quaterniond(q(0), q(1), q(2), q(3)).toRotationMatrix());
  }
  return starts;
}

}  // namespace detail

inline Vec6 analytic_gradient(const CrossPoseProblem& p, const RigidTransform& t,
                              FlowWeighting fw = FlowWeighting::kPaperLiteral) {
  return detail::linearize(p, t, fw).grad;
}

inline Mat6 analytic_hessian(const CrossPoseProblem& p, const RigidTransform& t,
                             FlowWeighting fw = FlowWeighting::kPaperLiteral) {
  return detail::linearize(p, t, fw).hess;
}

/// Multi-start Newton descent (Gauss-Newton fallback) with a monotone
/// backtracking line search. Returns the best local minimum found across restarts.
inline OracleResult minimize_objective(const CrossPoseProblem& p, const OracleOptions& opts) {
  if (opts.restarts < 1) throw InvalidInput("oracle needs at least one restart");
  const FlowWeighting fw = opts.flow_weighting;
  OracleResult best;

  for (const Mat3& start : detail::restart_rotations(opts.restarts, opts.seed)) {
    RigidTransform cur(start, Vec3::Zero());
    double j_cur = objective_value(p, cur, fw);
    bool converged = false;

    if (opts.check_gradients) {
      const Vec6 analytic = analytic_gradient(p, cur, fw);
      const Vec6 numeric = finite_difference_gradient(p, cur, 1e-6, fw);
      const double scale = std::max(1.0, analytic.lpNorm<Eigen::Infinity>());
      if ((analytic - numeric).lpNorm<Eigen::Infinity>() > 1e-5 * scale)
        throw OracleSelfCheckError("analytic gradient disagrees with finite differences");
    }

    for (int it = 0; it < opts.max_iters && !converged; ++it) {
      const auto ne = detail::linearize(p, cur, fw);
      // Newton where the exact Hessian is positive definite, Gauss-Newton elsewhere.
      const Eigen::LLT<Mat6> newton(ne.hess);
      Vec6 step;
      if (newton.info() == Eigen::Success) {
        step = -newton.solve(ne.grad);
      } else {
        const double damping = 1e-12 * (1.0 + ne.gn.diagonal().maxCoeff());
        step = -(ne.gn + damping * Mat6::Identity()).ldlt().solve(ne.grad);
      }
      if (!step.allFinite()) break;

      double scale = 1.0;
      bool accepted = false;
      while (scale * step.norm() >= opts.step_tol * 1e-3) {
        const RigidTransform trial = retract(cur, scale * step);
        const double j_trial = objective_value(p, trial, fw);
        if (j_trial <= j_cur) {
          accepted = true;
          cur = trial;
          j_cur = j_trial;
          break;
        }
        scale *= 0.5;
      }
      if (!accepted || scale * step.norm() < opts.step_tol) converged = true;
    }

    ++best.restarts_used;
    if (j_cur < best.objective) {
      best.transform = cur;
      best.objective = j_cur;
      best.converged = converged;
    }
  }
  return best;
}

inline OracleResult minimize_objective(const CrossPoseProblem& p, int restarts, int max_iters) {
  OracleOptions opts;
  opts.restarts = restarts;
  opts.max_iters = max_iters;
  return minimize_objective(p, opts);
}

}  // namespace wpose
