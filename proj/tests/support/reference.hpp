#pragma once

// Independent reference computations for the test suites. Everything here is
// written with explicit loops or a separate algebraic route and must not call
// into solver.hpp beyond the problem accessors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "weighted_pose/geometry.hpp"
#include "weighted_pose/problem.hpp"

namespace wpose::testing {

using Rng = std::mt19937_64;

inline Mat3 random_rotation(Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::Vector4d q(g(rng), g(rng), g(rng), g(rng));
  q.normalize();
  return Eigen::Quaterniond(q(0), q(1), q(2), q(3)).toRotationMatrix();
}

inline Vec3 random_vec(Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  return Vec3(u(rng), u(rng), u(rng));
}

inline RigidTransform random_transform(Rng& rng) {
  return RigidTransform(random_rotation(rng), random_vec(rng));
}

inline Points random_points(Rng& rng, Eigen::Index n, double lo = -0.5, double hi = 0.5) {
  Points p(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) p.row(i) = random_vec(rng, lo, hi).transpose();
  return p;
}

inline Eigen::VectorXd random_weights(Rng& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> u(0.1, 2.0);
  Eigen::VectorXd a(n);
  for (Eigen::Index i = 0; i < n; ++i) a(i) = u(rng);
  return a;
}

// Arbitrary (inconsistent) problem with every input random.
inline CrossPoseProblem random_problem(Rng& rng, Eigen::Index na, Eigen::Index nb, double w) {
  ProblemInputs in;
  in.action_points = random_points(rng, na);
  in.anchor_points = random_points(rng, nb);
  in.corr_action = random_points(rng, na, -1.0, 1.0);
  in.corr_anchor = random_points(rng, nb, -1.0, 1.0);
  in.alpha_action = random_weights(rng, na);
  in.alpha_anchor = random_weights(rng, nb);
  in.goal_flow = random_points(rng, na, -0.3, 0.3);
  in.blend = w;
  return CrossPoseProblem(std::move(in));
}

// Problem exactly consistent with gt, optionally perturbed by Gaussian noise.
inline CrossPoseProblem consistent_problem(Rng& rng, const RigidTransform& gt, Eigen::Index na,
                                           Eigen::Index nb, double w, double noise = 0.0) {
  std::normal_distribution<double> g(0.0, noise > 0.0 ? noise : 1.0);
  auto jitter = [&](Points m) {
    if (noise > 0.0)
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (int c = 0; c < 3; ++c) m(i, c) += g(rng);
    return m;
  };
  ProblemInputs in;
  in.action_points = random_points(rng, na);
  in.anchor_points = random_points(rng, nb);
  Points va(na, 3), vb(nb, 3), flow(na, 3);
  const Mat3 rt = gt.rotation().transpose();
  for (Eigen::Index i = 0; i < na; ++i) {
    const Vec3 p = in.action_points.row(i).transpose();
    va.row(i) = (gt.rotation() * p + gt.translation()).transpose();
    flow.row(i) = (gt.rotation() * p + gt.translation() - p).transpose();
  }
  for (Eigen::Index i = 0; i < nb; ++i) {
    const Vec3 p = in.anchor_points.row(i).transpose();
    vb.row(i) = (rt * (p - gt.translation())).transpose();
  }
  in.corr_action = jitter(va);
  in.corr_anchor = jitter(vb);
  in.goal_flow = jitter(flow);
  in.alpha_action = random_weights(rng, na);
  in.alpha_anchor = random_weights(rng, nb);
  in.blend = w;
  return CrossPoseProblem(std::move(in));
}

// Blended objective as three explicit loops; the inverse is applied as R^T (p - t).
inline double loop_objective(const CrossPoseProblem& p, const Mat3& r, const Vec3& t,
                             bool normalized_flow = false) {
  const double w = p.blend();
  const double g = normalized_flow ? 1.0 / static_cast<double>(p.n_action()) : 1.0;
  double corr_a = 0.0, corr_b = 0.0, flow = 0.0;
  for (Eigen::Index i = 0; i < p.n_action(); ++i) {
    const Vec3 pa = p.action_cloud().points().row(i).transpose();
    const Vec3 moved = r * pa + t;
    corr_a += p.alpha_action()(i) * (moved - p.corr_action().row(i).transpose()).squaredNorm();
    flow += g * (moved - pa - p.goal_flow().row(i).transpose()).squaredNorm();
  }
  for (Eigen::Index i = 0; i < p.n_anchor(); ++i) {
    const Vec3 pb = p.anchor_cloud().points().row(i).transpose();
    const Vec3 back = r.transpose() * (pb - t);
    corr_b += p.alpha_anchor()(i) * (back - p.corr_anchor().row(i).transpose()).squaredNorm();
  }
  return (1.0 - w) * (corr_a + corr_b) + w * flow;
}

struct Pose {
  Mat3 r;
  Vec3 t;
};

// Textbook weighted Kabsch: minimize sum w_k ||R src_k + t - dst_k||^2.
inline Pose weighted_kabsch(const Points& src, const Points& dst, const Eigen::VectorXd& wts) {
  Vec3 cs = Vec3::Zero(), cd = Vec3::Zero();
  double total = 0.0;
  for (Eigen::Index k = 0; k < src.rows(); ++k) {
    cs += wts(k) * src.row(k).transpose();
    cd += wts(k) * dst.row(k).transpose();
    total += wts(k);
  }
  cs /= total;
  cd /= total;
  Mat3 h = Mat3::Zero();
  for (Eigen::Index k = 0; k < src.rows(); ++k)
    h += wts(k) * (src.row(k).transpose() - cs) * (dst.row(k).transpose() - cd).transpose();
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0 ? -1.0 : 1.0;
  const Mat3 r = svd.matrixV() * d * svd.matrixU().transpose();
  return {r, cd - r * cs};
}

// Correspondence-only solve: the anchor block enters with source and target swapped.
inline Pose standalone_taxpose(const CrossPoseProblem& p) {
  const auto na = p.n_action(), nb = p.n_anchor();
  Points src(na + nb, 3), dst(na + nb, 3);
  Eigen::VectorXd wts(na + nb);
  src << p.action_cloud().points(), p.corr_anchor();
  dst << p.corr_action(), p.anchor_cloud().points();
  wts << p.alpha_action(), p.alpha_anchor();
  return weighted_kabsch(src, dst, wts);
}

// Flow-only solve: P_A onto P_A + delta with uniform weights.
inline Pose standalone_flow_kabsch(const CrossPoseProblem& p) {
  const Points goal = p.action_cloud().points() + p.goal_flow();
  return weighted_kabsch(p.action_cloud().points(), goal, Eigen::VectorXd::Ones(p.n_action()));
}

// Rotation angle (degrees) of R_a R_b^T via the quaternion route.
inline double quaternion_angle_deg(const Mat3& a, const Mat3& b) {
  Eigen::Quaterniond q(Mat3(a * b.transpose()));
  q.normalize();
  return 2.0 * std::atan2(q.vec().norm(), std::abs(q.w())) * 180.0 / std::numbers::pi;
}

inline double trace_angle_deg(const Mat3& a, const Mat3& b) {
  const double c = std::clamp(((a * b.transpose()).trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

inline double loop_mean_sq(const Points& a, const Points& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double row = 0.0;
    for (int c = 0; c < 3; ++c) row += (a(i, c) - b(i, c)) * (a(i, c) - b(i, c));
    s += row;
  }
  return s / static_cast<double>(a.rows());
}

inline Points loop_apply(const Mat3& r, const Vec3& t, const Points& p) {
  Points out(p.rows(), 3);
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (int c = 0; c < 3; ++c) {
      double v = t(c);
      for (int k = 0; k < 3; ++k) v += r(c, k) * p(i, k);
      out(i, c) = v;
    }
  return out;
}

inline Points loop_apply_inverse(const Mat3& r, const Vec3& t, const Points& p) {
  Points out(p.rows(), 3);
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (int c = 0; c < 3; ++c) {
      double v = 0.0;
      for (int k = 0; k < 3; ++k) v += r(k, c) * (p(i, k) - t(k));
      out(i, c) = v;
    }
  return out;
}

}  // namespace wpose::testing
