#pragma once

#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "weighted_pose/errors.hpp"
#include "weighted_pose/geometry.hpp"
#include "weighted_pose/problem.hpp"

namespace wpose {

/// How the cross-covariance is formed before the SVD.
enum class DemeanMode {
  kDemean,        // Gamma-weighted centroids removed from both stacks
  kPaperLiteral,  // un-centred A Gamma B^T with de-meaned flow in the target
};

/// Per-row weight of the goal-flow residual block.
enum class FlowWeighting {
  kPaperLiteral,  // each of the N_A rows weighted by w
  kNormalized,    // each row weighted by w / N_A
};

inline std::string_view to_string(DemeanMode m) {
  return m == DemeanMode::kDemean ? "demean" : "paper-literal";
}

inline std::string_view to_string(FlowWeighting f) {
  return f == FlowWeighting::kPaperLiteral ? "paper-literal-weighting" : "normalized-weighting";
}

inline DemeanMode parse_demean_mode(std::string_view s) {
  if (s == "demean") return DemeanMode::kDemean;
  if (s == "paper-literal") return DemeanMode::kPaperLiteral;
  throw InvalidInput("unknown mode '" + std::string(s) + "'");
}

inline FlowWeighting parse_flow_weighting(std::string_view s) {
  if (s == "paper-literal-weighting") return FlowWeighting::kPaperLiteral;
  if (s == "normalized-weighting") return FlowWeighting::kNormalized;
  throw InvalidInput("unknown flow weighting '" + std::string(s) + "'");
}

struct SolverOptions {
  DemeanMode mode = DemeanMode::kDemean;
  FlowWeighting flow_weighting = FlowWeighting::kPaperLiteral;
};

/// Stacked least-squares system: every row k contributes
/// weights(k) * ||R source.row(k) + t - target.row(k)||^2.
/// Rows are three blocks of N_A, N_B, N_A: action correspondences,
/// anchor correspondences (source and target swapped), goal flow.
struct SvdSystem {
  Points source;
  Points target;
  Eigen::VectorXd weights;
  Eigen::Index n_action = 0;
  Eigen::Index n_anchor = 0;
};

struct RotationEstimate {
  Mat3 rotation = Mat3::Identity();
  Vec3 singular_values = Vec3::Zero();  // of the weighted cross-covariance, descending
  bool degenerate = false;
};

struct SolveReport {
  RigidTransform transform;
  double objective = 0.0;
  DemeanMode mode = DemeanMode::kDemean;
  Vec3 singular_values = Vec3::Zero();
  bool degenerate_flag = false;
};

// Per-row weight of the goal-flow block before multiplying by w.
inline double flow_row_weight(const CrossPoseProblem& p, FlowWeighting fw) {
  return fw == FlowWeighting::kPaperLiteral ? 1.0 : 1.0 / static_cast<double>(p.n_action());
}

/// Blended objective evaluated term by term:
///   (1-w) [ sum a_A ||T p_A - v_A||^2 + sum a_B ||T^-1 p_B - v_B||^2 ]
///   + w sum g ||T p_A - (p_A + d)||^2
inline double objective_value(const CrossPoseProblem& p, const RigidTransform& t,
                              FlowWeighting fw = FlowWeighting::kPaperLiteral) {
  const double w = p.blend();
  const Points moved_a = apply(t, p.action_cloud().points());
  const Points moved_b = apply(invert(t), p.anchor_cloud().points());
  const Eigen::VectorXd ra = (moved_a - p.corr_action()).rowwise().squaredNorm();
  const Eigen::VectorXd rb = (moved_b - p.corr_anchor()).rowwise().squaredNorm();
  const Points goal = p.action_cloud().points() + p.goal_flow();
  const Eigen::VectorXd rf = (moved_a - goal).rowwise().squaredNorm();
  const double corr = p.alpha_action().dot(ra) + p.alpha_anchor().dot(rb);
  const double flow = flow_row_weight(p, fw) * rf.sum();
  return (1.0 - w) * corr + w * flow;
}

inline SvdSystem build_svd_system(const CrossPoseProblem& p, const SolverOptions& opts = {}) {
  const auto na = p.n_action();
  const auto nb = p.n_anchor();
  const double w = p.blend();

  SvdSystem s;
  s.n_action = na;
  s.n_anchor = nb;
  s.source.resize(2 * na + nb, 3);
  s.target.resize(2 * na + nb, 3);
  s.weights.resize(2 * na + nb);

  s.source.topRows(na) = p.action_cloud().points();
  s.source.middleRows(na, nb) = p.corr_anchor();
  s.source.bottomRows(na) = p.action_cloud().points();

  s.target.topRows(na) = p.corr_action();
  s.target.middleRows(na, nb) = p.anchor_cloud().points();
  if (opts.mode == DemeanMode::kDemean) {
    s.target.bottomRows(na) = p.action_cloud().points() + p.goal_flow();
  } else {
    Points flow = p.goal_flow();
    flow.rowwise() -= flow.colwise().mean();
    s.target.bottomRows(na) = p.action_cloud().points() + flow;
  }

  s.weights.head(na) = (1.0 - w) * p.alpha_action();
  s.weights.segment(na, nb) = (1.0 - w) * p.alpha_anchor();
  s.weights.tail(na).setConstant(w * flow_row_weight(p, opts.flow_weighting));
  return s;
}

namespace detail {

inline Vec3 weighted_centroid(const Points& pts, const Eigen::VectorXd& wts, double total) {
  return (pts.transpose() * wts) / total;
}

inline constexpr double kRankTol = 1e-9;

}  // namespace detail

/// Weighted Kabsch step with reflection correction. Throws DegenerateGeometry
/// when the weighted de-meaned source stack has rank < 2.
inline RotationEstimate kabsch_rotation(const SvdSystem& s, DemeanMode mode = DemeanMode::kDemean) {
  const double total = s.weights.sum();
  if (!(total > 0.0)) throw InvalidWeights("all effective weights are zero");
  if ((s.weights.array() < 0.0).any()) throw InvalidWeights("negative effective weight");

  const Vec3 src_mean = detail::weighted_centroid(s.source, s.weights, total);
  const Vec3 dst_mean = detail::weighted_centroid(s.target, s.weights, total);
  Points src = s.source.rowwise() - src_mean.transpose();

  {
    const Mat3 scatter = src.transpose() * s.weights.asDiagonal() * src;
    const Vec3 spread = Eigen::SelfAdjointEigenSolver<Mat3>(scatter, Eigen::EigenvaluesOnly)
                            .eigenvalues()
                            .cwiseMax(0.0)
                            .cwiseSqrt();
    // Eigenvalues ascend; spread(2) is the largest singular value of sqrt(W) * src.
    if (!(spread(2) > 0.0) || spread(1) < detail::kRankTol * spread(2))
      throw DegenerateGeometry("weighted source points span fewer than two dimensions");
  }

  Mat3 cov;
  if (mode == DemeanMode::kDemean) {
    const Points dst = s.target.rowwise() - dst_mean.transpose();
    cov = src.transpose() * s.weights.asDiagonal() * dst;
  } else {
    cov = s.source.transpose() * s.weights.asDiagonal() * s.target;
  }

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3& u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  const Vec3 sv = svd.singularValues();

  const Vec3 d(1.0, 1.0, (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0);

  RotationEstimate est;
  est.rotation = v * d.asDiagonal() * u.transpose();
  est.singular_values = sv;
  est.degenerate = !(sv(0) > 0.0) || sv(1) < detail::kRankTol * sv(0) ||
                   sv(1) - sv(2) < detail::kRankTol * sv(0);
  return est;
}

/// Optimal translation for a fixed rotation: a weighted sum of the action
/// correspondence term, the goal-flow term and the anchor correspondence term.
/// The anchor term is written as p_B - R v_B, the form that zeroes dJ/dt
/// (||T^-1 p_B - v_B|| = ||R v_B + t - p_B||).
inline Vec3 closed_form_translation(const CrossPoseProblem& p, const Mat3& rotation,
                                    FlowWeighting fw = FlowWeighting::kPaperLiteral) {
  const double w = p.blend();
  const double g = flow_row_weight(p, fw);
  const Points& pa = p.action_cloud().points();
  const Points& pb = p.anchor_cloud().points();
  const Points rpa = pa * rotation.transpose();

  const double denom = (1.0 - w) * p.alpha_action().sum() +
                       w * g * static_cast<double>(p.n_action()) +
                       (1.0 - w) * p.alpha_anchor().sum();
  if (!(denom > 0.0)) throw InvalidWeights("translation denominator is zero");

  const Vec3 action_term = (p.corr_action() - rpa).transpose() * p.alpha_action();
  const Vec3 flow_term = (pa + p.goal_flow() - rpa).colwise().sum().transpose() * g;
  const Vec3 anchor_term =
      (pb - p.corr_anchor() * rotation.transpose()).transpose() * p.alpha_anchor();

  return ((1.0 - w) * action_term + w * flow_term + (1.0 - w) * anchor_term) / denom;
}

inline SolveReport solve_weighted_pose(const CrossPoseProblem& p, const SolverOptions& opts = {}) {
  const SvdSystem sys = build_svd_system(p, opts);
  const RotationEstimate rot = kabsch_rotation(sys, opts.mode);
  const Vec3 t = closed_form_translation(p, rot.rotation, opts.flow_weighting);

  SolveReport r{RigidTransform(rot.rotation, t), 0.0, opts.mode, rot.singular_values, rot.degenerate};
  r.objective = objective_value(p, r.transform, opts.flow_weighting);
  return r;
}

// Correspondence-only solve (blend forced to 0).
inline SolveReport solve_taxpose(const CrossPoseProblem& p, const SolverOptions& opts = {}) {
  return solve_weighted_pose(p.with_blend(0.0), opts);
}

// Goal-flow-only solve (blend forced to 1).
inline SolveReport solve_goalflow(const CrossPoseProblem& p, const SolverOptions& opts = {}) {
  return solve_weighted_pose(p.with_blend(1.0), opts);
}

}  // namespace wpose
