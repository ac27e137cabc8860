#pragma once

#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "weighted_pose/errors.hpp"
#include "weighted_pose/geometry.hpp"

namespace wpose {

/// Raw solver inputs before validation. Row i of each per-point array
/// belongs to point i of the matching cloud.
struct ProblemInputs {
  Points action_points;   // P_A
  Points anchor_points;   // P_B
  Points corr_action;     // predicted anchor-frame position of each action point
  Points corr_anchor;     // predicted action-frame position of each anchor point
  Eigen::VectorXd alpha_action;
  Eigen::VectorXd alpha_anchor;
  Points goal_flow;       // per action point displacement to the goal state
  double blend = 0.0;     // weight of the goal-flow residual
};

namespace detail {

inline Eigen::VectorXd normalized_weights(const Eigen::VectorXd& alpha, const char* name) {
  if (!alpha.allFinite()) throw InvalidInput(std::string(name) + " has non-finite entries");
  if ((alpha.array() < 0.0).any()) throw InvalidWeights(std::string(name) + " has negative entries");
  const double sum = alpha.sum();
  if (!(sum > 0.0)) throw InvalidWeights(std::string(name) + " sums to zero");
  // Already-normalized input is kept bit-for-bit so serialized problems re-parse identically.
  if (std::abs(sum - 1.0) <= 1e-12) return alpha;
  return alpha / sum;
}

inline void require_rows(const Points& m, Eigen::Index rows, const char* name) {
  if (m.rows() != rows)
    throw InvalidInput(std::string(name) + " has " + std::to_string(m.rows()) +
                       " rows, expected " + std::to_string(rows));
  if (!m.allFinite()) throw InvalidInput(std::string(name) + " has non-finite entries");
}

}  // namespace detail

/// Validated cross-pose problem. Immutable; importance weights are normalized
/// to sum to one per cloud.
class CrossPoseProblem {
 public:
  explicit CrossPoseProblem(ProblemInputs in)
      : action_(std::move(in.action_points)), anchor_(std::move(in.anchor_points)) {
    const auto na = action_.size();
    const auto nb = anchor_.size();
    detail::require_rows(in.corr_action, na, "corr_action");
    detail::require_rows(in.corr_anchor, nb, "corr_anchor");
    detail::require_rows(in.goal_flow, na, "goal_flow");
    if (in.alpha_action.size() != na) throw InvalidInput("alpha_action length does not match action cloud");
    if (in.alpha_anchor.size() != nb) throw InvalidInput("alpha_anchor length does not match anchor cloud");
    if (!(in.blend >= 0.0 && in.blend <= 1.0)) throw InvalidInput("blend must lie in [0, 1]");
    corr_action_ = std::move(in.corr_action);
    corr_anchor_ = std::move(in.corr_anchor);
    goal_flow_ = std::move(in.goal_flow);
    alpha_action_ = detail::normalized_weights(in.alpha_action, "alpha_action");
    alpha_anchor_ = detail::normalized_weights(in.alpha_anchor, "alpha_anchor");
    blend_ = in.blend;
  }

  const PointCloud& action_cloud() const { return action_; }
  const PointCloud& anchor_cloud() const { return anchor_; }
  const Points& corr_action() const { return corr_action_; }
  const Points& corr_anchor() const { return corr_anchor_; }
  const Eigen::VectorXd& alpha_action() const { return alpha_action_; }
  const Eigen::VectorXd& alpha_anchor() const { return alpha_anchor_; }
  const Points& goal_flow() const { return goal_flow_; }
  double blend() const { return blend_; }

  Eigen::Index n_action() const { return action_.size(); }
  Eigen::Index n_anchor() const { return anchor_.size(); }

  ProblemInputs inputs() const {
    return {action_.points(), anchor_.points(), corr_action_, corr_anchor_,
            alpha_action_,    alpha_anchor_,    goal_flow_,   blend_};
  }

  CrossPoseProblem with_blend(double w) const {
    auto in = inputs();
    in.blend = w;
    return CrossPoseProblem(std::move(in));
  }

 private:
  PointCloud action_;
  PointCloud anchor_;
  Points corr_action_;
  Points corr_anchor_;
  Eigen::VectorXd alpha_action_;
  Eigen::VectorXd alpha_anchor_;
  Points goal_flow_;
  double blend_ = 0.0;
};

}  // namespace wpose
