#pragma once

#include "weighted_pose/geometry.hpp"

// Training losses evaluated against known ground truth. Squared cloud norms
// are taken as the mean over points of squared row norms, so values are
// comparable across cloud sizes.

namespace wpose {

struct LossBundle {
  double disp = 0.0;
  double corr = 0.0;
  double cons = 0.0;
  double tf = 0.0;
};

namespace detail {

inline double mean_sq(const Points& a, const Points& b) {
  return (a - b).rowwise().squaredNorm().mean();
}

}  // namespace detail

// Transform that maps the alpha-randomized action cloud into place relative
// to the beta-randomized anchor cloud: T_beta * T_alpha^-1.
inline RigidTransform ground_truth_transform(const RigidTransform& t_alpha,
                                             const RigidTransform& t_beta) {
  return compose(t_beta, invert(t_alpha));
}

inline double point_displacement_loss(const RigidTransform& pred, const RigidTransform& gt,
                                      const PointCloud& pa, const PointCloud& pb) {
  return detail::mean_sq(apply(pred, pa.points()), apply(gt, pa.points())) +
         detail::mean_sq(apply(invert(pred), pb.points()), apply(invert(gt), pb.points()));
}

// Correspondence error against the transform `t`. With t = ground truth this
// is the direct correspondence loss; with t = prediction it is the
// consistency loss, which needs no ground truth.
inline double correspondence_residual(const Points& corr_a, const Points& corr_b,
                                      const RigidTransform& t, const PointCloud& pa,
                                      const PointCloud& pb) {
  if (corr_a.rows() != pa.size() || corr_b.rows() != pb.size())
    throw InvalidInput("correspondence rows do not match cloud sizes");
  return detail::mean_sq(corr_a, apply(t, pa.points())) +
         detail::mean_sq(corr_b, apply(invert(t), pb.points()));
}

inline double correspondence_loss(const Points& corr_a, const Points& corr_b,
                                  const RigidTransform& gt, const PointCloud& pa,
                                  const PointCloud& pb) {
  return correspondence_residual(corr_a, corr_b, gt, pa, pb);
}

inline double consistency_loss(const Points& corr_a, const Points& corr_b,
                               const RigidTransform& pred, const PointCloud& pa,
                               const PointCloud& pb) {
  return correspondence_residual(corr_a, corr_b, pred, pa, pb);
}

// Frobenius distance between the 4x4 homogeneous matrices.
inline double transform_loss(const RigidTransform& pred, const RigidTransform& gt) {
  return (pred.matrix() - gt.matrix()).norm();
}

inline LossBundle evaluate_losses(const RigidTransform& pred, const RigidTransform& gt,
                                  const Points& corr_a, const Points& corr_b,
                                  const PointCloud& pa, const PointCloud& pb) {
  return {point_displacement_loss(pred, gt, pa, pb),
          correspondence_loss(corr_a, corr_b, gt, pa, pb),
          consistency_loss(corr_a, corr_b, pred, pa, pb), transform_loss(pred, gt)};
}

}  // namespace wpose
