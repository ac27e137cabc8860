#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "weighted_pose/errors.hpp"

namespace wpose {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Points = Eigen::MatrixX3d;  // one point per row

namespace detail {

inline bool all_finite(const auto& m) { return m.allFinite(); }

inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

// Nearest rotation in the Frobenius sense (orthogonal polar factor).
inline Mat3 polar_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace detail

/// Proper rigid transform x -> R x + t.
///
/// Construction checks that `rotation` is orthonormal with det +1. Inputs
/// whose orthonormality defect ||R^T R - I||_F lies in (1e-9, 1e-6] are
/// snapped to the nearest rotation; anything worse, and any reflection, is
/// rejected with InvalidInput.
class RigidTransform {
 public:
  static constexpr double kExactTol = 1e-9;
  static constexpr double kRepairTol = 1e-6;

  RigidTransform() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}

  RigidTransform(const Mat3& rotation, const Vec3& translation)
      : rotation_(rotation), translation_(translation) {
    if (!detail::all_finite(rotation_) || !detail::all_finite(translation_))
      throw InvalidInput("rigid transform has non-finite entries");
    const double defect = (rotation_.transpose() * rotation_ - Mat3::Identity()).norm();
    const double det = rotation_.determinant();
    if (det <= 0.0)
      throw InvalidInput("rotation has non-positive determinant (reflection)");
    if (defect > kRepairTol || std::abs(det - 1.0) > kRepairTol)
      throw InvalidInput("rotation is not orthonormal (defect " + std::to_string(defect) + ")");
    if (defect > kExactTol || std::abs(det - 1.0) > kExactTol)
      rotation_ = detail::polar_rotation(rotation_);
  }

  static RigidTransform identity() { return {}; }

  static RigidTransform from_translation(const Vec3& t) {
    return RigidTransform(Mat3::Identity(), t);
  }

  // Rotation by `angle` radians about `axis` (need not be unit length).
  static RigidTransform from_axis_angle(const Vec3& axis, double angle,
                                        const Vec3& t = Vec3::Zero()) {
    const double n = axis.norm();
    if (!(n > 0.0)) throw InvalidInput("rotation axis must be nonzero");
    return RigidTransform(Eigen::AngleAxisd(angle, axis / n).toRotationMatrix(), t);
  }

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation_;
    m.topRightCorner<3, 1>() = translation_;
    return m;
  }

  Vec3 operator*(const Vec3& p) const { return rotation_ * p + translation_; }

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

/// Ordered, non-empty set of finite 3D points.
class PointCloud {
 public:
  explicit PointCloud(Points points) : points_(std::move(points)) {
    if (points_.rows() < 1) throw InvalidInput("point cloud must contain at least one point");
    if (!detail::all_finite(points_)) throw InvalidInput("point cloud has non-finite coordinates");
  }

  const Points& points() const { return points_; }
  Eigen::Index size() const { return points_.rows(); }
  Vec3 point(Eigen::Index i) const { return points_.row(i).transpose(); }

 private:
  Points points_;
};

struct MetricTriple {
  double rot_err_deg = 0.0;
  double trans_err = 0.0;
  double pp_mse = 0.0;
};

// Applies b first, then a.
inline RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return RigidTransform(a.rotation() * b.rotation(),
                        a.rotation() * b.translation() + a.translation());
}

inline RigidTransform invert(const RigidTransform& t) {
  const Mat3 rt = t.rotation().transpose();
  return RigidTransform(rt, -rt * t.translation());
}

inline Points apply(const RigidTransform& t, const Points& pts) {
  Points out = pts * t.rotation().transpose();
  out.rowwise() += t.translation().transpose();
  return out;
}

inline PointCloud apply(const RigidTransform& t, const PointCloud& pc) {
  return PointCloud(apply(t, pc.points()));
}

// Geodesic angle of a rotation matrix in radians. The atan2 form stays
// accurate near 0 and 180 degrees where acos((tr - 1) / 2) loses digits.
inline double rotation_angle(const Mat3& r) {
  const Vec3 axis_part(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double sin_part = 0.5 * axis_part.norm();
  const double cos_part = 0.5 * (r.trace() - 1.0);
  return std::atan2(sin_part, cos_part);
}

inline double rotation_error_deg(const RigidTransform& pred, const RigidTransform& gt) {
  const Mat3 rel = pred.rotation() * gt.rotation().transpose();
  return std::clamp(rotation_angle(rel) * 180.0 / std::numbers::pi, 0.0, 180.0);
}

inline double translation_error(const RigidTransform& pred, const RigidTransform& gt) {
  return (pred.translation() - gt.translation()).norm();
}

inline double per_point_mse(const RigidTransform& pred, const RigidTransform& gt,
                            const PointCloud& pc) {
  const Points diff = apply(pred, pc.points()) - apply(gt, pc.points());
  return diff.rowwise().squaredNorm().mean();
}

inline MetricTriple evaluate_metrics(const RigidTransform& pred, const RigidTransform& gt,
                                     const PointCloud& pc) {
  return {rotation_error_deg(pred, gt), translation_error(pred, gt), per_point_mse(pred, gt, pc)};
}

}  // namespace wpose
