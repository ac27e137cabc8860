#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "weighted_pose/errors.hpp"
#include "weighted_pose/geometry.hpp"
#include "weighted_pose/losses.hpp"
#include "weighted_pose/problem.hpp"

namespace wpose {

enum class ScenarioKind { kFreeFloating, kArticulated };

inline std::string_view to_string(ScenarioKind k) {
  return k == ScenarioKind::kFreeFloating ? "free-floating" : "articulated";
}

inline ScenarioKind parse_scenario_kind(std::string_view s) {
  if (s == "free-floating") return ScenarioKind::kFreeFloating;
  if (s == "articulated") return ScenarioKind::kArticulated;
  throw InvalidInput("unknown scenario kind '" + std::string(s) + "'");
}

/// A cross-pose problem with the transform that solves it exactly at zero noise.
struct ScenarioBundle {
  CrossPoseProblem problem;
  RigidTransform gt;
  ScenarioKind kind = ScenarioKind::kFreeFloating;
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;
};

/// Single-axis joint. For a prismatic joint the two "angles" are positions
/// along the axis in length units.
struct RevoluteJoint {
  Vec3 axis_point = Vec3::Zero();
  Vec3 axis_direction = Vec3::UnitZ();
  double current_angle = 0.0;
  double open_angle = 0.0;
  bool prismatic = false;

  void validate() const {
    if (!axis_point.allFinite() || !axis_direction.allFinite() || !std::isfinite(current_angle) ||
        !std::isfinite(open_angle))
      throw InvalidInput("joint parameters must be finite");
    if (std::abs(axis_direction.norm() - 1.0) > 1e-12)
      throw InvalidInput("joint axis direction must be a unit vector");
  }

  // Motion of the moving part from `from` to `to`.
  RigidTransform motion(double from, double to) const {
    validate();
    const double delta = to - from;
    if (prismatic) return RigidTransform::from_translation(delta * axis_direction);
    const Mat3 r = Eigen::AngleAxisd(delta, axis_direction).toRotationMatrix();
    return RigidTransform(r, axis_point - r * axis_point);
  }

  RigidTransform opening() const { return motion(current_angle, open_angle); }
};

// Deterministic 64-bit mixing for deriving child seeds.
constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0x9e3779b97f4a7c15ULL) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace detail {

using Rng = std::mt19937_64;

inline Points uniform_box(Rng& rng, Eigen::Index n, const Vec3& lo, const Vec3& hi) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Points p(n, 3);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) p(i, c) = lo(c) + (hi(c) - lo(c)) * u(rng);
  return p;
}

inline Vec3 random_unit(Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(g(rng), g(rng), g(rng));
  } while (v.norm() < 1e-6);
  return v.normalized();
}

// Uniform on SO(3): normalized Gaussian 4-vector as a unit quaternion.
inline Mat3 random_rotation(Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::Vector4d q;
  do {
    q = Eigen::Vector4d(g(rng), g(rng), g(rng), g(rng));
  } while (q.norm() < 1e-6);
  q.normalize();
  return Eigen::Quaterniond(q(0), q(1), q(2), q(3)).toRotationMatrix();
}

inline RigidTransform random_transform(Rng& rng) {
  const Mat3 r = random_rotation(rng);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Vec3 t(u(rng), u(rng), u(rng));
  return RigidTransform(r, t);
}

// Log-normal importance weights, normalized to sum to one.
inline Eigen::VectorXd random_alpha(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd a(n);
  for (Eigen::Index i = 0; i < n; ++i) a(i) = std::exp(g(rng));
  return a / a.sum();
}

inline Points gaussian(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Points p(n, 3);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) p(i, c) = g(rng);
  return p;
}

// Correspondence noise: point i has isotropic std sigma / sqrt(N alpha_i), so
// alpha is the inverse-variance weight and the mean variance is about sigma^2.
inline Points confidence_scaled(const Points& unit_noise, const Eigen::VectorXd& alpha, double sigma) {
  const double n = static_cast<double>(alpha.size());
  const Eigen::ArrayXd scale = sigma * (1.0 / (n * alpha.array())).sqrt();
  return unit_noise.array().colwise() * scale;
}

inline void require_sizes(Eigen::Index n_a, Eigen::Index n_b, double noise_sigma) {
  if (n_a < 3 || n_b < 3) throw InvalidInput("scenario clouds need at least 3 points each");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
    throw InvalidInput("noise_sigma must be finite and nonnegative");
}

// Builds correspondences and flow consistent with gt, then perturbs them.
inline CrossPoseProblem consistent_problem(Rng& rng, const Points& pa, const Points& pb,
                                           const RigidTransform& gt, double noise_sigma,
                                           double blend) {
  const Eigen::VectorXd alpha_a = random_alpha(rng, pa.rows());
  const Eigen::VectorXd alpha_b = random_alpha(rng, pb.rows());
  const Points na = gaussian(rng, pa.rows());
  const Points nb = gaussian(rng, pb.rows());
  const Points nf = gaussian(rng, pa.rows());

  ProblemInputs in;
  in.action_points = pa;
  in.anchor_points = pb;
  in.corr_action = apply(gt, pa);
  in.corr_anchor = apply(invert(gt), pb);
  in.goal_flow = apply(gt, pa) - pa;
  if (noise_sigma > 0.0) {
    in.corr_action += confidence_scaled(na, alpha_a, noise_sigma);
    in.corr_anchor += confidence_scaled(nb, alpha_b, noise_sigma);
    in.goal_flow += noise_sigma * nf;
  }
  in.alpha_action = alpha_a;
  in.alpha_anchor = alpha_b;
  in.blend = blend;
  return CrossPoseProblem(std::move(in));
}

}  // namespace detail

/// Two objects sampled in the unit box around the origin (the demonstration
/// pose), each moved by an independent random transform.
inline ScenarioBundle make_free_floating(std::uint64_t seed, Eigen::Index n_a, Eigen::Index n_b,
                                         double noise_sigma, double blend = 0.5) {
  detail::require_sizes(n_a, n_b, noise_sigma);
  detail::Rng rng(seed);
  const Vec3 lo = Vec3::Constant(-0.5), hi = Vec3::Constant(0.5);
  const Points demo_a = detail::uniform_box(rng, n_a, lo, hi);
  const Points demo_b = detail::uniform_box(rng, n_b, lo, hi);
  const RigidTransform t_alpha = detail::random_transform(rng);
  const RigidTransform t_beta = detail::random_transform(rng);
  const RigidTransform gt = ground_truth_transform(t_alpha, t_beta);
  const Points pa = apply(t_alpha, demo_a);
  const Points pb = apply(t_beta, demo_b);
  return {detail::consistent_problem(rng, pa, pb, gt, noise_sigma, blend), gt,
          ScenarioKind::kFreeFloating, seed, noise_sigma};
}

/// Joint with a random unit axis through a point in the unit box. One in four
/// joints is prismatic (drawer-like).
inline RevoluteJoint random_joint(std::uint64_t seed) {
  detail::Rng rng(mix_seed(seed, 0x6a6f696e74ULL));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RevoluteJoint j;
  j.axis_direction = detail::random_unit(rng);
  j.axis_point = detail::uniform_box(rng, 1, Vec3::Constant(-0.5), Vec3::Constant(0.5)).row(0);
  j.prismatic = u(rng) < 0.25;
  if (j.prismatic) {
    j.current_angle = 0.1 * u(rng);
    j.open_angle = j.current_angle + 0.2 + 0.3 * u(rng);
  } else {
    j.current_angle = (std::numbers::pi / 6.0) * u(rng);
    j.open_angle = j.current_angle + std::numbers::pi / 6.0 + (std::numbers::pi / 3.0) * u(rng);
  }
  return j;
}

/// Door-on-body scene: the action cloud is a thin panel hinged on the joint
/// axis at current_angle, the anchor cloud is the static body behind it, and
/// the ground truth is the joint motion to open_angle.
inline ScenarioBundle make_articulated(std::uint64_t seed, Eigen::Index n_a, Eigen::Index n_b,
                                       const RevoluteJoint& joint, double noise_sigma,
                                       double blend = 0.5) {
  detail::require_sizes(n_a, n_b, noise_sigma);
  joint.validate();
  detail::Rng rng(seed);

  const Vec3& axis = joint.axis_direction;
  const Vec3 helper = std::abs(axis.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 e1 = (helper - helper.dot(axis) * axis).normalized();
  const Vec3 e2 = axis.cross(e1);
  Mat3 frame;
  frame << axis, e1, e2;  // local (height, width, depth) -> world

  // Local coordinates: height along the axis, width away from it, depth across.
  const Points door_local = detail::uniform_box(rng, n_a, Vec3(-0.4, 0.05, -0.02), Vec3(0.4, 0.8, 0.02));
  const Points body_local = detail::uniform_box(rng, n_b, Vec3(-0.4, 0.0, -0.8), Vec3(0.4, 0.8, -0.05));
  const RigidTransform to_world(frame, joint.axis_point);
  const RigidTransform closed_pose = compose(joint.motion(0.0, joint.current_angle), to_world);

  const Points pa = apply(closed_pose, door_local);
  const Points pb = apply(to_world, body_local);
  const RigidTransform gt = joint.opening();
  return {detail::consistent_problem(rng, pa, pb, gt, noise_sigma, blend), gt,
          ScenarioKind::kArticulated, seed, noise_sigma};
}

// Scenario with kind-appropriate random geometry, fully determined by seed.
inline ScenarioBundle make_scenario(ScenarioKind kind, std::uint64_t seed, Eigen::Index n_a,
                                    Eigen::Index n_b, double noise_sigma, double blend = 0.5) {
  if (kind == ScenarioKind::kFreeFloating) return make_free_floating(seed, n_a, n_b, noise_sigma, blend);
  return make_articulated(seed, n_a, n_b, random_joint(seed), noise_sigma, blend);
}

/// Named stress corruption. Levels: outlier fraction for corr-outliers and
/// flow-outliers, shrink factor for flow-scale (flow *= 1 - level), mixing
/// fraction toward fresh random weights for alpha-random.
struct CorruptionSpec {
  std::string name;
  double level = 0.0;
  std::uint64_t seed = 0;
};

inline const std::vector<std::string>& corruption_names() {
  static const std::vector<std::string> names = {"corr-outliers", "flow-outliers", "flow-scale",
                                                 "alpha-random"};
  return names;
}

namespace detail {

// Replaces round(rho * N) rows with points uniform in the rows' bounding box
// scaled 3x about its centre.
inline void inject_outliers(Rng& rng, Points& rows, double rho) {
  const auto n = rows.rows();
  const auto count = static_cast<Eigen::Index>(std::llround(rho * static_cast<double>(n)));
  if (count == 0) return;
  const Vec3 lo = rows.colwise().minCoeff();
  const Vec3 hi = rows.colwise().maxCoeff();
  const Vec3 centre = 0.5 * (lo + hi);
  const Vec3 half = 1.5 * (hi - lo);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  const Points repl = uniform_box(rng, count, centre - half, centre + half);
  for (Eigen::Index k = 0; k < count; ++k) rows.row(idx[static_cast<std::size_t>(k)]) = repl.row(k);
}

}  // namespace detail

namespace detail {
// FNV-1a; std::hash is not stable across standard libraries.
inline std::uint64_t name_hash(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}
}  // namespace detail

inline ScenarioBundle corrupt(const ScenarioBundle& b, const CorruptionSpec& spec) {
  const auto& names = corruption_names();
  if (std::find(names.begin(), names.end(), spec.name) == names.end())
    throw InvalidInput("unknown corruption '" + spec.name + "'");
  if (!std::isfinite(spec.level)) throw InvalidInput("corruption level must be finite");
  if (spec.name != "flow-scale" && (spec.level < 0.0 || spec.level > 1.0))
    throw InvalidInput("corruption level for '" + spec.name + "' must lie in [0, 1]");
  if (spec.level == 0.0) return b;

  detail::Rng rng(mix_seed(b.seed, mix_seed(spec.seed, detail::name_hash(spec.name))));
  ProblemInputs in = b.problem.inputs();
  if (spec.name == "corr-outliers") {
    detail::inject_outliers(rng, in.corr_action, spec.level);
    detail::inject_outliers(rng, in.corr_anchor, spec.level);
  } else if (spec.name == "flow-outliers") {
    Points goal = in.action_points + in.goal_flow;
    detail::inject_outliers(rng, goal, spec.level);
    in.goal_flow = goal - in.action_points;
  } else if (spec.name == "flow-scale") {
    in.goal_flow *= 1.0 - spec.level;
  } else {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto mix = [&](Eigen::VectorXd& a) {
      Eigen::VectorXd fresh(a.size());
      for (Eigen::Index i = 0; i < a.size(); ++i) fresh(i) = u(rng);
      a = (1.0 - spec.level) * a + spec.level * fresh / fresh.sum();
    };
    mix(in.alpha_action);
    mix(in.alpha_anchor);
  }
  return {CrossPoseProblem(std::move(in)), b.gt, b.kind, b.seed, b.noise_sigma};
}

}  // namespace wpose
