#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <system_error>

#include <json.hpp>

#include "weighted_pose/errors.hpp"
#include "weighted_pose/geometry.hpp"
#include "weighted_pose/problem.hpp"
#include "weighted_pose/synthetic.hpp"

namespace wpose {

inline constexpr int kScenarioVersion = 1;

// Schema or content problem in a scenario document; the message names the field.
class ScenarioParseError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

namespace detail {

inline nlohmann::json rows_to_json(const Points& m) {
  auto arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) arr.push_back({m(i, 0), m(i, 1), m(i, 2)});
  return arr;
}

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  auto arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline const nlohmann::json& field(const nlohmann::json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) throw ScenarioParseError(std::string("missing field '") + key + "'");
  return *it;
}

inline double number(const nlohmann::json& v, const std::string& where) {
  if (!v.is_number()) throw ScenarioParseError("field '" + where + "' must be a number");
  return v.get<double>();
}

inline Points json_to_rows(const nlohmann::json& doc, const char* key) {
  const auto& v = field(doc, key);
  if (!v.is_array()) throw ScenarioParseError(std::string("field '") + key + "' must be an array of [x, y, z]");
  Points m(static_cast<Eigen::Index>(v.size()), 3);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& row = v[i];
    const std::string where = std::string(key) + "[" + std::to_string(i) + "]";
    if (!row.is_array() || row.size() != 3)
      throw ScenarioParseError("field '" + where + "' must have exactly 3 entries");
    for (int c = 0; c < 3; ++c) m(static_cast<Eigen::Index>(i), c) = number(row[c], where);
  }
  return m;
}

inline Eigen::VectorXd json_to_vector(const nlohmann::json& doc, const char* key,
                                      std::size_t expected = 0) {
  const auto& v = field(doc, key);
  if (!v.is_array()) throw ScenarioParseError(std::string("field '") + key + "' must be an array");
  if (expected != 0 && v.size() != expected)
    throw ScenarioParseError(std::string("field '") + key + "' must have " + std::to_string(expected) +
                             " entries, found " + std::to_string(v.size()));
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = number(v[i], std::string(key) + "[" + std::to_string(i) + "]");
  return out;
}

}  // namespace detail

inline nlohmann::json scenario_to_json(const ScenarioBundle& b) {
  const auto& p = b.problem;
  nlohmann::json doc;
  doc["version"] = kScenarioVersion;
  doc["kind"] = std::string(to_string(b.kind));
  doc["seed"] = b.seed;
  doc["noise_sigma"] = b.noise_sigma;
  doc["action_points"] = detail::rows_to_json(p.action_cloud().points());
  doc["anchor_points"] = detail::rows_to_json(p.anchor_cloud().points());
  doc["corr_action"] = detail::rows_to_json(p.corr_action());
  doc["corr_anchor"] = detail::rows_to_json(p.corr_anchor());
  doc["alpha_action"] = detail::vector_to_json(p.alpha_action());
  doc["alpha_anchor"] = detail::vector_to_json(p.alpha_anchor());
  doc["goal_flow"] = detail::rows_to_json(p.goal_flow());
  doc["blend"] = p.blend();
  auto rot = nlohmann::json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rot.push_back(b.gt.rotation()(r, c));
  doc["gt_rotation"] = rot;
  doc["gt_translation"] = {b.gt.translation().x(), b.gt.translation().y(), b.gt.translation().z()};
  return doc;
}

inline std::string serialize_scenario(const ScenarioBundle& b) {
  return scenario_to_json(b).dump(1) + "\n";
}

inline ScenarioBundle scenario_from_json(const nlohmann::json& doc) {
  static const std::set<std::string> known = {
      "version",     "kind",         "seed",         "noise_sigma", "action_points",
      "anchor_points", "corr_action", "corr_anchor", "alpha_action", "alpha_anchor",
      "goal_flow",   "blend",        "gt_rotation",  "gt_translation"};
  if (!doc.is_object()) throw ScenarioParseError("scenario document must be a JSON object");
  for (const auto& [key, _] : doc.items())
    if (!known.contains(key)) throw ScenarioParseError("unknown field '" + key + "'");

  const auto& version = detail::field(doc, "version");
  if (!version.is_number_integer() || version.get<std::int64_t>() != kScenarioVersion)
    throw ScenarioParseError("field 'version' must be the integer 1");
  const auto& kind = detail::field(doc, "kind");
  if (!kind.is_string()) throw ScenarioParseError("field 'kind' must be a string");
  const auto& seed = detail::field(doc, "seed");
  if (!seed.is_number_unsigned())
    throw ScenarioParseError("field 'seed' must be a nonnegative integer");

  ScenarioKind k;
  try {
    k = parse_scenario_kind(kind.get<std::string>());
  } catch (const InvalidInput& e) {
    throw ScenarioParseError(std::string("field 'kind': ") + e.what());
  }

  ProblemInputs in;
  in.action_points = detail::json_to_rows(doc, "action_points");
  in.anchor_points = detail::json_to_rows(doc, "anchor_points");
  in.corr_action = detail::json_to_rows(doc, "corr_action");
  in.corr_anchor = detail::json_to_rows(doc, "corr_anchor");
  in.goal_flow = detail::json_to_rows(doc, "goal_flow");
  in.alpha_action = detail::json_to_vector(doc, "alpha_action");
  in.alpha_anchor = detail::json_to_vector(doc, "alpha_anchor");
  in.blend = detail::number(detail::field(doc, "blend"), "blend");
  const double noise = detail::number(detail::field(doc, "noise_sigma"), "noise_sigma");
  if (!(noise >= 0.0)) throw ScenarioParseError("field 'noise_sigma' must be nonnegative");

  const Eigen::VectorXd rot = detail::json_to_vector(doc, "gt_rotation", 9);
  const Eigen::VectorXd trans = detail::json_to_vector(doc, "gt_translation", 3);
  Mat3 r;
  r << rot(0), rot(1), rot(2), rot(3), rot(4), rot(5), rot(6), rot(7), rot(8);

  auto build = [&]() -> ScenarioBundle {
    RigidTransform gt(r, Vec3(trans(0), trans(1), trans(2)));
    return {CrossPoseProblem(std::move(in)), gt, k, seed.get<std::uint64_t>(), noise};
  };
  try {
    return build();
  } catch (const ScenarioParseError&) {
    throw;
  } catch (const Error& e) {
    throw ScenarioParseError(e.what());
  }
}

// Parses a scenario document; syntax errors report line and column.
inline ScenarioBundle parse_scenario(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioParseError(e.what());
  }
  return scenario_from_json(doc);
}

// Shortest decimal form that round-trips to the same double.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace wpose
