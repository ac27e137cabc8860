#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "weighted_pose/errors.hpp"
#include "weighted_pose/geometry.hpp"
#include "weighted_pose/oracle.hpp"
#include "weighted_pose/scenario_io.hpp"
#include "weighted_pose/solver.hpp"
#include "weighted_pose/synthetic.hpp"

// Implementation of the wpose subcommands. Each returns a process exit code
// and writes only to the streams and paths it is given.

namespace wpose::cli {

enum ExitCode : int {
  kOk = 0,
  kInputError = 2,
  kDegenerate = 3,
  kIoError = 4,
};

inline constexpr const char* kMetricsHeader =
    "scenario_id,kind,w,mode,rot_err_deg,trans_err,pp_mse,objective,oracle_gap";

class IoError : public Error {
 public:
  using Error::Error;
};

struct GenerateArgs {
  std::size_t count = 1;
  std::string kind = "free-floating";  // free-floating, articulated or mixed
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = ".";
  Eigen::Index n_action = 128;
  Eigen::Index n_anchor = 128;
  double blend = 0.5;
};

struct EvalArgs {
  std::filesystem::path scenario_dir;
  std::vector<double> w_grid = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<DemeanMode> modes = {DemeanMode::kDemean};
  FlowWeighting flow_weighting = FlowWeighting::kPaperLiteral;
  std::filesystem::path out_csv;
  int oracle_restarts = 8;
  std::uint64_t seed = 0;  // mixed into each scenario's oracle restart seed
};

struct SweepArgs {
  EvalArgs eval;
  std::string corruption = "corr-outliers";
  std::vector<double> levels = {0.0};
};

struct MetricsRow {
  std::string scenario_id;
  ScenarioKind kind = ScenarioKind::kFreeFloating;
  double w = 0.0;
  DemeanMode mode = DemeanMode::kDemean;
  MetricTriple metrics;
  double objective = 0.0;
  double oracle_gap = 0.0;
};

inline std::string scenario_file_name(std::uint64_t seed, std::size_t index) {
  return "scenario_" + std::to_string(seed) + "_" + std::to_string(index) + ".json";
}

// Writes through a sibling temporary file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path tmp = path.parent_path() / ("." + path.filename().string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + tmp.string() + " for writing");
    f << contents;
    f.flush();
    if (!f) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline ScenarioBundle load_scenario(const std::filesystem::path& path) {
  return parse_scenario(read_file(path));
}

inline ScenarioBundle generate_one(const GenerateArgs& a, std::size_t index) {
  ScenarioKind kind;
  if (a.kind == "mixed")
    kind = index % 2 == 0 ? ScenarioKind::kFreeFloating : ScenarioKind::kArticulated;
  else
    kind = parse_scenario_kind(a.kind);
  return make_scenario(kind, mix_seed(a.seed, index), a.n_action, a.n_anchor, a.noise_sigma, a.blend);
}

inline int cmd_generate(const GenerateArgs& a, std::ostream& err) {
  try {
    if (a.kind != "mixed") parse_scenario_kind(a.kind);
    std::vector<std::string> docs;
    for (std::size_t i = 0; i < a.count; ++i) docs.push_back(serialize_scenario(generate_one(a, i)));
    if (a.count == 0) return kOk;
    std::error_code ec;
    std::filesystem::create_directories(a.out_dir, ec);
    if (ec) throw IoError("cannot create directory " + a.out_dir.string());
    for (std::size_t i = 0; i < a.count; ++i)
      write_file_atomic(a.out_dir / scenario_file_name(a.seed, i), docs[i]);
    return kOk;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

inline nlohmann::json solution_to_json(const SolveReport& r, double blend, FlowWeighting fw) {
  nlohmann::json out;
  auto rot = nlohmann::json::array();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) rot.push_back(r.transform.rotation()(i, j));
  const Vec3& t = r.transform.translation();
  out["rotation"] = rot;
  out["translation"] = {t.x(), t.y(), t.z()};
  out["objective"] = r.objective;
  out["degenerate_flag"] = r.degenerate_flag;
  out["singular_values"] = {r.singular_values(0), r.singular_values(1), r.singular_values(2)};
  out["mode"] = std::string(to_string(r.mode));
  out["flow_weighting"] = std::string(to_string(fw));
  out["blend"] = blend;
  return out;
}

inline int cmd_solve(const std::filesystem::path& scenario_path, std::optional<double> w_override,
                     const SolverOptions& opts, std::ostream& out, std::ostream& err) {
  std::string text;
  try {
    text = read_file(scenario_path);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  }
  try {
    const ScenarioBundle b = parse_scenario(text);
    const CrossPoseProblem problem = w_override ? b.problem.with_blend(*w_override) : b.problem;
    const SolveReport r = solve_weighted_pose(problem, opts);
    out << solution_to_json(r, problem.blend(), opts.flow_weighting).dump(1) << "\n";
    return kOk;
  } catch (const DegenerateGeometry& e) {
    err << "error: degenerate geometry in " << scenario_path.string() << ": " << e.what() << "\n";
    return kDegenerate;
  } catch (const Error& e) {
    err << "error: " << scenario_path.string() << ": " << e.what() << "\n";
    return kInputError;
  }
}

/// Solves one bundle on every (w, mode) pair. The oracle runs once per w and
/// is shared by the modes.
inline std::vector<MetricsRow> evaluate_bundle(const std::string& id, const ScenarioBundle& b,
                                               const EvalArgs& a) {
  std::vector<MetricsRow> rows;
  for (double w : a.w_grid) {
    const CrossPoseProblem problem = b.problem.with_blend(w);
    OracleOptions oo;
    oo.restarts = a.oracle_restarts;
    oo.seed = mix_seed(b.seed, a.seed);
    oo.flow_weighting = a.flow_weighting;
    const OracleResult oracle = minimize_objective(problem, oo);
    for (DemeanMode mode : a.modes) {
      MetricsRow row{id, b.kind, w, mode, {}, 0.0, 0.0};
      try {
        const SolveReport r = solve_weighted_pose(problem, {mode, a.flow_weighting});
        row.metrics = evaluate_metrics(r.transform, b.gt, problem.action_cloud());
        row.objective = r.objective;
        row.oracle_gap = r.objective - oracle.objective;
      } catch (const DegenerateGeometry&) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        row.metrics = {nan, nan, nan};
        row.objective = nan;
        row.oracle_gap = nan;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

inline std::string format_row(const MetricsRow& r) {
  std::string s = r.scenario_id;
  s += ",";
  s += to_string(r.kind);
  s += "," + format_number(r.w) + ",";
  s += to_string(r.mode);
  s += "," + format_number(r.metrics.rot_err_deg) + "," + format_number(r.metrics.trans_err) + "," +
       format_number(r.metrics.pp_mse) + "," + format_number(r.objective) + "," +
       format_number(r.oracle_gap);
  return s;
}

inline void sort_rows(std::vector<MetricsRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const MetricsRow& x, const MetricsRow& y) {
    return std::make_tuple(x.scenario_id, x.w, to_string(x.mode)) <
           std::make_tuple(y.scenario_id, y.w, to_string(y.mode));
  });
}

// Mean metrics per (kind, w, mode), mirroring the FF / Art split of a results table.
inline void print_group_summary(const std::vector<MetricsRow>& rows, std::ostream& out) {
  struct Acc {
    std::size_t n = 0;
    double rot = 0, trans = 0, mse = 0, obj = 0, max_gap = -std::numeric_limits<double>::infinity();
  };
  std::map<std::tuple<std::string, double, std::string>, Acc> groups;
  for (const auto& r : rows) {
    if (std::isnan(r.objective)) continue;
    auto& g = groups[{std::string(to_string(r.kind)), r.w, std::string(to_string(r.mode))}];
    ++g.n;
    g.rot += r.metrics.rot_err_deg;
    g.trans += r.metrics.trans_err;
    g.mse += r.metrics.pp_mse;
    g.obj += r.objective;
    g.max_gap = std::max(g.max_gap, r.oracle_gap);
  }
  out << "kind,w,mode,n,mean_rot_err_deg,mean_trans_err,mean_pp_mse,mean_objective,max_oracle_gap\n";
  for (const auto& [key, g] : groups) {
    const double n = static_cast<double>(g.n);
    out << std::get<0>(key) << "," << format_number(std::get<1>(key)) << "," << std::get<2>(key) << ","
        << g.n << "," << format_number(g.rot / n) << "," << format_number(g.trans / n) << ","
        << format_number(g.mse / n) << "," << format_number(g.obj / n) << ","
        << format_number(g.max_gap) << "\n";
  }
}

namespace detail {

struct LoadedScenario {
  std::string id;
  ScenarioBundle bundle;
};

// Reads every *.json in `dir` in filename order, reporting and skipping bad files.
inline std::vector<LoadedScenario> load_directory(const std::filesystem::path& dir, std::ostream& err,
                                                  std::size_t& failures) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());

  std::vector<LoadedScenario> out;
  failures = 0;
  for (const auto& f : files) {
    try {
      out.push_back({f.stem().string(), load_scenario(f)});
    } catch (const Error& e) {
      ++failures;
      err << "skipping " << f.string() << ": " << e.what() << "\n";
    }
  }
  return out;
}

inline void validate_eval_args(const EvalArgs& a) {
  if (a.w_grid.empty()) throw InvalidInput("w grid is empty");
  for (double w : a.w_grid)
    if (!(w >= 0.0 && w <= 1.0)) throw InvalidInput("w grid values must lie in [0, 1]");
  if (a.modes.empty()) throw InvalidInput("no modes selected");
  if (a.oracle_restarts < 1) throw InvalidInput("oracle restarts must be at least 1");
}

}  // namespace detail

inline int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  try {
    detail::validate_eval_args(a);
    std::size_t failures = 0;
    const auto scenarios = detail::load_directory(a.scenario_dir, err, failures);
    if (scenarios.empty()) {
      err << "error: no readable scenarios in " << a.scenario_dir.string() << "\n";
      return failures > 0 ? kInputError : kIoError;
    }
    std::vector<MetricsRow> rows;
    for (const auto& s : scenarios) {
      auto r = evaluate_bundle(s.id, s.bundle, a);
      rows.insert(rows.end(), r.begin(), r.end());
    }
    sort_rows(rows);

    std::string csv = std::string(kMetricsHeader) + "\n";
    for (const auto& r : rows) csv += format_row(r) + "\n";
    write_file_atomic(a.out_csv, csv);
    print_group_summary(rows, out);
    return kOk;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

inline int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
  try {
    detail::validate_eval_args(a.eval);
    if (a.levels.empty()) throw InvalidInput("no corruption levels given");
    std::size_t failures = 0;
    const auto scenarios = detail::load_directory(a.eval.scenario_dir, err, failures);
    if (scenarios.empty()) {
      err << "error: no readable scenarios in " << a.eval.scenario_dir.string() << "\n";
      return failures > 0 ? kInputError : kIoError;
    }

    std::string csv = std::string(kMetricsHeader) + ",corruption,level\n";
    for (double level : a.levels) {
      std::vector<MetricsRow> rows;
      for (const auto& s : scenarios) {
        const ScenarioBundle b = corrupt(s.bundle, {a.corruption, level, 0});
        auto r = evaluate_bundle(s.id, b, a.eval);
        rows.insert(rows.end(), r.begin(), r.end());
      }
      sort_rows(rows);
      for (const auto& r : rows) csv += format_row(r) + "," + a.corruption + "," + format_number(level) + "\n";
      out << "level " << format_number(level) << "\n";
      print_group_summary(rows, out);
    }
    write_file_atomic(a.eval.out_csv, csv);
    return kOk;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

}  // namespace wpose::cli
