#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "weighted_pose/commands.hpp"
#include "weighted_pose/scenario_io.hpp"

namespace wpose {
namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("wpose_io_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

TEST(ScenarioJson, RoundTripIsByteIdentical) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto kind = seed % 2 ? ScenarioKind::kArticulated : ScenarioKind::kFreeFloating;
    const std::string text = serialize_scenario(make_scenario(kind, seed, 16, 12, 0.01 * seed, 0.3));
    const ScenarioBundle back = parse_scenario(text);
    EXPECT_EQ(serialize_scenario(back), text);
    EXPECT_EQ(back.kind, kind);
    EXPECT_EQ(back.seed, seed);
  }
}

TEST(ScenarioJson, HasExactlyTheDocumentedKeys) {
  const auto doc = scenario_to_json(make_free_floating(1, 5, 4, 0.0));
  std::vector<std::string> keys;
  for (const auto& [k, _] : doc.items()) keys.push_back(k);
  const std::vector<std::string> expected = {"action_points", "alpha_action", "alpha_anchor", "anchor_points",
                                             "blend",         "corr_action",  "corr_anchor",  "goal_flow",
                                             "gt_rotation",   "gt_translation", "kind",       "noise_sigma",
                                             "seed",          "version"};
  EXPECT_EQ(keys, expected);
  EXPECT_EQ(doc["gt_rotation"].size(), 9u);
  EXPECT_EQ(doc["version"], 1);
}

TEST(ScenarioJson, DiagnosticsNameTheProblem) {
  auto doc = scenario_to_json(make_free_floating(1, 5, 4, 0.0));
  auto expect_msg = [](const nlohmann::json& d, const std::string& needle) {
    try {
      scenario_from_json(d);
      ADD_FAILURE() << "expected failure mentioning " << needle;
    } catch (const ScenarioParseError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  auto d = doc;
  d.erase("goal_flow");
  expect_msg(d, "goal_flow");
  d = doc;
  d["corr_action"][2] = {1.0, 2.0};
  expect_msg(d, "corr_action[2]");
  d = doc;
  d["version"] = 2;
  expect_msg(d, "version");
  d = doc;
  d["blend"] = 2.0;
  expect_msg(d, "blend");
  d = doc;
  d["extra"] = 1;
  expect_msg(d, "extra");
  d = doc;
  d["kind"] = "floating";
  expect_msg(d, "kind");
  d = doc;
  d["alpha_anchor"].push_back(0.5);
  expect_msg(d, "alpha_anchor");

  try {
    parse_scenario("{\n  \"version\": 1,\n  oops\n}");
    ADD_FAILURE();
  } catch (const ScenarioParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(1.0), "1");
  EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
  EXPECT_EQ(format_number(std::numeric_limits<double>::quiet_NaN()), "nan");
}

TEST(CmdGenerate, DeterministicAndCountZero) {
  const auto d1 = fresh_dir("gen1"), d2 = fresh_dir("gen2");
  std::ostringstream err;
  cli::GenerateArgs a;
  a.count = 1;
  a.seed = 7;
  a.n_action = a.n_anchor = 16;
  a.out_dir = d1;
  ASSERT_EQ(cli::cmd_generate(a, err), cli::kOk);
  a.out_dir = d2;
  ASSERT_EQ(cli::cmd_generate(a, err), cli::kOk);
  EXPECT_EQ(cli::read_file(d1 / "scenario_7_0.json"), cli::read_file(d2 / "scenario_7_0.json"));

  const auto d3 = fresh_dir("gen3");
  a.count = 0;
  a.out_dir = d3;
  EXPECT_EQ(cli::cmd_generate(a, err), cli::kOk);
  EXPECT_TRUE(fs::is_empty(d3));

  a.kind = "bogus";
  a.count = 1;
  EXPECT_EQ(cli::cmd_generate(a, err), cli::kInputError);
}

TEST(CmdGenerate, ReportsUnwritableDirectory) {
  const auto d = fresh_dir("gen_blocked");
  std::ofstream(d / "file") << "x";
  cli::GenerateArgs a;
  a.out_dir = d / "file" / "sub";
  a.n_action = a.n_anchor = 8;
  std::ostringstream err;
  EXPECT_EQ(cli::cmd_generate(a, err), cli::kIoError);
  EXPECT_NE(err.str().find("file"), std::string::npos);
}

TEST(CmdSolve, ZeroNoiseMatchesGroundTruthAndExitCodes) {
  const auto d = fresh_dir("solve");
  const auto b = make_free_floating(3, 32, 32, 0.0, 0.0);
  std::ofstream(d / "s.json") << serialize_scenario(b);
  std::ostringstream out, err;
  ASSERT_EQ(cli::cmd_solve(d / "s.json", std::nullopt, {}, out, err), cli::kOk);
  const auto sol = nlohmann::json::parse(out.str());
  Mat3 r;
  for (int i = 0; i < 9; ++i) r(i / 3, i % 3) = sol["rotation"][static_cast<std::size_t>(i)].get<double>();
  EXPECT_LE((r - b.gt.rotation()).norm(), 1e-8);
  EXPECT_EQ(sol["singular_values"].size(), 3u);
  EXPECT_FALSE(sol["degenerate_flag"].get<bool>());

  std::ostringstream out0;
  ASSERT_EQ(cli::cmd_solve(d / "s.json", 0.0, {}, out0, err), cli::kOk);
  EXPECT_EQ(out0.str(), out.str());

  std::ofstream(d / "bad.json") << "{ not json";
  EXPECT_EQ(cli::cmd_solve(d / "bad.json", std::nullopt, {}, out, err), cli::kInputError);
  EXPECT_EQ(cli::cmd_solve(d / "missing.json", std::nullopt, {}, out, err), cli::kIoError);

  auto in = b.problem.inputs();
  for (Eigen::Index i = 0; i < in.action_points.rows(); ++i) in.action_points.row(i) << 0.01 * i, 0, 0;
  ScenarioBundle degenerate{CrossPoseProblem(in), b.gt, b.kind, b.seed, 0.0};
  std::ofstream(d / "deg.json") << serialize_scenario(degenerate);
  EXPECT_EQ(cli::cmd_solve(d / "deg.json", 1.0, {}, out, err), cli::kDegenerate);
}

TEST(CmdEval, RowsHeaderAndGaps) {
  const auto d = fresh_dir("eval");
  cli::GenerateArgs g;
  g.count = 3;
  g.kind = "mixed";
  g.noise_sigma = 0.0;
  g.n_action = g.n_anchor = 24;
  g.out_dir = d;
  std::ostringstream out, err;
  ASSERT_EQ(cli::cmd_generate(g, err), cli::kOk);
  std::ofstream(d / "junk.json") << "[]";

  cli::EvalArgs e;
  e.scenario_dir = d;
  e.modes = {DemeanMode::kPaperLiteral, DemeanMode::kDemean};
  e.out_csv = d / "m.csv";
  ASSERT_EQ(cli::cmd_eval(e, out, err), cli::kOk);
  EXPECT_NE(err.str().find("junk.json"), std::string::npos);

  const auto lines = split_lines(cli::read_file(e.out_csv));
  ASSERT_EQ(lines.size(), 1u + 3 * 5 * 2);
  EXPECT_EQ(lines[0], cli::kMetricsHeader);
  EXPECT_EQ(lines[1].rfind("scenario_0_0,free-floating,0,demean,", 0), 0u) << lines[1];
  EXPECT_EQ(lines[2].rfind("scenario_0_0,free-floating,0,paper-literal,", 0), 0u) << lines[2];
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::vector<std::string> cols;
    std::istringstream row(lines[i]);
    for (std::string c; std::getline(row, c, ',');) cols.push_back(c);
    ASSERT_EQ(cols.size(), 9u);
    if (cols[3] == "demean") {
      EXPECT_LE(std::stod(cols[4]), 1e-8);
      EXPECT_LE(std::stod(cols[5]), 1e-8);
      EXPECT_LE(std::stod(cols[6]), 1e-8);
      EXPECT_GE(std::stod(cols[8]), -1e-9);
    }
  }
  EXPECT_NE(out.str().find("articulated,0.5,demean,1,"), std::string::npos) << out.str();
}

TEST(CmdEval, FailsOnlyWhenNothingLoads) {
  const auto d = fresh_dir("eval_bad");
  std::ofstream(d / "a.json") << "{";
  cli::EvalArgs e;
  e.scenario_dir = d;
  e.out_csv = d / "m.csv";
  std::ostringstream out, err;
  EXPECT_EQ(cli::cmd_eval(e, out, err), cli::kInputError);
  e.scenario_dir = d / "nope";
  EXPECT_EQ(cli::cmd_eval(e, out, err), cli::kIoError);
}

TEST(CmdSweep, LevelZeroMatchesEvalAndRowCount) {
  const auto d = fresh_dir("sweep");
  cli::GenerateArgs g;
  g.count = 4;
  g.kind = "mixed";
  g.noise_sigma = 0.01;
  g.n_action = g.n_anchor = 24;
  g.out_dir = d / "sc";
  std::ostringstream out, err;
  ASSERT_EQ(cli::cmd_generate(g, err), cli::kOk);

  cli::EvalArgs e;
  e.scenario_dir = d / "sc";
  e.w_grid = {0.0, 1.0};
  e.modes = {DemeanMode::kDemean};
  e.out_csv = d / "eval.csv";
  ASSERT_EQ(cli::cmd_eval(e, out, err), cli::kOk);

  cli::SweepArgs s;
  s.eval = e;
  s.eval.out_csv = d / "sweep.csv";
  s.corruption = "corr-outliers";
  s.levels = {0.0, 0.25, 0.5};
  ASSERT_EQ(cli::cmd_sweep(s, out, err), cli::kOk);

  const auto ev = split_lines(cli::read_file(e.out_csv));
  const auto sw = split_lines(cli::read_file(s.eval.out_csv));
  ASSERT_EQ(sw.size(), 1u + 3 * 4 * 2);
  EXPECT_EQ(sw[0], std::string(cli::kMetricsHeader) + ",corruption,level");
  for (std::size_t i = 1; i < ev.size(); ++i) EXPECT_EQ(sw[i], ev[i] + ",corr-outliers,0");

  // Correspondence corruption never touches the w = 1 rows.
  for (std::size_t i = 1; i < sw.size(); ++i) {
    if (sw[i].find(",1,demean,") == std::string::npos) continue;
    const auto id = sw[i].substr(0, sw[i].find(','));
    for (std::size_t j = 1; j < ev.size(); ++j)
      if (ev[j].rfind(id + ",", 0) == 0 && ev[j].find(",1,demean,") != std::string::npos) {
        EXPECT_EQ(sw[i].substr(0, ev[j].size()), ev[j]);
      }
  }
}

}  // namespace
}  // namespace wpose
