// wpose: generate synthetic cross-pose scenarios, solve them, and evaluate
// metric grids. Exit codes: 0 success, 2 input error, 3 degenerate geometry,
// 4 I/O error.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "weighted_pose/commands.hpp"

namespace {

std::vector<wpose::DemeanMode> parse_modes(const std::vector<std::string>& names) {
  std::vector<wpose::DemeanMode> modes;
  for (const auto& n : names) modes.push_back(wpose::parse_demean_mode(n));
  return modes;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace wpose;
  CLI::App app{"Weighted cross-pose solver"};
  app.require_subcommand(1);

  const std::vector<std::string> mode_names = {"demean", "paper-literal"};
  const std::vector<std::string> weighting_names = {"paper-literal-weighting", "normalized-weighting"};

  cli::GenerateArgs gen;
  std::string gen_out = ".";
  auto* generate = app.add_subcommand("generate", "Write synthetic scenario files");
  generate->add_option("--count", gen.count, "Number of scenarios")->default_val(1);
  generate->add_option("--kind", gen.kind, "Scenario kind")
      ->check(CLI::IsMember({"free-floating", "articulated", "mixed"}))
      ->default_val("free-floating");
  generate->add_option("--noise", gen.noise_sigma, "Noise sigma")->default_val(0.0)->check(CLI::NonNegativeNumber);
  generate->add_option("--seed", gen.seed, "64-bit seed")->default_val(0);
  generate->add_option("--out", gen_out, "Output directory")->default_val(".");
  generate->add_option("--n-action", gen.n_action, "Action cloud size")->default_val(128);
  generate->add_option("--n-anchor", gen.n_anchor, "Anchor cloud size")->default_val(128);
  generate->add_option("--w", gen.blend, "Blend stored in the files")->default_val(0.5)->check(CLI::Range(0.0, 1.0));

  std::string solve_path;
  std::optional<double> solve_w;
  std::string solve_mode = "demean", solve_weighting = "paper-literal-weighting";
  auto* solve = app.add_subcommand("solve", "Solve one scenario file, print JSON");
  solve->add_option("scenario", solve_path, "Scenario JSON")->required();
  solve->add_option("--w", solve_w, "Override the file's blend")->check(CLI::Range(0.0, 1.0));
  solve->add_option("--mode", solve_mode)->check(CLI::IsMember(mode_names))->default_val("demean");
  solve->add_option("--flow-weighting", solve_weighting)
      ->check(CLI::IsMember(weighting_names))
      ->default_val("paper-literal-weighting");

  cli::EvalArgs ev;
  std::string ev_dir, ev_out = "metrics.csv", ev_weighting = "paper-literal-weighting";
  std::vector<std::string> ev_modes = {"demean"};
  auto add_eval_options = [&](CLI::App* cmd) {
    cmd->add_option("scenario_dir", ev_dir, "Directory of scenario files")->required();
    cmd->add_option("--w-grid", ev.w_grid, "Comma-separated blends")->delimiter(',');
    cmd->add_option("--mode", ev_modes, "Modes (comma-separated)")->delimiter(',')->check(CLI::IsMember(mode_names));
    cmd->add_option("--flow-weighting", ev_weighting)
        ->check(CLI::IsMember(weighting_names))
        ->default_val("paper-literal-weighting");
    cmd->add_option("--oracle-restarts", ev.oracle_restarts)->default_val(8);
    cmd->add_option("--out", ev_out, "Output CSV")->default_val("metrics.csv");
    cmd->add_option("--seed", ev.seed, "Seed mixed into the oracle restarts")->default_val(0);
  };
  auto* eval = app.add_subcommand("eval", "Evaluate scenarios into a metrics CSV");
  add_eval_options(eval);

  cli::SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "Evaluate scenarios across corruption levels");
  add_eval_options(sweep);
  sweep->add_option("--corruption", sw.corruption)
      ->check(CLI::IsMember(corruption_names()))
      ->default_val("corr-outliers");
  sweep->add_option("--levels", sw.levels, "Comma-separated corruption levels")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kInputError;
  }

  if (*generate) {
    gen.out_dir = gen_out;
    return cli::cmd_generate(gen, std::cerr);
  }
  if (*solve) {
    const SolverOptions opts{parse_demean_mode(solve_mode), parse_flow_weighting(solve_weighting)};
    return cli::cmd_solve(solve_path, solve_w, opts, std::cout, std::cerr);
  }
  ev.scenario_dir = ev_dir;
  ev.out_csv = ev_out;
  ev.modes = parse_modes(ev_modes);
  ev.flow_weighting = parse_flow_weighting(ev_weighting);
  if (*eval) return cli::cmd_eval(ev, std::cout, std::cerr);
  sw.eval = ev;
  return cli::cmd_sweep(sw, std::cout, std::cerr);
}
