// Command-line front end: runs inspection / CIS scenarios and the
// baseline comparison, writing trace CSVs and JSON reports.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "catp/config_io.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> iterations;
  bool baseline = false;
  bool no_cis = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Scenario config JSON");
  cmd->add_option("--seed", args.seed, "Override the config seed");
  cmd->add_option("--out", args.out_dir, "Output directory");
  cmd->add_option("--iterations", args.iterations, "Override the iteration count");
  cmd->add_flag("--baseline", args.baseline, "Use the nonlinear baseline planner");
  cmd->add_flag("--no-cis", args.no_cis, "Disable the insurance service (control run)");
}

catp::ScenarioConfig make_config(const CommonArgs& args, catp::ScenarioMode mode) {
  catp::ScenarioConfig cfg;
  if (!args.config_path.empty()) {
    cfg = catp::load_config(args.config_path);
  } else {
    cfg.mode = mode;
    if (mode == catp::ScenarioMode::Cis) {
      cfg.lambda2_min = 0.25;
      cfg.iterations = 1000;
    }
  }
  cfg.mode = mode;
  if (args.seed) cfg.seed = *args.seed;
  if (args.iterations) cfg.iterations = *args.iterations;
  if (args.baseline) cfg.use_baseline = true;
  if (args.no_cis) cfg.cis_enabled = false;
  cfg.validate();
  return cfg;
}

int run_single(const CommonArgs& args, catp::ScenarioMode mode) {
  const catp::ScenarioConfig cfg = make_config(args, mode);
  std::filesystem::create_directories(args.out_dir);
  const catp::ScenarioResult result = catp::run_scenario(cfg);

  catp::write_trace_csv(result.trace, cfg.dim, args.out_dir + "/trace.csv");
  catp::write_text_file(catp::report_to_json(result.report), args.out_dir + "/report.json");

  const catp::VerificationReport verify = catp::verify_trace(result.trace, cfg);
  std::cout << "steps: " << result.trace.steps.size()
            << "  min lambda2: " << verify.min_lambda2
            << "  min margin: " << verify.min_separation_margin
            << "  median ms: " << result.report.timing.median << "\n";
  if (!result.trace.abort_reason.empty()) {
    std::cerr << "run aborted early: " << result.trace.abort_reason << "\n";
    return 1;
  }
  std::cout << "wrote " << args.out_dir << "/trace.csv and report.json\n";
  return 0;
}

int run_compare(const CommonArgs& args) {
  catp::ScenarioConfig cfg = make_config(args, catp::ScenarioMode::Inspection);
  if (args.config_path.empty()) {
    cfg.robot_count = 6;
    cfg.poi_count = 2;
    cfg.horizon.K = 1;
    cfg.iterations = 200;
  }
  cfg.use_baseline = false;
  cfg.validate();
  std::filesystem::create_directories(args.out_dir);

  const catp::CompareReport rep = catp::compare_scenario(cfg);
  catp::write_text_file(catp::compare_report_to_json(rep), args.out_dir + "/compare.json");
  std::cout << "median ms approx/baseline: " << rep.median_ms_approx << " / "
            << rep.median_ms_baseline << " (ratio " << rep.median_ratio << ")\n"
            << "terminal assigned diff: " << rep.terminal_assigned_diff
            << " of diameter " << rep.scenario_diameter << "\n"
            << "wrote " << args.out_dir << "/compare.json\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Communication-aware multi-robot trajectory planning toolkit"};
  app.require_subcommand(1);

  CommonArgs inspect_args, cis_args, compare_args;
  CLI::App* inspect = app.add_subcommand("inspect", "Run the POI inspection scenario");
  add_common(inspect, inspect_args);
  CLI::App* cis = app.add_subcommand("cis", "Run the communication insurance scenario");
  add_common(cis, cis_args);
  CLI::App* compare =
      app.add_subcommand("compare", "Run the approximate planner against the baseline");
  add_common(compare, compare_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (inspect->parsed()) return run_single(inspect_args, catp::ScenarioMode::Inspection);
    if (cis->parsed()) return run_single(cis_args, catp::ScenarioMode::Cis);
    if (compare->parsed()) return run_compare(compare_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
