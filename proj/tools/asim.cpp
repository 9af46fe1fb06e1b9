// asim command-line front end.
//
// Exit codes: 0 success, 1 validation error, 2 runtime defect, 3 replay divergence.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "asim/config.hpp"
#include "asim/harness.hpp"
#include "asim/log.hpp"
#include "asim/scenario.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kDefect = 2;
constexpr int kDivergence = 3;

int report_config_error(const asim::ConfigError& e) {
  for (const auto& m : e.messages()) std::cerr << "error: " << m << '\n';
  return kValidation;
}

int compile_scenario(const std::string& file, const std::string& out) {
  namespace sc = asim::scenario;
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    std::cerr << file << ":1:1: error: cannot open file\n";
    return kValidation;
  }
  std::ostringstream text;
  text << in.rdbuf();
  try {
    const auto ast = sc::parse(sc::tokenize(text.str()));
    for (const auto& w : ast.warnings) std::cerr << sc::format(w, file) << '\n';
    const std::string rendered = sc::render(sc::compile(ast));
    if (out.empty()) {
      std::cout << rendered;
    } else {
      std::ofstream o(out, std::ios::binary | std::ios::trunc);
      o << rendered;
      if (!o) {
        std::cerr << out << ": write failed\n";
        return kDefect;
      }
    }
    return kOk;
  } catch (const sc::ScenarioError& e) {
    for (const auto& d : e.diagnostics()) std::cerr << sc::format(d, file) << '\n';
    return kValidation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"asim: deterministic agent simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir, reference, scenario_file, scenario_out;
  std::optional<std::uint64_t> seed, replications;

  auto* run = app.add_subcommand("run", "Run an experiment and write its report");
  run->add_option("--config", config_path, "Experiment config file")->required();
  run->add_option("--out", out_dir, "Output directory (overrides run.out_dir)");
  run->add_option("--seed", seed, "Master seed (overrides run.seed)");
  run->add_option("--replications", replications, "Replication count (overrides run.replications)")
      ->check(CLI::PositiveNumber);

  auto* replay = app.add_subcommand("replay", "Re-run an experiment and compare with a reference report");
  replay->add_option("--config", config_path, "Experiment config file")->required();
  replay->add_option("--reference", reference, "Directory holding the reference report")->required();

  auto* validate = app.add_subcommand("validate", "Check a config file and list every problem");
  validate->add_option("--config", config_path, "Experiment config file")->required();

  auto* scenario = app.add_subcommand("scenario", "Scenario notation tools");
  scenario->require_subcommand(1);
  auto* compile = scenario->add_subcommand("compile", "Compile a scenario to its decision graph");
  compile->add_option("file", scenario_file, "Scenario text file")->required();
  compile->add_option("-o,--output", scenario_out, "Write the graph here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kValidation;
  }

  try {
    if (*compile) return compile_scenario(scenario_file, scenario_out);

    asim::ExperimentConfig cfg;
    try {
      cfg = asim::load_config(config_path);
    } catch (const asim::ConfigError& e) {
      return report_config_error(e);
    }

    if (*validate) {
      std::cout << config_path << ": ok\n";
      return kOk;
    }
    if (*run) {
      if (seed) cfg.seed = *seed;
      if (replications) cfg.replications = *replications;
      const std::filesystem::path dir = out_dir.empty() ? cfg.out_dir : out_dir;
      asim::log::info("running ", cfg.replications, " replication(s), seed ", cfg.seed);
      const auto report = asim::run_experiment(cfg);
      for (const auto& path : asim::emit_report(report, dir)) std::cout << path.string() << '\n';
      return kOk;
    }
    if (*replay) {
      const auto result = asim::replay_check(cfg, reference);
      if (result.passed) {
        std::cout << "replay: identical\n";
        return kOk;
      }
      const auto& d = *result.divergence;
      std::cout << "replay: diverged at " << d.file << ':' << d.line << ':' << d.column << '\n';
      return kDivergence;
    }
  } catch (const asim::ConfigError& e) {
    return report_config_error(e);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kDefect;
  }
  return kDefect;
}
