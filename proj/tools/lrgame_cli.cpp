#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "lrgame/harness/config.hpp"
#include "lrgame/harness/record.hpp"
#include "lrgame/harness/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

struct Flags {
  std::string config;
  std::string out;
  std::string format;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  bool timing = false;
};

using lrgame::harness::Experiment;
using lrgame::harness::Format;

Format resolve_format(const Flags& flags, const lrgame::harness::ExperimentConfig& cfg, const std::string& out) {
  if (flags.format == "csv") return Format::Csv;
  if (flags.format == "jsonl") return Format::JsonLines;
  if (cfg.output_format) return *cfg.output_format;
  const auto dot = out.rfind('.');
  if (dot != std::string::npos && out.substr(dot) == ".jsonl") return Format::JsonLines;
  return Format::Csv;
}

int execute(Experiment experiment, const Flags& flags) {
  lrgame::harness::ExperimentConfig cfg;
  try {
    cfg = lrgame::harness::load_config(flags.config, experiment);
  } catch (const lrgame::harness::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (flags.seed) cfg.override_seed(*flags.seed);
  if (flags.tol) cfg.solver.tol = *flags.tol;

  const auto result = lrgame::harness::run(cfg, lrgame::harness::RunOptions{flags.timing});
  const std::string out = !flags.out.empty() ? flags.out : cfg.output_path.value_or("");
  const Format format = resolve_format(flags, cfg, out);
  try {
    if (out.empty() || out == "-") {
      lrgame::harness::emit(result.records, format, std::cout);
    } else {
      lrgame::harness::emit(result.records, format, out);
    }
  } catch (const std::exception& e) {
    std::cerr << "output error: " << e.what() << '\n';
    return kExitIo;
  }

  if (result.failed_cells > 0) {
    for (const auto& r : result.records) {
      const auto& err = std::get<std::string>(r.at("error"));
      if (!err.empty()) std::cerr << "cell " << std::get<std::uint64_t>(r.at("cell")) << ": " << err << '\n';
    }
    return kExitSolver;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equilibria, social optima and estimator comparisons for the regression noise game"};
  app.require_subcommand(1);
  Flags flags;
  std::optional<Experiment> chosen;

  for (auto experiment : {Experiment::Equilibrium, Experiment::SocialOpt, Experiment::Pos, Experiment::Aitken,
                          Experiment::Sweep, Experiment::MonteCarlo, Experiment::GradCheck}) {
    const auto name = lrgame::harness::to_string(experiment);
    auto* sub = app.add_subcommand(name, "Run the '" + name + "' experiment described by a config file");
    sub->add_option("--config", flags.config, "Path to the JSON experiment config")->required();
    sub->add_option("--out", flags.out, "Report path; stdout when omitted or '-'");
    sub->add_option("--format", flags.format, "Report format")->check(CLI::IsMember({"csv", "jsonl"}));
    sub->add_option("--seed", flags.seed, "Replace the config seed and all component seeds");
    sub->add_option("--tol", flags.tol, "Solver tolerance")->check(CLI::PositiveNumber);
    sub->add_flag("--timing", flags.timing, "Add a wall_time_s column (output is then not reproducible)");
    sub->callback([&chosen, experiment] { chosen = experiment; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  return execute(*chosen, flags);
}
