// Command-line front end for the entanglement-transfer simulator.
//
//   fransim validate    [--config FILE]
//   fransim purify      [--config FILE] [--seed N] [--analytic] [--out DIR] [--mc-samples N]
//   fransim chsh-sweep  ...
//   fransim custom      ...
//   fransim fringe-scan ...
//
// Exit codes: 0 success, 1 configuration error, 2 runtime/model error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fransim/config.hpp"
#include "fransim/error.hpp"
#include "fransim/experiment.hpp"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool analytic = false;
  std::optional<std::string> out;
  std::optional<int> mc_samples;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "Experiment config (JSON)");
  cmd->add_option("--seed", o.seed, "Override the master seed");
  cmd->add_flag("--analytic", o.analytic, "Exact probabilities instead of Poisson counts");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--mc-samples", o.mc_samples, "Monte-Carlo resamples per tomography");
  cmd->add_option("--threads", o.threads, "Worker threads for Monte-Carlo resampling");
}

fransim::ExperimentConfig resolve(const Overrides& o) {
  fransim::ExperimentConfig cfg =
      o.config_path.empty() ? fransim::ExperimentConfig{} : fransim::load_config(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.analytic) cfg.tomography.mode = fransim::CountMode::kAnalytic;
  if (o.out) cfg.output_dir = *o.out;
  if (o.mc_samples) cfg.tomography.n_mc_samples = *o.mc_samples;
  if (o.threads) cfg.threads = *o.threads;
  return cfg;
}

void print_summary(const fransim::RunReport& report) {
  const auto& p = report.payload;
  if (p.contains("stages")) {
    for (const char* stage : {"input", "output"}) {
      const auto& s = p["stages"][stage];
      std::printf("%-6s F = %.4f +- %.4f  C = %.4f +- %.4f  purity = %.4f +- %.4f  S = %.4f +- %.4f\n",
                  stage, s["fidelity"]["value"].get<double>(), s["fidelity"]["sigma"].get<double>(),
                  s["concurrence"]["value"].get<double>(), s["concurrence"]["sigma"].get<double>(),
                  s["purity"]["value"].get<double>(), s["purity"]["sigma"].get<double>(),
                  s["s_value"]["value"].get<double>(), s["s_value"]["sigma"].get<double>());
    }
  }
  if (p.contains("visibility")) std::printf("fringe visibility = %.6f\n", p["visibility"].get<double>());
  for (const auto& s : report.series) std::cout << fransim::series_csv(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Franson-interferometer entanglement-transfer simulator"};
  app.require_subcommand(1);
  Overrides o;
  auto* validate_cmd = app.add_subcommand("validate", "Check a config without running it");
  auto* purify_cmd = app.add_subcommand("purify", "Tomography before and after the transfer");
  auto* sweep_cmd = app.add_subcommand("chsh-sweep", "CHSH S-value versus balance parameter p");
  auto* custom_cmd = app.add_subcommand("custom", "Run an arbitrary config or sweep");
  auto* fringe_cmd = app.add_subcommand("fringe-scan", "Franson fringe versus sum phase");
  for (auto* cmd : {validate_cmd, purify_cmd, sweep_cmd, custom_cmd, fringe_cmd}) add_common(cmd, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  fransim::ExperimentConfig cfg;
  try {
    cfg = resolve(o);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  if (*validate_cmd) {
    const auto diags = fransim::validate(cfg);
    for (const auto& d : diags) std::cerr << "error: " << d.field << ": " << d.message << '\n';
    if (!diags.empty()) return kExitConfig;
    std::cout << "config ok\n";
    return 0;
  }

  try {
    fransim::RunReport report;
    if (*purify_cmd) {
      report = fransim::run_purification(cfg);
    } else if (*sweep_cmd) {
      report = fransim::run_chsh_sweep(cfg);
    } else if (*custom_cmd) {
      report = fransim::run_custom(cfg);
    } else {
      report = fransim::run_fringe_scan(cfg);
    }
    auto files = fransim::write_report(report, cfg.output_dir);
    auto plots = fransim::emit_plot_data(report, cfg.output_dir);
    print_summary(report);
    std::cout << "wrote " << files.size() + plots.size() << " files to " << cfg.output_dir << '\n';
  } catch (const fransim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
