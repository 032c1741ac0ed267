// Command-line front end for the induction-motor saturation/observability lab.
//
//   imlab characterize   locked-rotor saliency sweep -> characterize.csv
//   imlab observability  condition numbers on the zero-stator-speed line
//   imlab convergence    extraction error vs injection frequency
//   imlab simulate       time-domain run of a scenario file -> trajectory.csv
//
// Exit codes: 0 ok, 2 configuration problem, 3 numerical failure.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "imlab/experiments.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  int parallel = 0;          // 0 = keep config value
  bool per_unit = false;
  bool plots = false;
  std::string waveform;      // empty = keep config value
  double omega_hz = 0.0;     // 0 = keep config value
  double inject_amp = -1.0;  // <0 = keep config value
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Config file (defaults used when omitted)");
  cmd->add_option("--out", args.out_dir, "Output directory");
  cmd->add_option("--parallel", args.parallel, "Worker threads for sweeps");
  cmd->add_flag("--per-unit", args.per_unit, "Per-unit scaling of observability matrices");
  cmd->add_flag("--plots", args.plots, "Also write gnuplot scripts");
  cmd->add_option("--waveform", args.waveform, "Injection waveform: square|sine")
      ->check(CLI::IsMember({"square", "sine"}));
  cmd->add_option("--omega-hz", args.omega_hz, "Injection frequency [Hz]");
  cmd->add_option("--inject-amp", args.inject_amp, "Injection amplitude [V]");
}

imlab::LabConfig resolve_config(const CommonArgs& args) {
  imlab::LabConfig config;
  if (!args.config_path.empty()) {
    config = imlab::load_config_file(args.config_path);
  }
  if (args.parallel > 0) config.parallel = args.parallel;
  if (args.per_unit) config.per_unit = true;
  if (!args.waveform.empty()) {
    config.waveform = args.waveform == "sine" ? imlab::WaveformKind::sine
                                              : imlab::WaveformKind::square;
  }
  if (args.omega_hz > 0.0) config.injection_hz = args.omega_hz;
  if (args.inject_amp >= 0.0) config.injection_amp = args.inject_amp;
  return config;
}

void warn_if_slow_injection(const imlab::LabConfig& config) {
  const auto model = imlab::make_model(config);
  const auto warning = imlab::injection_bandwidth_warning(
      config.injection_spec(), *model, config.motor);
  if (warning) std::cerr << "warning: " << *warning << "\n";
}

void finish(const imlab::ExperimentTable& table, const CommonArgs& args,
            const imlab::LabConfig& config) {
  const std::string path = imlab::write_table_csv(table, args.out_dir, config);
  std::cout << "wrote " << path << " (" << table.rows.size() << " rows)\n";
  if (args.plots) {
    for (const auto& p : imlab::write_plot_scripts(table, args.out_dir, config)) {
      std::cout << "wrote " << p << "\n";
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Saturated induction-motor injection & observability lab"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string scenario_path;

  CLI::App* characterize =
      app.add_subcommand("characterize", "Locked-rotor saliency characterization");
  add_common(characterize, args);

  CLI::App* observability = app.add_subcommand(
      "observability", "Condition numbers at zero stator speed");
  add_common(observability, args);

  CLI::App* convergence = app.add_subcommand(
      "convergence", "Extraction error vs injection frequency");
  add_common(convergence, args);

  CLI::App* simulate =
      app.add_subcommand("simulate", "Integrate a piecewise-constant scenario");
  add_common(simulate, args);
  simulate->add_option("scenario", scenario_path, "Scenario file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    const imlab::LabConfig config = resolve_config(args);
    if (characterize->parsed()) {
      warn_if_slow_injection(config);
      finish(imlab::run_characterize(config), args, config);
    } else if (observability->parsed()) {
      finish(imlab::run_observability(config), args, config);
    } else if (convergence->parsed()) {
      warn_if_slow_injection(config);
      const imlab::ConvergenceResult result = imlab::run_convergence(config);
      finish(result.table, args, config);
      for (std::size_t i = 0; i < result.hf_err_ratios.size(); ++i) {
        std::printf(
            "error shrink %g Hz -> %g Hz: ripple-slope x%.3f, mean-state x%.3f\n",
            result.table.rows[i][0], result.table.rows[i + 1][0],
            result.hf_err_ratios[i], result.state_err_ratios[i]);
      }
    } else if (simulate->parsed()) {
      const imlab::Scenario scenario = imlab::load_scenario_file(scenario_path);
      if (scenario.any_injection()) warn_if_slow_injection(config);
      finish(imlab::run_simulate(config, scenario), args, config);
    }
  } catch (const imlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const imlab::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
