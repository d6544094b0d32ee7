// dmtsim: decentralized optimization simulator CLI.
//
//   dmtsim run --config <path> [--seed-override k] [--out-dir d]
//   dmtsim compare --preset paper-fig1 [--out-dir d] [--data a9a.txt]
//   dmtsim sweep --preset paper-fig2 [--out-dir d] [--data a9a.txt] [--eta-grid 0.1,0.5]
//   dmtsim validate-config --config <path>
//
// The default output directory comes from $DMTSIM_OUT_DIR, else "./out".

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "dmt/runner.hpp"

namespace fs = std::filesystem;

namespace {

std::string default_out_dir() {
  if (const char* env = std::getenv("DMTSIM_OUT_DIR"); env && *env) return env;
  return "out";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw dmt::IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw dmt::IoError("write failure on '" + path.string() + "'");
}

void print_guard(const dmt::ParameterGuard& guard, const std::string& label) {
  for (const auto& c : guard.checks)
    std::cout << "  [" << (c.ok ? "ok" : "!!") << "] " << label << ": " << c.name << "  (" << c.value << " vs "
              << c.limit << ")\n";
  for (const auto& w : guard.warnings) std::cerr << "warning: " << label << ": " << w << "\n";
}

void print_summary(const dmt::RunResult& r) {
  const auto loss = dmt::final_loss_stat(r.runs);
  const auto floor = dmt::floor_stat(r.runs);
  std::cout << r.config.name << ": " << dmt::algorithm_name(r.resolved.algorithm) << " eta=" << r.resolved.eta
            << " lambda=" << r.resolved.lambda << "  final loss " << loss.mean << " ± " << loss.std_error
            << "  floor " << floor.mean << " ± " << floor.std_error << "\n";
}

/// Writes per-seed and seed-mean CSVs; returns the seed-mean CSV path.
fs::path write_run_outputs(const fs::path& dir, const dmt::RunResult& r) {
  for (const auto& s : r.runs)
    dmt::emit_csv(s.records, (dir / (r.config.name + "_seed" + std::to_string(s.seed) + ".csv")).string());
  const fs::path mean = dir / (r.config.name + "_mean.csv");
  dmt::emit_csv(r.mean_records, mean.string());
  return mean;
}

std::vector<double> parse_grid(const std::string& text, const char* field) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw dmt::ConfigError("bad grid value '" + item + "'", field);
    }
  }
  if (out.empty()) throw dmt::ConfigError("empty grid", field);
  return out;
}

void write_entries(const fs::path& dir, const std::string& stem, const std::vector<dmt::ComparisonEntry>& entries) {
  std::vector<dmt::PlotSeries> series;
  for (const auto& e : entries) {
    const fs::path mean = write_run_outputs(dir, e.result);
    series.push_back({mean.filename().string(), e.label});
    print_summary(e.result);
    print_guard(e.result.guard, e.label);
  }
  dmt::emit_plot_script(series, (dir / (stem + ".gp")).string());
  write_text(dir / (stem + "_summary.json"), dmt::comparison_json(entries));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized stochastic optimization simulator with biased gradient oracles"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = default_out_dir();
  std::uint64_t seed_override = 0;
  std::string preset;
  std::string data_path;
  std::string eta_grid_text;
  std::string lambda_grid_text;
  long T_override = 0;

  auto* run_cmd = app.add_subcommand("run", "Run one configuration over its seeds");
  run_cmd->add_option("--config", config_path, "Config file (flat section.key = value)")->required();
  auto* seed_opt = run_cmd->add_option("--seed-override", seed_override, "Run only this seed");
  run_cmd->add_option("--out-dir", out_dir, "Output directory");

  auto* compare_cmd = app.add_subcommand("compare", "Tuned algorithm comparison under biased oracles");
  auto* sweep_cmd = app.add_subcommand("sweep", "Biased-DMT under increasing bias magnitudes");
  for (auto* cmd : {compare_cmd, sweep_cmd}) {
    cmd->add_option("--out-dir", out_dir, "Output directory");
    cmd->add_option("--data", data_path, "LIBSVM dataset (default: bundled synthetic substitute)");
    cmd->add_option("--eta-grid", eta_grid_text, "Comma-separated step-size grid");
    cmd->add_option("--lambda-grid", lambda_grid_text, "Comma-separated momentum grid for Biased-DMT");
    cmd->add_option("--T", T_override, "Override iteration count");
  }
  compare_cmd->add_option("--preset", preset, "Preset name")->required()->check(CLI::IsMember({"paper-fig1"}));
  sweep_cmd->add_option("--preset", preset, "Preset name")->required()->check(CLI::IsMember({"paper-fig2"}));

  auto* validate_cmd = app.add_subcommand("validate-config", "Parse a config and check it against its data");
  validate_cmd->add_option("--config", config_path, "Config file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate_cmd) {
      const dmt::RunConfig cfg = dmt::load_run_config(config_path);
      const dmt::Experiment exp = dmt::prepare_experiment(cfg);
      dmt::AlgoConfig<double> resolved;
      const auto guard = dmt::resolve_parameters(cfg, exp, resolved);
      std::cout << "config ok: " << exp.objective.agents() << " agents, d=" << exp.objective.dim()
                << ", m=" << exp.data.samples.size() << ", rho=" << exp.mixing.spectral_gap()
                << ", L=" << exp.smoothness << "\n";
      print_guard(guard, std::string(dmt::algorithm_name(resolved.algorithm)));
      return 0;
    }

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);

    if (*run_cmd) {
      dmt::RunConfig cfg = dmt::load_run_config(config_path);
      if (*seed_opt) cfg.seeds = {seed_override};
      const dmt::RunResult result = dmt::run(cfg);
      const fs::path mean = write_run_outputs(dir, result);
      std::vector<std::string> csvs;
      for (const auto& s : result.runs) csvs.push_back(cfg.name + "_seed" + std::to_string(s.seed) + ".csv");
      if (result.runs.size() > 1) csvs.push_back(mean.filename().string());
      dmt::emit_plot_script(csvs, (dir / (cfg.name + ".gp")).string());
      write_text(dir / (cfg.name + "_summary.json"), dmt::summary_json(result));
      print_summary(result);
      print_guard(result.guard, std::string(dmt::algorithm_name(result.resolved.algorithm)));
      return 0;
    }

    dmt::PresetOptions opts;
    if (!data_path.empty()) opts.libsvm_path = data_path;
    if (T_override > 0) opts.T = T_override;
    const auto etas = eta_grid_text.empty() ? dmt::default_eta_grid() : parse_grid(eta_grid_text, "--eta-grid");
    const auto lambdas =
        lambda_grid_text.empty() ? dmt::default_lambda_grid() : parse_grid(lambda_grid_text, "--lambda-grid");

    if (*compare_cmd) {
      const auto base = dmt::preset_compare_base(opts);
      const auto entries = dmt::run_comparison(
          base, {dmt::Algorithm::BiasedDMT, dmt::Algorithm::DSGD, dmt::Algorithm::DSGDm, dmt::Algorithm::GTDSGD}, etas,
          lambdas);
      write_entries(dir, preset, entries);
      return 0;
    }
    if (*sweep_cmd) {
      const auto base = dmt::preset_sweep_base(opts);
      const auto entries = dmt::run_bias_sweep(base, dmt::default_bias_levels(), etas, lambdas);
      write_entries(dir, preset, entries);
      return 0;
    }
  } catch (const dmt::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const dmt::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
