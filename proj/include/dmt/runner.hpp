#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dmt/algorithms.hpp"
#include "dmt/data.hpp"
#include "dmt/metrics.hpp"
#include "dmt/objective.hpp"
#include "dmt/oracle.hpp"
#include "dmt/topology.hpp"

namespace dmt {

struct SyntheticSource {
  BlobSpec blobs;
};
struct LibsvmSource {
  std::string path;
};
using DatasetSource = std::variant<SyntheticSource, LibsvmSource>;

enum class Schedule { Fixed, CorollaryOne };
enum class NoiseKind { None, MiniBatch, Gaussian };
enum class BiasKind { None, Absolute, Relative, TopK };

/// Oracle settings in dimension-free form; the bias mean is mu_norm · 1/sqrt(d).
struct OracleConfig {
  Index batch = 64;
  NoiseKind noise = NoiseKind::MiniBatch;
  double noise_sigma = 0.0;
  BiasKind bias = BiasKind::None;
  double mu_norm = 0.0;
  double sigma_e = 0.0;
  double delta = 0.0;
  Index k = 1;
};

OracleSpec<double> make_oracle_spec(const OracleConfig& cfg, Index dim);

struct RunConfig {
  std::string name = "run";
  DatasetSource dataset = SyntheticSource{};
  double alpha = 0.01;
  Index n_agents = 20;
  TopologyKind topology = TopologyKind::Ring;
  std::string edges_path;
  WeightScheme weights = WeightScheme::UniformNeighbor;
  PartitionMode partition_mode = PartitionMode::LabelSorted;
  std::uint64_t partition_seed = 0;
  AlgoConfig<double> algo;
  Schedule schedule = Schedule::Fixed;
  OracleConfig oracle;
  long T = 1000;
  std::vector<std::uint64_t> seeds{1};
  long eval_every = 1;
  int smoothness_probes = 32;
  double smoothness_radius = 1.0;
};

/// Parses flat `section.key = value` text ('#' comments). Unknown keys and bad values raise
/// ConfigError naming the key.
RunConfig parse_run_config(std::istream& in);
RunConfig load_run_config(const std::string& path);
/// Structural checks that need no data (T, seeds, stride, ranges).
void validate_run_config(const RunConfig& cfg);

/// Dataset, objective, and network assembled once and shared by every seed of a config.
struct Experiment {
  Dataset data;
  Partition partition;
  GlobalObjective<double> objective;
  MixingMatrix<double> mixing;
  double smoothness = 0.0;           ///< max(probe estimate, analytic bound)
  double smoothness_probe = 0.0;
  double smoothness_analytic = 0.0;
};

Experiment prepare_experiment(const RunConfig& cfg);

/// One checked condition of the step-size/momentum conditions for convergence, with its verdict.
struct GuardCheck {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool ok = true;
};

struct ParameterGuard {
  double eta = 0.0;
  double lambda = 0.0;
  std::vector<GuardCheck> checks;
  std::vector<std::string> warnings;
};

/// Resolves the schedule (Fixed keeps cfg.algo; CorollaryOne sets lambda = sqrt(n/T) and
/// eta = sqrt(n/T) / (16 L)) and evaluates every condition. Violations become warnings.
ParameterGuard resolve_parameters(const RunConfig& cfg, const Experiment& exp, AlgoConfig<double>& resolved);

struct RunSummary {
  double final_loss = 0.0;
  double final_grad_norm_sq = 0.0;
  double running_avg_grad_norm_sq = 0.0;
  double steady_state_floor = 0.0;
};

RunSummary summarize(const std::vector<IterationRecord<double>>& records);

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<IterationRecord<double>> records;
  RunSummary summary;
};

struct RunResult {
  RunConfig config;
  AlgoConfig<double> resolved;
  ParameterGuard guard;
  std::vector<SeedRun> runs;
  std::vector<IterationRecord<double>> mean_records;  ///< seed-averaged trajectory
};

/// Records the state before each step t with t % eval_every == 0, for t in [0, T).
SeedRun run_seed(const Experiment& exp, const RunConfig& cfg, const AlgoConfig<double>& algo, std::uint64_t seed);
RunResult run(const RunConfig& cfg, const Experiment& exp);
RunResult run(const RunConfig& cfg);

std::vector<IterationRecord<double>> average_records(const std::vector<SeedRun>& runs);

/// Cross-seed mean and standard error of a per-seed statistic.
struct SeedStat {
  double mean = 0.0;
  double std_error = 0.0;
};
SeedStat final_loss_stat(const std::vector<SeedRun>& runs);
SeedStat floor_stat(const std::vector<SeedRun>& runs);

// Experiment presets and comparisons.

/// Picks the η (and λ for Biased-DMT) with the lowest final loss on `tuning_seed`.
struct TunedCandidate {
  AlgoConfig<double> algo;
  double tuning_loss = 0.0;
};
TunedCandidate tune_step_size(const Experiment& exp, const RunConfig& base, Algorithm algorithm,
                              const std::vector<double>& eta_grid, const std::vector<double>& lambda_grid,
                              std::uint64_t tuning_seed);

struct ComparisonEntry {
  std::string label;
  RunResult result;
  SeedStat final_loss;
  SeedStat floor;
};

struct PresetOptions {
  std::optional<std::string> libsvm_path;  ///< use a LIBSVM file instead of the synthetic substitute
  std::optional<long> T;
  std::optional<std::vector<std::uint64_t>> seeds;
};

/// Algorithm-comparison setup: n=20 ring, label-sorted partition, alpha=0.01, exact local gradients
/// plus absolute bias ||mu|| = 0.1, T = 3000, 5 seeds.
RunConfig preset_compare_base(const PresetOptions& opts = {});
/// Biased-DMT with the same setup; bias level applied by run_bias_sweep.
RunConfig preset_sweep_base(const PresetOptions& opts = {});

const std::vector<double>& default_eta_grid();
const std::vector<double>& default_lambda_grid();

/// Tunes every algorithm on the first seed, then runs all seeds with the tuned parameters.
std::vector<ComparisonEntry> run_comparison(const RunConfig& base, const std::vector<Algorithm>& algorithms,
                                            const std::vector<double>& eta_grid = default_eta_grid(),
                                            const std::vector<double>& lambda_grid = default_lambda_grid());

const std::vector<double>& default_bias_levels();

/// Biased-DMT at each ||mu|| level with one shared tuned (eta, lambda) chosen on the unbiased level.
std::vector<ComparisonEntry> run_bias_sweep(const RunConfig& base, const std::vector<double>& mu_levels,
                                            const std::vector<double>& eta_grid = default_eta_grid(),
                                            const std::vector<double>& lambda_grid = default_lambda_grid());

// Output formats.

inline constexpr const char* kCsvHeader =
    "t,loss,grad_norm_sq,consensus_err,tracking_err,avg_mom_err,mom_est_err,heterogeneity";

void write_csv(std::ostream& out, const std::vector<IterationRecord<double>>& records);
void emit_csv(const std::vector<IterationRecord<double>>& records, const std::string& path);
std::vector<IterationRecord<double>> read_csv(std::istream& in);
std::vector<IterationRecord<double>> load_csv(const std::string& path);

struct PlotSeries {
  std::string csv_path;
  std::string title;
};
/// gnuplot script: loss and grad_norm_sq against t on log-y axes, one curve per series.
void write_plot_script(std::ostream& out, const std::vector<PlotSeries>& series, const std::string& image_path);
void emit_plot_script(const std::vector<std::string>& csv_paths, const std::string& out_path);
void emit_plot_script(const std::vector<PlotSeries>& series, const std::string& out_path);

/// JSON run summary (parameters, guard results, per-seed summaries, cross-seed statistics).
std::string summary_json(const RunResult& result);
std::string comparison_json(const std::vector<ComparisonEntry>& entries);

std::string to_string(TopologyKind k);
std::string to_string(WeightScheme s);
std::string to_string(PartitionMode m);

}  // namespace dmt
