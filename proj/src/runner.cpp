#include "dmt/runner.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <limits>

namespace dmt {

namespace {

Dataset load_dataset(const RunConfig& cfg) {
  if (const auto* file = std::get_if<LibsvmSource>(&cfg.dataset)) return load_libsvm(file->path);
  return make_synthetic_blobs(std::get<SyntheticSource>(cfg.dataset).blobs);
}

MixingMatrix<double> build_network(const RunConfig& cfg, Index& agents) {
  if (cfg.topology == TopologyKind::Custom) {
    const EdgeList list = load_edge_list(cfg.edges_path);
    if (agents < list.agents) agents = list.agents;
    return build_mixing_matrix<double>(TopologyKind::Custom, agents, cfg.weights, list.edges);
  }
  return build_mixing_matrix<double>(cfg.topology, agents, cfg.weights);
}

SeedStat seed_stat(const std::vector<SeedRun>& runs, double RunSummary::*field) {
  SeedStat s;
  if (runs.empty()) return s;
  for (const auto& r : runs) s.mean += r.summary.*field;
  s.mean /= static_cast<double>(runs.size());
  if (runs.size() > 1) {
    double var = 0.0;
    for (const auto& r : runs) var += (r.summary.*field - s.mean) * (r.summary.*field - s.mean);
    var /= static_cast<double>(runs.size() - 1);
    s.std_error = std::sqrt(var / static_cast<double>(runs.size()));
  }
  return s;
}

std::string label_for(const RunConfig& cfg) {
  if (cfg.algo.algorithm == Algorithm::DSGD && cfg.oracle.bias != BiasKind::None) return "biased_dsgd";
  return std::string(algorithm_name(cfg.algo.algorithm));
}

}  // namespace

Experiment prepare_experiment(const RunConfig& cfg) {
  validate_run_config(cfg);
  Dataset data = load_dataset(cfg);
  Index agents = cfg.n_agents;
  MixingMatrix<double> mixing = build_network(cfg, agents);
  Rng part_rng = make_stream(cfg.partition_seed, StreamPurpose::Partition);
  Partition part = partition(data.samples, agents, cfg.partition_mode, part_rng);
  GlobalObjective<double> objective = make_global_objective<double>(data, part, cfg.alpha);

  Rng probe_rng = make_stream(cfg.partition_seed, StreamPurpose::Probe);
  const double probe = estimate_smoothness(objective, cfg.smoothness_probes, cfg.smoothness_radius, probe_rng);
  const double analytic = analytic_smoothness_bound(objective);

  Experiment exp{std::move(data), std::move(part), std::move(objective), std::move(mixing), 0.0, probe, analytic};
  exp.smoothness = std::max(probe, analytic);
  // validates batch size etc. against every local objective
  const OracleSpec<double> spec = make_oracle_spec(cfg.oracle, exp.objective.dim());
  for (const auto& f : exp.objective.locals()) validate_oracle(spec, f);
  return exp;
}

ParameterGuard resolve_parameters(const RunConfig& cfg, const Experiment& exp, AlgoConfig<double>& resolved) {
  resolved = cfg.algo;
  const double n = static_cast<double>(exp.objective.agents());
  const double rho = exp.mixing.spectral_gap();
  const double L = exp.smoothness > 0.0 ? exp.smoothness : std::numeric_limits<double>::min();
  ParameterGuard guard;

  if (cfg.schedule == Schedule::CorollaryOne) {
    const double scale = std::sqrt(n / static_cast<double>(cfg.T));
    resolved.lambda = std::min(1.0, scale);
    resolved.eta = scale / (16.0 * L);
    const double t_min = 16.0 * n * n / (rho * rho);
    guard.checks.push_back({"T >= 16 n^2 / rho^2", static_cast<double>(cfg.T), t_min, static_cast<double>(cfg.T) >= t_min});
  }
  validate_algo_config(resolved);
  guard.eta = resolved.eta;
  guard.lambda = resolved.lambda;

  const OracleSpec<double> spec = make_oracle_spec(cfg.oracle, exp.objective.dim());
  const double mf = relative_bias_ratio(spec, exp.objective.dim());
  guard.checks.push_back({"M_f <= 1/256", mf, 1.0 / 256.0, mf <= 1.0 / 256.0});
  guard.checks.push_back({"eta <= 1/L", resolved.eta, 1.0 / L, resolved.eta <= 1.0 / L});
  if (resolved.algorithm == Algorithm::BiasedDMT) {
    const double lam_cap = rho / (4.0 * std::sqrt(n));
    guard.checks.push_back({"lambda <= rho / (4 sqrt(n))", resolved.lambda, lam_cap, resolved.lambda <= lam_cap});
    const double cap2 = rho * resolved.lambda / (8.0 * L);
    guard.checks.push_back({"eta <= rho lambda / (8 L)", resolved.eta, cap2, resolved.eta <= cap2});
    const double cap3 = resolved.lambda / (16.0 * L * (1.0 + mf));
    guard.checks.push_back({"eta <= lambda / (16 L (1 + M_f))", resolved.eta, cap3, resolved.eta <= cap3});
  }
  for (const auto& c : guard.checks)
    if (!c.ok)
      guard.warnings.push_back("condition '" + c.name + "' violated: " + std::to_string(c.value) + " vs " +
                               std::to_string(c.limit));
  return guard;
}

RunSummary summarize(const std::vector<IterationRecord<double>>& records) {
  detail::require(!records.empty(), "summarize: empty record list");
  RunSummary s;
  s.final_loss = records.back().loss;
  s.final_grad_norm_sq = records.back().grad_norm_sq;
  s.running_avg_grad_norm_sq = running_average_grad_norm(records);
  s.steady_state_floor = steady_state_floor(records);
  return s;
}

SeedRun run_seed(const Experiment& exp, const RunConfig& cfg, const AlgoConfig<double>& algo, std::uint64_t seed) {
  OracleBank<double> oracle(exp.objective, make_oracle_spec(cfg.oracle, exp.objective.dim()), seed);
  const Vector<double> x0 = Vector<double>::Zero(exp.objective.dim());
  AgentNetworkState<double> state = init(algo, oracle, x0);
  SeedRun out;
  out.seed = seed;
  out.records.reserve(static_cast<std::size_t>(cfg.T / cfg.eval_every + 1));
  for (long t = 0; t < cfg.T; ++t) {
    if (t % cfg.eval_every == 0) out.records.push_back(record_checked(state, exp.objective));
    if (t + 1 < cfg.T) step(state, algo, exp.mixing, oracle);
  }
  out.summary = summarize(out.records);
  return out;
}

RunResult run(const RunConfig& cfg, const Experiment& exp) {
  RunResult result;
  result.config = cfg;
  result.guard = resolve_parameters(cfg, exp, result.resolved);
  for (const auto seed : cfg.seeds) result.runs.push_back(run_seed(exp, cfg, result.resolved, seed));
  result.mean_records = average_records(result.runs);
  return result;
}

RunResult run(const RunConfig& cfg) { return run(cfg, prepare_experiment(cfg)); }

std::vector<IterationRecord<double>> average_records(const std::vector<SeedRun>& runs) {
  if (runs.empty()) return {};
  std::vector<IterationRecord<double>> mean = runs.front().records;
  for (std::size_t s = 1; s < runs.size(); ++s) {
    detail::require(runs[s].records.size() == mean.size(), "average_records: seed runs differ in length");
    for (std::size_t k = 0; k < mean.size(); ++k) {
      const auto& r = runs[s].records[k];
      auto& m = mean[k];
      m.loss += r.loss;
      m.grad_norm_sq += r.grad_norm_sq;
      m.consensus_err += r.consensus_err;
      m.tracking_err += r.tracking_err;
      m.avg_mom_err += r.avg_mom_err;
      m.mom_est_err += r.mom_est_err;
      m.heterogeneity += r.heterogeneity;
    }
  }
  const double inv = 1.0 / static_cast<double>(runs.size());
  for (auto& m : mean) {
    m.loss *= inv;
    m.grad_norm_sq *= inv;
    m.consensus_err *= inv;
    m.tracking_err *= inv;
    m.avg_mom_err *= inv;
    m.mom_est_err *= inv;
    m.heterogeneity *= inv;
  }
  return mean;
}

SeedStat final_loss_stat(const std::vector<SeedRun>& runs) { return seed_stat(runs, &RunSummary::final_loss); }
SeedStat floor_stat(const std::vector<SeedRun>& runs) { return seed_stat(runs, &RunSummary::steady_state_floor); }

TunedCandidate tune_step_size(const Experiment& exp, const RunConfig& base, Algorithm algorithm,
                              const std::vector<double>& eta_grid, const std::vector<double>& lambda_grid,
                              std::uint64_t tuning_seed) {
  detail::require(!eta_grid.empty(), "tune_step_size: empty step-size grid");
  RunConfig cfg = base;
  cfg.schedule = Schedule::Fixed;
  // Only the last record matters; keep it at the same t as a full run would.
  const long last = ((cfg.T - 1) / cfg.eval_every) * cfg.eval_every;
  cfg.eval_every = last > 0 ? last : 1;

  const std::vector<double> lambdas =
      algorithm == Algorithm::BiasedDMT && !lambda_grid.empty() ? lambda_grid : std::vector<double>{base.algo.lambda};
  TunedCandidate best;
  best.algo = base.algo;
  best.algo.algorithm = algorithm;
  best.tuning_loss = std::numeric_limits<double>::infinity();
  for (const double eta : eta_grid)
    for (const double lambda : lambdas) {
      AlgoConfig<double> algo = base.algo;
      algo.algorithm = algorithm;
      algo.eta = eta;
      algo.lambda = lambda;
      try {
        const SeedRun r = run_seed(exp, cfg, algo, tuning_seed);
        if (std::isfinite(r.summary.final_loss) && r.summary.final_loss < best.tuning_loss) {
          best.tuning_loss = r.summary.final_loss;
          best.algo = algo;
        }
      } catch (const DivergenceError&) {
        // diverged at this step size; skip
      }
    }
  if (!std::isfinite(best.tuning_loss)) throw ConfigError("every grid point diverged", "algorithm.eta");
  return best;
}

RunConfig preset_compare_base(const PresetOptions& opts) {
  RunConfig cfg;
  cfg.name = "paper-fig1";
  if (opts.libsvm_path) {
    cfg.dataset = LibsvmSource{*opts.libsvm_path};
  } else {
    SyntheticSource synth;
    synth.blobs = BlobSpec{2000, 50, 2.0, 1.0, 7, 4.0};
    cfg.dataset = synth;
  }
  cfg.alpha = 0.01;
  cfg.n_agents = 20;
  cfg.topology = TopologyKind::Ring;
  cfg.weights = WeightScheme::UniformNeighbor;
  cfg.partition_mode = PartitionMode::LabelSorted;
  cfg.algo.beta = 0.9;
  cfg.oracle.batch = 64;
  cfg.oracle.noise = NoiseKind::None;
  cfg.oracle.bias = BiasKind::Absolute;
  cfg.oracle.mu_norm = 0.1;
  cfg.oracle.sigma_e = 0.05;
  cfg.T = opts.T.value_or(3000);
  cfg.seeds = opts.seeds.value_or(std::vector<std::uint64_t>{1, 2, 3, 4, 5});
  cfg.eval_every = 10;
  return cfg;
}

RunConfig preset_sweep_base(const PresetOptions& opts) {
  RunConfig cfg = preset_compare_base(opts);
  cfg.name = "paper-fig2";
  cfg.algo.algorithm = Algorithm::BiasedDMT;
  return cfg;
}

const std::vector<double>& default_eta_grid() {
  static const std::vector<double> grid{0.0005, 0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5};
  return grid;
}

const std::vector<double>& default_lambda_grid() {
  static const std::vector<double> grid{0.1, 0.3, 1.0};
  return grid;
}

const std::vector<double>& default_bias_levels() {
  static const std::vector<double> levels{0.0, 0.05, 0.1, 0.2};
  return levels;
}

std::vector<ComparisonEntry> run_comparison(const RunConfig& base, const std::vector<Algorithm>& algorithms,
                                            const std::vector<double>& eta_grid,
                                            const std::vector<double>& lambda_grid) {
  const Experiment exp = prepare_experiment(base);
  std::vector<ComparisonEntry> out;
  for (const Algorithm a : algorithms) {
    const TunedCandidate tuned = tune_step_size(exp, base, a, eta_grid, lambda_grid, base.seeds.front());
    RunConfig cfg = base;
    cfg.schedule = Schedule::Fixed;
    cfg.algo = tuned.algo;
    cfg.name = base.name + "_" + label_for(cfg);
    ComparisonEntry entry{label_for(cfg), run(cfg, exp), {}, {}};
    entry.final_loss = final_loss_stat(entry.result.runs);
    entry.floor = floor_stat(entry.result.runs);
    out.push_back(std::move(entry));
  }
  return out;
}

std::vector<ComparisonEntry> run_bias_sweep(const RunConfig& base, const std::vector<double>& mu_levels,
                                            const std::vector<double>& eta_grid,
                                            const std::vector<double>& lambda_grid) {
  RunConfig unbiased = base;
  unbiased.oracle.bias = BiasKind::None;
  const Experiment exp = prepare_experiment(unbiased);
  const TunedCandidate tuned =
      tune_step_size(exp, unbiased, base.algo.algorithm, eta_grid, lambda_grid, base.seeds.front());

  std::vector<ComparisonEntry> out;
  for (const double mu : mu_levels) {
    RunConfig cfg = base;
    cfg.schedule = Schedule::Fixed;
    cfg.algo = tuned.algo;
    // mu = 0 is the unbiased reference: no systematic error at all
    cfg.oracle.bias = mu > 0.0 ? BiasKind::Absolute : BiasKind::None;
    cfg.oracle.mu_norm = mu;
    char buf[32];
    std::snprintf(buf, sizeof buf, "mu%g", mu);
    cfg.name = base.name + "_" + buf;
    ComparisonEntry entry{buf, run(cfg, exp), {}, {}};
    entry.final_loss = final_loss_stat(entry.result.runs);
    entry.floor = floor_stat(entry.result.runs);
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace dmt
