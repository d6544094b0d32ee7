#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>

#include "dmt/runner.hpp"

namespace dmt {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double as_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError("expected a number, got '" + v + "'", key);
  return out;
}

long long as_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("expected an integer, got '" + v + "'", key);
  return out;
}

std::uint64_t as_seed(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("expected a nonnegative integer, got '" + v + "'", key);
  return out;
}

template <typename E>
E as_enum(const std::string& key, const std::string& v, const std::map<std::string, E>& table) {
  if (const auto it = table.find(v); it != table.end()) return it->second;
  std::string choices;
  for (const auto& [name, _] : table) choices += (choices.empty() ? "" : "|") + name;
  throw ConfigError("unknown value '" + v + "' (expected " + choices + ")", key);
}

}  // namespace

RunConfig parse_run_config(std::istream& in) {
  RunConfig cfg;
  SyntheticSource synth;
  std::string libsvm_path;
  std::string dataset_kind = "synthetic";

  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"run.name", [&](auto&, auto& v) { cfg.name = v; }},
      {"run.T", [&](auto& k, auto& v) { cfg.T = static_cast<long>(as_int(k, v)); }},
      {"run.eval_every", [&](auto& k, auto& v) { cfg.eval_every = static_cast<long>(as_int(k, v)); }},
      {"run.seeds",
       [&](auto& k, auto& v) {
         cfg.seeds.clear();
         std::stringstream ss(v);
         std::string item;
         while (std::getline(ss, item, ',')) cfg.seeds.push_back(as_seed(k, trim(item)));
       }},
      {"dataset.kind", [&](auto& k, auto& v) {
         if (v != "synthetic" && v != "libsvm") throw ConfigError("unknown value '" + v + "' (expected libsvm|synthetic)", k);
         dataset_kind = v;
       }},
      {"dataset.path", [&](auto&, auto& v) { libsvm_path = v; }},
      {"dataset.samples", [&](auto& k, auto& v) { synth.blobs.samples = as_int(k, v); }},
      {"dataset.dim", [&](auto& k, auto& v) { synth.blobs.dim = as_int(k, v); }},
      {"dataset.separation", [&](auto& k, auto& v) { synth.blobs.separation = as_double(k, v); }},
      {"dataset.spread", [&](auto& k, auto& v) { synth.blobs.spread = as_double(k, v); }},
      {"dataset.seed", [&](auto& k, auto& v) { synth.blobs.seed = as_seed(k, v); }},
      {"dataset.offset", [&](auto& k, auto& v) { synth.blobs.offset = as_double(k, v); }},
      {"objective.alpha", [&](auto& k, auto& v) { cfg.alpha = as_double(k, v); }},
      {"network.agents", [&](auto& k, auto& v) { cfg.n_agents = as_int(k, v); }},
      {"network.topology", [&](auto& k, auto& v) {
         cfg.topology = as_enum<TopologyKind>(k, v, {{"ring", TopologyKind::Ring}, {"complete", TopologyKind::Complete},
                                                     {"path", TopologyKind::Path}, {"star", TopologyKind::Star},
                                                     {"custom", TopologyKind::Custom}});
       }},
      {"network.edges", [&](auto&, auto& v) { cfg.edges_path = v; }},
      {"network.weights", [&](auto& k, auto& v) {
         cfg.weights = as_enum<WeightScheme>(k, v, {{"uniform", WeightScheme::UniformNeighbor},
                                                    {"metropolis", WeightScheme::LazyMetropolis}});
       }},
      {"partition.mode", [&](auto& k, auto& v) {
         cfg.partition_mode = as_enum<PartitionMode>(k, v, {{"label_sorted", PartitionMode::LabelSorted},
                                                            {"iid", PartitionMode::IIDShuffle}});
       }},
      {"partition.seed", [&](auto& k, auto& v) { cfg.partition_seed = as_seed(k, v); }},
      {"algorithm.name", [&](auto& k, auto& v) {
         cfg.algo.algorithm = as_enum<Algorithm>(k, v, {{"biased_dmt", Algorithm::BiasedDMT}, {"dsgd", Algorithm::DSGD},
                                                        {"biased_dsgd", Algorithm::DSGD}, {"dsgdm", Algorithm::DSGDm},
                                                        {"gt_dsgd", Algorithm::GTDSGD}});
       }},
      {"algorithm.eta", [&](auto& k, auto& v) { cfg.algo.eta = as_double(k, v); }},
      {"algorithm.lambda", [&](auto& k, auto& v) { cfg.algo.lambda = as_double(k, v); }},
      {"algorithm.beta", [&](auto& k, auto& v) { cfg.algo.beta = as_double(k, v); }},
      {"algorithm.schedule", [&](auto& k, auto& v) {
         cfg.schedule = as_enum<Schedule>(k, v, {{"fixed", Schedule::Fixed}, {"corollary1", Schedule::CorollaryOne}});
       }},
      {"oracle.batch", [&](auto& k, auto& v) { cfg.oracle.batch = as_int(k, v); }},
      {"oracle.noise", [&](auto& k, auto& v) {
         cfg.oracle.noise = as_enum<NoiseKind>(k, v, {{"none", NoiseKind::None}, {"minibatch", NoiseKind::MiniBatch},
                                                      {"gaussian", NoiseKind::Gaussian}});
       }},
      {"oracle.noise_sigma", [&](auto& k, auto& v) { cfg.oracle.noise_sigma = as_double(k, v); }},
      {"oracle.bias", [&](auto& k, auto& v) {
         cfg.oracle.bias = as_enum<BiasKind>(k, v, {{"none", BiasKind::None}, {"absolute", BiasKind::Absolute},
                                                    {"relative", BiasKind::Relative}, {"topk", BiasKind::TopK}});
       }},
      {"oracle.bias_mu_norm", [&](auto& k, auto& v) { cfg.oracle.mu_norm = as_double(k, v); }},
      {"oracle.bias_sigma_e", [&](auto& k, auto& v) { cfg.oracle.sigma_e = as_double(k, v); }},
      {"oracle.bias_delta", [&](auto& k, auto& v) { cfg.oracle.delta = as_double(k, v); }},
      {"oracle.bias_k", [&](auto& k, auto& v) { cfg.oracle.k = as_int(k, v); }},
      {"smoothness.probes", [&](auto& k, auto& v) { cfg.smoothness_probes = static_cast<int>(as_int(k, v)); }},
      {"smoothness.radius", [&](auto& k, auto& v) { cfg.smoothness_radius = as_double(k, v); }},
  };

  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown key", key);
    if (value.empty()) throw ConfigError("missing value", key);
    it->second(key, value);
  }

  if (dataset_kind == "libsvm") {
    if (libsvm_path.empty()) throw ConfigError("libsvm dataset requires a path", "dataset.path");
    cfg.dataset = LibsvmSource{libsvm_path};
  } else {
    cfg.dataset = synth;
  }
  validate_run_config(cfg);
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  return parse_run_config(in);
}

void validate_run_config(const RunConfig& cfg) {
  if (cfg.T < 1) throw ConfigError("must be >= 1", "run.T");
  if (cfg.seeds.empty()) throw ConfigError("at least one seed required", "run.seeds");
  if (cfg.eval_every < 1) throw ConfigError("must be >= 1", "run.eval_every");
  if (cfg.alpha < 0.0) throw ConfigError("must be >= 0", "objective.alpha");
  if (cfg.topology != TopologyKind::Custom && cfg.n_agents < 2) throw ConfigError("must be >= 2", "network.agents");
  if (cfg.topology == TopologyKind::Custom && cfg.edges_path.empty())
    throw ConfigError("custom topology requires an edge list", "network.edges");
  if (cfg.oracle.batch < 1) throw ConfigError("must be >= 1", "oracle.batch");
  if (cfg.oracle.noise_sigma < 0.0) throw ConfigError("must be >= 0", "oracle.noise_sigma");
  if (cfg.oracle.sigma_e < 0.0) throw ConfigError("must be >= 0", "oracle.bias_sigma_e");
  if (cfg.oracle.mu_norm < 0.0) throw ConfigError("must be >= 0", "oracle.bias_mu_norm");
  if (cfg.smoothness_probes < 1) throw ConfigError("must be >= 1", "smoothness.probes");
  if (!(cfg.smoothness_radius > 0.0)) throw ConfigError("must be positive", "smoothness.radius");
  if (const auto* s = std::get_if<SyntheticSource>(&cfg.dataset); s && (s->blobs.samples < 1 || s->blobs.dim < 1))
    throw ConfigError("synthetic dataset needs samples >= 1 and dim >= 1", "dataset.samples");
  if (cfg.schedule == Schedule::Fixed) validate_algo_config(cfg.algo);
}

OracleSpec<double> make_oracle_spec(const OracleConfig& cfg, Index dim) {
  OracleSpec<double> spec;
  spec.batch_size = cfg.batch;
  switch (cfg.noise) {
    case NoiseKind::None: spec.noise = NoNoise{}; break;
    case NoiseKind::MiniBatch: spec.noise = MiniBatchNoise{}; break;
    case NoiseKind::Gaussian: spec.noise = GaussianNoise<double>{cfg.noise_sigma}; break;
  }
  switch (cfg.bias) {
    case BiasKind::None: spec.bias = NoBias{}; break;
    case BiasKind::Absolute: spec.bias = AbsoluteGaussianBias<double>{uniform_bias_mean(dim, cfg.mu_norm), cfg.sigma_e}; break;
    case BiasKind::Relative: spec.bias = RelativeScaleBias<double>{cfg.delta}; break;
    case BiasKind::TopK: spec.bias = TopKBias{cfg.k}; break;
  }
  return spec;
}

std::string to_string(TopologyKind k) {
  switch (k) {
    case TopologyKind::Ring: return "ring";
    case TopologyKind::Complete: return "complete";
    case TopologyKind::Path: return "path";
    case TopologyKind::Star: return "star";
    case TopologyKind::Custom: return "custom";
  }
  return "unknown";
}

std::string to_string(WeightScheme s) {
  return s == WeightScheme::UniformNeighbor ? "uniform" : "metropolis";
}

std::string to_string(PartitionMode m) { return m == PartitionMode::LabelSorted ? "label_sorted" : "iid"; }

}  // namespace dmt
