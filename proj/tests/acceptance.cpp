// Acceptance suite: prints one PASS/FAIL line per criterion and exits nonzero on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "dmt/runner.hpp"
#include "test_support.hpp"

using namespace dmt;
using dmt::testing::random_global;
using dmt::testing::random_matrix;
using dmt::testing::random_vector;

namespace {

struct Verdict {
  bool ok = true;
  std::ostringstream detail;
  void expect(bool cond, const std::string& what) {
    if (!cond && ok) detail << "first failure: " << what << "; ";
    ok = ok && cond;
  }
};

/// Random oracle for instance k: cycles through noise and bias kinds.
OracleSpec<double> instance_oracle(int k, Index d) {
  OracleSpec<double> s;
  s.batch_size = 3;
  switch (k % 3) {
    case 0: s.noise = NoNoise{}; break;
    case 1: s.noise = MiniBatchNoise{}; break;
    default: s.noise = GaussianNoise<double>{0.2}; break;
  }
  switch (k % 4) {
    case 0: s.bias = NoBias{}; break;
    case 1: s.bias = AbsoluteGaussianBias<double>{uniform_bias_mean<double>(d, 0.1), 0.05}; break;
    case 2: s.bias = RelativeScaleBias<double>{0.05}; break;
    default: s.bias = TopKBias{std::max<Index>(1, d / 2)}; break;
  }
  return s;
}

struct Instance {
  GlobalObjective<double> objective;
  MixingMatrix<double> mixing;
  OracleSpec<double> oracle;
  AlgoConfig<double> algo;
};

Instance make_instance(int k, Rng& rng) {
  const Index ns[] = {2, 3, 5};
  const Index n = ns[k % 3];
  const Index d = 1 + static_cast<Index>(rng() % 8);
  auto g = random_global(rng, n, 10, d, k % 2 ? 0.01 : 0.0);
  const TopologyKind kind = n == 2 ? TopologyKind::Complete : (k % 2 ? TopologyKind::Ring : TopologyKind::Path);
  auto w = build_mixing_matrix<double>(kind, n, k % 2 ? WeightScheme::UniformNeighbor : WeightScheme::LazyMetropolis);
  AlgoConfig<double> a;
  a.algorithm = Algorithm::BiasedDMT;
  a.eta = 0.02 + 0.01 * (k % 5);
  a.lambda = 0.2 + 0.15 * (k % 5);
  return {std::move(g), std::move(w), instance_oracle(k, d), a};
}

// A1: v̄ = m̄ and x̄' = x̄ - eta v̄ at every step.
void a1(Verdict& v) {
  Rng rng = make_stream(2024, StreamPurpose::Probe);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const auto inst = make_instance(k, rng);
    OracleBank<double> bank(inst.objective, inst.oracle, static_cast<std::uint64_t>(k));
    auto s = init(inst.algo, bank, random_vector(rng, inst.objective.dim()));
    for (int t = 0; t < 200; ++t) {
      const Vector<double> xbar = column_mean(s.X), vbar = column_mean(s.V);
      step(s, inst.algo, inst.mixing, bank);
      worst = std::max(worst, (column_mean(s.V) - column_mean(s.M)).norm());
      worst = std::max(worst, (column_mean(s.X) - (xbar - inst.algo.eta * vbar)).norm());
    }
  }
  v.expect(worst <= 1e-10, "identity residual " + std::to_string(worst));
  v.detail << "max residual " << worst;
}

// A2: one-step consensus and tracking recursions, plus gossip contraction.
void a2(Verdict& v) {
  Rng rng = make_stream(2024, StreamPurpose::Probe);
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 50; ++k) {
    const auto inst = make_instance(k, rng);
    OracleBank<double> bank(inst.objective, inst.oracle, static_cast<std::uint64_t>(k));
    auto s = init(inst.algo, bank, random_vector(rng, inst.objective.dim()));
    s.X += random_matrix(rng, s.dim(), s.agents(), 0.5);
    const double rho = inst.mixing.spectral_gap();
    auto before = record(s, inst.objective);
    for (int t = 0; t < 200; ++t) {
      const Matrix<double> m_prev = s.M;
      step(s, inst.algo, inst.mixing, bank);
      const auto after = record(s, inst.objective);
      worst = std::min(worst, consensus_recursion_slack(before, after, rho, inst.algo.eta));
      worst = std::min(worst, tracking_recursion_slack(before, after, (s.M - m_prev).squaredNorm(), rho));
      before = after;
    }
  }
  v.expect(worst >= -1e-9, "recursion slack " + std::to_string(worst));

  double contraction = std::numeric_limits<double>::infinity();
  const Index n = 8;
  for (auto kind : {TopologyKind::Ring, TopologyKind::Complete, TopologyKind::Path, TopologyKind::Star})
    for (auto scheme : {WeightScheme::UniformNeighbor, WeightScheme::LazyMetropolis}) {
      const auto w = build_mixing_matrix<double>(kind, n, scheme);
      for (int k = 0; k < 100; ++k) {
        const auto [lhs, rhs] = contraction_check(w, random_matrix(rng, 4, n));
        contraction = std::min(contraction, rhs - lhs);
      }
    }
  v.expect(contraction >= -1e-12, "gossip contraction slack " + std::to_string(contraction));
  v.detail << "min recursion slack " << worst << ", min contraction slack " << contraction;
}

const ComparisonEntry* find(const std::vector<ComparisonEntry>& entries, Algorithm a) {
  for (const auto& e : entries)
    if (e.result.resolved.algorithm == a) return &e;
  return nullptr;
}

// A3: Biased-DMT final loss below DSGD and DSGDm by more than 2 combined standard errors,
// and not worse than GT-DSGD beyond the same margin.
void a3(Verdict& v) {
  const auto entries = run_comparison(preset_compare_base(), {Algorithm::BiasedDMT, Algorithm::DSGD, Algorithm::DSGDm,
                                                              Algorithm::GTDSGD});
  const auto* dmt = find(entries, Algorithm::BiasedDMT);
  for (const auto& e : entries)
    v.detail << e.label << " " << e.final_loss.mean << "±" << e.final_loss.std_error << " (eta " << e.result.resolved.eta
             << ") ";
  auto margin = [&](const ComparisonEntry& other) {
    return 2.0 * std::hypot(dmt->final_loss.std_error, other.final_loss.std_error);
  };
  for (auto a : {Algorithm::DSGD, Algorithm::DSGDm}) {
    const auto* other = find(entries, a);
    v.expect(other->final_loss.mean - dmt->final_loss.mean > margin(*other),
             "biased_dmt vs " + std::string(algorithm_name(a)));
  }
  const auto* gt = find(entries, Algorithm::GTDSGD);
  v.expect(dmt->final_loss.mean - gt->final_loss.mean <= margin(*gt), "biased_dmt vs gt_dsgd");
}

// A4: steady-state floor grows strictly with the bias level; the unbiased floor is tiny.
void a4(Verdict& v) {
  const auto entries = run_bias_sweep(preset_sweep_base(), default_bias_levels());
  std::vector<double> floors;
  for (const auto& e : entries) {
    floors.push_back(e.floor.mean);
    v.detail << e.label << " " << e.floor.mean << " ";
  }
  v.detail << "(eta " << entries.front().result.resolved.eta << ", lambda " << entries.front().result.resolved.lambda
           << ")";
  for (std::size_t k = 1; k < floors.size(); ++k) v.expect(floors[k] > floors[k - 1], "floor order at level " + std::to_string(k));
  v.expect(floors.front() < 1e-3 * floors.back(), "unbiased floor not below 1e-3 of the largest");
}

// A5: deterministic heterogeneous problem; trackers converge, DSGD stalls.
void a5(Verdict& v) {
  RunConfig cfg;
  cfg.name = "a5";
  SyntheticSource src;
  src.blobs = BlobSpec{500, 10, 1.0, 1.0, 3, 3.0};
  cfg.dataset = src;
  cfg.alpha = 0.0;
  cfg.n_agents = 10;
  cfg.oracle.noise = NoiseKind::None;
  cfg.oracle.bias = BiasKind::None;
  cfg.T = 5001;  // record index 5000 is the state after 5000 steps
  cfg.eval_every = 100;
  const auto exp = prepare_experiment(cfg);
  const double zeta = estimate_heterogeneity(exp.objective, Vector<double>::Zero(exp.objective.dim()));
  v.expect(zeta > 1e-2, "heterogeneity too small");
  v.detail << "zeta^2(0) " << zeta << ", rho " << exp.mixing.spectral_gap() << "; ";
  auto final_grad = [&](Algorithm a) {
    AlgoConfig<double> algo;
    algo.algorithm = a;
    algo.eta = 0.05;
    algo.lambda = 0.5;
    const auto r = run_seed(exp, cfg, algo, 1);
    v.detail << algorithm_name(a) << " " << r.records.back().grad_norm_sq << " ";
    return r.records.back().grad_norm_sq;
  };
  v.expect(final_grad(Algorithm::BiasedDMT) <= 1e-10, "biased_dmt did not converge");
  v.expect(final_grad(Algorithm::GTDSGD) <= 1e-10, "gt_dsgd did not converge");
  v.expect(final_grad(Algorithm::DSGD) >= 1e-4, "dsgd floor below 1e-4");
}

// A6: reductions to gradient descent, DSGD, and exact averaging.
void a6(Verdict& v) {
  Rng rng = make_stream(6, StreamPurpose::Probe);
  const auto f = dmt::testing::random_objective(rng, 20, 6, 0.01);
  const MixingMatrix<double> single{Matrix<double>::Ones(1, 1)};
  OracleSpec<double> exact;
  exact.batch_size = 1;

  {
    const GlobalObjective<double> g({f});
    AlgoConfig<double> cfg;
    cfg.eta = 0.2;
    cfg.lambda = 1.0;
    OracleBank<double> bank(g, exact, 1);
    const Vector<double> x0 = random_vector(rng, 6);
    auto s = init(cfg, bank, x0);
    Vector<double> x = x0;
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      step(s, cfg, single, bank);
      x -= cfg.eta * local_gradient(f, x);
      worst = std::max(worst, (s.X.col(0) - x).norm());
    }
    v.expect(worst <= 1e-12, "gradient descent reduction");
    v.detail << "GD gap " << worst << "; ";
  }
  {
    const auto g = random_global(rng, 5, 20, 6, 0.01);
    const auto w = build_mixing_matrix<double>(TopologyKind::Ring, 5, WeightScheme::UniformNeighbor);
    OracleSpec<double> noisy;
    noisy.batch_size = 4;
    noisy.noise = MiniBatchNoise{};
    AlgoConfig<double> sgd, hb;
    sgd.algorithm = Algorithm::DSGD;
    hb.algorithm = Algorithm::DSGDm;
    sgd.eta = hb.eta = 0.1;
    hb.beta = 0.0;
    OracleBank<double> a(g, noisy, 3), b(g, noisy, 3);
    auto sa = init(sgd, a, Vector<double>::Zero(6));
    auto sb = init(hb, b, Vector<double>::Zero(6));
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      step(sa, sgd, w, a);
      step(sb, hb, w, b);
      worst = std::max(worst, (sa.X - sb.X).norm());
    }
    v.expect(worst <= 1e-12, "DSGDm(beta=0) vs DSGD");
    v.detail << "DSGDm gap " << worst << "; ";
  }
  {
    // identical agents, disagreeing models, consensual tracker: one exact-averaging step
    const Index n = 4;
    const GlobalObjective<double> g(std::vector<RegularizedLogisticObjective<double>>(n, f));
    const MixingMatrix<double> avg{Matrix<double>::Constant(n, n, 1.0 / n)};
    AlgoConfig<double> cfg;
    cfg.eta = 0.1;
    cfg.lambda = 0.5;
    OracleBank<double> bank(g, exact, 5);
    AgentNetworkState<double> s;
    s.X = random_matrix(rng, 6, n);
    s.M = local_gradient(f, column_mean(s.X)).replicate(1, n);
    s.V = s.M;
    s.G_prev = Matrix<double>::Zero(6, n);
    const double before = record(s, g).consensus_err;
    step(s, cfg, avg, bank);
    const double after = record(s, g).consensus_err;
    v.expect(before > 1e-2 && after <= 1e-28, "W = J consensus");
    v.detail << "W=J consensus " << before << " -> " << after;
  }
}

// A7: measured oracle statistics match the configured variance and bias parameters.
void a7(Verdict& v) {
  Rng rng = make_stream(7, StreamPurpose::Probe);
  const Index d = 8;
  const auto f = dmt::testing::random_objective(rng, 30, d, 0.01);
  const Vector<double> x = random_vector(rng, d);
  const double grad_sq = local_gradient(f, x).squaredNorm();
  const int trials = 20000;
  auto within = [](double got, double want, double rel) { return std::abs(got - want) <= rel * want; };

  OracleSpec<double> gauss;
  gauss.batch_size = 1;
  gauss.noise = GaussianNoise<double>{0.3};
  const auto mg = measure_oracle(gauss, f, x, trials, rng);
  v.expect(within(mg.variance, d * 0.09, 0.05), "gaussian variance");
  v.expect(mg.bias_norm_sq <= 5.0 * d * 0.09 / trials, "gaussian noise is unbiased");
  v.detail << "sigma^2 " << mg.variance << "/" << d * 0.09 << "; ";

  OracleSpec<double> absolute;
  absolute.batch_size = 1;
  absolute.bias = AbsoluteGaussianBias<double>{uniform_bias_mean<double>(d, 0.2), 0.05};
  const auto ma = measure_oracle(absolute, f, x, trials, rng);
  v.expect(within(ma.bias_norm_sq, absolute_bias_level(absolute), 0.05), "absolute bias level");
  v.expect(within(ma.variance, d * 0.0025, 0.05), "absolute bias spread");
  v.detail << "sigma_f^2 " << ma.bias_norm_sq << "/" << absolute_bias_level(absolute) << "; ";

  OracleSpec<double> relative;
  relative.batch_size = 1;
  relative.bias = RelativeScaleBias<double>{0.04};
  const auto mr = measure_oracle(relative, f, x, 2, rng);
  v.expect(within(mr.bias_norm_sq / grad_sq, relative_bias_ratio(relative, d), 1e-9), "relative M_f");
  v.detail << "M_f " << mr.bias_norm_sq / grad_sq << "/" << relative_bias_ratio(relative, d) << "; ";

  OracleSpec<double> topk;
  topk.batch_size = 1;
  topk.bias = TopKBias{3};
  double worst_ratio = 0.0;
  for (int k = 0; k < 200; ++k) {
    const Vector<double> y = random_vector(rng, d, 2.0);
    const Vector<double> gy = local_gradient(f, y);
    worst_ratio = std::max(worst_ratio, (sample_gradient(topk, f, y, rng) - gy).squaredNorm() / gy.squaredNorm());
  }
  v.expect(worst_ratio <= relative_bias_ratio(topk, d) + 1e-12, "top-k M_f bound");
  v.detail << "top-k ratio " << worst_ratio << " <= " << relative_bias_ratio(topk, d) << "; ";

  OracleSpec<double> batch;
  batch.batch_size = 6;
  batch.noise = MiniBatchNoise{};
  const auto mb = measure_oracle(batch, f, x, trials, rng);
  v.expect(mb.bias_norm_sq <= 25.0 * mb.variance / trials, "mini-batch is unbiased");
  v.detail << "minibatch bias " << mb.bias_norm_sq;
}

// A8: analytic gradients agree with central finite differences.
void a8(Verdict& v) {
  Rng rng = make_stream(8, StreamPurpose::Probe);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Index d = 2 + k % 7;
    const double alpha = k % 2 ? 0.1 * (k % 5 + 1) : 0.0;
    const auto f = dmt::testing::random_objective(rng, 15, d, alpha);
    const Vector<double> x = random_vector(rng, d);
    const Vector<double> g = local_gradient(f, x);
    Vector<double> fd(d);
    const double h = 1e-6;
    for (Index j = 0; j < d; ++j) {
      Vector<double> xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      fd[j] = (local_loss(f, xp) - local_loss(f, xm)) / (2 * h);
    }
    worst = std::max(worst, dmt::testing::relative_error(g, fd));
  }
  v.expect(worst <= 1e-5, "finite-difference error " + std::to_string(worst));
  v.detail << "max relative error " << worst;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Verdict&)>>> criteria = {
      {"A1 exact averaging identities", a1}, {"A2 pathwise recursions", a2},
      {"A3 heterogeneity decoupling", a3},   {"A4 bias-level floors", a4},
      {"A5 heterogeneity elimination", a5},  {"A6 reductions", a6},
      {"A7 oracle compliance", a7},          {"A8 gradient correctness", a8}};
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    const auto start = std::chrono::steady_clock::now();
    try {
      check(v);
    } catch (const std::exception& e) {
      v.ok = false;
      v.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %s (%.1fs): %s\n", v.ok ? "PASS" : "FAIL", name.c_str(), secs, v.detail.str().c_str());
    std::fflush(stdout);
    failures += v.ok ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
