#include <doctest.h>

#include <vector>

#include "dmt/algorithms.hpp"
#include "test_support.hpp"

using namespace dmt;
using dmt::testing::random_global;
using dmt::testing::random_objective;
using dmt::testing::random_vector;

namespace {

OracleSpec<double> exact_spec() {
  OracleSpec<double> s;
  s.batch_size = 1;
  return s;
}

OracleSpec<double> noisy_spec() {
  OracleSpec<double> s;
  s.batch_size = 4;
  s.noise = MiniBatchNoise{};
  s.bias = AbsoluteGaussianBias<double>{Vector<double>::Constant(4, 0.05), 0.1};
  return s;
}

MixingMatrix<double> single_agent() { return MixingMatrix<double>{Matrix<double>::Ones(1, 1)}; }

AlgoConfig<double> config(Algorithm a, double eta, double lambda = 1.0, double beta = 0.0) {
  AlgoConfig<double> c;
  c.algorithm = a;
  c.eta = eta;
  c.lambda = lambda;
  c.beta = beta;
  return c;
}

GlobalObjective<double> replicated(const RegularizedLogisticObjective<double>& f, Index n) {
  return GlobalObjective<double>(std::vector<RegularizedLogisticObjective<double>>(static_cast<std::size_t>(n), f));
}

}  // namespace

TEST_CASE("init fills the buffers each method expects") {
  Rng rng = make_stream(61, StreamPurpose::Probe);
  const auto g = random_global(rng, 3, 10, 4, 0.01);
  const Vector<double> x0 = random_vector(rng, 4);
  const Matrix<double> exact = local_gradients(g, Matrix<double>(x0.replicate(1, 3)));

  OracleBank<double> bank(g, exact_spec(), 1);
  auto dmt = init(config(Algorithm::BiasedDMT, 0.1, 0.5), bank, x0);
  CHECK(dmt.t == 0);
  CHECK(dmt.X == x0.replicate(1, 3));
  CHECK((dmt.M - exact).norm() <= 1e-15);
  CHECK(dmt.V == dmt.M);
  CHECK(bank.calls() == 3);

  auto gt = init(config(Algorithm::GTDSGD, 0.1), bank, x0);
  CHECK(gt.V == gt.G_prev);
  CHECK((gt.V - exact).norm() <= 1e-15);
  CHECK(bank.calls() == 6);

  auto sgd = init(config(Algorithm::DSGD, 0.1), bank, x0);
  auto hb = init(config(Algorithm::DSGDm, 0.1, 1.0, 0.9), bank, x0);
  CHECK(sgd.V.isZero());
  CHECK(hb.V.isZero());
  CHECK(bank.calls() == 6);
}

TEST_CASE("single agent with lambda = 1 is gradient descent") {
  Rng rng = make_stream(62, StreamPurpose::Probe);
  const auto f = random_objective(rng, 15, 5, 0.01);
  const auto g = replicated(f, 1);
  const Vector<double> x0 = random_vector(rng, 5);
  const double eta = 0.3;
  OracleBank<double> bank(g, exact_spec(), 2);
  const auto cfg = config(Algorithm::BiasedDMT, eta, 1.0);
  auto s = init(cfg, bank, x0);
  const auto w = single_agent();
  Vector<double> x = x0;
  for (int t = 0; t < 20; ++t) {
    step(s, cfg, w, bank);
    x = x - eta * local_gradient(f, x);
    CHECK((s.X.col(0) - x).norm() <= 1e-12);
    CHECK((s.V.col(0) - local_gradient(f, x)).norm() <= 1e-12);
  }
}

TEST_CASE("lambda = 1 makes the momentum equal the fresh draw") {
  Rng rng = make_stream(63, StreamPurpose::Probe);
  const auto g = random_global(rng, 4, 12, 4, 0.01);
  const auto w = build_mixing_matrix<double>(TopologyKind::Ring, 4, WeightScheme::UniformNeighbor);
  const auto cfg = config(Algorithm::BiasedDMT, 0.1, 1.0);
  OracleBank<double> bank(g, noisy_spec(), 3), shadow(g, noisy_spec(), 3);
  auto s = init(cfg, bank, Vector<double>::Zero(4));
  shadow.sample_all(s.X);
  for (int t = 0; t < 5; ++t) {
    const Matrix<double> x_next = s.X * w.weights() - cfg.eta * s.V;
    step(s, cfg, w, bank);
    CHECK(s.M == shadow.sample_all(x_next));
  }
}

TEST_CASE("Biased-DMT matches a per-agent transcription") {
  Rng rng = make_stream(64, StreamPurpose::Probe);
  const Index n = 3, d = 4;
  const auto g = random_global(rng, n, 10, d, 0.01);
  Matrix<double> wm(3, 3);
  wm << 0.5, 0.3, 0.2, 0.3, 0.4, 0.3, 0.2, 0.3, 0.5;
  const MixingMatrix<double> w{wm};
  const double eta = 0.2, lambda = 0.4;
  const auto cfg = config(Algorithm::BiasedDMT, eta, lambda);
  const Vector<double> x0 = random_vector(rng, d);

  OracleBank<double> bank(g, noisy_spec(), 9), reference(g, noisy_spec(), 9);
  auto s = init(cfg, bank, x0);

  std::vector<Vector<double>> x(n, x0), m(n), v(n);
  for (Index i = 0; i < n; ++i) {
    m[i] = reference.sample(i, x0);
    v[i] = m[i];
  }
  for (int t = 0; t < 5; ++t) {
    step(s, cfg, w, bank);
    std::vector<Vector<double>> xn(n), mn(n), vn(n);
    for (Index i = 0; i < n; ++i) {
      xn[i] = -eta * v[i];
      for (Index j = 0; j < n; ++j) xn[i] += wm(j, i) * x[j];
    }
    for (Index i = 0; i < n; ++i) {
      mn[i] = (1 - lambda) * m[i] + lambda * reference.sample(i, xn[i]);
      vn[i] = mn[i] - m[i];
      for (Index j = 0; j < n; ++j) vn[i] += wm(j, i) * v[j];
    }
    x = xn;
    m = mn;
    v = vn;
    for (Index i = 0; i < n; ++i) {
      CHECK((s.X.col(i) - x[i]).norm() <= 1e-12);
      CHECK((s.M.col(i) - m[i]).norm() <= 1e-12);
      CHECK((s.V.col(i) - v[i]).norm() <= 1e-12);
    }
  }
  CHECK(s.t == 5);
}

TEST_CASE("trackers preserve network averages") {
  Rng rng = make_stream(65, StreamPurpose::Probe);
  const Index n = 5, d = 4;
  const auto g = random_global(rng, n, 12, d, 0.01);
  const auto w = build_mixing_matrix<double>(TopologyKind::Ring, n, WeightScheme::LazyMetropolis);
  const double eta = 0.05;

  SUBCASE("Biased-DMT: v̄ = m̄ and x̄' = x̄ - eta v̄") {
    const auto cfg = config(Algorithm::BiasedDMT, eta, 0.3);
    OracleBank<double> bank(g, noisy_spec(), 4);
    auto s = init(cfg, bank, Vector<double>::Zero(d));
    for (int t = 0; t < 1000; ++t) {
      const Vector<double> xbar = column_mean(s.X), vbar = column_mean(s.V);
      step(s, cfg, w, bank);
      CHECK((column_mean(s.X) - (xbar - eta * vbar)).norm() <= 1e-10);
      CHECK((column_mean(s.V) - column_mean(s.M)).norm() <= 1e-10);
    }
  }
  SUBCASE("GT-DSGD: ȳ equals the mean of the latest draws") {
    const auto cfg = config(Algorithm::GTDSGD, eta);
    OracleBank<double> bank(g, noisy_spec(), 5);
    auto s = init(cfg, bank, Vector<double>::Zero(d));
    for (int t = 0; t < 1000; ++t) {
      step(s, cfg, w, bank);
      CHECK((column_mean(s.V) - column_mean(s.G_prev)).norm() <= 1e-10);
    }
  }
}

TEST_CASE("DSGD on a single agent and on identical agents is gradient descent") {
  Rng rng = make_stream(66, StreamPurpose::Probe);
  const auto f = random_objective(rng, 15, 4, 0.01);
  const Vector<double> x0 = random_vector(rng, 4);
  const double eta = 0.25;
  for (Index n : {1, 4}) {
    const auto g = replicated(f, n);
    const MixingMatrix<double> w =
        n == 1 ? single_agent() : build_mixing_matrix<double>(TopologyKind::Ring, n, WeightScheme::UniformNeighbor);
    const auto cfg = config(Algorithm::DSGD, eta);
    OracleBank<double> bank(g, exact_spec(), 6);
    auto s = init(cfg, bank, x0);
    Vector<double> x = x0;
    for (int t = 0; t < 15; ++t) {
      step(s, cfg, w, bank);
      x -= eta * local_gradient(f, x);
      for (Index i = 0; i < n; ++i) CHECK((s.X.col(i) - x).norm() <= 1e-12);
    }
  }
}

TEST_CASE("DSGDm with beta = 0 is DSGD") {
  Rng rng = make_stream(67, StreamPurpose::Probe);
  const auto g = random_global(rng, 4, 12, 4, 0.01);
  const auto w = build_mixing_matrix<double>(TopologyKind::Ring, 4, WeightScheme::UniformNeighbor);
  OracleBank<double> a(g, noisy_spec(), 8), b(g, noisy_spec(), 8);
  const auto ca = config(Algorithm::DSGD, 0.1);
  const auto cb = config(Algorithm::DSGDm, 0.1, 1.0, 0.0);
  auto sa = init(ca, a, Vector<double>::Zero(4));
  auto sb = init(cb, b, Vector<double>::Zero(4));
  for (int t = 0; t < 20; ++t) {
    step(sa, ca, w, a);
    step(sb, cb, w, b);
    CHECK((sa.X - sb.X).norm() <= 1e-14);
  }
}

TEST_CASE("single-agent DSGDm is the heavy-ball recursion") {
  Rng rng = make_stream(68, StreamPurpose::Probe);
  const auto f = random_objective(rng, 15, 3, 0.01);
  const auto g = replicated(f, 1);
  const double eta = 0.1, beta = 0.8;
  const auto cfg = config(Algorithm::DSGDm, eta, 1.0, beta);
  OracleBank<double> bank(g, exact_spec(), 7);
  auto s = init(cfg, bank, Vector<double>::Zero(3));
  Vector<double> x = Vector<double>::Zero(3), u = Vector<double>::Zero(3);
  for (int t = 0; t < 30; ++t) {
    step(s, cfg, single_agent(), bank);
    const Vector<double> grad = local_gradient(f, x);
    for (Index k = 0; k < 3; ++k) {
      u[k] = beta * u[k] + grad[k];
      x[k] -= eta * u[k];
    }
    CHECK((s.X.col(0) - x).norm() <= 1e-12);
  }
}

TEST_CASE("single-agent GT-DSGD is gradient descent") {
  Rng rng = make_stream(69, StreamPurpose::Probe);
  const auto f = random_objective(rng, 15, 4, 0.01);
  const auto g = replicated(f, 1);
  const double eta = 0.3;
  const auto cfg = config(Algorithm::GTDSGD, eta);
  OracleBank<double> bank(g, exact_spec(), 7);
  const Vector<double> x0 = random_vector(rng, 4);
  auto s = init(cfg, bank, x0);
  Vector<double> x = x0;
  for (int t = 0; t < 20; ++t) {
    step(s, cfg, single_agent(), bank);
    x -= eta * local_gradient(f, x);
    CHECK((s.X.col(0) - x).norm() <= 1e-12);
    CHECK((s.V.col(0) - local_gradient(f, x)).norm() <= 1e-12);
  }
}

TEST_CASE("every step queries each agent exactly once") {
  Rng rng = make_stream(70, StreamPurpose::Probe);
  const Index n = 5;
  const auto g = random_global(rng, n, 12, 4, 0.01);
  const auto w = build_mixing_matrix<double>(TopologyKind::Complete, n, WeightScheme::UniformNeighbor);
  for (Algorithm a : {Algorithm::BiasedDMT, Algorithm::DSGD, Algorithm::DSGDm, Algorithm::GTDSGD}) {
    OracleBank<double> bank(g, noisy_spec(), 1);
    const auto cfg = config(a, 0.05, 0.5, 0.5);
    auto s = init(cfg, bank, Vector<double>::Zero(4));
    const auto start = bank.calls();
    for (int t = 0; t < 7; ++t) step(s, cfg, w, bank);
    CHECK(bank.calls() - start == 7u * n);
    for (Index i = 0; i < n; ++i) CHECK(bank.calls(i) == bank.calls() / n);
  }
}

TEST_CASE("algorithm configuration errors name the field") {
  auto field_of = [](const AlgoConfig<double>& c) {
    try {
      validate_algo_config(c);
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string{};
  };
  CHECK(field_of(config(Algorithm::DSGD, 0.0)) == "algorithm.eta");
  CHECK(field_of(config(Algorithm::BiasedDMT, 0.1, 0.0)) == "algorithm.lambda");
  CHECK(field_of(config(Algorithm::BiasedDMT, 0.1, 1.5)) == "algorithm.lambda");
  CHECK(field_of(config(Algorithm::DSGDm, 0.1, 1.0, 1.0)) == "algorithm.beta");
  CHECK(field_of(config(Algorithm::DSGD, 0.1, 5.0, 5.0)).empty());
  CHECK(algorithm_name(Algorithm::GTDSGD) == "gt_dsgd");
}
