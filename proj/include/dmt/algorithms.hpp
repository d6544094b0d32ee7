#pragma once

#include <string>
#include <string_view>

#include "dmt/errors.hpp"
#include "dmt/oracle.hpp"
#include "dmt/topology.hpp"
#include "dmt/types.hpp"

namespace dmt {

/// Biased-DSGD is DSGD driven by a biased OracleSpec, so it has no enumerator of its own.
enum class Algorithm { BiasedDMT, DSGD, DSGDm, GTDSGD };

inline std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::BiasedDMT: return "biased_dmt";
    case Algorithm::DSGD: return "dsgd";
    case Algorithm::DSGDm: return "dsgdm";
    case Algorithm::GTDSGD: return "gt_dsgd";
  }
  return "unknown";
}

template <typename Scalar = double>
struct AlgoConfig {
  Algorithm algorithm = Algorithm::BiasedDMT;
  Scalar eta{0.1};
  Scalar lambda{1};  ///< momentum coefficient of Biased-DMT, in (0, 1]
  Scalar beta{0};    ///< heavy-ball coefficient of DSGDm, in [0, 1)
};

template <typename Scalar>
void validate_algo_config(const AlgoConfig<Scalar>& cfg) {
  if (!(cfg.eta > Scalar(0))) throw ConfigError("step size must be positive", "algorithm.eta");
  if (cfg.algorithm == Algorithm::BiasedDMT && !(cfg.lambda > Scalar(0) && cfg.lambda <= Scalar(1)))
    throw ConfigError("lambda must lie in (0, 1]", "algorithm.lambda");
  if (cfg.algorithm == Algorithm::DSGDm && !(cfg.beta >= Scalar(0) && cfg.beta < Scalar(1)))
    throw ConfigError("beta must lie in [0, 1)", "algorithm.beta");
}

/// Column i of each matrix belongs to agent i.
///   BiasedDMT: X models, M momentum, V tracker.
///   DSGDm:     V holds the heavy-ball buffer.
///   GT-DSGD:   V is the gradient tracker, G_prev the last sampled gradients.
template <typename Scalar = double>
struct AgentNetworkState {
  Matrix<Scalar> X;
  Matrix<Scalar> M;
  Matrix<Scalar> V;
  Matrix<Scalar> G_prev;
  long t = 0;

  Index dim() const { return X.rows(); }
  Index agents() const { return X.cols(); }
};

/// Every agent starts at x0. Biased-DMT sets M = V = one oracle draw at x0; GT-DSGD sets
/// V = G_prev = one draw; DSGD and DSGDm draw nothing and start from zero buffers.
template <typename Scalar>
AgentNetworkState<Scalar> init(const AlgoConfig<Scalar>& cfg, OracleBank<Scalar>& oracle, const VectorArg<Scalar>& x0) {
  validate_algo_config(cfg);
  const Index d = oracle.objective().dim();
  const Index n = oracle.agents();
  detail::require(x0.size() == d, "init: x0 dimension mismatch");
  AgentNetworkState<Scalar> s;
  s.X = x0.replicate(1, n);
  s.M = Matrix<Scalar>::Zero(d, n);
  s.V = Matrix<Scalar>::Zero(d, n);
  s.G_prev = Matrix<Scalar>::Zero(d, n);
  switch (cfg.algorithm) {
    case Algorithm::BiasedDMT:
      s.M = oracle.sample_all(s.X);
      s.V = s.M;
      break;
    case Algorithm::GTDSGD:
      s.G_prev = oracle.sample_all(s.X);
      s.V = s.G_prev;
      break;
    case Algorithm::DSGD:
    case Algorithm::DSGDm:
      break;
  }
  return s;
}

namespace detail {
template <typename Scalar>
void check_step_inputs(const AgentNetworkState<Scalar>& s, const MixingMatrix<Scalar>& w, const OracleBank<Scalar>& o) {
  require(s.X.cols() == w.agents() && s.X.cols() == o.agents(), "step: agent count mismatch");
  require(s.X.rows() == o.objective().dim(), "step: dimension mismatch");
}
}  // namespace detail

/// X' = XW - eta V;  M' = (1 - lambda) M + lambda G(X');  V' = VW + M' - M.
/// The oracle is queried at the updated models X'.
template <typename Scalar>
void step_biased_dmt(AgentNetworkState<Scalar>& s, const AlgoConfig<Scalar>& cfg, const MixingMatrix<Scalar>& w,
                     OracleBank<Scalar>& oracle) {
  detail::check_step_inputs(s, w, oracle);
  const auto& weights = w.weights();
  s.X = s.X * weights - cfg.eta * s.V;
  const Matrix<Scalar> grads = oracle.sample_all(s.X);
  Matrix<Scalar> m_next = (Scalar(1) - cfg.lambda) * s.M + cfg.lambda * grads;
  s.V = s.V * weights + m_next - s.M;
  s.M = std::move(m_next);
  ++s.t;
}

/// X' = XW - eta G(X).
template <typename Scalar>
void step_dsgd(AgentNetworkState<Scalar>& s, const AlgoConfig<Scalar>& cfg, const MixingMatrix<Scalar>& w,
               OracleBank<Scalar>& oracle) {
  detail::check_step_inputs(s, w, oracle);
  const Matrix<Scalar> grads = oracle.sample_all(s.X);
  s.X = s.X * w.weights() - cfg.eta * grads;
  ++s.t;
}

/// Heavy ball: U' = beta U + G(X);  X' = XW - eta U'.  U lives in the V slot.
template <typename Scalar>
void step_dsgdm(AgentNetworkState<Scalar>& s, const AlgoConfig<Scalar>& cfg, const MixingMatrix<Scalar>& w,
                OracleBank<Scalar>& oracle) {
  detail::check_step_inputs(s, w, oracle);
  const Matrix<Scalar> grads = oracle.sample_all(s.X);
  s.V = cfg.beta * s.V + grads;
  s.X = s.X * w.weights() - cfg.eta * s.V;
  ++s.t;
}

/// X' = XW - eta Y;  Y' = YW + G(X') - G_prev;  G_prev' = G(X').  Y lives in the V slot.
template <typename Scalar>
void step_gt_dsgd(AgentNetworkState<Scalar>& s, const AlgoConfig<Scalar>& cfg, const MixingMatrix<Scalar>& w,
                  OracleBank<Scalar>& oracle) {
  detail::check_step_inputs(s, w, oracle);
  const auto& weights = w.weights();
  s.X = s.X * weights - cfg.eta * s.V;
  Matrix<Scalar> grads = oracle.sample_all(s.X);
  s.V = s.V * weights + grads - s.G_prev;
  s.G_prev = std::move(grads);
  ++s.t;
}

template <typename Scalar>
void step(AgentNetworkState<Scalar>& s, const AlgoConfig<Scalar>& cfg, const MixingMatrix<Scalar>& w,
          OracleBank<Scalar>& oracle) {
  switch (cfg.algorithm) {
    case Algorithm::BiasedDMT: return step_biased_dmt(s, cfg, w, oracle);
    case Algorithm::DSGD: return step_dsgd(s, cfg, w, oracle);
    case Algorithm::DSGDm: return step_dsgdm(s, cfg, w, oracle);
    case Algorithm::GTDSGD: return step_gt_dsgd(s, cfg, w, oracle);
  }
}

}  // namespace dmt
