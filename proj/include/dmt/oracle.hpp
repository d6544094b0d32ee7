#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "dmt/errors.hpp"
#include "dmt/objective.hpp"
#include "dmt/rng.hpp"
#include "dmt/types.hpp"

namespace dmt {

// Sampling noise models.
struct NoNoise {};
struct MiniBatchNoise {};
template <typename Scalar = double>
struct GaussianNoise {
  Scalar sigma{0};
};

// Systematic bias models.
struct NoBias {};
template <typename Scalar = double>
struct AbsoluteGaussianBias {
  Vector<Scalar> mu;   ///< mean of e ~ N(mu, sigma_e^2 I)
  Scalar sigma_e{0};
};
template <typename Scalar = double>
struct RelativeScaleBias {
  Scalar delta{0};  ///< g -> (1 + delta) g
};
struct TopKBias {
  Index k = 1;
};

template <typename Scalar = double>
using NoiseModel = std::variant<NoNoise, MiniBatchNoise, GaussianNoise<Scalar>>;
template <typename Scalar = double>
using BiasModel = std::variant<NoBias, AbsoluteGaussianBias<Scalar>, RelativeScaleBias<Scalar>, TopKBias>;

template <typename Scalar = double>
struct OracleSpec {
  Index batch_size = 64;
  NoiseModel<Scalar> noise = NoNoise{};
  BiasModel<Scalar> bias = NoBias{};
};

/// mu = c·1/sqrt(d), so ||mu|| = c.
template <typename Scalar>
Vector<Scalar> uniform_bias_mean(Index d, Scalar norm) {
  return Vector<Scalar>::Constant(d, norm / std::sqrt(static_cast<Scalar>(d)));
}

/// Relative bias ratio M_f implied by the bias model for dimension d.
template <typename Scalar>
Scalar relative_bias_ratio(const OracleSpec<Scalar>& spec, Index d) {
  if (const auto* rel = std::get_if<RelativeScaleBias<Scalar>>(&spec.bias)) return rel->delta * rel->delta;
  if (const auto* top = std::get_if<TopKBias>(&spec.bias))
    return Scalar(1) - static_cast<Scalar>(top->k) / static_cast<Scalar>(d);
  return Scalar(0);
}

/// Absolute bias level sigma_f^2 implied by the bias model.
template <typename Scalar>
Scalar absolute_bias_level(const OracleSpec<Scalar>& spec) {
  if (const auto* abs = std::get_if<AbsoluteGaussianBias<Scalar>>(&spec.bias)) return abs->mu.squaredNorm();
  return Scalar(0);
}

template <typename Scalar>
void validate_oracle(const OracleSpec<Scalar>& spec, const RegularizedLogisticObjective<Scalar>& obj) {
  if (spec.batch_size < 1) throw ConfigError("batch size must be >= 1", "oracle.batch");
  if (std::holds_alternative<MiniBatchNoise>(spec.noise) && spec.batch_size > obj.samples())
    throw ConfigError("batch size " + std::to_string(spec.batch_size) + " exceeds local sample count " +
                          std::to_string(obj.samples()),
                      "oracle.batch");
  if (const auto* gn = std::get_if<GaussianNoise<Scalar>>(&spec.noise); gn && gn->sigma < Scalar(0))
    throw ConfigError("noise sigma must be >= 0", "oracle.noise_sigma");
  if (const auto* abs = std::get_if<AbsoluteGaussianBias<Scalar>>(&spec.bias)) {
    if (abs->sigma_e < Scalar(0)) throw ConfigError("sigma_e must be >= 0", "oracle.bias_sigma_e");
    if (abs->mu.size() != obj.dim()) throw ConfigError("bias mean has wrong dimension", "oracle.bias_mu");
  }
  if (const auto* top = std::get_if<TopKBias>(&spec.bias); top && (top->k < 1 || top->k > obj.dim()))
    throw ConfigError("top-k requires 1 <= k <= d", "oracle.bias_k");
}

/// Keeps the k largest-magnitude coordinates (ties broken by lower index), zeroes the rest.
template <typename Scalar>
void keep_top_k(Vector<Scalar>& g, Index k) {
  const Index d = g.size();
  if (k >= d) return;
  std::vector<Index> idx(static_cast<std::size_t>(d));
  std::iota(idx.begin(), idx.end(), Index{0});
  auto larger = [&](Index a, Index b) {
    const Scalar fa = std::abs(g[a]);
    const Scalar fb = std::abs(g[b]);
    return fa > fb || (fa == fb && a < b);
  };
  std::nth_element(idx.begin(), idx.begin() + k, idx.end(), larger);
  for (auto it = idx.begin() + k; it != idx.end(); ++it) g[*it] = Scalar(0);
}

/// One draw of the biased stochastic gradient. `scratch` holds a permutation of the local sample
/// indices, reused across calls for O(batch) sampling without replacement.
template <typename Scalar>
Vector<Scalar> sample_gradient(const OracleSpec<Scalar>& spec, const RegularizedLogisticObjective<Scalar>& obj,
                               const VectorArg<Scalar>& x, Rng& rng, std::vector<Index>& scratch) {
  Vector<Scalar> g;
  if (std::holds_alternative<MiniBatchNoise>(spec.noise)) {
    const Index m = obj.samples();
    if (spec.batch_size > m) throw ConfigError("batch size exceeds local sample count", "oracle.batch");
    if (static_cast<Index>(scratch.size()) != m) {
      scratch.resize(static_cast<std::size_t>(m));
      std::iota(scratch.begin(), scratch.end(), Index{0});
    }
    for (Index k = 0; k < spec.batch_size; ++k) {
      std::uniform_int_distribution<Index> pick(k, m - 1);
      std::swap(scratch[static_cast<std::size_t>(k)], scratch[static_cast<std::size_t>(pick(rng))]);
    }
    g = data_gradient(obj, x, std::span<const Index>(scratch.data(), static_cast<std::size_t>(spec.batch_size)));
    g += regularizer_gradient(obj, x);
  } else {
    g = local_gradient(obj, x);
    if (const auto* gn = std::get_if<GaussianNoise<Scalar>>(&spec.noise); gn && gn->sigma > Scalar(0)) {
      std::normal_distribution<double> normal(0.0, static_cast<double>(gn->sigma));
      for (Index k = 0; k < g.size(); ++k) g[k] += static_cast<Scalar>(normal(rng));
    }
  }

  std::visit(
      [&](const auto& bias) {
        using B = std::decay_t<decltype(bias)>;
        if constexpr (std::is_same_v<B, AbsoluteGaussianBias<Scalar>>) {
          detail::require(bias.mu.size() == g.size(), "oracle: bias mean dimension mismatch");
          g += bias.mu;
          if (bias.sigma_e > Scalar(0)) {
            std::normal_distribution<double> normal(0.0, static_cast<double>(bias.sigma_e));
            for (Index k = 0; k < g.size(); ++k) g[k] += static_cast<Scalar>(normal(rng));
          }
        } else if constexpr (std::is_same_v<B, RelativeScaleBias<Scalar>>) {
          g *= Scalar(1) + bias.delta;
        } else if constexpr (std::is_same_v<B, TopKBias>) {
          keep_top_k(g, bias.k);
        }
      },
      spec.bias);
  return g;
}

template <typename Scalar>
Vector<Scalar> sample_gradient(const OracleSpec<Scalar>& spec, const RegularizedLogisticObjective<Scalar>& obj,
                               const VectorArg<Scalar>& x, Rng& rng) {
  std::vector<Index> scratch;
  return sample_gradient(spec, obj, x, rng, scratch);
}

template <typename Scalar>
struct OracleMeasurement {
  Scalar variance = Scalar(0);       ///< estimate of E||g - E g||^2
  Scalar bias_norm_sq = Scalar(0);   ///< estimate of ||E g - ∇f(x)||^2
};

/// Monte-Carlo estimates of the oracle's variance and squared bias at x.
template <typename Scalar>
OracleMeasurement<Scalar> measure_oracle(const OracleSpec<Scalar>& spec, const RegularizedLogisticObjective<Scalar>& obj,
                                         const VectorArg<Scalar>& x, int trials, Rng& rng) {
  detail::require(trials >= 2, "measure_oracle: trials must be >= 2");
  std::vector<Index> scratch;
  std::vector<Vector<Scalar>> draws;
  draws.reserve(static_cast<std::size_t>(trials));
  Vector<Scalar> mean = Vector<Scalar>::Zero(obj.dim());
  for (int t = 0; t < trials; ++t) {
    draws.push_back(sample_gradient(spec, obj, x, rng, scratch));
    mean += draws.back();
  }
  mean /= static_cast<Scalar>(trials);
  Scalar var(0);
  for (const auto& g : draws) var += (g - mean).squaredNorm();
  var /= static_cast<Scalar>(trials - 1);
  return {var, (mean - local_gradient(obj, x)).squaredNorm()};
}

/// Per-agent oracles with independent streams split from one master seed.
template <typename Scalar = double>
class OracleBank {
 public:
  OracleBank(const GlobalObjective<Scalar>& objective, OracleSpec<Scalar> spec, std::uint64_t seed)
      : objective_(&objective),
        spec_(std::move(spec)),
        streams_(make_agent_streams(seed, static_cast<std::size_t>(objective.agents()))),
        scratch_(static_cast<std::size_t>(objective.agents())) {
    for (const auto& f : objective.locals()) validate_oracle(spec_, f);
  }

  Index agents() const { return objective_->agents(); }
  const OracleSpec<Scalar>& spec() const { return spec_; }
  const GlobalObjective<Scalar>& objective() const { return *objective_; }
  std::uint64_t calls() const { return calls_; }
  std::uint64_t calls(Index agent) const { return per_agent_calls_.empty() ? 0 : per_agent_calls_[static_cast<std::size_t>(agent)]; }

  Vector<Scalar> sample(Index agent, const Vector<Scalar>& x) {
    const auto a = static_cast<std::size_t>(agent);
    if (per_agent_calls_.empty()) per_agent_calls_.assign(streams_.size(), 0);
    ++calls_;
    ++per_agent_calls_[a];
    return sample_gradient(spec_, objective_->local(agent), x, streams_[a], scratch_[a]);
  }

  /// Column i of the result is agent i's draw at column i of X.
  Matrix<Scalar> sample_all(const Matrix<Scalar>& x) {
    detail::require(x.cols() == agents() && x.rows() == objective_->dim(), "oracle bank: X must be d×n");
    Matrix<Scalar> out(x.rows(), x.cols());
    for (Index i = 0; i < x.cols(); ++i) out.col(i) = sample(i, Vector<Scalar>(x.col(i)));
    return out;
  }

 private:
  const GlobalObjective<Scalar>* objective_;
  OracleSpec<Scalar> spec_;
  std::vector<Rng> streams_;
  std::vector<std::vector<Index>> scratch_;
  std::vector<std::uint64_t> per_agent_calls_;
  std::uint64_t calls_ = 0;
};

}  // namespace dmt
