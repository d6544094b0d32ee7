#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "dmt/algorithms.hpp"
#include "dmt/data.hpp"
#include "dmt/errors.hpp"
#include "dmt/objective.hpp"

namespace dmt {

/// Error quantities of one iterate, all computed with exact gradients.
template <typename Scalar = double>
struct IterationRecord {
  long t = 0;
  Scalar loss{0};           ///< F(x̄)
  Scalar grad_norm_sq{0};   ///< ||∇F(x̄)||^2
  Scalar consensus_err{0};  ///< ||X - X̄||_F^2
  Scalar tracking_err{0};   ///< ||V - V̄||_F^2
  Scalar avg_mom_err{0};    ///< ||∇F(X) 1 - M 1||^2
  Scalar mom_est_err{0};    ///< ||M - ∇F(X)||_F^2
  Scalar heterogeneity{0};  ///< (1/n) sum_i ||∇f_i(x̄) - ∇F(x̄)||^2

  friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

template <typename Scalar>
bool is_finite(const IterationRecord<Scalar>& r) {
  using std::isfinite;
  return isfinite(r.loss) && isfinite(r.grad_norm_sq) && isfinite(r.consensus_err) && isfinite(r.tracking_err) &&
         isfinite(r.avg_mom_err) && isfinite(r.mom_est_err) && isfinite(r.heterogeneity);
}

template <typename Scalar>
IterationRecord<Scalar> record(const AgentNetworkState<Scalar>& s, const GlobalObjective<Scalar>& g) {
  detail::require(s.X.rows() == g.dim() && s.X.cols() == g.agents(), "record: state does not match objective");
  IterationRecord<Scalar> r;
  r.t = s.t;
  const Vector<Scalar> xbar = column_mean(s.X);
  const Index n = g.agents();

  Matrix<Scalar> at_mean(g.dim(), n);
  Scalar loss(0);
  for (Index i = 0; i < n; ++i) {
    loss += local_loss(g.local(i), xbar);
    at_mean.col(i) = local_gradient(g.local(i), xbar);
  }
  const Vector<Scalar> full_grad = column_mean(at_mean);
  r.loss = loss / static_cast<Scalar>(n);
  r.grad_norm_sq = full_grad.squaredNorm();
  r.heterogeneity = consensus_deviation(at_mean).squaredNorm() / static_cast<Scalar>(n);

  r.consensus_err = consensus_deviation(s.X).squaredNorm();
  r.tracking_err = consensus_deviation(s.V).squaredNorm();

  const Matrix<Scalar> local = local_gradients(g, s.X);
  r.avg_mom_err = (local.rowwise().sum() - s.M.rowwise().sum()).squaredNorm();
  r.mom_est_err = (s.M - local).squaredNorm();
  return r;
}

/// Same as record() but throws DivergenceError when any field is NaN or infinite.
template <typename Scalar>
IterationRecord<Scalar> record_checked(const AgentNetworkState<Scalar>& s, const GlobalObjective<Scalar>& g) {
  auto r = record(s, g);
  if (!is_finite(r))
    throw DivergenceError("non-finite metric at t=" + std::to_string(r.t) + " (loss=" + std::to_string(r.loss) +
                          ", grad_norm_sq=" + std::to_string(r.grad_norm_sq) +
                          ", consensus_err=" + std::to_string(r.consensus_err) + ")");
  return r;
}

/// (1/T) sum_t ||∇F(x̄^t)||^2.
template <typename Scalar>
Scalar running_average_grad_norm(std::span<const IterationRecord<Scalar>> records) {
  detail::require(!records.empty(), "running_average_grad_norm: empty record list");
  Scalar acc(0);
  for (const auto& r : records) acc += r.grad_norm_sq;
  return acc / static_cast<Scalar>(records.size());
}

template <typename Scalar>
Scalar running_average_grad_norm(const std::vector<IterationRecord<Scalar>>& records) {
  return running_average_grad_norm(std::span<const IterationRecord<Scalar>>(records));
}

/// Mean grad_norm_sq over the final 10% of records (at least one).
template <typename Scalar>
Scalar steady_state_floor(const std::vector<IterationRecord<Scalar>>& records) {
  detail::require(!records.empty(), "steady_state_floor: empty record list");
  const std::size_t tail = std::max<std::size_t>(1, (records.size() + 9) / 10);
  Scalar acc(0);
  for (std::size_t k = records.size() - tail; k < records.size(); ++k) acc += records[k].grad_norm_sq;
  return acc / static_cast<Scalar>(tail);
}

/// Slack of the one-step consensus recursion
///   Xi_x^{t+1} <= (1 - rho) Xi_x^t + (eta^2 / rho) Xi_v^t,
/// returned as rhs - lhs (nonnegative when the bound holds).
template <typename Scalar>
Scalar consensus_recursion_slack(const IterationRecord<Scalar>& before, const IterationRecord<Scalar>& after,
                                 Scalar rho, Scalar eta) {
  const Scalar rhs = (Scalar(1) - rho) * before.consensus_err + eta * eta / rho * before.tracking_err;
  return rhs - after.consensus_err;
}

/// Slack of the one-step tracking recursion
///   Xi_v^{t+1} <= (1 - rho) Xi_v^t + (1 / rho) ||M^{t+1} - M^t||_F^2.
template <typename Scalar>
Scalar tracking_recursion_slack(const IterationRecord<Scalar>& before, const IterationRecord<Scalar>& after,
                                Scalar momentum_change_sq, Scalar rho) {
  const Scalar rhs = (Scalar(1) - rho) * before.tracking_err + momentum_change_sq / rho;
  return rhs - after.tracking_err;
}

}  // namespace dmt
