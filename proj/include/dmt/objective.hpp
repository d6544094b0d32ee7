#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "dmt/errors.hpp"
#include "dmt/rng.hpp"
#include "dmt/types.hpp"

namespace dmt {

/// Logistic loss on local samples plus the nonconvex penalty alpha * sum x_k^2 / (1 + x_k^2).
template <typename Scalar = double>
class RegularizedLogisticObjective {
 public:
  RegularizedLogisticObjective(SparseRows<Scalar> features, Vector<Scalar> labels, Scalar alpha)
      : features_(std::move(features)), labels_(std::move(labels)), alpha_(alpha) {
    features_.makeCompressed();
    detail::require(features_.rows() == labels_.size(), "objective: one label per feature row");
    detail::require(alpha_ >= Scalar(0), "objective: alpha must be nonnegative");
    for (Index j = 0; j < labels_.size(); ++j)
      detail::require(labels_[j] == Scalar(1) || labels_[j] == Scalar(-1), "objective: labels must be +1 or -1");
    const double cells = static_cast<double>(features_.rows()) * static_cast<double>(features_.cols());
    if (cells > 0 && static_cast<double>(features_.nonZeros()) >= kDenseFraction * cells) dense_ = Matrix<Scalar>(features_);
  }

  /// Feature density at or above which products run on a dense copy.
  static constexpr double kDenseFraction = 0.25;

  Index dim() const { return features_.cols(); }
  Index samples() const { return features_.rows(); }
  Scalar alpha() const { return alpha_; }
  const SparseRows<Scalar>& features() const { return features_; }
  const Vector<Scalar>& labels() const { return labels_; }

  bool dense() const { return dense_.rows() > 0; }

  /// A x over all samples.
  Vector<Scalar> apply(const Vector<Scalar>& x) const {
    if (dense()) return dense_ * x;
    return features_ * x;
  }

  /// A^T c over all samples.
  Vector<Scalar> apply_transpose(const Vector<Scalar>& c) const {
    if (dense()) return dense_.transpose() * c;
    return features_.transpose() * c;
  }

  /// y_j * a_j^T x for one row.
  Scalar margin(Index row, const Vector<Scalar>& x) const {
    if (dense()) return labels_[row] * dense_.row(row).dot(x);
    Scalar acc(0);
    for (typename SparseRows<Scalar>::InnerIterator it(features_, row); it; ++it) acc += it.value() * x[it.col()];
    return labels_[row] * acc;
  }

  /// grad += coef * a_j for one row.
  void add_row(Index row, Scalar coef, Vector<Scalar>& grad) const {
    if (dense()) {
      grad.noalias() += coef * dense_.row(row).transpose();
      return;
    }
    for (typename SparseRows<Scalar>::InnerIterator it(features_, row); it; ++it) grad[it.col()] += coef * it.value();
  }

 private:
  SparseRows<Scalar> features_;
  Vector<Scalar> labels_;
  Scalar alpha_;
  Matrix<Scalar> dense_;
};

namespace detail {

/// log(1 + exp(z)) without overflow.
template <typename Scalar>
Scalar softplus(Scalar z) {
  using std::exp;
  using std::log1p;
  return z > Scalar(0) ? z + log1p(exp(-z)) : log1p(exp(z));
}

/// 1 / (1 + exp(z)), i.e. sigmoid(-z).
template <typename Scalar>
Scalar sigmoid_neg(Scalar z) {
  using std::exp;
  if (z >= Scalar(0)) {
    const Scalar e = exp(-z);
    return e / (Scalar(1) + e);
  }
  return Scalar(1) / (Scalar(1) + exp(z));
}

template <typename Scalar>
void check_dim(const RegularizedLogisticObjective<Scalar>& obj, const VectorArg<Scalar>& x) {
  require(x.size() == obj.dim(), "objective: parameter dimension mismatch");
}

template <typename Scalar>
Scalar regularizer(Scalar alpha, const Vector<Scalar>& x) {
  if (alpha == Scalar(0)) return Scalar(0);
  const Vector<Scalar> sq = x.array().square().matrix();
  return alpha * (sq.array() / (Scalar(1) + sq.array())).sum();
}

template <typename Scalar>
void add_regularizer_gradient(Scalar alpha, const Vector<Scalar>& x, Vector<Scalar>& grad) {
  if (alpha == Scalar(0)) return;
  const auto denom = (Scalar(1) + x.array().square()).square();
  grad.array() += Scalar(2) * alpha * x.array() / denom;
}

}  // namespace detail

template <typename Scalar>
Scalar local_loss(const RegularizedLogisticObjective<Scalar>& obj, const VectorArg<Scalar>& x) {
  detail::check_dim(obj, x);
  Scalar data(0);
  if (obj.samples() > 0) {
    const Vector<Scalar> margins = obj.labels().cwiseProduct(obj.apply(x));
    for (Index j = 0; j < margins.size(); ++j) data += detail::softplus(-margins[j]);
    data /= static_cast<Scalar>(obj.samples());
  }
  return data + detail::regularizer(obj.alpha(), x);
}

/// Gradient of the logistic term averaged over `rows` only (no regularizer).
template <typename Scalar>
Vector<Scalar> data_gradient(const RegularizedLogisticObjective<Scalar>& obj, const VectorArg<Scalar>& x,
                             std::span<const Index> rows) {
  detail::check_dim(obj, x);
  Vector<Scalar> grad = Vector<Scalar>::Zero(obj.dim());
  if (rows.empty()) return grad;
  for (const Index j : rows) obj.add_row(j, -obj.labels()[j] * detail::sigmoid_neg(obj.margin(j, x)), grad);
  grad /= static_cast<Scalar>(rows.size());
  return grad;
}

/// Gradient of the logistic term over all local samples (no regularizer).
template <typename Scalar>
Vector<Scalar> data_gradient(const RegularizedLogisticObjective<Scalar>& obj, const VectorArg<Scalar>& x) {
  detail::check_dim(obj, x);
  if (obj.samples() == 0) return Vector<Scalar>::Zero(obj.dim());
  const Vector<Scalar>& y = obj.labels();
  const Vector<Scalar> margins = y.cwiseProduct(obj.apply(x));
  Vector<Scalar> coef(margins.size());
  for (Index j = 0; j < margins.size(); ++j) coef[j] = -y[j] * detail::sigmoid_neg(margins[j]);
  return obj.apply_transpose(coef) / static_cast<Scalar>(obj.samples());
}

template <typename Scalar>
Vector<Scalar> regularizer_gradient(const RegularizedLogisticObjective<Scalar>& obj, const VectorArg<Scalar>& x) {
  detail::check_dim(obj, x);
  Vector<Scalar> grad = Vector<Scalar>::Zero(obj.dim());
  detail::add_regularizer_gradient(obj.alpha(), x, grad);
  return grad;
}

template <typename Scalar>
Vector<Scalar> local_gradient(const RegularizedLogisticObjective<Scalar>& obj, const VectorArg<Scalar>& x) {
  Vector<Scalar> grad = data_gradient(obj, x);
  detail::add_regularizer_gradient(obj.alpha(), x, grad);
  return grad;
}

/// F = (1/n) sum_i f_i over the agents' local objectives.
template <typename Scalar = double>
class GlobalObjective {
 public:
  explicit GlobalObjective(std::vector<RegularizedLogisticObjective<Scalar>> locals) : locals_(std::move(locals)) {
    detail::require(!locals_.empty(), "global objective: at least one local objective required");
    for (const auto& f : locals_)
      detail::require(f.dim() == locals_.front().dim(), "global objective: locals must share dimension");
  }

  Index agents() const { return static_cast<Index>(locals_.size()); }
  Index dim() const { return locals_.front().dim(); }
  const RegularizedLogisticObjective<Scalar>& local(Index i) const { return locals_[static_cast<std::size_t>(i)]; }
  const std::vector<RegularizedLogisticObjective<Scalar>>& locals() const { return locals_; }

 private:
  std::vector<RegularizedLogisticObjective<Scalar>> locals_;
};

template <typename Scalar>
std::pair<Scalar, Vector<Scalar>> global_loss_and_gradient(const GlobalObjective<Scalar>& g, const VectorArg<Scalar>& x) {
  detail::require(x.size() == g.dim(), "global objective: parameter dimension mismatch");
  Scalar loss(0);
  Vector<Scalar> grad = Vector<Scalar>::Zero(g.dim());
  for (const auto& f : g.locals()) {
    loss += local_loss(f, x);
    grad += local_gradient(f, x);
  }
  const auto n = static_cast<Scalar>(g.agents());
  return {loss / n, grad / n};
}

/// Matrix of exact local gradients [∇f_1(x_1), ..., ∇f_n(x_n)] for a d×n agent matrix.
template <typename Scalar>
Matrix<Scalar> local_gradients(const GlobalObjective<Scalar>& g, const Matrix<Scalar>& x) {
  detail::require(x.rows() == g.dim() && x.cols() == g.agents(), "local gradients: X must be d×n");
  Matrix<Scalar> out(g.dim(), g.agents());
  for (Index i = 0; i < g.agents(); ++i) out.col(i) = local_gradient(g.local(i), Vector<Scalar>(x.col(i)));
  return out;
}

/// Upper bound on the smoothness constant from the logistic Hessian and the penalty curvature:
/// max_i lambda_max(A_i^T A_i / m_i) / 4 + 2 alpha.
template <typename Scalar>
Scalar analytic_smoothness_bound(const GlobalObjective<Scalar>& g) {
  Scalar best(0);
  for (const auto& f : g.locals()) {
    Scalar top(0);
    if (f.samples() > 0) {
      const Matrix<Scalar> gram = Matrix<Scalar>(f.features().transpose() * f.features()) /
                                  static_cast<Scalar>(f.samples());
      Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(gram, Eigen::EigenvaluesOnly);
      top = solver.eigenvalues().maxCoeff();
    }
    // |d^2/dx^2 x^2/(1+x^2)| = |2 - 6x^2| / (1+x^2)^3 <= 2
    best = std::max(best, top / Scalar(4) + Scalar(2) * f.alpha());
  }
  return best;
}

/// Probe-based lower bound on L: worst observed gradient Lipschitz ratio over random pairs in a ball.
template <typename Scalar>
Scalar estimate_smoothness(const GlobalObjective<Scalar>& g, int probes, Scalar radius, Rng& rng) {
  detail::require(probes >= 1, "estimate_smoothness: probes must be >= 1");
  detail::require(radius > Scalar(0), "estimate_smoothness: radius must be positive");
  const Index d = g.dim();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&] {
    Vector<Scalar> v(d);
    for (Index k = 0; k < d; ++k) v[k] = static_cast<Scalar>(normal(rng));
    const Scalar norm = v.norm();
    if (norm == Scalar(0)) return v;
    const Scalar r = radius * static_cast<Scalar>(std::pow(unit(rng), 1.0 / static_cast<double>(d)));
    return Vector<Scalar>(v * (r / norm));
  };
  const Scalar min_sep = radius * Scalar(1e-8);
  Scalar best(0);
  for (int p = 0; p < probes; ++p) {
    Vector<Scalar> x = draw();
    Vector<Scalar> y = draw();
    while ((x - y).norm() <= min_sep) y = draw();
    const Scalar sep = (x - y).norm();
    for (const auto& f : g.locals()) best = std::max(best, (local_gradient(f, x) - local_gradient(f, y)).norm() / sep);
  }
  return best;
}

}  // namespace dmt
