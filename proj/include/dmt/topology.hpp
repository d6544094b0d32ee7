#pragma once

#include <cmath>
#include <iosfwd>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "dmt/errors.hpp"
#include "dmt/types.hpp"

namespace dmt {

enum class TopologyKind { Ring, Complete, Path, Star, Custom };
enum class WeightScheme { UniformNeighbor, LazyMetropolis };

using Edge = std::pair<Index, Index>;

inline constexpr double kStochasticTolerance = 1e-12;
inline constexpr double kMinSpectralGap = 1e-12;
inline constexpr Index kDenseEigenLimit = 64;

namespace detail {

template <typename Scalar>
Scalar power_iteration_abs_top(const Matrix<Scalar>& a, int max_iter = 200000, Scalar tol = Scalar(1e-13)) {
  const Index n = a.rows();
  Vector<Scalar> v = Vector<Scalar>::LinSpaced(n, Scalar(1), Scalar(2));
  v.array() -= v.mean();  // start orthogonal to 1; W - J annihilates it anyway
  if (v.norm() == Scalar(0)) return Scalar(0);
  v.normalize();
  Scalar estimate(0);
  for (int it = 0; it < max_iter; ++it) {
    // Two applications so a ±|lambda| pair cannot make the estimate oscillate.
    Vector<Scalar> w = a * (a * v);
    const Scalar norm = w.norm();
    if (norm == Scalar(0)) return Scalar(0);
    const Scalar next = std::sqrt(norm);
    v = w / norm;
    if (std::abs(next - estimate) <= tol * std::max(Scalar(1), next)) return next;
    estimate = next;
  }
  return estimate;
}

}  // namespace detail

/// rho = 1 - max |lambda| over the nonprincipal spectrum, via the spectrum of W - J.
/// Throws TopologyError when rho <= 1e-12.
template <typename Scalar>
Scalar compute_spectral_gap(const Matrix<Scalar>& w) {
  detail::require(w.rows() == w.cols() && w.rows() >= 1, "spectral gap: W must be square and nonempty");
  const Index n = w.rows();
  if (n == 1) return Scalar(1);
  const Matrix<Scalar> deflated = w - Matrix<Scalar>::Constant(n, n, Scalar(1) / static_cast<Scalar>(n));
  Scalar top(0);
  if (n <= kDenseEigenLimit) {
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(deflated, Eigen::EigenvaluesOnly);
    top = solver.eigenvalues().cwiseAbs().maxCoeff();
  } else {
    top = detail::power_iteration_abs_top(deflated);
  }
  const Scalar rho = Scalar(1) - top;
  if (!(rho > Scalar(kMinSpectralGap))) throw TopologyError("zero spectral gap (graph disconnected or periodic)");
  return std::min(rho, Scalar(1));
}

/// Symmetric doubly stochastic gossip weights with their cached spectral gap.
template <typename Scalar = double>
class MixingMatrix {
 public:
  /// Validates the invariants and computes rho; throws TopologyError on violation.
  explicit MixingMatrix(Matrix<Scalar> weights) : weights_(std::move(weights)) {
    detail::require(weights_.rows() == weights_.cols() && weights_.rows() >= 1, "mixing matrix must be square");
    const Scalar tol(kStochasticTolerance);
    if ((weights_.array() < Scalar(0)).any()) throw TopologyError("mixing matrix has negative entries");
    if ((weights_ - weights_.transpose()).cwiseAbs().maxCoeff() > tol)
      throw TopologyError("mixing matrix must be symmetric");
    const Index n = weights_.rows();
    if ((weights_.rowwise().sum() - Vector<Scalar>::Ones(n)).cwiseAbs().maxCoeff() > tol ||
        (weights_.colwise().sum().transpose() - Vector<Scalar>::Ones(n)).cwiseAbs().maxCoeff() > tol)
      throw TopologyError("mixing matrix is not doubly stochastic");
    spectral_gap_ = compute_spectral_gap(weights_);
  }

  Index agents() const { return weights_.rows(); }
  const Matrix<Scalar>& weights() const { return weights_; }
  Scalar spectral_gap() const { return spectral_gap_; }

 private:
  Matrix<Scalar> weights_;
  Scalar spectral_gap_ = Scalar(0);
};

inline std::vector<Edge> topology_edges(TopologyKind kind, Index n) {
  std::vector<Edge> edges;
  switch (kind) {
    case TopologyKind::Ring:
      for (Index i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
      break;
    case TopologyKind::Complete:
      for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j) edges.emplace_back(i, j);
      break;
    case TopologyKind::Path:
      for (Index i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
      break;
    case TopologyKind::Star:
      for (Index i = 1; i < n; ++i) edges.emplace_back(0, i);
      break;
    case TopologyKind::Custom:
      throw ContractError("custom topology requires an explicit edge list");
  }
  return edges;
}

/// Builds W for a graph. UniformNeighbor puts 1/(1 + max degree) on every edge, which is 1/3 on a
/// ring and 1/n on a complete graph; LazyMetropolis puts 1/(2 max(deg_i, deg_j)). The diagonal
/// absorbs the remainder, so self-loops are always present.
template <typename Scalar = double>
MixingMatrix<Scalar> build_mixing_matrix(TopologyKind kind, Index n, WeightScheme scheme,
                                         const std::vector<Edge>& custom_edges = {}) {
  if (n < 2) throw ConfigError("topology needs at least 2 agents", "network.agents");
  if (kind == TopologyKind::Ring && n < 3) throw ConfigError("ring topology needs at least 3 agents", "network.agents");
  const std::vector<Edge> edges = kind == TopologyKind::Custom ? custom_edges : topology_edges(kind, n);

  std::vector<std::vector<Index>> adj(static_cast<std::size_t>(n));
  Matrix<int> seen = Matrix<int>::Zero(n, n);
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n) throw TopologyError("edge endpoint out of range");
    if (a == b || seen(a, b)) continue;
    seen(a, b) = seen(b, a) = 1;
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  }

  std::vector<char> visited(static_cast<std::size_t>(n), 0);
  std::queue<Index> frontier;
  frontier.push(0);
  visited[0] = 1;
  Index reached = 1;
  while (!frontier.empty()) {
    const Index u = frontier.front();
    frontier.pop();
    for (const Index v : adj[static_cast<std::size_t>(u)])
      if (!visited[static_cast<std::size_t>(v)]) {
        visited[static_cast<std::size_t>(v)] = 1;
        ++reached;
        frontier.push(v);
      }
  }
  if (reached != n) throw TopologyError("communication graph is disconnected");

  auto degree = [&](Index i) { return static_cast<Scalar>(adj[static_cast<std::size_t>(i)].size()); };
  Scalar max_degree(0);
  for (Index i = 0; i < n; ++i) max_degree = std::max(max_degree, degree(i));

  Matrix<Scalar> w = Matrix<Scalar>::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (const Index j : adj[static_cast<std::size_t>(i)])
      w(i, j) = scheme == WeightScheme::UniformNeighbor ? Scalar(1) / (Scalar(1) + max_degree)
                                                        : Scalar(1) / (Scalar(2) * std::max(degree(i), degree(j)));
  for (Index i = 0; i < n; ++i) w(i, i) = Scalar(1) - w.row(i).sum();
  return MixingMatrix<Scalar>(std::move(w));
}

/// (||ZW - ZJ||_F, (1 - rho) ||Z - ZJ||_F) for a d×n matrix Z.
template <typename Scalar>
std::pair<Scalar, Scalar> contraction_check(const MixingMatrix<Scalar>& w, const Matrix<Scalar>& z) {
  detail::require(z.cols() == w.agents(), "contraction check: Z must have n columns");
  const Matrix<Scalar> mixed = z * w.weights();
  const Scalar lhs = (mixed.colwise() - column_mean(z)).norm();
  const Scalar rhs = (Scalar(1) - w.spectral_gap()) * consensus_deviation(z).norm();
  return {lhs, rhs};
}

struct EdgeList {
  std::vector<Edge> edges;
  Index agents = 0;  ///< 1 + largest endpoint
};

/// One "i j" pair per line, 0-based; blank lines and '#' comments ignored.
EdgeList parse_edge_list(std::istream& in);
EdgeList load_edge_list(const std::string& path);

}  // namespace dmt
