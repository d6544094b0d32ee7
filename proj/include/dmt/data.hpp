#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "dmt/objective.hpp"
#include "dmt/rng.hpp"
#include "dmt/types.hpp"

namespace dmt {

struct SparseSample {
  int label = 1;                                    ///< +1 or -1
  std::vector<std::pair<Index, double>> entries;    ///< 0-based, strictly increasing indices

  friend bool operator==(const SparseSample&, const SparseSample&) = default;
};

struct Dataset {
  std::vector<SparseSample> samples;
  Index dim = 0;  ///< 1 + largest feature index seen across the whole file
};

/// Reads LIBSVM text: `label idx:val idx:val ...`, 1-based indices, '#' comments, LF or CRLF.
/// Labels "+1"/"1" map to +1, "-1"/"0" to -1. Throws ParseError with the 1-based line number.
Dataset parse_libsvm(std::istream& in);
Dataset load_libsvm(const std::string& path);

/// Writes samples back in LIBSVM text (1-based indices, 17 significant digits).
void write_libsvm(std::ostream& out, const std::vector<SparseSample>& samples);

enum class PartitionMode { IIDShuffle, LabelSorted };

struct Partition {
  std::vector<std::vector<Index>> assignment;
  PartitionMode mode = PartitionMode::LabelSorted;
};

/// Splits sample indices into n contiguous blocks of floor(m/n), the first m mod n blocks one larger.
/// LabelSorted orders by label first (stable, -1 before +1); IIDShuffle uses a uniform permutation.
Partition partition(const std::vector<SparseSample>& samples, Index n, PartitionMode mode, Rng& rng);

/// Two Gaussian blobs, one per label, with means offset·w ± (separation/2)·u for random unit
/// directions u, w. A nonzero offset makes per-label subsets disagree about the gradient.
struct BlobSpec {
  Index samples = 2000;
  Index dim = 50;
  double separation = 2.0;
  double spread = 1.0;
  std::uint64_t seed = 1;
  double offset = 0.0;
};

Dataset make_synthetic_blobs(const BlobSpec& spec);

template <typename Scalar = double>
RegularizedLogisticObjective<Scalar> make_objective(const Dataset& data, const std::vector<Index>& rows,
                                                    Scalar alpha) {
  std::vector<Eigen::Triplet<Scalar>> triplets;
  Vector<Scalar> labels(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& s = data.samples.at(static_cast<std::size_t>(rows[r]));
    labels[static_cast<Index>(r)] = static_cast<Scalar>(s.label);
    for (const auto& [col, val] : s.entries)
      triplets.emplace_back(static_cast<Index>(r), col, static_cast<Scalar>(val));
  }
  SparseRows<Scalar> a(static_cast<Index>(rows.size()), data.dim);
  a.setFromTriplets(triplets.begin(), triplets.end());
  return RegularizedLogisticObjective<Scalar>(std::move(a), std::move(labels), alpha);
}

template <typename Scalar = double>
GlobalObjective<Scalar> make_global_objective(const Dataset& data, const Partition& part, Scalar alpha) {
  std::vector<RegularizedLogisticObjective<Scalar>> locals;
  locals.reserve(part.assignment.size());
  for (const auto& rows : part.assignment) locals.push_back(make_objective<Scalar>(data, rows, alpha));
  return GlobalObjective<Scalar>(std::move(locals));
}

/// (1/n) sum_i ||∇f_i(x) - ∇F(x)||^2 at a single point.
template <typename Scalar>
Scalar estimate_heterogeneity(const GlobalObjective<Scalar>& g, const VectorArg<Scalar>& x) {
  detail::require(x.size() == g.dim(), "heterogeneity: parameter dimension mismatch");
  Matrix<Scalar> grads(g.dim(), g.agents());
  for (Index i = 0; i < g.agents(); ++i) grads.col(i) = local_gradient(g.local(i), x);
  return consensus_deviation(grads).squaredNorm() / static_cast<Scalar>(g.agents());
}

}  // namespace dmt
