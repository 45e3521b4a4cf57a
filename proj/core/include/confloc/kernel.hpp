#pragma once

#include <confloc/features.hpp>

#include <Eigen/Core>

#include <span>
#include <vector>

namespace confloc {

enum class ScaleRule { Fixed, MedianHeuristic };

/// Per-node Gaussian kernel scales sigma_m (divisors of the squared distance).
struct KernelConfig {
  std::vector<double> sigma;
  ScaleRule scale_rule = ScaleRule::MedianHeuristic;

  void validate(std::size_t num_nodes) const;
};

/// Training features that every manifold kernel evaluation is taken against:
/// the n_L labeled samples first, then the unlabeled ones.
struct ReferenceSet {
  std::vector<AggregatedRtf> features;
  std::size_t n_labeled = 0;

  std::size_t size() const noexcept { return features.size(); }
  std::size_t n_unlabeled() const noexcept { return size() - n_labeled; }
  std::size_t num_nodes() const noexcept {
    return features.empty() ? 0 : features.front().num_nodes();
  }
  std::size_t bins_per_node() const noexcept {
    return features.empty() ? 0 : features.front().bins_per_node();
  }
  std::span<const AggregatedRtf> labeled() const noexcept {
    return std::span(features).first(n_labeled);
  }
  void validate() const;
};

/// Rows are queries, columns are reference samples:
/// C(i, r) = (1/M) sum_m k_m(h_i^m, h_r^m). The fused kernel is C_a * C_b^T.
struct NodeBaseMatrix {
  Eigen::MatrixXd C;
};

/// exp(-||u - v||^2 / sigma) with the complex Euclidean norm.
double node_kernel(const Eigen::Ref<const Eigen::VectorXcd>& u,
                   const Eigen::Ref<const Eigen::VectorXcd>& v, double sigma);

/// Single-node manifold covariance: sum over references r of
/// k_m(h_i, h_r) k_m(h_j, h_r).
double manifold_kernel(const AggregatedRtf& hi, const AggregatedRtf& hj,
                       std::size_t node, const ReferenceSet& refs,
                       const KernelConfig& cfg);

NodeBaseMatrix node_base_matrix(std::span<const AggregatedRtf> queries,
                                const ReferenceSet& refs,
                                const KernelConfig& cfg);

/// Fused multi-node kernel between every pair of queries (square, PSD).
Eigen::MatrixXd combined_kernel_matrix(std::span<const AggregatedRtf> queries,
                                       const ReferenceSet& refs,
                                       const KernelConfig& cfg);

/// Fused kernel between two query sets (rows x cols).
Eigen::MatrixXd combined_kernel_matrix(std::span<const AggregatedRtf> rows,
                                       std::span<const AggregatedRtf> cols,
                                       const ReferenceSet& refs,
                                       const KernelConfig& cfg);

/// Median over reference pairs of the node's squared feature distance.
/// Throws DegenerateManifoldError if every pair coincides on some node.
KernelConfig select_scales(const ReferenceSet& refs);

/// Dispatches on rule: Fixed validates and returns `fixed` unchanged.
KernelConfig select_scales(const ReferenceSet& refs, ScaleRule rule,
                           const std::vector<double>& fixed);

}  // namespace confloc
