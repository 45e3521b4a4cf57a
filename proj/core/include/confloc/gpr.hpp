#pragma once

#include <confloc/interval.hpp>
#include <confloc/kernel.hpp>
#include <confloc/types.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <array>
#include <span>
#include <vector>

namespace confloc {

/// Gaussian posterior of one coordinate at a test feature.
struct PosteriorSummary {
  double mean = 0.0;      // m
  double variance = 0.0;  // m^2, clamped at zero
};

/// Fused-kernel covariances between the labeled set and one test feature.
struct TestKernel {
  Eigen::VectorXd k_lt;  // n_L
  double k_tt = 0.0;
};

/// Multi-manifold GP regressor: two scalar regressions (x and y) sharing one
/// fused kernel over the labeled + unlabeled reference set. Immutable once
/// fitted; safe to share across threads.
class MmgpModel {
 public:
  /// Factorizes K_L + sigma_p2 I. If the factorization fails, adds
  /// 1e-8 * trace / n_L to the diagonal once and retries, then throws
  /// NumericalError. cfg.sigma must already be resolved.
  static MmgpModel fit(ReferenceSet refs, std::vector<Position2> labels,
                       KernelConfig cfg, double sigma_p2);

  const ReferenceSet& refs() const noexcept { return refs_; }
  const KernelConfig& kernel_config() const noexcept { return cfg_; }
  double sigma_p2() const noexcept { return sigma_p2_; }
  /// Diagonal jitter added on top of sigma_p2 (0 unless escalation kicked in).
  double jitter() const noexcept { return jitter_; }
  /// sigma_p2 + jitter: the diagonal term actually used.
  double noise() const noexcept { return sigma_p2_ + jitter_; }
  std::size_t n_labeled() const noexcept { return refs_.n_labeled; }
  const std::vector<Position2>& positions() const noexcept { return positions_; }
  const Eigen::VectorXd& labels(Axis axis) const noexcept {
    return labels_[index(axis)];
  }
  /// K_L without the noise term.
  const Eigen::MatrixXd& labeled_kernel() const noexcept { return k_labeled_; }
  /// Node-base rows of the labeled samples (n_L x n).
  const Eigen::MatrixXd& labeled_base() const noexcept { return base_labeled_; }
  const Eigen::LLT<Eigen::MatrixXd>& factorization() const noexcept {
    return llt_;
  }

  TestKernel test_kernel(const AggregatedRtf& h) const;
  /// Batched: K_LT is n_L x p, k_tt has length p.
  std::pair<Eigen::MatrixXd, Eigen::VectorXd> test_kernels(
      std::span<const AggregatedRtf> hs) const;

  PosteriorSummary posterior(const TestKernel& tk, Axis axis) const;
  PosteriorSummary posterior(const AggregatedRtf& h, Axis axis) const;
  std::array<PosteriorSummary, 2> posterior(const AggregatedRtf& h) const;

 private:
  ReferenceSet refs_;
  KernelConfig cfg_;
  double sigma_p2_ = 0.0;
  double jitter_ = 0.0;
  std::vector<Position2> positions_;
  std::array<Eigen::VectorXd, 2> labels_;
  Eigen::MatrixXd base_labeled_;
  Eigen::MatrixXd k_labeled_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  std::array<Eigen::VectorXd, 2> alpha_;
};

/// Assembles the reference set (labeled first), resolves the kernel scales
/// per cfg.scale_rule and fits. Requires n_L >= 2 and sigma_p2 > 0.
MmgpModel fit(std::span<const AggregatedRtf> labeled,
              std::span<const Position2> labels,
              std::span<const AggregatedRtf> unlabeled, const KernelConfig& cfg,
              double sigma_p2);

/// Closed-form leave-one-out quantities of the joint (n_L+1)-point system
/// K* + noise I over the labeled samples and one test feature.
struct LooTable {
  Eigen::MatrixXd inverse;  // (K* + noise I)^-1
  Eigen::VectorXd diag;     // its diagonal
  Eigen::VectorXd loo_var;  // 1 / diag
  /// LOO means for both axes with the candidate set to the point estimate;
  /// the last entry is the point estimate itself. Empty for tables built
  /// directly from a kernel matrix.
  std::array<Eigen::VectorXd, 2> loo_mean;

  std::size_t n_labeled() const noexcept {
    return static_cast<std::size_t>(inverse.rows()) - 1;
  }
};

/// Inverse via SPD factorization of kstar + noise I; throws NumericalError
/// if it is not positive definite.
LooTable make_loo_table(const Eigen::MatrixXd& kstar, double noise);

LooTable loo_table(const MmgpModel& model, const TestKernel& tk);
LooTable loo_table(const MmgpModel& model, const AggregatedRtf& h_t);

/// p_{-i} for i = 1..n_L and the test entry, given labels and a candidate
/// test label.
Eigen::VectorXd loo_predictions(const LooTable& loo,
                                const Eigen::VectorXd& labels,
                                double candidate);

/// Standard normal quantile.
double normal_quantile(double p);

/// Symmetric Gaussian interval mean +- z_{1-delta/2} sqrt(var [+ sigma_p2]).
PredictionInterval gpr_baseline_interval(const PosteriorSummary& post,
                                         double sigma_p2, double delta,
                                         bool include_noise = true);
PredictionInterval gpr_baseline_interval(const MmgpModel& model,
                                         const AggregatedRtf& h_t, Axis axis,
                                         double delta,
                                         bool include_noise = true);

}  // namespace confloc
