#pragma once

#include <confloc/gpr.hpp>
#include <confloc/interval.hpp>

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace confloc {

inline constexpr double kUnnormalized = std::numeric_limits<double>::infinity();

/// Nonconformity scores as affine functions of the candidate test label:
/// score_i(c) = |a_i + c * b_i| for the n_L labeled samples followed by the
/// test sample in the last entry.
struct NonconformityProfile {
  Eigen::VectorXd a;
  Eigen::VectorXd b;
  double gamma = kUnnormalized;  // LOO-variance normalization exponent

  std::size_t n_labeled() const noexcept {
    return static_cast<std::size_t>(a.size()) - 1;
  }
  Eigen::VectorXd scores(double candidate) const {
    return (a + candidate * b).cwiseAbs();
  }
};

/// Conformal p-value stored as the exact ratio (count + 1) / (n_L + 1).
struct PValue {
  std::size_t numerator = 1;
  std::size_t denominator = 1;

  double value() const noexcept {
    return static_cast<double>(numerator) / static_cast<double>(denominator);
  }
  /// value() > delta
  bool exceeds(double delta) const noexcept {
    return static_cast<double>(numerator) >
           delta * static_cast<double>(denominator);
  }
};

/// a = M^-1 [labels; 0] ./ d^(1-1/gamma), b = M^-1 e_last ./ d^(1-1/gamma),
/// where M^-1 = (K* + sigma_p2 I)^-1 and d its diagonal. gamma = infinity
/// yields plain LOO residuals.
NonconformityProfile build_profile(const LooTable& loo,
                                   const Eigen::VectorXd& labels, double gamma);

/// Counts labeled scores that are >= the test score at `candidate`.
PValue p_value(const NonconformityProfile& profile, double candidate);

/// The p-value as a step function of the candidate label. Each labeled
/// sample contributes a closed set {c : score_i(c) >= score_test(c)} bounded
/// by at most two breakpoints; the count is tabulated on every breakpoint
/// and on every open gap between consecutive breakpoints.
class PValueStaircase {
 public:
  explicit PValueStaircase(const NonconformityProfile& profile);

  std::size_t n_labeled() const noexcept { return n_labeled_; }
  /// Sorted, distinct.
  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  /// Count at the breakpoint k.
  std::size_t count_at(std::size_t k) const { return counts_.at(2 * k + 1); }
  /// Count on the open gap before breakpoint k (k = size() is the last gap).
  std::size_t count_before(std::size_t k) const { return counts_.at(2 * k); }
  PValue p_value(double candidate) const;
  /// {c : p-value(c) > delta} as closed pieces; infinite ends are kept.
  PredictionInterval interval(double delta) const;

 private:
  std::size_t n_labeled_ = 0;
  std::vector<double> breakpoints_;
  std::vector<std::size_t> counts_;  // 2K+1 alternating gap / point slots
};

/// Exact conformal prediction set at miscoverage delta in (0, 1).
PredictionInterval predict_interval(const NonconformityProfile& profile,
                                    double delta);

struct Localization {
  Position2 point;
  std::array<PredictionInterval, 2> intervals;
};

/// GP point estimate plus one conformal interval per axis.
Localization localize_with_pi(const MmgpModel& model, const AggregatedRtf& h_t,
                              double delta, double gamma = 32.0);

// ---------------------------------------------------------------------------
// Jackknife+ baseline

/// 1-based order-statistic ranks used by Jackknife+ for n samples:
/// lower = floor(delta (n+1)), upper = ceil((1-delta)(n+1)).
std::pair<std::size_t, std::size_t> jackknife_plus_ranks(std::size_t n,
                                                         double delta);

/// [lower-rank smallest of (mu_i - R_i), upper-rank smallest of (mu_i + R_i)]
/// where mu_i is the leave-i-out prediction at the test point and R_i the
/// leave-i-out residual. Throws ConfigError if n < 1/delta.
PredictionInterval jackknife_plus_interval(std::span<const double> loo_at_test,
                                           std::span<const double> residuals,
                                           double delta);

/// Leave-one-out refits of a fitted model, sharing its kernel and reference
/// set. Construction costs n_L factorizations; queries are cheap.
class JackknifePlus {
 public:
  explicit JackknifePlus(const MmgpModel& model);

  std::size_t n_labeled() const noexcept {
    return static_cast<std::size_t>(residuals_[0].size());
  }
  /// |p_i - p_{-i}(h_i)|
  const Eigen::VectorXd& residuals(Axis axis) const noexcept {
    return residuals_[index(axis)];
  }
  /// Prediction of refit i at the test point, for every i.
  Eigen::VectorXd loo_at(const TestKernel& tk, Axis axis) const;
  /// Batched over test points: columns of k_lt are test points; result is
  /// n_L x p.
  Eigen::MatrixXd loo_at(const Eigen::MatrixXd& k_lt, Axis axis) const;

  PredictionInterval interval(const TestKernel& tk, Axis axis,
                              double delta) const;

 private:
  // Column i holds the refit-without-i weights over all n_L labels (zero at i).
  std::array<Eigen::MatrixXd, 2> weights_;
  std::array<Eigen::VectorXd, 2> residuals_;
};

}  // namespace confloc
