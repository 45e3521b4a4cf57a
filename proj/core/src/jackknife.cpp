#include <confloc/conformal.hpp>

#include <confloc/errors.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace confloc {
namespace {

// Guards floor/ceil against products like 0.1 * 11 landing a hair off an integer.
constexpr double kRankSlack = 1e-9;

double kth_smallest(std::vector<double> v, std::size_t k) {
  const auto it = v.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(v.begin(), it, v.end());
  return *it;
}

}  // namespace

std::pair<std::size_t, std::size_t> jackknife_plus_ranks(std::size_t n,
                                                         double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  const double np1 = static_cast<double>(n + 1);
  const auto lower = static_cast<std::size_t>(std::floor(delta * np1 + kRankSlack));
  const auto upper =
      static_cast<std::size_t>(std::ceil((1.0 - delta) * np1 - kRankSlack));
  if (lower < 1 || upper > n)
    throw ConfigError("Jackknife+ needs at least 1/delta - 1 labeled samples (n = " +
                      std::to_string(n) + ")");
  return {lower, upper};
}

PredictionInterval jackknife_plus_interval(std::span<const double> loo_at_test,
                                           std::span<const double> residuals,
                                           double delta) {
  if (loo_at_test.size() != residuals.size())
    throw InputError("Jackknife+ inputs differ in length");
  const std::size_t n = residuals.size();
  const auto [lower_rank, upper_rank] = jackknife_plus_ranks(n, delta);
  std::vector<double> lo(n), hi(n);
  for (std::size_t i = 0; i < n; ++i) {
    lo[i] = loo_at_test[i] - residuals[i];
    hi[i] = loo_at_test[i] + residuals[i];
  }
  return PredictionInterval(
      {{kth_smallest(std::move(lo), lower_rank),
        kth_smallest(std::move(hi), upper_rank)}},
      delta);
}

JackknifePlus::JackknifePlus(const MmgpModel& model) {
  const auto n = static_cast<Eigen::Index>(model.n_labeled());
  const Eigen::MatrixXd& k = model.labeled_kernel();
  for (auto& w : weights_) w = Eigen::MatrixXd::Zero(n, n);
  for (auto& r : residuals_) r = Eigen::VectorXd::Zero(n);

  std::vector<Eigen::Index> keep(static_cast<std::size_t>(n - 1));
  Eigen::MatrixXd sub(n - 1, n - 1);
  Eigen::VectorXd y(n - 1);
  Eigen::LLT<Eigen::MatrixXd> llt;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0, c = 0; j < n; ++j)
      if (j != i) keep[static_cast<std::size_t>(c++)] = j;
    sub = k(keep, keep);
    sub.diagonal().array() += model.noise();
    llt.compute(sub);
    if (llt.info() != Eigen::Success)
      throw NumericalError("leave-one-out refit is not positive definite");

    for (Axis axis : kAxes) {
      const auto ax = index(axis);
      const Eigen::VectorXd& labels = model.labels(axis);
      y = labels(keep);
      const Eigen::VectorXd alpha = llt.solve(y);
      for (Eigen::Index c = 0; c < n - 1; ++c)
        weights_[ax](keep[static_cast<std::size_t>(c)], i) = alpha(c);
      residuals_[ax](i) = std::abs(labels(i) - k.col(i).dot(weights_[ax].col(i)));
    }
  }
}

Eigen::VectorXd JackknifePlus::loo_at(const TestKernel& tk, Axis axis) const {
  if (tk.k_lt.size() != static_cast<Eigen::Index>(n_labeled()))
    throw InputError("test kernel length differs from n_L");
  return weights_[index(axis)].transpose() * tk.k_lt;
}

Eigen::MatrixXd JackknifePlus::loo_at(const Eigen::MatrixXd& k_lt,
                                      Axis axis) const {
  if (k_lt.rows() != static_cast<Eigen::Index>(n_labeled()))
    throw InputError("test kernel rows differ from n_L");
  return weights_[index(axis)].transpose() * k_lt;
}

PredictionInterval JackknifePlus::interval(const TestKernel& tk, Axis axis,
                                           double delta) const {
  const Eigen::VectorXd mu = loo_at(tk, axis);
  const Eigen::VectorXd& r = residuals_[index(axis)];
  return jackknife_plus_interval(std::span(mu.data(), static_cast<std::size_t>(mu.size())),
                                 std::span(r.data(), static_cast<std::size_t>(r.size())),
                                 delta);
}

}  // namespace confloc
