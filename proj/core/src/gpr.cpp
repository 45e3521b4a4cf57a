#include <confloc/gpr.hpp>

#include <confloc/errors.hpp>

#include <boost/math/distributions/normal.hpp>

#include <cmath>

namespace confloc {
namespace {

constexpr double kJitterScale = 1e-8;
constexpr double kVarianceTolerance = 1e-10;

bool factor_ok(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  if (llt.info() != Eigen::Success) return false;
  const auto d = llt.matrixLLT().diagonal();
  return d.allFinite() && (d.array() > 0.0).all();
}

}  // namespace

MmgpModel MmgpModel::fit(ReferenceSet refs, std::vector<Position2> labels,
                         KernelConfig cfg, double sigma_p2) {
  refs.validate();
  cfg.validate(refs.num_nodes());
  if (refs.n_labeled < 2) throw InputError("fitting needs at least 2 labeled samples");
  if (labels.size() != refs.n_labeled)
    throw InputError("label count differs from the labeled sample count");
  if (!(sigma_p2 > 0.0) || !std::isfinite(sigma_p2))
    throw ConfigError("sigma_p2 must be positive");

  MmgpModel model;
  model.refs_ = std::move(refs);
  model.cfg_ = std::move(cfg);
  model.sigma_p2_ = sigma_p2;
  model.positions_ = std::move(labels);

  const auto nl = static_cast<Eigen::Index>(model.refs_.n_labeled);
  for (Axis axis : kAxes) {
    Eigen::VectorXd v(nl);
    for (Eigen::Index i = 0; i < nl; ++i)
      v(i) = model.positions_[static_cast<std::size_t>(i)][axis];
    model.labels_[index(axis)] = std::move(v);
  }

  model.base_labeled_ =
      node_base_matrix(model.refs_.labeled(), model.refs_, model.cfg_).C;
  model.k_labeled_ = model.base_labeled_ * model.base_labeled_.transpose();
  model.k_labeled_ = 0.5 * (model.k_labeled_ + model.k_labeled_.transpose());

  Eigen::MatrixXd a = model.k_labeled_;
  a.diagonal().array() += sigma_p2;
  model.llt_.compute(a);
  if (!factor_ok(model.llt_)) {
    model.jitter_ = kJitterScale * a.trace() / static_cast<double>(nl);
    a.diagonal().array() += model.jitter_;
    model.llt_.compute(a);
    if (!factor_ok(model.llt_))
      throw NumericalError(
          "labeled kernel is ill-conditioned even with diagonal jitter; "
          "increase sigma_p2");
  }
  for (Axis axis : kAxes)
    model.alpha_[index(axis)] = model.llt_.solve(model.labels_[index(axis)]);
  return model;
}

TestKernel MmgpModel::test_kernel(const AggregatedRtf& h) const {
  const auto base = node_base_matrix(std::span(&h, 1), refs_, cfg_).C;
  TestKernel tk;
  tk.k_lt = base_labeled_ * base.row(0).transpose();
  tk.k_tt = base.row(0).squaredNorm();
  return tk;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> MmgpModel::test_kernels(
    std::span<const AggregatedRtf> hs) const {
  const auto base = node_base_matrix(hs, refs_, cfg_).C;
  return {base_labeled_ * base.transpose(), base.rowwise().squaredNorm()};
}

PosteriorSummary MmgpModel::posterior(const TestKernel& tk, Axis axis) const {
  if (tk.k_lt.size() != static_cast<Eigen::Index>(n_labeled()))
    throw InputError("test kernel length differs from n_L");
  PosteriorSummary out;
  out.mean = tk.k_lt.dot(alpha_[index(axis)]);
  const Eigen::VectorXd v = llt_.matrixL().solve(tk.k_lt);
  double var = tk.k_tt - v.squaredNorm();
  if (var < -kVarianceTolerance * std::max(1.0, tk.k_tt))
    throw NumericalError("posterior variance is negative beyond tolerance");
  out.variance = std::max(var, 0.0);
  return out;
}

PosteriorSummary MmgpModel::posterior(const AggregatedRtf& h, Axis axis) const {
  return posterior(test_kernel(h), axis);
}

std::array<PosteriorSummary, 2> MmgpModel::posterior(
    const AggregatedRtf& h) const {
  const auto tk = test_kernel(h);
  return {posterior(tk, Axis::X), posterior(tk, Axis::Y)};
}

MmgpModel fit(std::span<const AggregatedRtf> labeled,
              std::span<const Position2> labels,
              std::span<const AggregatedRtf> unlabeled, const KernelConfig& cfg,
              double sigma_p2) {
  ReferenceSet refs;
  refs.features.assign(labeled.begin(), labeled.end());
  refs.features.insert(refs.features.end(), unlabeled.begin(), unlabeled.end());
  refs.n_labeled = labeled.size();
  refs.validate();
  auto resolved = select_scales(refs, cfg.scale_rule, cfg.sigma);
  return MmgpModel::fit(std::move(refs),
                        std::vector<Position2>(labels.begin(), labels.end()),
                        std::move(resolved), sigma_p2);
}

LooTable make_loo_table(const Eigen::MatrixXd& kstar, double noise) {
  if (kstar.rows() != kstar.cols() || kstar.rows() < 2)
    throw InputError("K* must be square with at least two rows");
  Eigen::MatrixXd a = kstar;
  a.diagonal().array() += noise;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (!factor_ok(llt))
    throw NumericalError("K* + sigma_p2 I is not positive definite");

  LooTable t;
  t.inverse = llt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
  t.inverse = 0.5 * (t.inverse + t.inverse.transpose());
  t.diag = t.inverse.diagonal();
  if ((t.diag.array() <= 0.0).any())
    throw NumericalError("non-positive diagonal in (K* + sigma_p2 I)^-1");
  t.loo_var = t.diag.cwiseInverse();
  return t;
}

LooTable loo_table(const MmgpModel& model, const TestKernel& tk) {
  const auto nl = static_cast<Eigen::Index>(model.n_labeled());
  if (tk.k_lt.size() != nl) throw InputError("test kernel length differs from n_L");
  Eigen::MatrixXd kstar(nl + 1, nl + 1);
  kstar.topLeftCorner(nl, nl) = model.labeled_kernel();
  kstar.topRightCorner(nl, 1) = tk.k_lt;
  kstar.bottomLeftCorner(1, nl) = tk.k_lt.transpose();
  kstar(nl, nl) = tk.k_tt;

  auto t = make_loo_table(kstar, model.noise());
  for (Axis axis : kAxes) {
    const double point = model.posterior(tk, axis).mean;
    t.loo_mean[index(axis)] = loo_predictions(t, model.labels(axis), point);
  }
  return t;
}

LooTable loo_table(const MmgpModel& model, const AggregatedRtf& h_t) {
  return loo_table(model, model.test_kernel(h_t));
}

Eigen::VectorXd loo_predictions(const LooTable& loo,
                                const Eigen::VectorXd& labels,
                                double candidate) {
  const auto nl = static_cast<Eigen::Index>(loo.n_labeled());
  if (labels.size() != nl) throw InputError("label vector length differs from n_L");
  Eigen::VectorXd p(nl + 1);
  p.head(nl) = labels;
  p(nl) = candidate;
  const Eigen::VectorXd v = loo.inverse * p;
  return p - v.cwiseQuotient(loo.diag);
}

double normal_quantile(double p) {
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, p);
}

PredictionInterval gpr_baseline_interval(const PosteriorSummary& post,
                                         double sigma_p2, double delta,
                                         bool include_noise) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  const double var = post.variance + (include_noise ? sigma_p2 : 0.0);
  const double half = normal_quantile(1.0 - delta / 2.0) * std::sqrt(var);
  return PredictionInterval({{post.mean - half, post.mean + half}}, delta);
}

PredictionInterval gpr_baseline_interval(const MmgpModel& model,
                                         const AggregatedRtf& h_t, Axis axis,
                                         double delta, bool include_noise) {
  return gpr_baseline_interval(model.posterior(h_t, axis), model.sigma_p2(),
                               delta, include_noise);
}

}  // namespace confloc
