#include <confloc/kernel.hpp>

#include <confloc/errors.hpp>

#include <algorithm>
#include <cmath>

namespace confloc {
namespace {

void check_shape(const AggregatedRtf& h, const ReferenceSet& refs) {
  if (h.num_nodes() != refs.num_nodes() ||
      h.bins_per_node() != refs.bins_per_node())
    throw InputError("feature shape (M, F) does not match the reference set");
}

double median(std::vector<double> v) {
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower =
      *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace

void KernelConfig::validate(std::size_t num_nodes) const {
  if (sigma.size() != num_nodes)
    throw ConfigError("kernel needs one scale per node");
  for (double s : sigma)
    if (!(s > 0.0) || !std::isfinite(s))
      throw ConfigError("kernel scales must be positive and finite");
}

void ReferenceSet::validate() const {
  if (n_labeled < 1 || n_labeled > features.size())
    throw InputError("reference set needs 1 <= n_L <= n");
  const auto m = num_nodes();
  const auto f = bins_per_node();
  for (const auto& h : features)
    if (h.num_nodes() != m || h.bins_per_node() != f)
      throw InputError("reference features have mismatched (M, F)");
}

double node_kernel(const Eigen::Ref<const Eigen::VectorXcd>& u,
                   const Eigen::Ref<const Eigen::VectorXcd>& v, double sigma) {
  if (u.size() != v.size()) throw InputError("node kernel length mismatch");
  if (!(sigma > 0.0)) throw ConfigError("kernel scale must be positive");
  return std::exp(-(u - v).squaredNorm() / sigma);
}

double manifold_kernel(const AggregatedRtf& hi, const AggregatedRtf& hj,
                       std::size_t node, const ReferenceSet& refs,
                       const KernelConfig& cfg) {
  if (refs.size() == 0) throw InputError("reference set is empty");
  check_shape(hi, refs);
  check_shape(hj, refs);
  if (node >= refs.num_nodes()) throw InputError("node index out of range");
  const double sigma = cfg.sigma.at(node);
  double acc = 0.0;
  for (const auto& r : refs.features)
    acc += node_kernel(hi.node(node), r.node(node), sigma) *
           node_kernel(hj.node(node), r.node(node), sigma);
  return acc;
}

NodeBaseMatrix node_base_matrix(std::span<const AggregatedRtf> queries,
                                const ReferenceSet& refs,
                                const KernelConfig& cfg) {
  refs.validate();
  const std::size_t m_count = refs.num_nodes();
  cfg.validate(m_count);
  for (const auto& q : queries) check_shape(q, refs);

  const auto p = static_cast<Eigen::Index>(queries.size());
  const auto n = static_cast<Eigen::Index>(refs.size());
  NodeBaseMatrix out{Eigen::MatrixXd::Zero(p, n)};
  const double inv_m = 1.0 / static_cast<double>(m_count);
  for (Eigen::Index i = 0; i < p; ++i) {
    const auto& q = queries[static_cast<std::size_t>(i)];
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto& ref = refs.features[static_cast<std::size_t>(r)];
      double acc = 0.0;
      for (std::size_t m = 0; m < m_count; ++m)
        acc += std::exp(-(q.node(m) - ref.node(m)).squaredNorm() / cfg.sigma[m]);
      out.C(i, r) = acc * inv_m;
    }
  }
  return out;
}

Eigen::MatrixXd combined_kernel_matrix(std::span<const AggregatedRtf> queries,
                                       const ReferenceSet& refs,
                                       const KernelConfig& cfg) {
  const auto base = node_base_matrix(queries, refs, cfg);
  Eigen::MatrixXd k = base.C * base.C.transpose();
  // Exact symmetry; the product is symmetric only up to rounding.
  return 0.5 * (k + k.transpose());
}

Eigen::MatrixXd combined_kernel_matrix(std::span<const AggregatedRtf> rows,
                                       std::span<const AggregatedRtf> cols,
                                       const ReferenceSet& refs,
                                       const KernelConfig& cfg) {
  const auto a = node_base_matrix(rows, refs, cfg);
  const auto b = node_base_matrix(cols, refs, cfg);
  return a.C * b.C.transpose();
}

KernelConfig select_scales(const ReferenceSet& refs) {
  refs.validate();
  if (refs.size() < 2)
    throw InputError("median heuristic needs at least two reference samples");
  KernelConfig cfg;
  cfg.scale_rule = ScaleRule::MedianHeuristic;
  const std::size_t n = refs.size();
  for (std::size_t m = 0; m < refs.num_nodes(); ++m) {
    std::vector<double> d2;
    d2.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        d2.push_back((refs.features[i].node(m) - refs.features[j].node(m))
                         .squaredNorm());
    double sigma = median(d2);
    if (sigma == 0.0) {
      // Duplicates can push the median to zero; fall back to the non-zero
      // pairs before declaring the manifold degenerate.
      std::erase(d2, 0.0);
      if (d2.empty())
        throw DegenerateManifoldError("all pairwise distances of node " +
                                      std::to_string(m) + " are zero");
      sigma = median(std::move(d2));
    }
    cfg.sigma.push_back(sigma);
  }
  return cfg;
}

KernelConfig select_scales(const ReferenceSet& refs, ScaleRule rule,
                           const std::vector<double>& fixed) {
  if (rule == ScaleRule::MedianHeuristic) return select_scales(refs);
  KernelConfig cfg{fixed, ScaleRule::Fixed};
  cfg.validate(refs.num_nodes());
  return cfg;
}

}  // namespace confloc
