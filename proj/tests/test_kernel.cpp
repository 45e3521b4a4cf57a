#include "oracles.hpp"

#include <confloc/errors.hpp>
#include <confloc/kernel.hpp>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace confloc;
using confloc::oracle::Rng;

namespace {

ReferenceSet make_refs(std::vector<AggregatedRtf> features, std::size_t n_labeled) {
  ReferenceSet refs;
  refs.features = std::move(features);
  refs.n_labeled = n_labeled;
  return refs;
}

double min_eigen(const Eigen::MatrixXd& k) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
  return es.eigenvalues().minCoeff();
}

}  // namespace

TEST(NodeKernel, AnalyticValues) {
  Eigen::VectorXcd u(2), v(2);
  u << std::complex<double>(1, 0), std::complex<double>(0, 1);
  v << std::complex<double>(1, 1), std::complex<double>(0, 0);
  EXPECT_DOUBLE_EQ(node_kernel(u, u, 0.7), 1.0);
  // ||u - v||^2 = 1 + 1 = 2
  EXPECT_NEAR(node_kernel(u, v, 2.0), std::exp(-1.0), 1e-15);
  EXPECT_DOUBLE_EQ(node_kernel(u, v, 3.0), node_kernel(v, u, 3.0));
  EXPECT_THROW(node_kernel(u, Eigen::VectorXcd::Zero(3), 1.0), InputError);
  EXPECT_THROW(node_kernel(u, v, 0.0), ConfigError);
}

TEST(ManifoldKernel, SingleReferenceSelfValueIsOne) {
  Rng rng(1);
  auto feats = oracle::random_features(rng, 1, 1, 3);
  const auto refs = make_refs(feats, 1);
  KernelConfig cfg{{0.5}, ScaleRule::Fixed};
  EXPECT_DOUBLE_EQ(manifold_kernel(feats[0], feats[0], 0, refs, cfg), 1.0);
}

TEST(ManifoldKernel, MatchesDoubleLoopAndIsPositive) {
  Rng rng(2);
  const auto feats = oracle::random_features(rng, 7, 2, 3);
  const auto refs = make_refs(feats, 4);
  const KernelConfig cfg = oracle::random_scales(rng, 2, 2.0, 10.0);
  for (std::size_t m = 0; m < 2; ++m)
    for (std::size_t i = 0; i < feats.size(); ++i)
      for (std::size_t j = 0; j < feats.size(); ++j) {
        double expected = 0.0;
        for (const auto& r : feats)
          expected += node_kernel(feats[i].node(m), r.node(m), cfg.sigma[m]) *
                      node_kernel(feats[j].node(m), r.node(m), cfg.sigma[m]);
        const double got = manifold_kernel(feats[i], feats[j], m, refs, cfg);
        EXPECT_NEAR(got, expected, 1e-12);
        EXPECT_GT(got, 0.0);
      }
}

TEST(CombinedKernel, MatchesTripleSumOnRandomInstances) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto refs = make_refs(oracle::random_features(rng, 5, 3, 4), 3);
    const auto cfg = oracle::random_scales(rng, 3, 4.0, 20.0);
    const auto queries = oracle::random_features(rng, 4, 3, 4);
    const auto k = combined_kernel_matrix(queries, refs, cfg);
    for (std::size_t i = 0; i < queries.size(); ++i)
      for (std::size_t j = 0; j < queries.size(); ++j)
        EXPECT_NEAR(k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                    oracle::triple_sum_kernel(queries[i], queries[j], refs, cfg.sigma),
                    1e-12);
  }
}

TEST(CombinedKernel, SingleNodeReducesToManifoldKernel) {
  Rng rng(4);
  const auto feats = oracle::random_features(rng, 6, 1, 5);
  const auto refs = make_refs(feats, 3);
  KernelConfig cfg{{6.0}, ScaleRule::Fixed};
  const auto k = combined_kernel_matrix(feats, refs, cfg);
  for (std::size_t i = 0; i < feats.size(); ++i)
    for (std::size_t j = 0; j < feats.size(); ++j)
      EXPECT_NEAR(k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                  manifold_kernel(feats[i], feats[j], 0, refs, cfg), 1e-12);
}

TEST(CombinedKernel, DuplicatedNodeReducesToManifoldKernel) {
  Rng rng(5);
  const auto single = oracle::random_features(rng, 6, 1, 4);
  std::vector<AggregatedRtf> doubled;
  for (const auto& h : single) {
    Eigen::VectorXcd flat(8);
    flat << h.flat(), h.flat();
    doubled.emplace_back(flat, 2);
  }
  const auto refs1 = make_refs(single, 3);
  const auto refs2 = make_refs(doubled, 3);
  KernelConfig one{{5.0}, ScaleRule::Fixed};
  KernelConfig two{{5.0, 5.0}, ScaleRule::Fixed};
  const auto k2 = combined_kernel_matrix(doubled, refs2, two);
  for (std::size_t i = 0; i < single.size(); ++i)
    for (std::size_t j = 0; j < single.size(); ++j)
      EXPECT_NEAR(k2(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                  manifold_kernel(single[i], single[j], 0, refs1, one), 1e-12);
}

TEST(CombinedKernel, SymmetricPsdAndLowRank) {
  Rng rng(6);
  const auto refs = make_refs(oracle::random_features(rng, 4, 2, 3), 2);
  const auto cfg = oracle::random_scales(rng, 2, 1.0, 8.0);
  const auto queries = oracle::random_features(rng, 9, 2, 3);
  const auto k = combined_kernel_matrix(queries, refs, cfg);
  EXPECT_LT((k - k.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_GE(min_eigen(k), -1e-8 * k.trace() / static_cast<double>(k.rows()));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
  const auto& ev = es.eigenvalues();
  const auto significant = (ev.array() > 1e-9 * ev.maxCoeff()).count();
  EXPECT_LE(significant, static_cast<Eigen::Index>(refs.size()));
}

TEST(CombinedKernel, RectangularBlockMatchesSquare) {
  Rng rng(7);
  const auto refs = make_refs(oracle::random_features(rng, 6, 2, 3), 3);
  const auto cfg = oracle::random_scales(rng, 2, 2.0, 6.0);
  const auto a = oracle::random_features(rng, 3, 2, 3);
  const auto b = oracle::random_features(rng, 2, 2, 3);
  std::vector<AggregatedRtf> all(a);
  all.insert(all.end(), b.begin(), b.end());
  const auto full = combined_kernel_matrix(all, refs, cfg);
  const auto block = combined_kernel_matrix(a, b, refs, cfg);
  EXPECT_LT((block - full.topRightCorner(3, 2)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(CombinedKernel, ReferenceOrderDoesNotMatter) {
  Rng rng(8);
  auto feats = oracle::random_features(rng, 6, 2, 3);
  const auto cfg = oracle::random_scales(rng, 2, 2.0, 6.0);
  const auto queries = oracle::random_features(rng, 4, 2, 3);
  const auto k1 = combined_kernel_matrix(queries, make_refs(feats, 6), cfg);
  std::reverse(feats.begin(), feats.end());
  std::swap(feats[1], feats[4]);
  const auto k2 = combined_kernel_matrix(queries, make_refs(feats, 6), cfg);
  EXPECT_LT((k1 - k2).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CombinedKernel, LargeScalesApproachReferenceCount) {
  Rng rng(9);
  const auto refs = make_refs(oracle::random_features(rng, 7, 3, 2), 7);
  const auto queries = oracle::random_features(rng, 3, 3, 2);
  double previous_gap = 1e300;
  for (double s : {1e2, 1e4, 1e6, 1e8}) {
    KernelConfig cfg{{s, s, s}, ScaleRule::Fixed};
    const auto k = combined_kernel_matrix(queries, refs, cfg);
    const double gap = (k.array() - 7.0).abs().maxCoeff();
    EXPECT_LT(gap, previous_gap);
    previous_gap = gap;
  }
  EXPECT_LT(previous_gap, 1e-5);
}

TEST(CombinedKernel, ShapeMismatchThrows) {
  Rng rng(10);
  const auto refs = make_refs(oracle::random_features(rng, 4, 2, 3), 2);
  KernelConfig cfg{{1.0, 1.0}, ScaleRule::Fixed};
  const auto bad = oracle::random_features(rng, 2, 2, 4);
  EXPECT_THROW(combined_kernel_matrix(bad, refs, cfg), InputError);
  KernelConfig short_cfg{{1.0}, ScaleRule::Fixed};
  const auto ok = oracle::random_features(rng, 2, 2, 3);
  EXPECT_THROW(combined_kernel_matrix(ok, refs, short_cfg), ConfigError);
}

TEST(Scales, MedianOfSinglePairIsItsDistance) {
  Eigen::VectorXcd a(2), b(2);
  a << 0.0, 0.0;
  b << std::complex<double>(1, 1), std::complex<double>(0, 2);
  const auto refs = make_refs({AggregatedRtf(a, 1), AggregatedRtf(b, 1)}, 2);
  const auto cfg = select_scales(refs);
  ASSERT_EQ(cfg.sigma.size(), 1u);
  EXPECT_DOUBLE_EQ(cfg.sigma[0], 6.0);
}

TEST(Scales, HomogeneousUnderFeatureScaling) {
  Rng rng(11);
  auto feats = oracle::random_features(rng, 9, 2, 3);
  const auto base = select_scales(make_refs(feats, 9));
  const double alpha = 3.0;
  for (auto& h : feats) {
    Eigen::VectorXcd flat = h.flat();
    flat.head(3) *= alpha;
    h = AggregatedRtf(flat, 2);
  }
  const auto scaled = select_scales(make_refs(feats, 9));
  EXPECT_NEAR(scaled.sigma[0], alpha * alpha * base.sigma[0], 1e-12 * scaled.sigma[0]);
  EXPECT_NEAR(scaled.sigma[1], base.sigma[1], 1e-12 * base.sigma[1]);
}

TEST(Scales, MedianLiesBetweenExtremeDistances) {
  Rng rng(12);
  const auto feats = oracle::random_features(rng, 12, 2, 4);
  const auto cfg = select_scales(make_refs(feats, 12));
  for (std::size_t m = 0; m < 2; ++m) {
    double lo = 1e300, hi = 0.0;
    for (std::size_t i = 0; i < feats.size(); ++i)
      for (std::size_t j = i + 1; j < feats.size(); ++j) {
        const double d = (feats[i].node(m) - feats[j].node(m)).squaredNorm();
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
    EXPECT_GT(cfg.sigma[m], lo);
    EXPECT_LT(cfg.sigma[m], hi);
  }
}

TEST(Scales, DegenerateAndFixedRules) {
  Eigen::VectorXcd a = Eigen::VectorXcd::Ones(3);
  const auto same = make_refs({AggregatedRtf(a, 1), AggregatedRtf(a, 1)}, 2);
  EXPECT_THROW(select_scales(same), DegenerateManifoldError);
  const auto fixed = select_scales(same, ScaleRule::Fixed, {2.5});
  EXPECT_EQ(fixed.sigma, std::vector<double>{2.5});
  EXPECT_THROW(select_scales(same, ScaleRule::Fixed, {-1.0}), ConfigError);
  const auto one = make_refs({AggregatedRtf(a, 1)}, 1);
  EXPECT_THROW(select_scales(one), InputError);
}
