#include <confloc/conformal.hpp>

#include <confloc/errors.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace confloc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Closed set {c : coef0 + coef1 * c >= 0} (sign = +1) or <= 0 (sign = -1),
// as a possibly empty or infinite piece.
struct Ray {
  bool empty;
  IntervalPiece piece;
};

Ray half_line(double coef0, double coef1, int sign) {
  const double c0 = sign * coef0;
  const double c1 = sign * coef1;
  if (c1 == 0.0) return {!(c0 >= 0.0), {-kInf, kInf}};
  const double root = -coef0 / coef1;
  if (c1 > 0.0) return {false, {root, kInf}};
  return {false, {-kInf, root}};
}

Ray intersect(const Ray& a, const Ray& b) {
  if (a.empty || b.empty) return {true, {}};
  const IntervalPiece p{std::max(a.piece.lo, b.piece.lo),
                        std::min(a.piece.hi, b.piece.hi)};
  return {!(p.lo <= p.hi), p};
}

// Pieces of {c : |a_i + c b_i| >= |a_t + c b_t|}, i.e. where
// (u - v)(u + v) >= 0 with u, v the two affine scores.
std::vector<IntervalPiece> conforming_set(double ai, double bi, double at,
                                          double bt) {
  const double f0 = ai - at, f1 = bi - bt;
  const double g0 = ai + at, g1 = bi + bt;
  const Ray both_pos = intersect(half_line(f0, f1, +1), half_line(g0, g1, +1));
  const Ray both_neg = intersect(half_line(f0, f1, -1), half_line(g0, g1, -1));
  std::vector<IntervalPiece> out;
  if (!both_pos.empty) out.push_back(both_pos.piece);
  if (!both_neg.empty) out.push_back(both_neg.piece);
  if (out.size() == 2) {
    if (out[1].lo < out[0].lo) std::swap(out[0], out[1]);
    if (out[1].lo <= out[0].hi) {
      out[0].hi = std::max(out[0].hi, out[1].hi);
      out.pop_back();
    }
  }
  return out;
}

}  // namespace

NonconformityProfile build_profile(const LooTable& loo,
                                   const Eigen::VectorXd& labels,
                                   double gamma) {
  const auto nl = static_cast<Eigen::Index>(loo.n_labeled());
  if (labels.size() != nl)
    throw InputError("label vector length differs from the LOO table");
  if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
  if ((loo.diag.array() <= 0.0).any())
    throw NumericalError("LOO diagonal is not positive; K* is not PD");

  const double exponent = std::isinf(gamma) ? 1.0 : 1.0 - 1.0 / gamma;
  const Eigen::VectorXd scale = loo.diag.array().pow(exponent);

  NonconformityProfile out;
  out.gamma = gamma;
  out.a = (loo.inverse.leftCols(nl) * labels).cwiseQuotient(scale);
  out.b = loo.inverse.col(nl).cwiseQuotient(scale);
  return out;
}

PValue p_value(const NonconformityProfile& profile, double candidate) {
  const auto n = profile.n_labeled();
  const auto last = static_cast<Eigen::Index>(n);
  const double test = std::abs(profile.a(last) + candidate * profile.b(last));
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < last; ++i)
    if (std::abs(profile.a(i) + candidate * profile.b(i)) >= test) ++count;
  return {count + 1, n + 1};
}

PValueStaircase::PValueStaircase(const NonconformityProfile& profile)
    : n_labeled_(profile.n_labeled()) {
  const auto last = static_cast<Eigen::Index>(n_labeled_);
  const double at = profile.a(last), bt = profile.b(last);

  std::vector<IntervalPiece> sets;
  sets.reserve(2 * n_labeled_);
  for (Eigen::Index i = 0; i < last; ++i)
    for (const auto& p : conforming_set(profile.a(i), profile.b(i), at, bt))
      sets.push_back(p);

  for (const auto& p : sets) {
    if (std::isfinite(p.lo)) breakpoints_.push_back(p.lo);
    if (std::isfinite(p.hi)) breakpoints_.push_back(p.hi);
  }
  std::sort(breakpoints_.begin(), breakpoints_.end());
  breakpoints_.erase(std::unique(breakpoints_.begin(), breakpoints_.end()),
                     breakpoints_.end());

  // Slot 2k+1 is breakpoint k, slot 2k is the gap before it, slot 2K the
  // final gap. A closed set covers a contiguous run of slots.
  const std::size_t slots = 2 * breakpoints_.size() + 1;
  std::vector<long> diff(slots + 1, 0);
  auto slot_of = [&](double x) {
    const auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), x);
    return 2 * static_cast<std::size_t>(it - breakpoints_.begin()) + 1;
  };
  for (const auto& p : sets) {
    const std::size_t first = std::isinf(p.lo) ? 0 : slot_of(p.lo);
    const std::size_t end = std::isinf(p.hi) ? slots - 1 : slot_of(p.hi);
    ++diff[first];
    --diff[end + 1];
  }
  counts_.resize(slots);
  long running = 0;
  for (std::size_t s = 0; s < slots; ++s) {
    running += diff[s];
    counts_[s] = static_cast<std::size_t>(running);
  }
}

PValue PValueStaircase::p_value(double candidate) const {
  const auto it =
      std::lower_bound(breakpoints_.begin(), breakpoints_.end(), candidate);
  const auto k = static_cast<std::size_t>(it - breakpoints_.begin());
  const std::size_t slot =
      (it != breakpoints_.end() && *it == candidate) ? 2 * k + 1 : 2 * k;
  return {counts_[slot] + 1, n_labeled_ + 1};
}

PredictionInterval PValueStaircase::interval(double delta) const {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  const double threshold = delta * static_cast<double>(n_labeled_ + 1);
  auto inside = [&](std::size_t s) {
    return static_cast<double>(counts_[s] + 1) > threshold;
  };
  auto slot_value = [&](std::size_t s, bool lower) {
    if (s % 2 == 1) return breakpoints_[(s - 1) / 2];
    return lower ? -kInf : kInf;  // only the outer gaps start or end a run
  };

  std::vector<IntervalPiece> pieces;
  const std::size_t slots = counts_.size();
  std::size_t s = 0;
  while (s < slots) {
    if (!inside(s)) {
      ++s;
      continue;
    }
    const std::size_t first = s;
    while (s + 1 < slots && inside(s + 1)) ++s;
    pieces.push_back({slot_value(first, true), slot_value(s, false)});
    ++s;
  }
  return PredictionInterval(std::move(pieces), delta);
}

PredictionInterval predict_interval(const NonconformityProfile& profile,
                                    double delta) {
  return PValueStaircase(profile).interval(delta);
}

Localization localize_with_pi(const MmgpModel& model, const AggregatedRtf& h_t,
                              double delta, double gamma) {
  const auto tk = model.test_kernel(h_t);
  const auto loo = loo_table(model, tk);
  Localization out;
  for (Axis axis : kAxes) {
    const auto& means = loo.loo_mean[index(axis)];
    out.point[axis] = means(means.size() - 1);
    const auto profile = build_profile(loo, model.labels(axis), gamma);
    out.intervals[index(axis)] = predict_interval(profile, delta);
  }
  return out;
}

}  // namespace confloc
