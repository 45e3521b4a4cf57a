#include <confloc/interval.hpp>

#include <algorithm>
#include <cmath>

namespace confloc {

PredictionInterval::PredictionInterval(std::vector<IntervalPiece> pieces,
                                       double delta)
    : delta_(delta) {
  std::sort(pieces.begin(), pieces.end(),
            [](const auto& a, const auto& b) { return a.lo < b.lo; });
  for (const auto& p : pieces) {
    if (!(p.lo <= p.hi)) continue;
    if (!pieces_.empty() && p.lo <= pieces_.back().hi)
      pieces_.back().hi = std::max(pieces_.back().hi, p.hi);
    else
      pieces_.push_back(p);
  }
}

bool PredictionInterval::unbounded() const noexcept {
  return !pieces_.empty() &&
         (std::isinf(pieces_.front().lo) || std::isinf(pieces_.back().hi));
}

double PredictionInterval::total_width() const noexcept {
  double w = 0.0;
  for (const auto& p : pieces_) w += p.width();
  return w;
}

bool PredictionInterval::contains(double v) const noexcept {
  return std::any_of(pieces_.begin(), pieces_.end(),
                     [v](const auto& p) { return p.contains(v); });
}

PredictionInterval PredictionInterval::clipped(double lo, double hi) const {
  std::vector<IntervalPiece> out;
  for (const auto& p : pieces_) {
    const IntervalPiece c{std::max(p.lo, lo), std::min(p.hi, hi)};
    if (c.lo <= c.hi) out.push_back(c);
  }
  return {std::move(out), delta_};
}

bool PredictionInterval::subset_of(
    const PredictionInterval& other) const noexcept {
  return std::all_of(pieces_.begin(), pieces_.end(), [&](const auto& p) {
    return std::any_of(other.pieces_.begin(), other.pieces_.end(),
                       [&](const auto& q) { return q.lo <= p.lo && p.hi <= q.hi; });
  });
}

PredictionInterval PredictionInterval::shifted(double offset) const {
  auto out = *this;
  for (auto& p : out.pieces_) {
    p.lo += offset;
    p.hi += offset;
  }
  return out;
}

}  // namespace confloc
