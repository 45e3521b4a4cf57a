#pragma once

#include <vector>

namespace confloc {

/// Closed interval [lo, hi]; either end may be infinite.
struct IntervalPiece {
  double lo = 0.0;
  double hi = 0.0;

  double width() const noexcept { return hi - lo; }
  bool contains(double v) const noexcept { return v >= lo && v <= hi; }
};

/// Union of sorted, disjoint closed pieces at nominal miscoverage delta.
class PredictionInterval {
 public:
  PredictionInterval() = default;
  /// Sorts and merges overlapping pieces.
  PredictionInterval(std::vector<IntervalPiece> pieces, double delta);

  const std::vector<IntervalPiece>& pieces() const noexcept { return pieces_; }
  double delta() const noexcept { return delta_; }
  bool empty() const noexcept { return pieces_.empty(); }
  /// True if any piece extends to -inf or +inf.
  bool unbounded() const noexcept;
  /// Lebesgue measure of the union; +inf when unbounded.
  double total_width() const noexcept;
  bool contains(double v) const noexcept;
  /// Intersection with [lo, hi].
  PredictionInterval clipped(double lo, double hi) const;
  /// True if every piece of this interval lies inside some piece of other.
  bool subset_of(const PredictionInterval& other) const noexcept;
  PredictionInterval shifted(double offset) const;

 private:
  std::vector<IntervalPiece> pieces_;
  double delta_ = 0.0;
};

}  // namespace confloc
