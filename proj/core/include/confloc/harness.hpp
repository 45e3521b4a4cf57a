#pragma once

#include <confloc/config.hpp>
#include <confloc/conformal.hpp>
#include <confloc/feature_io.hpp>
#include <confloc/model_io.hpp>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace confloc {

/// Fraction of truths inside their interval; closed ends count as covered.
/// Returns NaN for empty input.
double coverage(std::span<const PredictionInterval> intervals,
                std::span<const double> truths);

/// Width used in reports: total width of the union, after clipping to
/// [lo, hi] when the interval is unbounded.
struct ReportedWidth {
  double width = 0.0;
  bool clipped = false;
};
ReportedWidth reported_width(const PredictionInterval& interval, double lo,
                             double hi);

/// One (method, t60, snr, delta, axis) result of a single repeat.
struct RepeatRow {
  Method method = Method::GprCp;
  double t60 = 0.0;
  double snr_db = 0.0;
  double delta = 0.0;
  Axis axis = Axis::X;
  int repeat = 0;
  std::size_t n_test = 0;
  std::size_t covered = 0;
  std::size_t clipped = 0;
  double width_sum = 0.0;

  double coverage() const;    // NaN when n_test is 0
  double mean_width() const;  // NaN when n_test is 0
};

/// Aggregate over repeats of one (method, t60, snr, delta, axis) cell.
struct CoverageRow {
  Method method = Method::GprCp;
  double t60 = 0.0;
  double snr_db = 0.0;
  double delta = 0.0;
  Axis axis = Axis::X;
  int repeats = 0;
  std::size_t n_test = 0;
  std::size_t covered = 0;
  std::size_t clipped = 0;
  double width_sum = 0.0;

  double coverage() const;
  double mean_width() const;
};

struct CellFailure {
  double t60 = 0.0;
  double snr_db = 0.0;
  int repeat = 0;
  std::string message;
};

struct CoverageReport {
  std::vector<CoverageRow> rows;
  std::vector<RepeatRow> repeats;
  std::vector<CellFailure> failures;
  double wall_seconds = 0.0;

  bool complete() const noexcept { return failures.empty(); }
  std::size_t clipped() const noexcept;
  const CoverageRow* find(Method method, double t60, double snr_db, double delta,
                          Axis axis) const;
};

/// Sums repeat rows into per-cell rows, ordered by method (in `methods`
/// order), t60, snr, delta and axis.
std::vector<CoverageRow> aggregate(std::span<const RepeatRow> repeats,
                                   std::span<const Method> methods);

/// Seeds of one repeat in one (t60, snr) condition. Source positions and
/// signals depend only on the repeat, so conditions are compared on the
/// same dataset; microphone noise is drawn per condition.
std::vector<SamplePlan> plan_repeat(const ExperimentConfig& cfg, int repeat,
                                    std::size_t condition);

/// Simulates, fits and evaluates every method of one repeat. `cell` must
/// already carry the condition's t60 and snr.
std::vector<RepeatRow> evaluate_repeat(const PipelineConfig& cell,
                                       std::span<const SamplePlan> plan,
                                       std::span<const double> deltas,
                                       std::span<const Method> methods,
                                       int repeat);

/// Fits on the labeled and unlabeled records and evaluates every method on
/// the test records.
std::vector<RepeatRow> evaluate_features(const PipelineConfig& cell,
                                         const FeatureSet& features,
                                         std::span<const double> deltas,
                                         std::span<const Method> methods,
                                         int repeat);

using ProgressFn = std::function<void(const std::string&)>;

/// Runs every (t60, snr, repeat) cell on a worker pool. A failing cell is
/// recorded and skipped.
CoverageReport run_experiment(const ExperimentConfig& cfg,
                              const ProgressFn& progress = {});

struct SweepRow {
  double position = 0.0;  // true coordinate on the swept axis
  double point = 0.0;     // GP estimate
  double width = 0.0;     // reported width, clipped to the ROI if unbounded
  bool unbounded = false;
  bool covered = false;
  double nearest_labeled = 0.0;  // distance to the closest labeled position
};

/// Moves a source along `axis` across the ROI at `step` spacing with the
/// other coordinate fixed, and reports the GPR-CP interval at each stop.
/// Every stop is simulated from the pipeline scene with `seed`.
std::vector<SweepRow> sweep_positions(const ModelBundle& bundle,
                                      const PipelineConfig& cfg, Axis axis,
                                      double fixed_other, double step,
                                      double delta, std::uint64_t seed);

}  // namespace confloc
