#include <confloc/harness.hpp>

#include <confloc/errors.hpp>
#include <confloc/pipeline.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <tuple>

namespace confloc {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double ratio(double num, std::size_t den) {
  return den == 0 ? kNaN : num / static_cast<double>(den);
}

struct RowKey {
  std::size_t method_rank;
  double t60, snr, delta;
  std::size_t axis;

  auto tie() const { return std::tie(method_rank, t60, snr, delta, axis); }
  bool operator<(const RowKey& o) const { return tie() < o.tie(); }
};

std::size_t method_rank(Method m, std::span<const Method> methods) {
  const auto it = std::find(methods.begin(), methods.end(), m);
  return static_cast<std::size_t>(it - methods.begin());
}

class RowAccumulator {
 public:
  RowAccumulator(const PipelineConfig& cell, std::span<const double> deltas,
                 std::size_t n_test, int repeat)
      : roi_(cell.scene.roi) {
    for (std::size_t d = 0; d < deltas.size(); ++d)
      for (Axis axis : kAxes) {
        RepeatRow row;
        row.t60 = cell.scene.room.t60;
        row.snr_db = cell.scene.snr_db;
        row.delta = deltas[d];
        row.axis = axis;
        row.repeat = repeat;
        row.n_test = n_test;
        template_.push_back(row);
      }
  }

  std::vector<RepeatRow> start(Method method) const {
    auto rows = template_;
    for (auto& r : rows) r.method = method;
    return rows;
  }

  void add(std::vector<RepeatRow>& rows, std::size_t d, Axis axis,
           const PredictionInterval& interval, double truth) const {
    auto& row = rows[2 * d + index(axis)];
    if (interval.contains(truth)) ++row.covered;
    const auto w = reported_width(interval, roi_.lower(axis), roi_.upper(axis));
    row.width_sum += w.width;
    if (w.clipped) ++row.clipped;
  }

 private:
  Roi roi_;
  std::vector<RepeatRow> template_;
};

}  // namespace

double coverage(std::span<const PredictionInterval> intervals,
                std::span<const double> truths) {
  if (intervals.size() != truths.size())
    throw InputError("coverage needs one truth per interval");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truths.size(); ++i)
    if (intervals[i].contains(truths[i])) ++hits;
  return ratio(static_cast<double>(hits), truths.size());
}

ReportedWidth reported_width(const PredictionInterval& interval, double lo,
                             double hi) {
  if (!interval.unbounded()) return {interval.total_width(), false};
  return {interval.clipped(lo, hi).total_width(), true};
}

double RepeatRow::coverage() const {
  return ratio(static_cast<double>(covered), n_test);
}
double RepeatRow::mean_width() const { return ratio(width_sum, n_test); }
double CoverageRow::coverage() const {
  return ratio(static_cast<double>(covered), n_test);
}
double CoverageRow::mean_width() const { return ratio(width_sum, n_test); }

std::size_t CoverageReport::clipped() const noexcept {
  std::size_t total = 0;
  for (const auto& r : rows) total += r.clipped;
  return total;
}

const CoverageRow* CoverageReport::find(Method method, double t60, double snr_db,
                                        double delta, Axis axis) const {
  for (const auto& r : rows)
    if (r.method == method && r.t60 == t60 && r.snr_db == snr_db &&
        r.delta == delta && r.axis == axis)
      return &r;
  return nullptr;
}

std::vector<CoverageRow> aggregate(std::span<const RepeatRow> repeats,
                                   std::span<const Method> methods) {
  std::map<RowKey, CoverageRow> cells;
  for (const auto& r : repeats) {
    const RowKey key{method_rank(r.method, methods), r.t60, r.snr_db, r.delta,
                     index(r.axis)};
    auto [it, inserted] = cells.try_emplace(key);
    auto& c = it->second;
    if (inserted) {
      c.method = r.method;
      c.t60 = r.t60;
      c.snr_db = r.snr_db;
      c.delta = r.delta;
      c.axis = r.axis;
    }
    ++c.repeats;
    c.n_test += r.n_test;
    c.covered += r.covered;
    c.clipped += r.clipped;
    c.width_sum += r.width_sum;
  }
  std::vector<CoverageRow> out;
  out.reserve(cells.size());
  for (auto& [key, row] : cells) out.push_back(row);
  return out;
}

std::vector<SamplePlan> plan_repeat(const ExperimentConfig& cfg, int repeat,
                                    std::size_t condition) {
  const auto& p = cfg.pipeline;
  auto plan = plan_dataset(p.scene.roi, p.grid, p.n_unlabeled, p.n_test,
                           derive_seed(cfg.seed, {static_cast<std::uint64_t>(repeat)}));
  for (std::size_t i = 0; i < plan.size(); ++i)
    plan[i].noise_seed = derive_seed(
        cfg.seed, {0x6e6f697365, condition, static_cast<std::uint64_t>(repeat), i});
  return plan;
}

std::vector<RepeatRow> evaluate_repeat(const PipelineConfig& cell,
                                       std::span<const SamplePlan> plan,
                                       std::span<const double> deltas,
                                       std::span<const Method> methods,
                                       int repeat) {
  return evaluate_features(cell, simulate_features(cell, plan), deltas, methods,
                           repeat);
}

std::vector<RepeatRow> evaluate_features(const PipelineConfig& cell,
                                         const FeatureSet& features,
                                         std::span<const double> deltas,
                                         std::span<const Method> methods,
                                         int repeat) {
  const auto bundle = fit_model(features, cell);
  const auto& model = bundle.model;
  const auto tests = features_of(features, SampleRole::Test);
  const auto truths = positions_of(features, SampleRole::Test);
  const std::size_t n_test = tests.size();

  RowAccumulator acc(cell, deltas, n_test, repeat);
  std::vector<RepeatRow> out;
  if (n_test == 0) {
    for (Method m : methods) {
      auto rows = acc.start(m);
      out.insert(out.end(), rows.begin(), rows.end());
    }
    return out;
  }

  const auto [k_lt, k_tt] = model.test_kernels(tests);
  auto test_kernel = [&](std::size_t j) {
    const auto c = static_cast<Eigen::Index>(j);
    return TestKernel{k_lt.col(c), k_tt(c)};
  };

  for (Method method : methods) {
    auto rows = acc.start(method);
    switch (method) {
      case Method::Gpr:
        for (std::size_t j = 0; j < n_test; ++j) {
          const auto tk = test_kernel(j);
          for (Axis axis : kAxes) {
            const auto post = model.posterior(tk, axis);
            for (std::size_t d = 0; d < deltas.size(); ++d)
              acc.add(rows, d, axis,
                      gpr_baseline_interval(post, model.sigma_p2(), deltas[d],
                                            cell.baseline_includes_noise),
                      truths[j][axis]);
          }
        }
        break;
      case Method::JackknifePlus: {
        const JackknifePlus jp(model);
        for (Axis axis : kAxes) {
          const Eigen::MatrixXd mu = jp.loo_at(k_lt, axis);
          const Eigen::VectorXd& res = jp.residuals(axis);
          const std::span<const double> r(res.data(), static_cast<std::size_t>(res.size()));
          for (std::size_t j = 0; j < n_test; ++j) {
            const Eigen::VectorXd col = mu.col(static_cast<Eigen::Index>(j));
            const std::span<const double> m(col.data(), static_cast<std::size_t>(col.size()));
            for (std::size_t d = 0; d < deltas.size(); ++d)
              acc.add(rows, d, axis, jackknife_plus_interval(m, r, deltas[d]),
                      truths[j][axis]);
          }
        }
        break;
      }
      case Method::GprCp:
        for (std::size_t j = 0; j < n_test; ++j) {
          const auto loo = loo_table(model, test_kernel(j));
          for (Axis axis : kAxes) {
            const PValueStaircase stairs(build_profile(loo, model.labels(axis), cell.gamma));
            for (std::size_t d = 0; d < deltas.size(); ++d)
              acc.add(rows, d, axis, stairs.interval(deltas[d]), truths[j][axis]);
          }
        }
        break;
    }
    out.insert(out.end(), rows.begin(), rows.end());
  }
  return out;
}

CoverageReport run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();

  struct Cell {
    std::size_t t60_index, snr_index;
    int repeat;
  };
  std::vector<Cell> cells;
  for (std::size_t a = 0; a < cfg.t60s.size(); ++a)
    for (std::size_t b = 0; b < cfg.snrs_db.size(); ++b)
      for (int r = 0; r < cfg.repeats; ++r) cells.push_back({a, b, r});

  std::vector<std::vector<RepeatRow>> results(cells.size());
  std::vector<std::optional<CellFailure>> failures(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const auto& c = cells[i];
      PipelineConfig cell = cfg.pipeline;
      cell.scene.room.t60 = cfg.t60s[c.t60_index];
      cell.scene.snr_db = cfg.snrs_db[c.snr_index];
      try {
        const auto plan =
            plan_repeat(cfg, c.repeat, c.t60_index * cfg.snrs_db.size() + c.snr_index);
        results[i] = evaluate_repeat(cell, plan, cfg.deltas, cfg.methods, c.repeat);
      } catch (const std::exception& e) {
        failures[i] = CellFailure{cell.scene.room.t60, cell.scene.snr_db, c.repeat, e.what()};
      }
      if (progress) {
        std::lock_guard lock(log_mutex);
        progress("cell t60=" + std::to_string(cell.scene.room.t60) +
                 " snr=" + std::to_string(cell.scene.snr_db) +
                 " repeat=" + std::to_string(c.repeat) +
                 (failures[i] ? " FAILED: " + failures[i]->message : " done"));
      }
    }
  };

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const auto n_threads = std::min<std::size_t>(
      cfg.threads > 0 ? static_cast<std::size_t>(cfg.threads) : hw, cells.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  CoverageReport report;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    report.repeats.insert(report.repeats.end(), results[i].begin(), results[i].end());
    if (failures[i]) report.failures.push_back(*failures[i]);
  }
  report.rows = aggregate(report.repeats, cfg.methods);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::vector<SweepRow> sweep_positions(const ModelBundle& bundle,
                                      const PipelineConfig& cfg, Axis axis,
                                      double fixed_other, double step,
                                      double delta, std::uint64_t seed) {
  if (!(step > 0.0)) throw ConfigError("sweep step must be positive");
  const auto& roi = cfg.scene.roi;
  const Axis other = axis == Axis::X ? Axis::Y : Axis::X;
  const auto stops =
      static_cast<std::size_t>(std::floor(roi.extent(axis) / step + 1e-9)) + 1;

  std::vector<SamplePlan> plan;
  for (std::size_t i = 0; i < stops; ++i) {
    Position2 p;
    p[axis] = roi.lower(axis) + static_cast<double>(i) * step;
    p[other] = fixed_other;
    plan.push_back({SampleRole::Test, p, derive_seed(seed, {1, i}), derive_seed(seed, {2, i})});
  }
  const auto features = simulate_features(cfg, plan);

  const auto& model = bundle.model;
  std::vector<SweepRow> out;
  for (std::size_t i = 0; i < stops; ++i) {
    const auto& truth = plan[i].position;
    const auto loc = localize_with_pi(model, features.records[i].h, delta, cfg.gamma);
    const auto& interval = loc.intervals[index(axis)];
    SweepRow row;
    row.position = truth[axis];
    row.point = loc.point[axis];
    const auto w = reported_width(interval, roi.lower(axis), roi.upper(axis));
    row.width = w.width;
    row.unbounded = w.clipped;
    row.covered = interval.contains(truth[axis]);
    row.nearest_labeled = std::numeric_limits<double>::infinity();
    for (const auto& p : model.positions())
      row.nearest_labeled = std::min(row.nearest_labeled, std::hypot(p.x - truth.x, p.y - truth.y));
    out.push_back(row);
  }
  return out;
}

}  // namespace confloc
