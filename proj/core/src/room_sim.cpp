#include <confloc/room_sim.hpp>

#include <confloc/errors.hpp>

#include "fft.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>

namespace confloc {
namespace {

constexpr double kSincHalfWidth = 8.0;  // taps on each side
constexpr int kMaxDefaultOrder = 60;
constexpr double kHighPassHz = 50.0;
constexpr double kDecayBin = 1e-3;       // s
constexpr double kMaxCalibrationImages = 1e8;

std::string fmt_point(const Vec3& p) {
  std::ostringstream os;
  os << "(" << p.x() << ", " << p.y() << ", " << p.z() << ")";
  return os.str();
}

// One image coordinate along a single axis, relative to the microphone.
struct AxisImage {
  double offset;
  int order;
};

std::vector<AxisImage> axis_images(double length, double src, double mic,
                                   int max_order) {
  std::vector<AxisImage> out;
  const int reach = max_order / 2 + 1;
  for (int m = -reach; m <= reach; ++m) {
    for (int q = 0; q <= 1; ++q) {
      const int order = std::abs(2 * m - q);
      if (order > max_order) continue;
      out.push_back({(1 - 2 * q) * src + 2 * m * length - mic, order});
    }
  }
  return out;
}

// Adds gain * hann(t/W) * sinc(t) for t = n - delay to the response.
void add_fractional_impulse(std::vector<double>& h, double delay,
                            double gain) {
  constexpr double pi = std::numbers::pi;
  const double w = kSincHalfWidth;
  const auto n_lo = static_cast<long>(std::ceil(delay - w));
  const auto n_hi = static_cast<long>(std::floor(delay + w));
  const double t0 = static_cast<double>(n_lo) - delay;

  // sin(pi t) alternates sign with unit steps of t; the window phase is
  // advanced with a rotation recurrence.
  double sin_pi_t = std::sin(pi * t0);
  const double step = pi / w;
  const double cos_step = std::cos(step);
  const double sin_step = std::sin(step);
  double c = std::cos(t0 * step);
  double s = std::sin(t0 * step);

  const auto len = static_cast<long>(h.size());
  for (long n = n_lo; n <= n_hi; ++n) {
    const double t = static_cast<double>(n) - delay;
    if (n >= 0 && n < len) {
      const double window = 0.5 * (1.0 + c);
      const double sinc = std::abs(t) < 1e-9 ? 1.0 : sin_pi_t / (pi * t);
      h[static_cast<std::size_t>(n)] += gain * window * sinc;
    }
    sin_pi_t = -sin_pi_t;
    const double c_next = c * cos_step - s * sin_step;
    s = s * cos_step + c * sin_step;
    c = c_next;
  }
}

// Second-order Butterworth high-pass, applied causally in place. Removes the
// low-frequency build-up caused by summing many same-sign image pulses.
void high_pass(std::vector<double>& x, double cutoff, double fs) {
  const double w = std::tan(std::numbers::pi * cutoff / fs);
  const double q = std::numbers::sqrt2;
  const double norm = 1.0 / (1.0 + q * w + w * w);
  const double a1 = 2.0 * (w * w - 1.0) * norm;
  const double a2 = (1.0 - q * w + w * w) * norm;
  double x1 = 0.0, x2 = 0.0, y1 = 0.0, y2 = 0.0;
  for (double& v : x) {
    const double y = norm * (v - 2.0 * x1 + x2) - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = v;
    y2 = y1;
    y1 = y;
    v = y;
  }
}

double mean_power(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

}  // namespace

void RoomSpec::validate() const {
  if (!(dimensions.array() > 0.0).all() || !dimensions.allFinite())
    throw ConfigError("room dimensions must be positive");
  if (!(t60 >= 0.0) || !std::isfinite(t60))
    throw ConfigError("t60 must be finite and non-negative");
  if (!(sample_rate > 0.0)) throw ConfigError("sample_rate must be positive");
  if (!(speed_of_sound > 0.0))
    throw ConfigError("speed_of_sound must be positive");
}

bool RoomSpec::contains(const Vec3& p) const noexcept {
  for (int a = 0; a < 3; ++a)
    if (!(p[a] > 0.0 && p[a] < dimensions[a])) return false;
  return true;
}

void ArrayLayout::validate(const RoomSpec& room) const {
  if (nodes.empty()) throw ConfigError("array needs at least one node");
  for (std::size_t m = 0; m < nodes.size(); ++m) {
    const auto& node = nodes[m];
    for (const Vec3* mic : {&node.mic1, &node.mic2})
      if (!room.contains(*mic))
        throw GeometryError("node " + std::to_string(m) + " microphone " +
                            fmt_point(*mic) + " is outside the room");
    if ((node.mic1 - node.mic2).norm() == 0.0)
      throw GeometryError("node " + std::to_string(m) +
                          " has coincident microphones");
  }
}

void Scene::validate() const {
  room.validate();
  array.validate(room);
  if (!(roi.x_min < roi.x_max && roi.y_min < roi.y_max))
    throw ConfigError("ROI must have positive extent");
  if (roi.x_min < 0.0 || roi.y_min < 0.0 || roi.x_max > room.dimensions.x() ||
      roi.y_max > room.dimensions.y())
    throw GeometryError("ROI is not inside the room footprint");
  if (!roi.contains(source_pos))
    throw GeometryError("source position is outside the ROI");
  if (!room.contains(source_point()))
    throw GeometryError("source " + fmt_point(source_point()) +
                        " is outside the room");
}

namespace {

// Squared-distance energy of every image arriving before `horizon`, split by
// reflection order and binned in time, for a fixed source/microphone pair
// placed off the room's symmetry planes.
struct DecayHistogram {
  std::size_t bins = 0;
  std::vector<std::vector<double>> by_order;
};

DecayHistogram image_energy_histogram(const RoomSpec& room, double horizon) {
  const Vec3& d = room.dimensions;
  const Vec3 src = d.cwiseProduct(Vec3(0.37, 0.41, 0.43));
  const Vec3 mic = d.cwiseProduct(Vec3(0.61, 0.58, 0.52));
  const double reach = horizon * room.speed_of_sound;
  const double reach2 = reach * reach;

  std::array<std::vector<AxisImage>, 3> axes;
  for (int a = 0; a < 3; ++a) {
    const int order = static_cast<int>(std::ceil(reach / d[a])) + 2;
    for (const auto& im : axis_images(d[a], src[a], mic[a], order))
      if (std::abs(im.offset) <= reach) axes[a].push_back(im);
  }

  DecayHistogram hist;
  hist.bins = static_cast<std::size_t>(std::ceil(horizon / kDecayBin)) + 1;
  const double bins_per_meter = 1.0 / (room.speed_of_sound * kDecayBin);
  for (const auto& ix : axes[0]) {
    const double x2 = ix.offset * ix.offset;
    for (const auto& iy : axes[1]) {
      const double xy2 = x2 + iy.offset * iy.offset;
      if (xy2 > reach2) continue;
      for (const auto& iz : axes[2]) {
        const double r2 = xy2 + iz.offset * iz.offset;
        if (r2 > reach2) continue;
        const auto order = static_cast<std::size_t>(ix.order + iy.order + iz.order);
        if (hist.by_order.size() <= order)
          hist.by_order.resize(order + 1, std::vector<double>(hist.bins, 0.0));
        const auto bin = static_cast<std::size_t>(std::sqrt(r2) * bins_per_meter);
        hist.by_order[order][std::min(bin, hist.bins - 1)] += 1.0 / r2;
      }
    }
  }
  return hist;
}

// Decay time from a -5..-25 dB line fit of the backward-integrated envelope.
// Returns +inf when the envelope never falls 25 dB and 0 when it falls
// through the fit range within a couple of bins.
double envelope_t20(const DecayHistogram& hist, double beta) {
  const double b2 = beta * beta;
  std::vector<double> edc(hist.bins, 0.0);
  for (std::size_t n = hist.by_order.size(); n-- > 0;)
    for (std::size_t k = 0; k < hist.bins; ++k)
      edc[k] = edc[k] * b2 + hist.by_order[n][k];
  for (std::size_t k = hist.bins - 1; k-- > 0;) edc[k] += edc[k + 1];

  const double total = edc.front();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  bool reached = false;
  for (std::size_t k = 0; k < hist.bins; ++k) {
    const double level = 10.0 * std::log10(edc[k] / total);
    if (level < -25.0) {
      reached = true;
      break;
    }
    if (level > -5.0) continue;
    const double t = (static_cast<double>(k) + 0.5) * kDecayBin;
    sx += t;
    sy += level;
    sxx += t * t;
    sxy += t * level;
    ++count;
  }
  if (!reached) return std::numeric_limits<double>::infinity();
  if (count < 3) return 0.0;
  const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
  return slope < 0.0 ? -60.0 / slope : std::numeric_limits<double>::infinity();
}

double calibrate_reflection(const RoomSpec& room) {
  const double horizon = 0.9 * room.t60;
  const double reach = horizon * room.speed_of_sound;
  const double images = 4.0 / 3.0 * std::numbers::pi * reach * reach * reach /
                        room.dimensions.prod();
  if (images > kMaxCalibrationImages)
    throw ConfigError("t60 " + std::to_string(room.t60) +
                      " s is too long for this room");
  const auto hist = image_energy_histogram(room, horizon);
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (envelope_t20(hist, mid) < room.t60 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double reflection_coefficient(const RoomSpec& room) {
  room.validate();
  if (room.t60 == 0.0) return 0.0;
  const Vec3& d = room.dimensions;
  const double volume = d.prod();
  const double surface = 2.0 * (d.x() * d.y() + d.x() * d.z() + d.y() * d.z());
  // Eyring estimate, only used to reject decay times no absorption can give.
  const double decay = 24.0 * std::numbers::ln10 * volume /
                       (room.speed_of_sound * surface * room.t60);
  if (!(std::exp(-0.5 * decay) < 1.0))
    throw ConfigError("t60 too large: wall reflection coefficient reaches 1");

  static std::mutex mutex;
  static std::map<std::array<double, 5>, double> cache;
  const std::array<double, 5> key{d.x(), d.y(), d.z(), room.t60,
                                  room.speed_of_sound};
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const double beta = calibrate_reflection(room);
  std::lock_guard lock(mutex);
  cache.emplace(key, beta);
  return beta;
}

int default_max_order(const RoomSpec& room) {
  room.validate();
  if (room.t60 == 0.0) return 0;
  const Vec3& d = room.dimensions;
  const double surface = 2.0 * (d.x() * d.y() + d.x() * d.z() + d.y() * d.z());
  const double mean_free_path = 4.0 * d.prod() / surface;
  const double path = 0.5 * room.t60 * room.speed_of_sound;
  const double order = std::ceil(path / mean_free_path);
  return static_cast<int>(std::min<double>(order, kMaxDefaultOrder));
}

std::vector<double> generate_rir(const RoomSpec& room, const Vec3& src,
                                 const Vec3& mic, int max_order) {
  room.validate();
  if (max_order < 0) throw ConfigError("max_order must be non-negative");
  if (!room.contains(src))
    throw GeometryError("source " + fmt_point(src) + " is outside the room");
  if (!room.contains(mic))
    throw GeometryError("microphone " + fmt_point(mic) +
                        " is outside the room");
  if ((src - mic).norm() == 0.0)
    throw GeometryError("source and microphone coincide");

  const double beta = reflection_coefficient(room);
  if (beta == 0.0) max_order = 0;

  const double fs = room.sample_rate;
  const double samples_per_meter = fs / room.speed_of_sound;
  const auto xs = axis_images(room.dimensions.x(), src.x(), mic.x(), max_order);
  const auto ys = axis_images(room.dimensions.y(), src.y(), mic.y(), max_order);
  const auto zs = axis_images(room.dimensions.z(), src.z(), mic.z(), max_order);

  std::vector<double> beta_pow(static_cast<std::size_t>(max_order) + 1, 1.0);
  for (std::size_t k = 1; k < beta_pow.size(); ++k)
    beta_pow[k] = beta_pow[k - 1] * beta;

  struct Arrival {
    double delay;
    double gain;
  };
  std::vector<Arrival> arrivals;
  double latest = 0.0;
  for (const auto& ix : xs) {
    for (const auto& iy : ys) {
      const int oxy = ix.order + iy.order;
      if (oxy > max_order) continue;
      const double dxy2 = ix.offset * ix.offset + iy.offset * iy.offset;
      for (const auto& iz : zs) {
        const int order = oxy + iz.order;
        if (order > max_order) continue;
        const double dist = std::sqrt(dxy2 + iz.offset * iz.offset);
        const double delay = dist * samples_per_meter;
        arrivals.push_back(
            {delay, beta_pow[static_cast<std::size_t>(order)] /
                        (4.0 * std::numbers::pi * dist)});
        latest = std::max(latest, delay);
      }
    }
  }

  const double direct_delay = (src - mic).norm() * samples_per_meter;
  auto length = static_cast<std::size_t>(
      std::floor(direct_delay + kSincHalfWidth) + 1);
  if (room.t60 > 0.0) {
    const auto cap = static_cast<std::size_t>(std::ceil(1.5 * room.t60 * fs));
    const auto covered =
        static_cast<std::size_t>(std::floor(latest + kSincHalfWidth) + 1);
    length = std::max(length, std::min(cap, covered));
  }

  std::vector<double> h(length, 0.0);
  for (const auto& a : arrivals) add_fractional_impulse(h, a.delay, a.gain);
  if (beta > 0.0) high_pass(h, kHighPassHz, fs);
  return h;
}

MultichannelRecording simulate_recording(const Scene& scene,
                                         std::span<const double> source_signal,
                                         std::uint64_t rng_seed) {
  scene.room.validate();
  return simulate_recording(scene, source_signal, rng_seed,
                            default_max_order(scene.room));
}

MultichannelRecording simulate_recording(const Scene& scene,
                                         std::span<const double> source_signal,
                                         std::uint64_t rng_seed,
                                         int max_order) {
  scene.validate();
  if (source_signal.empty() || mean_power(source_signal) == 0.0)
    throw ConfigError("source signal must be non-empty with nonzero power");
  if (std::isnan(scene.snr_db)) throw ConfigError("snr_db is NaN");

  const std::size_t channels = scene.array.num_channels();
  std::vector<std::vector<double>> rirs;
  rirs.reserve(channels);
  const Vec3 src = scene.source_point();
  for (std::size_t ch = 0; ch < channels; ++ch)
    rirs.push_back(generate_rir(scene.room, src, scene.array.mic(ch), max_order));

  const std::size_t len = source_signal.size();
  auto clean = detail::fft_convolve(source_signal, rirs, len);

  MultichannelRecording rec;
  rec.sample_rate = scene.room.sample_rate;
  rec.samples.resize(static_cast<Eigen::Index>(channels),
                     static_cast<Eigen::Index>(len));

  const bool noisy = scene.snr_db != std::numeric_limits<double>::infinity();
  if (noisy && !std::isfinite(scene.snr_db))
    throw ConfigError("snr_db must be finite or +inf");
  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t ch = 0; ch < channels; ++ch) {
    double noise_std = 0.0;
    if (noisy) {
      const double power = mean_power(clean[ch]);
      noise_std = std::sqrt(power / std::pow(10.0, scene.snr_db / 10.0));
    }
    const auto row = static_cast<Eigen::Index>(ch);
    for (std::size_t t = 0; t < len; ++t) {
      double v = clean[ch][t];
      if (noisy) v += noise_std * normal(rng);
      rec.samples(row, static_cast<Eigen::Index>(t)) = v;
    }
  }
  return rec;
}

std::vector<Position2> grid_positions(const Roi& roi, const GridSpec& grid) {
  if (grid.nx <= 0 || grid.ny <= 0)
    throw ConfigError("grid resolution must be positive");
  const double dx = roi.extent(Axis::X) / grid.nx;
  const double dy = roi.extent(Axis::Y) / grid.ny;
  std::vector<Position2> out;
  out.reserve(static_cast<std::size_t>(grid.nx) *
              static_cast<std::size_t>(grid.ny));
  for (int iy = 0; iy < grid.ny; ++iy)
    for (int ix = 0; ix < grid.nx; ++ix)
      out.push_back({roi.x_min + (ix + 0.5) * dx, roi.y_min + (iy + 0.5) * dy});
  return out;
}

std::vector<SamplePlan> plan_dataset(const Roi& roi, const GridSpec& grid,
                                     int n_unlabeled, int n_test,
                                     std::uint64_t rng_seed) {
  if (n_unlabeled < 0 || n_test < 0)
    throw ConfigError("sample counts must be non-negative");
  const auto labeled = grid_positions(roi, grid);

  std::mt19937_64 rng(derive_seed(rng_seed, {0x706f73}));
  std::uniform_real_distribution<double> ux(roi.x_min, roi.x_max);
  std::uniform_real_distribution<double> uy(roi.y_min, roi.y_max);

  std::vector<SamplePlan> plan;
  plan.reserve(labeled.size() + static_cast<std::size_t>(n_unlabeled + n_test));
  auto push = [&](SampleRole role, Position2 p) {
    const auto i = static_cast<std::uint64_t>(plan.size());
    plan.push_back({role, p, derive_seed(rng_seed, {1, i}),
                    derive_seed(rng_seed, {2, i})});
  };
  for (const auto& p : labeled) push(SampleRole::Labeled, p);
  for (int i = 0; i < n_unlabeled; ++i) {
    const double x = ux(rng);
    push(SampleRole::Unlabeled, {x, uy(rng)});
  }
  for (int i = 0; i < n_test; ++i) {
    const double x = ux(rng);
    push(SampleRole::Test, {x, uy(rng)});
  }
  return plan;
}

MultichannelRecording render_sample(const Scene& scene_template,
                                    const SamplePlan& plan,
                                    const SignalSource& signals) {
  Scene scene = scene_template;
  scene.source_pos = plan.position;
  const auto signal = signals(plan.signal_seed);
  return simulate_recording(scene, signal, plan.noise_seed);
}

Dataset build_dataset(const Scene& scene_template, const GridSpec& grid,
                      int n_unlabeled, int n_test, const SignalSource& signals,
                      std::uint64_t rng_seed) {
  const auto plan =
      plan_dataset(scene_template.roi, grid, n_unlabeled, n_test, rng_seed);
  Dataset ds;
  for (const auto& sample : plan) {
    auto rec = render_sample(scene_template, sample, signals);
    switch (sample.role) {
      case SampleRole::Labeled:
        ds.labeled.push_back({std::move(rec), sample.position});
        break;
      case SampleRole::Unlabeled:
        ds.unlabeled.push_back(std::move(rec));
        break;
      case SampleRole::Test:
        ds.test.push_back({std::move(rec), sample.position});
        break;
    }
  }
  return ds;
}

}  // namespace confloc
