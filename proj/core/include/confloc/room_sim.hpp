#pragma once

#include <confloc/types.hpp>

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace confloc {

using Vec3 = Eigen::Vector3d;

/// Shoebox room with frequency-independent wall absorption.
struct RoomSpec {
  Vec3 dimensions{5.2, 6.2, 3.5};  // m
  double t60 = 0.0;                // s, 0 means anechoic
  double sample_rate = 16000.0;    // Hz
  double speed_of_sound = 343.0;   // m/s

  /// Throws ConfigError on non-positive dimensions, negative t60 or rate.
  void validate() const;
  /// Strictly inside the room volume.
  bool contains(const Vec3& p) const noexcept;
};

/// A pair of omnidirectional microphones treated as one observation unit.
struct MicNode {
  Vec3 mic1;
  Vec3 mic2;
};

struct ArrayLayout {
  std::vector<MicNode> nodes;

  std::size_t num_nodes() const noexcept { return nodes.size(); }
  std::size_t num_channels() const noexcept { return 2 * nodes.size(); }
  /// Channel order is node-major: node m owns channels 2m and 2m+1.
  const Vec3& mic(std::size_t channel) const {
    const auto& node = nodes.at(channel / 2);
    return channel % 2 == 0 ? node.mic1 : node.mic2;
  }
  void validate(const RoomSpec& room) const;
};

/// Room, array and one source placement with its noise settings.
struct Scene {
  RoomSpec room;
  ArrayLayout array;
  Position2 source_pos;
  double source_height = 1.5;  // m
  Roi roi;
  double snr_db = std::numeric_limits<double>::infinity();  // +inf disables noise
  std::uint64_t seed = 0;

  Vec3 source_point() const noexcept {
    return {source_pos.x, source_pos.y, source_height};
  }
  void validate() const;
};

/// Channel-major 2M x T matrix of microphone samples.
struct MultichannelRecording {
  Eigen::MatrixXd samples;
  double sample_rate = 16000.0;

  std::size_t num_channels() const noexcept {
    return static_cast<std::size_t>(samples.rows());
  }
  std::size_t num_samples() const noexcept {
    return static_cast<std::size_t>(samples.cols());
  }
  std::size_t num_nodes() const noexcept { return num_channels() / 2; }
  /// The two rows belonging to node m.
  Eigen::Ref<const Eigen::MatrixXd> node(std::size_t m) const {
    return samples.middleRows(static_cast<Eigen::Index>(2 * m), 2);
  }
};

/// Frequency-independent wall reflection coefficient for the room's t60.
/// Found by bisection so that the energy envelope of the image lattice
/// (all orders, off-centre source and microphone) has a -5..-25 dB decay
/// slope of 60 dB per t60. Results are cached per room.
/// Throws ConfigError when the Eyring coefficient for t60 rounds to 1 or the
/// lattice needed for calibration exceeds 1e8 images.
double reflection_coefficient(const RoomSpec& room);

/// Reflection order reached by a path of 0.5 x t60 x c at the room's mean
/// free path, capped at 60. Covers the decay range the calibration fits.
int default_max_order(const RoomSpec& room);

/// Image-source room impulse response between src and mic, sampled at
/// room.sample_rate. Fractional delays use a Hann-windowed sinc with +-8 taps.
/// Reverberant responses pass through a 50 Hz second-order high-pass.
/// The response is truncated at 1.5 x t60 or at the last simulated image,
/// whichever comes first.
std::vector<double> generate_rir(const RoomSpec& room, const Vec3& src,
                                 const Vec3& mic, int max_order);

/// Convolves source_signal with every microphone RIR and adds white Gaussian
/// noise at scene.snr_db (per channel, relative to the reverberant signal
/// power). The output has the same length as the source signal.
MultichannelRecording simulate_recording(const Scene& scene,
                                         std::span<const double> source_signal,
                                         std::uint64_t rng_seed);

/// Same as above with a caller-provided max reflection order.
MultichannelRecording simulate_recording(const Scene& scene,
                                         std::span<const double> source_signal,
                                         std::uint64_t rng_seed, int max_order);

// ---------------------------------------------------------------------------
// Dataset construction

/// Cell-centred uniform grid over the ROI: nx x ny points at pitch
/// extent/nx and extent/ny.
struct GridSpec {
  int nx = 15;
  int ny = 15;
};

std::vector<Position2> grid_positions(const Roi& roi, const GridSpec& grid);

/// Produces one source signal from a seed.
using SignalSource = std::function<std::vector<double>(std::uint64_t seed)>;

enum class SampleRole { Labeled, Unlabeled, Test };

/// Where one dataset sample is rendered and with which seeds.
struct SamplePlan {
  SampleRole role = SampleRole::Labeled;
  Position2 position;
  std::uint64_t signal_seed = 0;
  std::uint64_t noise_seed = 0;
};

/// Positions and seeds of every sample, in labeled, unlabeled, test order.
/// Unlabeled and test positions are uniform in the ROI.
std::vector<SamplePlan> plan_dataset(const Roi& roi, const GridSpec& grid,
                                     int n_unlabeled, int n_test,
                                     std::uint64_t rng_seed);

struct LabeledRecording {
  MultichannelRecording recording;
  Position2 position;
};

struct Dataset {
  std::vector<LabeledRecording> labeled;
  std::vector<MultichannelRecording> unlabeled;
  /// Test positions are kept for evaluation only.
  std::vector<LabeledRecording> test;
};

/// Renders one planned sample from the scene template.
MultichannelRecording render_sample(const Scene& scene_template,
                                    const SamplePlan& plan,
                                    const SignalSource& signals);

Dataset build_dataset(const Scene& scene_template, const GridSpec& grid,
                      int n_unlabeled, int n_test, const SignalSource& signals,
                      std::uint64_t rng_seed);

// ---------------------------------------------------------------------------
// Built-in source signals

std::vector<double> white_noise(std::size_t n, std::uint64_t seed);

/// White noise through a one-pole low-pass at 500 Hz (-6 dB/octave above).
std::vector<double> speech_shaped_noise(std::size_t n, double sample_rate,
                                        std::uint64_t seed);

/// splitmix64-based derivation of independent stream seeds.
std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::uint64_t> path);

}  // namespace confloc
