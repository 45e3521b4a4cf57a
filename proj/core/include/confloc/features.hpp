#pragma once

#include <confloc/room_sim.hpp>

#include <Eigen/Core>

#include <span>
#include <vector>

namespace confloc {

enum class WindowKind { Hann };

struct StftConfig {
  int fft_size = 1024;
  double overlap = 0.75;  // fraction of fft_size shared by adjacent frames
  WindowKind window = WindowKind::Hann;
  double sample_rate = 16000.0;

  int hop() const noexcept;
  int num_bins() const noexcept { return fft_size / 2 + 1; }
  void validate() const;
};

/// Frequency band of interest and the one-sided bin indices it maps to.
/// Edges are inclusive and Hz -> bin uses round-to-nearest.
struct BandSelection {
  double f_low = 150.0;
  double f_high = 1500.0;
  std::vector<int> bins;

  static BandSelection from_range(double f_low, double f_high,
                                  const StftConfig& cfg);
  std::size_t size() const noexcept { return bins.size(); }
  void validate() const;
};

/// Relative transfer function of one node over the selected band.
struct NodeRtf {
  Eigen::VectorXcd values;
};

/// Concatenation of M node RTFs, each of length F.
class AggregatedRtf {
 public:
  AggregatedRtf() = default;
  AggregatedRtf(Eigen::VectorXcd flat, std::size_t num_nodes);

  std::size_t num_nodes() const noexcept { return num_nodes_; }
  std::size_t bins_per_node() const noexcept {
    return num_nodes_ == 0 ? 0 : static_cast<std::size_t>(flat_.size()) / num_nodes_;
  }
  const Eigen::VectorXcd& flat() const noexcept { return flat_; }

  /// View of node m's segment.
  Eigen::VectorBlock<const Eigen::VectorXcd> node(std::size_t m) const {
    const auto f = static_cast<Eigen::Index>(bins_per_node());
    return flat_.segment(static_cast<Eigen::Index>(m) * f, f);
  }

  friend bool operator==(const AggregatedRtf& a, const AggregatedRtf& b) {
    return a.num_nodes_ == b.num_nodes_ && a.flat_ == b.flat_;
  }

 private:
  Eigen::VectorXcd flat_;
  std::size_t num_nodes_ = 0;
};

/// Hann-windowed one-sided STFT: fft_size/2+1 rows, one column per frame.
/// The window is periodic and normalized to unit sum. Throws InputError if
/// the signal is shorter than one frame.
Eigen::MatrixXcd stft(std::span<const double> signal, const StftConfig& cfg);

/// Frame-averaged CPSD(mic2, mic1) / PSD(mic1) at each band bin.
/// node_recording is 2 x T. Needs at least 8 frames. Throws
/// DegenerateBinError when PSD(mic1) falls below 1e-12 x band mean.
NodeRtf estimate_rtf(const Eigen::Ref<const Eigen::MatrixXd>& node_recording,
                     const StftConfig& cfg, const BandSelection& band);

AggregatedRtf aggregate(std::span<const NodeRtf> rtfs);
std::vector<NodeRtf> split(const AggregatedRtf& h);

/// RTFs of every node of a recording, aggregated.
AggregatedRtf extract_features(const MultichannelRecording& recording,
                               const StftConfig& cfg, const BandSelection& band);

}  // namespace confloc
