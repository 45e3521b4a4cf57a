#include <confloc/features.hpp>

#include <confloc/errors.hpp>

#include "fft.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace confloc {
namespace {

constexpr int kMinFrames = 8;
constexpr double kPsdFloor = 1e-12;

std::vector<double> hann_window(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    w[static_cast<std::size_t>(i)] =
        0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / n));
    sum += w[static_cast<std::size_t>(i)];
  }
  for (auto& v : w) v /= sum;
  return w;
}

}  // namespace

int StftConfig::hop() const noexcept {
  return std::max(1, static_cast<int>(std::lround(fft_size * (1.0 - overlap))));
}

void StftConfig::validate() const {
  if (fft_size < 2 || (fft_size & (fft_size - 1)) != 0)
    throw ConfigError("fft_size must be a power of two");
  if (!(overlap >= 0.0 && overlap < 1.0))
    throw ConfigError("overlap must lie in [0, 1)");
  if (!(sample_rate > 0.0)) throw ConfigError("sample_rate must be positive");
}

BandSelection BandSelection::from_range(double f_low, double f_high,
                                        const StftConfig& cfg) {
  cfg.validate();
  if (!(f_low < f_high)) throw ConfigError("band needs f_low < f_high");
  const double per_bin = cfg.sample_rate / cfg.fft_size;
  const int lo = std::max(0, static_cast<int>(std::lround(f_low / per_bin)));
  const int hi = std::min(cfg.num_bins() - 1,
                          static_cast<int>(std::lround(f_high / per_bin)));
  BandSelection band{f_low, f_high, {}};
  for (int k = lo; k <= hi; ++k) band.bins.push_back(k);
  band.validate();
  return band;
}

void BandSelection::validate() const {
  if (!(f_low < f_high)) throw ConfigError("band needs f_low < f_high");
  if (bins.empty()) throw ConfigError("band selects no frequency bins");
  for (std::size_t i = 1; i < bins.size(); ++i)
    if (bins[i] <= bins[i - 1])
      throw ConfigError("band bins must be strictly increasing");
}

AggregatedRtf::AggregatedRtf(Eigen::VectorXcd flat, std::size_t num_nodes)
    : flat_(std::move(flat)), num_nodes_(num_nodes) {
  if (num_nodes_ == 0 || flat_.size() % static_cast<Eigen::Index>(num_nodes_) != 0)
    throw InputError("aggregated feature length is not a multiple of M");
}

Eigen::MatrixXcd stft(std::span<const double> signal, const StftConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(cfg.fft_size);
  if (signal.size() < n)
    throw InputError("signal shorter than one STFT frame");
  const auto hop = static_cast<std::size_t>(cfg.hop());
  const std::size_t frames = 1 + (signal.size() - n) / hop;
  const auto window = hann_window(cfg.fft_size);

  detail::RealFft fft(n);
  Eigen::MatrixXcd out(cfg.num_bins(), static_cast<Eigen::Index>(frames));
  std::vector<double> frame(n);
  std::vector<std::complex<double>> spec(fft.bins());
  for (std::size_t l = 0; l < frames; ++l) {
    const double* x = signal.data() + l * hop;
    for (std::size_t i = 0; i < n; ++i) frame[i] = x[i] * window[i];
    fft.forward(frame, spec);
    for (std::size_t k = 0; k < spec.size(); ++k)
      out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = spec[k];
  }
  return out;
}

NodeRtf estimate_rtf(const Eigen::Ref<const Eigen::MatrixXd>& node_recording,
                     const StftConfig& cfg, const BandSelection& band) {
  if (node_recording.rows() != 2)
    throw InputError("node recording must have exactly two channels");
  band.validate();
  for (int k : band.bins)
    if (k < 0 || k >= cfg.num_bins())
      throw InputError("band bin outside the STFT range");

  const Eigen::VectorXd ch1 = node_recording.row(0).transpose();
  const Eigen::VectorXd ch2 = node_recording.row(1).transpose();
  const auto x1 = stft({ch1.data(), static_cast<std::size_t>(ch1.size())}, cfg);
  const auto x2 = stft({ch2.data(), static_cast<std::size_t>(ch2.size())}, cfg);
  if (x1.cols() < kMinFrames)
    throw InputError("RTF estimation needs at least 8 STFT frames");

  const auto f = static_cast<Eigen::Index>(band.size());
  Eigen::VectorXd s11(f);
  Eigen::VectorXcd s21(f);
  const double frames = static_cast<double>(x1.cols());
  for (Eigen::Index i = 0; i < f; ++i) {
    const Eigen::Index k = band.bins[static_cast<std::size_t>(i)];
    s11(i) = x1.row(k).cwiseAbs2().sum() / frames;
    s21(i) = (x2.row(k).array() * x1.row(k).array().conjugate()).sum() / frames;
  }

  const double floor = kPsdFloor * s11.mean();
  std::vector<int> bad;
  for (Eigen::Index i = 0; i < f; ++i)
    if (!(s11(i) > floor) || s11(i) == 0.0)
      bad.push_back(band.bins[static_cast<std::size_t>(i)]);
  if (!bad.empty()) {
    std::ostringstream os;
    os << "auto-PSD below floor at bins:";
    for (int k : bad) os << ' ' << k;
    throw DegenerateBinError(os.str(), std::move(bad));
  }
  return NodeRtf{s21.array() / s11.array().cast<std::complex<double>>()};
}

AggregatedRtf aggregate(std::span<const NodeRtf> rtfs) {
  if (rtfs.empty()) throw InputError("cannot aggregate zero node RTFs");
  const Eigen::Index f = rtfs.front().values.size();
  Eigen::VectorXcd flat(f * static_cast<Eigen::Index>(rtfs.size()));
  for (std::size_t m = 0; m < rtfs.size(); ++m) {
    if (rtfs[m].values.size() != f)
      throw InputError("node RTFs have mismatched band sizes");
    flat.segment(static_cast<Eigen::Index>(m) * f, f) = rtfs[m].values;
  }
  return AggregatedRtf(std::move(flat), rtfs.size());
}

std::vector<NodeRtf> split(const AggregatedRtf& h) {
  std::vector<NodeRtf> out;
  out.reserve(h.num_nodes());
  for (std::size_t m = 0; m < h.num_nodes(); ++m) out.push_back({h.node(m)});
  return out;
}

AggregatedRtf extract_features(const MultichannelRecording& recording,
                               const StftConfig& cfg,
                               const BandSelection& band) {
  if (recording.num_channels() == 0 || recording.num_channels() % 2 != 0)
    throw InputError("recording must have an even, non-zero channel count");
  std::vector<NodeRtf> nodes;
  nodes.reserve(recording.num_nodes());
  for (std::size_t m = 0; m < recording.num_nodes(); ++m)
    nodes.push_back(estimate_rtf(recording.node(m), cfg, band));
  return aggregate(nodes);
}

}  // namespace confloc
