#include <confloc/pipeline.hpp>

#include <confloc/errors.hpp>
#include <confloc/wav.hpp>

#include <memory>
#include <random>

namespace confloc {

SignalSource make_signal_source(const SignalConfig& cfg, double sample_rate) {
  const auto n = static_cast<std::size_t>(std::llround(cfg.duration * sample_rate));
  if (n == 0) throw ConfigError("signal duration rounds to zero samples");
  switch (cfg.kind) {
    case SignalKind::White:
      return [n](std::uint64_t seed) { return white_noise(n, seed); };
    case SignalKind::SpeechShaped:
      return [n, sample_rate](std::uint64_t seed) {
        return speech_shaped_noise(n, sample_rate, seed);
      };
    case SignalKind::Wav: {
      const auto wav = read_wav(cfg.path);
      if (wav.sample_rate != sample_rate)
        throw ConfigError("source WAV sample rate differs from the scene");
      if (wav.num_samples() < n)
        throw InputError("source WAV is shorter than the signal duration");
      auto data = std::make_shared<const std::vector<double>>(
          wav.samples.row(0).begin(), wav.samples.row(0).end());
      return [n, data](std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<std::size_t> start(0, data->size() - n);
        const auto s = static_cast<std::ptrdiff_t>(start(rng));
        return std::vector<double>(data->begin() + s,
                                   data->begin() + s + static_cast<std::ptrdiff_t>(n));
      };
    }
  }
  throw ConfigError("unknown signal kind");
}

int effective_max_order(const PipelineConfig& cfg) {
  return cfg.max_order > 0 ? cfg.max_order : default_max_order(cfg.scene.room);
}

MultichannelRecording render_planned(const PipelineConfig& cfg,
                                     const SamplePlan& plan,
                                     const SignalSource& signals) {
  Scene scene = cfg.scene;
  scene.source_pos = plan.position;
  const auto signal = signals(plan.signal_seed);
  return simulate_recording(scene, signal, plan.noise_seed, effective_max_order(cfg));
}

FeatureSet simulate_features(const PipelineConfig& cfg,
                             std::span<const SamplePlan> plan) {
  cfg.validate();
  const auto signals = make_signal_source(cfg.signal, cfg.scene.room.sample_rate);
  FeatureSet set{cfg.stft, cfg.band, {}};
  set.records.reserve(plan.size());
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto rec = render_planned(cfg, plan[i], signals);
    FeatureRecord r;
    r.id = i;
    r.role = plan[i].role;
    if (r.role != SampleRole::Unlabeled) r.position = plan[i].position;
    r.h = extract_features(rec, cfg.stft, cfg.band);
    set.records.push_back(std::move(r));
  }
  return set;
}

FeatureSet simulate_features(const PipelineConfig& cfg, std::uint64_t seed) {
  const auto plan =
      plan_dataset(cfg.scene.roi, cfg.grid, cfg.n_unlabeled, cfg.n_test, seed);
  return simulate_features(cfg, plan);
}

std::vector<AggregatedRtf> features_of(const FeatureSet& set, SampleRole role) {
  std::vector<AggregatedRtf> out;
  for (const auto& r : set.records)
    if (r.role == role) out.push_back(r.h);
  return out;
}

std::vector<Position2> positions_of(const FeatureSet& set, SampleRole role) {
  std::vector<Position2> out;
  for (const auto& r : set.records)
    if (r.role == role) {
      if (!r.position) throw InputError("record " + std::to_string(r.id) + " has no position");
      out.push_back(*r.position);
    }
  return out;
}

ModelBundle fit_model(const FeatureSet& set, const PipelineConfig& cfg) {
  set.validate();
  if (set.band.bins != cfg.band.bins || set.stft.fft_size != cfg.stft.fft_size)
    throw InputError("feature set was extracted with different band/STFT settings");
  const auto labeled = features_of(set, SampleRole::Labeled);
  const auto labels = positions_of(set, SampleRole::Labeled);
  const auto unlabeled = features_of(set, SampleRole::Unlabeled);
  return {fit(labeled, labels, unlabeled, cfg.kernel, cfg.sigma_p2), set.stft, set.band};
}

}  // namespace confloc
