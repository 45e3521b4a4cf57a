#pragma once

#include <confloc/config.hpp>
#include <confloc/feature_io.hpp>
#include <confloc/model_io.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace confloc {

/// Source signals of cfg.duration seconds; WAV sources draw a seeded
/// excerpt from the first channel of the file.
SignalSource make_signal_source(const SignalConfig& cfg, double sample_rate);

/// cfg.max_order, or the room-derived default when it is 0.
int effective_max_order(const PipelineConfig& cfg);

/// Renders one planned sample of the configured scene.
MultichannelRecording render_planned(const PipelineConfig& cfg,
                                     const SamplePlan& plan,
                                     const SignalSource& signals);

/// Simulates and featurizes each planned sample in turn, so only one
/// recording is alive at a time. Record ids follow plan order.
FeatureSet simulate_features(const PipelineConfig& cfg,
                             std::span<const SamplePlan> plan);

/// Plans the default dataset (grid labeled set, uniform unlabeled and test
/// sets) from `seed` and simulates it.
FeatureSet simulate_features(const PipelineConfig& cfg, std::uint64_t seed);

std::vector<AggregatedRtf> features_of(const FeatureSet& set, SampleRole role);
std::vector<Position2> positions_of(const FeatureSet& set, SampleRole role);

/// Fits on the labeled + unlabeled records with the configured kernel rule
/// and sigma_p2.
ModelBundle fit_model(const FeatureSet& set, const PipelineConfig& cfg);

}  // namespace confloc
