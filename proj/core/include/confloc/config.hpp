#pragma once

#include <confloc/features.hpp>
#include <confloc/kernel.hpp>
#include <confloc/room_sim.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace confloc {

enum class SignalKind { SpeechShaped, White, Wav };

struct SignalConfig {
  SignalKind kind = SignalKind::SpeechShaped;
  double duration = 2.0;  // s
  /// Mono or multichannel WAV (first channel used) for SignalKind::Wav;
  /// each sample takes a seeded random excerpt of `duration`.
  std::filesystem::path path;
};

/// Everything needed to go from a scene to a fitted model: simulation,
/// dataset sizes, feature extraction and model hyperparameters.
struct PipelineConfig {
  Scene scene;  // source_pos is ignored; the dataset plan sets it
  int max_order = 0;  // 0 derives it from the room
  SignalConfig signal;
  GridSpec grid;
  int n_unlabeled = 100;
  int n_test = 200;
  StftConfig stft;
  BandSelection band = BandSelection::from_range(150.0, 1500.0, StftConfig{});
  KernelConfig kernel;  // sigma used only under ScaleRule::Fixed
  double sigma_p2 = 0.1;  // m^2
  double gamma = 32.0;
  bool baseline_includes_noise = true;

  /// Recomputes band bins from its edges and the STFT config.
  void sync_band();
  void validate() const;
};

enum class Method { Gpr, JackknifePlus, GprCp };

std::string to_string(Method method);
Method parse_method(const std::string& name);

struct ExperimentConfig {
  PipelineConfig pipeline;
  std::filesystem::path scene_file;  // informational, for the manifest
  std::vector<double> t60s{0.3, 0.7};
  std::vector<double> snrs_db{5.0, 15.0};
  std::vector<double> deltas{0.1, 0.05, 0.01};
  std::vector<Method> methods{Method::Gpr, Method::JackknifePlus, Method::GprCp};
  int repeats = 10;
  std::uint64_t seed = 20240917;
  int threads = 0;  // 0 uses the hardware concurrency
  std::filesystem::path output_dir = "results";

  void validate() const;
};

/// Built-in layout: four nodes near the two walls parallel to the X-axis
/// (pairs along X) and one node near the x = 0 wall (pair along Y).
ArrayLayout default_array_layout();
Roi default_roi();
PipelineConfig default_pipeline_config();

/// Reads a scene/pipeline YAML file. Missing keys keep their defaults.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
/// Reads an experiment YAML file. Its `scene` key is resolved relative to
/// the experiment file.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

}  // namespace confloc
