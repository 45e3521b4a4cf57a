#pragma once

#include <confloc/features.hpp>
#include <confloc/gpr.hpp>

#include <filesystem>

namespace confloc {

/// A fitted model plus the feature settings its inputs must match.
struct ModelBundle {
  MmgpModel model;
  StftConfig stft;
  BandSelection band;
};

/// Self-describing JSON: resolved kernel scales, sigma_p2, labels and every
/// reference feature. Reading refits the model, which is deterministic.
void write_model(const std::filesystem::path& path, const ModelBundle& bundle);
ModelBundle read_model(const std::filesystem::path& path);

}  // namespace confloc
