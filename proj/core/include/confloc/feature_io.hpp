#pragma once

#include <confloc/features.hpp>
#include <confloc/room_sim.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace confloc {

std::string to_string(SampleRole role);
SampleRole parse_role(const std::string& name);

struct FeatureRecord {
  std::size_t id = 0;
  SampleRole role = SampleRole::Labeled;
  /// Known for labeled and test samples.
  std::optional<Position2> position;
  AggregatedRtf h;
};

/// Features of one dataset together with the extraction settings that
/// produced them.
struct FeatureSet {
  StftConfig stft;
  BandSelection band;
  std::vector<FeatureRecord> records;

  std::size_t num_nodes() const noexcept {
    return records.empty() ? 0 : records.front().h.num_nodes();
  }
  std::size_t bins_per_node() const noexcept {
    return records.empty() ? 0 : records.front().h.bins_per_node();
  }
  std::vector<const FeatureRecord*> with_role(SampleRole role) const;
  /// Consistent shapes; labeled and test records carry positions.
  void validate() const;
};

/// CSV file. Line 1 is "# " followed by a JSON header with the node count,
/// bins per node, band and STFT settings; line 2 names the columns
/// id,role,x,y,re_<m>_<k>,im_<m>_<k>,...; x and y are empty for unlabeled
/// rows. Numbers round-trip exactly.
void write_feature_set(const std::filesystem::path& path, const FeatureSet& set);
FeatureSet read_feature_set(const std::filesystem::path& path);

}  // namespace confloc
