#pragma once

#include <confloc/config.hpp>

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <string>
#include <string_view>

namespace confloc {

nlohmann::json to_json(const PipelineConfig& cfg);
nlohmann::json to_json(const ExperimentConfig& cfg);

namespace detail {

/// JSON has no infinities; they are written as the strings "inf" / "-inf".
inline nlohmann::json json_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double number_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
  }
  return j.get<double>();
}

inline nlohmann::json stft_json(const StftConfig& stft, const BandSelection& band) {
  return {{"fft_size", stft.fft_size},
          {"overlap", stft.overlap},
          {"window", "hann"},
          {"sample_rate", stft.sample_rate},
          {"band", {band.f_low, band.f_high}},
          {"bins", band.bins}};
}

inline void stft_from_json(const nlohmann::json& j, StftConfig& stft,
                           BandSelection& band) {
  stft.fft_size = j.at("fft_size").get<int>();
  stft.overlap = j.at("overlap").get<double>();
  stft.sample_rate = j.at("sample_rate").get<double>();
  band.f_low = j.at("band").at(0).get<double>();
  band.f_high = j.at("band").at(1).get<double>();
  band.bins = j.at("bins").get<std::vector<int>>();
}

/// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline bool parse_double(std::string_view s, double& out) {
  if (s == "inf") { out = INFINITY; return true; }
  if (s == "-inf") { out = -INFINITY; return true; }
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

}  // namespace detail
}  // namespace confloc
