#pragma once

#include <confloc/harness.hpp>

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace confloc {

/// Column schema of coverage.csv (one row per method/t60/snr/delta/axis).
inline constexpr std::array<std::string_view, 11> kCoverageColumns{
    "method", "t60", "snr_db", "delta", "axis", "repeats",
    "n_test", "covered", "coverage", "mean_width", "clipped"};

/// Column schema of repeats.csv (the same key plus the repeat index).
inline constexpr std::array<std::string_view, 11> kRepeatColumns{
    "method", "t60", "snr_db", "delta", "axis", "repeat",
    "n_test", "covered", "coverage", "mean_width", "clipped"};

inline constexpr std::array<std::string_view, 4> kFailureColumns{
    "t60", "snr_db", "repeat", "error"};

inline constexpr std::array<std::string_view, 6> kSweepColumns{
    "position", "point", "width", "unbounded", "covered", "nearest_labeled"};

/// coverage.csv, repeats.csv and failures.csv. The CSV tables depend only on
/// the configuration and seed.
void write_report_tables(const CoverageReport& report,
                         const std::filesystem::path& dir);

/// manifest.json: configuration, seed, library version, width measure,
/// clipped-interval count, failure count and wall time.
void write_manifest(const CoverageReport& report, const ExperimentConfig& cfg,
                    const std::filesystem::path& dir);

/// Tables plus manifest; creates the directory if needed.
void write_report(const CoverageReport& report, const ExperimentConfig& cfg,
                  const std::filesystem::path& dir);

/// Rebuilds a report from repeats.csv (and failures.csv when present).
/// Methods are ordered as they first appear in the file.
CoverageReport read_report(const std::filesystem::path& dir);

void write_sweep_csv(const std::filesystem::path& path,
                     const std::vector<SweepRow>& rows);

/// Human-readable coverage and width table, one line per cell and method.
std::string format_table(const CoverageReport& report);

/// Library version string.
std::string_view version();

}  // namespace confloc
