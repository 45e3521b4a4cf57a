#include <confloc/report.hpp>

#include <confloc/errors.hpp>

#include "json_util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#ifndef CONFLOC_VERSION
#define CONFLOC_VERSION "0.0.0"
#endif

namespace confloc {
namespace {

using detail::format_double;

template <std::size_t N>
std::string header_line(const std::array<std::string_view, N>& cols) {
  std::string out;
  for (std::size_t i = 0; i < N; ++i) {
    if (i) out += ',';
    out += cols[i];
  }
  return out;
}

// NaN (empty cells) are written as empty fields.
std::string num(double v) { return std::isnan(v) ? std::string() : format_double(v); }

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + '"';
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        in_quotes = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

double to_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (!detail::parse_double(s, v)) throw InputError(where + ": bad number '" + s + "'");
  return v;
}

Axis parse_axis(const std::string& s) {
  if (s == "x") return Axis::X;
  if (s == "y") return Axis::Y;
  throw InputError("unknown axis '" + s + "'");
}

}  // namespace

std::string_view version() { return CONFLOC_VERSION; }

void write_report_tables(const CoverageReport& report,
                         const std::filesystem::path& dir) {
  {
    auto out = open_out(dir / "coverage.csv");
    out << header_line(kCoverageColumns) << '\n';
    for (const auto& r : report.rows)
      out << to_string(r.method) << ',' << num(r.t60) << ',' << num(r.snr_db) << ','
          << num(r.delta) << ',' << to_string(r.axis) << ',' << r.repeats << ','
          << r.n_test << ',' << r.covered << ',' << num(r.coverage()) << ','
          << num(r.mean_width()) << ',' << r.clipped << '\n';
  }
  {
    auto out = open_out(dir / "repeats.csv");
    out << header_line(kRepeatColumns) << '\n';
    for (const auto& r : report.repeats)
      out << to_string(r.method) << ',' << num(r.t60) << ',' << num(r.snr_db) << ','
          << num(r.delta) << ',' << to_string(r.axis) << ',' << r.repeat << ','
          << r.n_test << ',' << r.covered << ',' << num(r.coverage()) << ','
          << num(r.mean_width()) << ',' << r.clipped << '\n';
  }
  {
    auto out = open_out(dir / "failures.csv");
    out << header_line(kFailureColumns) << '\n';
    for (const auto& f : report.failures)
      out << num(f.t60) << ',' << num(f.snr_db) << ',' << f.repeat << ','
          << quoted(f.message) << '\n';
  }
}

void write_manifest(const CoverageReport& report, const ExperimentConfig& cfg,
                    const std::filesystem::path& dir) {
  const nlohmann::json manifest{
      {"version", std::string(version())},
      {"config", to_json(cfg)},
      {"seed", cfg.seed},
      {"width_measure", "total width of the union of interval pieces; "
                        "unbounded intervals clipped to the ROI"},
      {"clipped_intervals", report.clipped()},
      {"failed_cells", report.failures.size()},
      {"complete", report.complete()},
      {"tables", {"coverage.csv", "repeats.csv", "failures.csv"}},
      {"wall_seconds", report.wall_seconds}};
  auto out = open_out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
}

void write_report(const CoverageReport& report, const ExperimentConfig& cfg,
                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_report_tables(report, dir);
  write_manifest(report, cfg, dir);
}

CoverageReport read_report(const std::filesystem::path& dir) {
  CoverageReport report;
  std::vector<Method> methods;
  const auto path = dir / "repeats.csv";
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != header_line(kRepeatColumns))
    throw InputError(path.string() + " does not match the repeats schema");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    const auto where = path.string() + ":" + std::to_string(line_no);
    if (f.size() != kRepeatColumns.size()) throw InputError(where + ": wrong field count");
    RepeatRow r;
    r.method = parse_method(f[0]);
    r.t60 = to_double(f[1], where);
    r.snr_db = to_double(f[2], where);
    r.delta = to_double(f[3], where);
    r.axis = parse_axis(f[4]);
    r.repeat = std::stoi(f[5]);
    r.n_test = std::stoul(f[6]);
    r.covered = std::stoul(f[7]);
    const double w = to_double(f[9], where);
    r.width_sum = r.n_test == 0 ? 0.0 : w * static_cast<double>(r.n_test);
    // step the sum by ulps until it divides back to the written mean
    for (int k = 0; k < 4 && r.n_test > 0 && r.mean_width() != w; ++k)
      r.width_sum = std::nextafter(r.width_sum, r.mean_width() < w ? HUGE_VAL : -HUGE_VAL);
    r.clipped = std::stoul(f[10]);
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end())
      methods.push_back(r.method);
    report.repeats.push_back(r);
  }

  std::ifstream fin(dir / "failures.csv");
  if (fin && std::getline(fin, line)) {
    while (std::getline(fin, line)) {
      if (line.empty()) continue;
      const auto f = split_csv(line);
      if (f.size() != kFailureColumns.size())
        throw InputError("failures.csv has a malformed row");
      report.failures.push_back(
          {to_double(f[0], "failures.csv"), to_double(f[1], "failures.csv"),
           std::stoi(f[2]), f[3]});
    }
  }
  report.rows = aggregate(report.repeats, methods);
  return report;
}

void write_sweep_csv(const std::filesystem::path& path,
                     const std::vector<SweepRow>& rows) {
  auto out = open_out(path);
  out << header_line(kSweepColumns) << '\n';
  for (const auto& r : rows)
    out << num(r.position) << ',' << num(r.point) << ',' << num(r.width) << ','
        << (r.unbounded ? 1 : 0) << ',' << (r.covered ? 1 : 0) << ','
        << num(r.nearest_labeled) << '\n';
}

std::string format_table(const CoverageReport& report) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-15s %6s %7s %6s %4s %9s %10s %8s\n", "method",
                "t60", "snr_db", "delta", "axis", "coverage", "mean_width", "clipped");
  out << buf;
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%-15s %6.2f %7.1f %6.3f %4s %8.1f%% %10.3f %8zu\n",
                  to_string(r.method).c_str(), r.t60, r.snr_db, r.delta,
                  std::string(to_string(r.axis)).c_str(), 100.0 * r.coverage(),
                  r.mean_width(), r.clipped);
    out << buf;
  }
  if (!report.failures.empty())
    out << report.failures.size() << " cell(s) failed; see failures.csv\n";
  return out.str();
}

}  // namespace confloc
