#include <confloc/feature_io.hpp>

#include <confloc/errors.hpp>

#include "json_util.hpp"

#include <fstream>
#include <sstream>

namespace confloc {
namespace {

constexpr const char* kFormat = "confloc-features";
constexpr int kVersion = 1;

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double field_double(std::string_view s, std::size_t line_no) {
  double v = 0.0;
  if (!detail::parse_double(s, v))
    throw InputError("feature file line " + std::to_string(line_no) +
                     ": bad number '" + std::string(s) + "'");
  return v;
}

}  // namespace

std::string to_string(SampleRole role) {
  switch (role) {
    case SampleRole::Labeled: return "labeled";
    case SampleRole::Unlabeled: return "unlabeled";
    case SampleRole::Test: return "test";
  }
  return "?";
}

SampleRole parse_role(const std::string& name) {
  if (name == "labeled") return SampleRole::Labeled;
  if (name == "unlabeled") return SampleRole::Unlabeled;
  if (name == "test") return SampleRole::Test;
  throw InputError("unknown sample role '" + name + "'");
}

std::vector<const FeatureRecord*> FeatureSet::with_role(SampleRole role) const {
  std::vector<const FeatureRecord*> out;
  for (const auto& r : records)
    if (r.role == role) out.push_back(&r);
  return out;
}

void FeatureSet::validate() const {
  const auto m = num_nodes();
  const auto f = bins_per_node();
  if (!records.empty() && f != band.size())
    throw InputError("feature length differs from the band size");
  for (const auto& r : records) {
    if (r.h.num_nodes() != m || r.h.bins_per_node() != f)
      throw InputError("feature records have mismatched (M, F)");
    if (r.role != SampleRole::Unlabeled && !r.position)
      throw InputError("labeled and test records need a position");
  }
}

void write_feature_set(const std::filesystem::path& path, const FeatureSet& set) {
  set.validate();
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());

  const nlohmann::json header{{"format", kFormat},
                              {"version", kVersion},
                              {"num_nodes", set.num_nodes()},
                              {"bins_per_node", set.bins_per_node()},
                              {"stft", detail::stft_json(set.stft, set.band)}};
  out << "# " << header.dump() << '\n';

  out << "id,role,x,y";
  for (std::size_t m = 0; m < set.num_nodes(); ++m)
    for (std::size_t k = 0; k < set.bins_per_node(); ++k)
      out << ",re_" << m << '_' << k << ",im_" << m << '_' << k;
  out << '\n';

  for (const auto& r : set.records) {
    out << r.id << ',' << to_string(r.role) << ',';
    if (r.position)
      out << detail::format_double(r.position->x) << ','
          << detail::format_double(r.position->y);
    else
      out << ',';
    for (const auto& z : r.h.flat())
      out << ',' << detail::format_double(z.real()) << ','
          << detail::format_double(z.imag());
    out << '\n';
  }
  if (!out) throw InputError("write failed for " + path.string());
}

FeatureSet read_feature_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open feature file " + path.string());

  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
    throw InputError(path.string() + " lacks the JSON header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line.substr(2));
  } catch (const nlohmann::json::exception& e) {
    throw InputError("bad feature header: " + std::string(e.what()));
  }
  if (header.value("format", "") != kFormat)
    throw InputError(path.string() + " is not a feature file");

  FeatureSet set;
  std::size_t num_nodes = 0, bins = 0;
  try {
    num_nodes = header.at("num_nodes").get<std::size_t>();
    bins = header.at("bins_per_node").get<std::size_t>();
    detail::stft_from_json(header.at("stft"), set.stft, set.band);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("incomplete feature header: " + std::string(e.what()));
  }

  if (!std::getline(in, line)) throw InputError("feature file lacks a column header");
  const std::size_t columns = 4 + 2 * num_nodes * bins;
  if (split_csv(line).size() != columns)
    throw InputError("feature column count differs from the header (M, F)");

  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != columns)
      throw InputError("feature file line " + std::to_string(line_no) +
                       " has " + std::to_string(fields.size()) + " fields");
    FeatureRecord r;
    r.id = static_cast<std::size_t>(field_double(fields[0], line_no));
    r.role = parse_role(std::string(fields[1]));
    if (!fields[2].empty() || !fields[3].empty())
      r.position = Position2{field_double(fields[2], line_no),
                             field_double(fields[3], line_no)};
    Eigen::VectorXcd flat(static_cast<Eigen::Index>(num_nodes * bins));
    for (Eigen::Index i = 0; i < flat.size(); ++i)
      flat(i) = {field_double(fields[4 + 2 * static_cast<std::size_t>(i)], line_no),
                 field_double(fields[5 + 2 * static_cast<std::size_t>(i)], line_no)};
    r.h = AggregatedRtf(std::move(flat), num_nodes);
    set.records.push_back(std::move(r));
  }
  set.validate();
  return set;
}

}  // namespace confloc
