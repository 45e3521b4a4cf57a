#include <confloc/model_io.hpp>

#include <confloc/errors.hpp>

#include "json_util.hpp"

#include <fstream>

namespace confloc {
namespace {

constexpr const char* kFormat = "confloc-model";
constexpr int kVersion = 1;

}  // namespace

void write_model(const std::filesystem::path& path, const ModelBundle& bundle) {
  using nlohmann::json;
  const auto& m = bundle.model;
  const auto& refs = m.refs();

  json labels = json::array();
  for (const auto& p : m.positions()) labels.push_back({p.x, p.y});
  json features = json::array();
  for (const auto& h : refs.features) {
    std::vector<double> row;
    row.reserve(2 * static_cast<std::size_t>(h.flat().size()));
    for (const auto& z : h.flat()) {
      row.push_back(z.real());
      row.push_back(z.imag());
    }
    features.push_back(std::move(row));
  }

  const json doc{
      {"format", kFormat},
      {"version", kVersion},
      {"num_nodes", refs.num_nodes()},
      {"bins_per_node", refs.bins_per_node()},
      {"n_labeled", refs.n_labeled},
      {"kernel",
       {{"sigma", m.kernel_config().sigma},
        {"scale_rule", m.kernel_config().scale_rule == ScaleRule::Fixed ? "fixed" : "median"}}},
      {"sigma_p2", m.sigma_p2()},
      {"stft", detail::stft_json(bundle.stft, bundle.band)},
      {"labels", labels},
      {"features", features}};

  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << doc.dump() << '\n';
  if (!out) throw InputError("write failed for " + path.string());
}

ModelBundle read_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed model file: " + std::string(e.what()));
  }
  if (doc.value("format", "") != kFormat)
    throw InputError(path.string() + " is not a model file");

  try {
    const auto num_nodes = doc.at("num_nodes").get<std::size_t>();
    const auto bins = doc.at("bins_per_node").get<std::size_t>();

    ReferenceSet refs;
    refs.n_labeled = doc.at("n_labeled").get<std::size_t>();
    for (const auto& row : doc.at("features")) {
      const auto v = row.get<std::vector<double>>();
      if (v.size() != 2 * num_nodes * bins)
        throw InputError("model feature row has the wrong length");
      Eigen::VectorXcd flat(static_cast<Eigen::Index>(num_nodes * bins));
      for (Eigen::Index i = 0; i < flat.size(); ++i)
        flat(i) = {v[2 * static_cast<std::size_t>(i)], v[2 * static_cast<std::size_t>(i) + 1]};
      refs.features.emplace_back(std::move(flat), num_nodes);
    }

    std::vector<Position2> labels;
    for (const auto& p : doc.at("labels"))
      labels.push_back({p.at(0).get<double>(), p.at(1).get<double>()});

    KernelConfig kernel;
    kernel.sigma = doc.at("kernel").at("sigma").get<std::vector<double>>();
    kernel.scale_rule = doc.at("kernel").at("scale_rule").get<std::string>() == "fixed"
                            ? ScaleRule::Fixed
                            : ScaleRule::MedianHeuristic;

    StftConfig stft;
    BandSelection band;
    detail::stft_from_json(doc.at("stft"), stft, band);
    return {MmgpModel::fit(std::move(refs), std::move(labels), std::move(kernel),
                           doc.at("sigma_p2").get<double>()),
            stft, band};
  } catch (const nlohmann::json::exception& e) {
    throw InputError("incomplete model file: " + std::string(e.what()));
  }
}

}  // namespace confloc
