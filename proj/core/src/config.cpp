#include <confloc/config.hpp>

#include <confloc/errors.hpp>

#include "json_util.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <limits>

namespace confloc {
namespace {

constexpr double kNodeHeight = 1.5;
constexpr double kMicSpacing = 0.2;

MicNode pair_along_x(double cx, double cy) {
  return {{cx - kMicSpacing / 2, cy, kNodeHeight},
          {cx + kMicSpacing / 2, cy, kNodeHeight}};
}

MicNode pair_along_y(double cx, double cy) {
  return {{cx, cy - kMicSpacing / 2, kNodeHeight},
          {cx, cy + kMicSpacing / 2, kNodeHeight}};
}

template <class T>
T get_or(const YAML::Node& node, const char* key, T fallback) {
  if (!node || !node[key]) return fallback;
  return node[key].as<T>();
}

Vec3 to_vec3(const YAML::Node& n, const std::string& what) {
  if (!n.IsSequence() || n.size() != 3)
    throw ConfigError(what + " must be a list of three numbers");
  return {n[0].as<double>(), n[1].as<double>(), n[2].as<double>()};
}

std::pair<double, double> to_range(const YAML::Node& n, const std::string& what) {
  if (!n.IsSequence() || n.size() != 2)
    throw ConfigError(what + " must be a list of two numbers");
  return {n[0].as<double>(), n[1].as<double>()};
}

// yaml-cpp reads ".inf" natively; "inf" and "off" are accepted for snr.
double parse_snr(const YAML::Node& n) {
  const auto text = n.as<std::string>();
  if (text == "inf" || text == "off" || text == "none")
    return std::numeric_limits<double>::infinity();
  return n.as<double>();
}

SignalKind parse_signal_kind(const std::string& s) {
  if (s == "speech_shaped") return SignalKind::SpeechShaped;
  if (s == "white") return SignalKind::White;
  if (s == "wav") return SignalKind::Wav;
  throw ConfigError("unknown signal kind '" + s + "'");
}

std::string signal_kind_name(SignalKind k) {
  switch (k) {
    case SignalKind::SpeechShaped: return "speech_shaped";
    case SignalKind::White: return "white";
    case SignalKind::Wav: return "wav";
  }
  return "?";
}

void apply_pipeline(const YAML::Node& root, PipelineConfig& cfg,
                    const std::filesystem::path& base_dir) {
  if (const auto room = root["room"]) {
    if (room["dimensions"])
      cfg.scene.room.dimensions = to_vec3(room["dimensions"], "room.dimensions");
    cfg.scene.room.t60 = get_or(room, "t60", cfg.scene.room.t60);
    cfg.scene.room.sample_rate = get_or(room, "sample_rate", cfg.scene.room.sample_rate);
    cfg.scene.room.speed_of_sound =
        get_or(room, "speed_of_sound", cfg.scene.room.speed_of_sound);
    if (room["max_order"]) {
      const auto s = room["max_order"].as<std::string>();
      cfg.max_order = s == "auto" ? 0 : room["max_order"].as<int>();
    }
  }
  if (const auto array = root["array"]) {
    const auto nodes = array["nodes"];
    if (!nodes || !nodes.IsSequence() || nodes.size() == 0)
      throw ConfigError("array.nodes must be a non-empty list of mic pairs");
    cfg.scene.array.nodes.clear();
    for (const auto& n : nodes) {
      if (!n.IsSequence() || n.size() != 2)
        throw ConfigError("every array node is a list of two mic positions");
      cfg.scene.array.nodes.push_back(
          {to_vec3(n[0], "mic position"), to_vec3(n[1], "mic position")});
    }
  }
  if (const auto roi = root["roi"]) {
    if (roi["x"]) std::tie(cfg.scene.roi.x_min, cfg.scene.roi.x_max) = to_range(roi["x"], "roi.x");
    if (roi["y"]) std::tie(cfg.scene.roi.y_min, cfg.scene.roi.y_max) = to_range(roi["y"], "roi.y");
  }
  cfg.scene.source_height = get_or(root, "source_height", cfg.scene.source_height);
  // An experiment file uses a list here; that is the condition grid.
  if (root["snr_db"] && root["snr_db"].IsScalar()) cfg.scene.snr_db = parse_snr(root["snr_db"]);

  if (const auto sig = root["signal"]) {
    if (sig["kind"]) cfg.signal.kind = parse_signal_kind(sig["kind"].as<std::string>());
    cfg.signal.duration = get_or(sig, "duration", cfg.signal.duration);
    if (sig["path"]) {
      std::filesystem::path p = sig["path"].as<std::string>();
      cfg.signal.path = p.is_absolute() ? p : base_dir / p;
    }
  }
  if (const auto ds = root["dataset"]) {
    if (ds["grid"]) {
      const auto g = ds["grid"];
      if (!g.IsSequence() || g.size() != 2)
        throw ConfigError("dataset.grid must be [nx, ny]");
      cfg.grid = {g[0].as<int>(), g[1].as<int>()};
    }
    cfg.n_unlabeled = get_or(ds, "n_unlabeled", cfg.n_unlabeled);
    cfg.n_test = get_or(ds, "n_test", cfg.n_test);
  }
  if (const auto f = root["features"]) {
    cfg.stft.fft_size = get_or(f, "fft_size", cfg.stft.fft_size);
    cfg.stft.overlap = get_or(f, "overlap", cfg.stft.overlap);
    if (f["band"]) std::tie(cfg.band.f_low, cfg.band.f_high) = to_range(f["band"], "features.band");
  }
  cfg.stft.sample_rate = cfg.scene.room.sample_rate;
  if (const auto m = root["model"]) {
    cfg.sigma_p2 = get_or(m, "sigma_p2", cfg.sigma_p2);
    if (m["gamma"]) {
      const auto s = m["gamma"].as<std::string>();
      cfg.gamma = (s == "inf" || s == ".inf") ? std::numeric_limits<double>::infinity()
                                              : m["gamma"].as<double>();
    }
    cfg.baseline_includes_noise =
        get_or(m, "baseline_includes_noise", cfg.baseline_includes_noise);
    if (const auto ks = m["kernel_scale"]) {
      if (ks.IsSequence()) {
        cfg.kernel.scale_rule = ScaleRule::Fixed;
        cfg.kernel.sigma = ks.as<std::vector<double>>();
      } else if (ks.as<std::string>() == "median") {
        cfg.kernel.scale_rule = ScaleRule::MedianHeuristic;
        cfg.kernel.sigma.clear();
      } else {
        throw ConfigError("model.kernel_scale must be 'median' or a list of scales");
      }
    }
  }
  cfg.sync_band();
}

YAML::Node load_yaml(const std::filesystem::path& path) {
  try {
    return YAML::LoadFile(path.string());
  } catch (const YAML::BadFile&) {
    throw ConfigError("cannot open config file " + path.string());
  } catch (const YAML::Exception& e) {
    throw ConfigError("malformed config " + path.string() + ": " + e.what());
  }
}

}  // namespace

void PipelineConfig::sync_band() {
  band = BandSelection::from_range(band.f_low, band.f_high, stft);
}

void PipelineConfig::validate() const {
  Scene probe = scene;
  probe.source_pos = {0.5 * (scene.roi.x_min + scene.roi.x_max),
                      0.5 * (scene.roi.y_min + scene.roi.y_max)};
  probe.validate();
  stft.validate();
  band.validate();
  if (stft.sample_rate != scene.room.sample_rate)
    throw ConfigError("STFT and room sample rates differ");
  if (grid.nx < 1 || grid.ny < 1) throw ConfigError("grid resolution must be positive");
  if (n_unlabeled < 0 || n_test < 0) throw ConfigError("sample counts must be non-negative");
  if (max_order < 0) throw ConfigError("max_order must be non-negative");
  if (!(signal.duration > 0.0)) throw ConfigError("signal duration must be positive");
  if (signal.kind == SignalKind::Wav && signal.path.empty())
    throw ConfigError("signal.path is required for wav signals");
  if (!(sigma_p2 > 0.0) || !std::isfinite(sigma_p2))
    throw ConfigError("sigma_p2 must be positive");
  if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
  if (kernel.scale_rule == ScaleRule::Fixed) kernel.validate(scene.array.num_nodes());
}

std::string to_string(Method method) {
  switch (method) {
    case Method::Gpr: return "gpr";
    case Method::JackknifePlus: return "jackknife_plus";
    case Method::GprCp: return "gpr_cp";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  if (name == "gpr") return Method::Gpr;
  if (name == "jackknife_plus") return Method::JackknifePlus;
  if (name == "gpr_cp") return Method::GprCp;
  throw ConfigError("unknown method '" + name + "'");
}

void ExperimentConfig::validate() const {
  pipeline.validate();
  if (methods.empty()) throw ConfigError("method list is empty");
  if (deltas.empty()) throw ConfigError("delta list is empty");
  if (t60s.empty() || snrs_db.empty()) throw ConfigError("t60 and snr lists must be non-empty");
  if (repeats < 1) throw ConfigError("repeats must be at least 1");
  if (threads < 0) throw ConfigError("threads must be non-negative");
  for (double d : deltas)
    if (!(d > 0.0 && d < 1.0)) throw ConfigError("every delta must lie in (0, 1)");
  for (double t : t60s)
    if (!(t >= 0.0)) throw ConfigError("t60 values must be non-negative");
}

ArrayLayout default_array_layout() {
  ArrayLayout layout;
  layout.nodes = {pair_along_x(1.7, 0.5), pair_along_x(3.5, 0.5),
                  pair_along_x(1.7, 5.7), pair_along_x(3.5, 5.7),
                  pair_along_y(0.5, 3.1)};
  return layout;
}

Roi default_roi() { return {1.6, 3.6, 2.1, 4.1}; }

PipelineConfig default_pipeline_config() {
  PipelineConfig cfg;
  cfg.scene.room.t60 = 0.3;
  cfg.scene.array = default_array_layout();
  cfg.scene.roi = default_roi();
  cfg.scene.snr_db = 15.0;
  cfg.sync_band();
  return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  PipelineConfig cfg = default_pipeline_config();
  try {
    apply_pipeline(load_yaml(path), cfg, path.parent_path());
  } catch (const YAML::Exception& e) {
    throw ConfigError("bad value in " + path.string() + ": " + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  const auto root = load_yaml(path);
  ExperimentConfig cfg;
  cfg.pipeline = default_pipeline_config();
  try {
    if (root["scene"]) {
      std::filesystem::path scene = root["scene"].as<std::string>();
      if (scene.is_relative()) scene = path.parent_path() / scene;
      cfg.pipeline = load_pipeline_config(scene);
      cfg.scene_file = scene;
    }
    // Inline overrides of any pipeline section.
    apply_pipeline(root, cfg.pipeline, path.parent_path());
    if (root["t60"]) cfg.t60s = root["t60"].as<std::vector<double>>();
    if (const auto s = root["snr_db"]) {
      cfg.snrs_db.clear();
      for (const auto& v : s) cfg.snrs_db.push_back(parse_snr(v));
    }
    if (root["delta"]) cfg.deltas = root["delta"].as<std::vector<double>>();
    if (const auto m = root["methods"]) {
      cfg.methods.clear();
      for (const auto& v : m) cfg.methods.push_back(parse_method(v.as<std::string>()));
    }
    cfg.repeats = get_or(root, "repeats", cfg.repeats);
    cfg.seed = get_or(root, "seed", cfg.seed);
    cfg.threads = get_or(root, "threads", cfg.threads);
    if (root["output_dir"]) {
      std::filesystem::path out = root["output_dir"].as<std::string>();
      cfg.output_dir = out;
    }
  } catch (const YAML::Exception& e) {
    throw ConfigError("bad value in " + path.string() + ": " + e.what());
  }
  cfg.validate();
  return cfg;
}

nlohmann::json to_json(const PipelineConfig& cfg) {
  using nlohmann::json;
  const auto& s = cfg.scene;
  json nodes = json::array();
  for (const auto& n : s.array.nodes)
    nodes.push_back({{n.mic1.x(), n.mic1.y(), n.mic1.z()},
                     {n.mic2.x(), n.mic2.y(), n.mic2.z()}});
  json kernel_scale = cfg.kernel.scale_rule == ScaleRule::MedianHeuristic
                          ? json("median")
                          : json(cfg.kernel.sigma);
  return {
      {"room",
       {{"dimensions", {s.room.dimensions.x(), s.room.dimensions.y(), s.room.dimensions.z()}},
        {"t60", s.room.t60},
        {"sample_rate", s.room.sample_rate},
        {"speed_of_sound", s.room.speed_of_sound},
        {"max_order", cfg.max_order == 0 ? json("auto") : json(cfg.max_order)}}},
      {"array", {{"nodes", nodes}}},
      {"roi", {{"x", {s.roi.x_min, s.roi.x_max}}, {"y", {s.roi.y_min, s.roi.y_max}}}},
      {"source_height", s.source_height},
      {"snr_db", detail::json_number(s.snr_db)},
      {"signal",
       {{"kind", signal_kind_name(cfg.signal.kind)},
        {"duration", cfg.signal.duration},
        {"path", cfg.signal.path.string()}}},
      {"dataset",
       {{"grid", {cfg.grid.nx, cfg.grid.ny}},
        {"n_unlabeled", cfg.n_unlabeled},
        {"n_test", cfg.n_test}}},
      {"features", detail::stft_json(cfg.stft, cfg.band)},
      {"model",
       {{"sigma_p2", cfg.sigma_p2},
        {"gamma", detail::json_number(cfg.gamma)},
        {"baseline_includes_noise", cfg.baseline_includes_noise},
        {"kernel_scale", kernel_scale}}},
  };
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  using nlohmann::json;
  json methods = json::array();
  for (auto m : cfg.methods) methods.push_back(to_string(m));
  json snrs = json::array();
  for (double s : cfg.snrs_db) snrs.push_back(detail::json_number(s));
  return {{"pipeline", to_json(cfg.pipeline)},
          {"scene_file", cfg.scene_file.string()},
          {"t60", cfg.t60s},
          {"snr_db", snrs},
          {"delta", cfg.deltas},
          {"methods", methods},
          {"repeats", cfg.repeats},
          {"seed", cfg.seed},
          {"threads", cfg.threads},
          {"output_dir", cfg.output_dir.string()}};
}

}  // namespace confloc
