// confloc: simulate scenes, extract RTF features, fit the manifold GP and
// compute GPR-CP / Jackknife+ / GPR prediction intervals from the shell.

#include <confloc/errors.hpp>
#include <confloc/harness.hpp>
#include <confloc/pipeline.hpp>
#include <confloc/report.hpp>
#include <confloc/wav.hpp>

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace confloc;

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Axis parse_axis(const std::string& s) {
  if (s == "x" || s == "X") return Axis::X;
  if (s == "y" || s == "Y") return Axis::Y;
  throw ConfigError("axis must be x or y");
}

// Command-line overrides for every pipeline field; unset ones leave the
// config file (or the built-in default) alone.
struct PipelineFlags {
  std::string config;
  std::optional<double> t60, snr, sigma_p2, gamma, duration, overlap, source_height;
  std::optional<int> n_unlabeled, n_test, fft_size, max_order;
  std::vector<int> grid;
  std::vector<double> band;
  std::string signal_kind, signal_path, kernel_scale;
  std::optional<bool> baseline_noise;

  void add_to(CLI::App* app, bool with_config = true) {
    if (with_config)
      app->add_option("-c,--config", config, "Scene/pipeline YAML file")->check(CLI::ExistingFile);
    app->add_option("--t60", t60, "Reverberation time [s]");
    app->add_option("--snr", snr, "Microphone SNR [dB]");
    app->add_option("--source-height", source_height, "Source height [m]");
    app->add_option("--max-order", max_order, "Image-source reflection order (0 = auto)");
    app->add_option("--signal", signal_kind, "speech_shaped | white | wav");
    app->add_option("--signal-path", signal_path, "Source WAV for --signal wav");
    app->add_option("--duration", duration, "Source signal duration [s]");
    app->add_option("--grid", grid, "Labeled grid size NX NY")->expected(2);
    app->add_option("--n-unlabeled", n_unlabeled, "Unlabeled sample count");
    app->add_option("--n-test", n_test, "Test sample count");
    app->add_option("--fft-size", fft_size, "STFT frame length");
    app->add_option("--overlap", overlap, "STFT frame overlap fraction");
    app->add_option("--band", band, "Band edges F_LOW F_HIGH [Hz]")->expected(2);
    app->add_option("--sigma-p2", sigma_p2, "Label noise variance [m^2]");
    app->add_option("--kernel-scale", kernel_scale,
                    "'median' or comma-separated per-node scales");
    app->add_option("--gamma", gamma, "LOO-variance normalization exponent (inf allowed)");
    app->add_option("--baseline-noise", baseline_noise,
                    "Include sigma_p2 in the GPR baseline variance");
  }

  PipelineConfig load() const {
    PipelineConfig cfg =
        config.empty() ? default_pipeline_config() : load_pipeline_config(config);
    apply(cfg);
    return cfg;
  }

  void apply(PipelineConfig& cfg) const {
    if (t60) cfg.scene.room.t60 = *t60;
    if (snr) cfg.scene.snr_db = *snr;
    if (source_height) cfg.scene.source_height = *source_height;
    if (max_order) cfg.max_order = *max_order;
    if (!signal_kind.empty()) {
      if (signal_kind == "speech_shaped") cfg.signal.kind = SignalKind::SpeechShaped;
      else if (signal_kind == "white") cfg.signal.kind = SignalKind::White;
      else if (signal_kind == "wav") cfg.signal.kind = SignalKind::Wav;
      else throw ConfigError("unknown signal kind '" + signal_kind + "'");
    }
    if (!signal_path.empty()) cfg.signal.path = signal_path;
    if (duration) cfg.signal.duration = *duration;
    if (grid.size() == 2) cfg.grid = {grid[0], grid[1]};
    if (n_unlabeled) cfg.n_unlabeled = *n_unlabeled;
    if (n_test) cfg.n_test = *n_test;
    if (fft_size) cfg.stft.fft_size = *fft_size;
    if (overlap) cfg.stft.overlap = *overlap;
    if (band.size() == 2) {
      cfg.band.f_low = band[0];
      cfg.band.f_high = band[1];
    }
    if (sigma_p2) cfg.sigma_p2 = *sigma_p2;
    if (gamma) cfg.gamma = *gamma;
    if (baseline_noise) cfg.baseline_includes_noise = *baseline_noise;
    if (kernel_scale == "median") {
      cfg.kernel = {};
    } else if (!kernel_scale.empty()) {
      cfg.kernel.scale_rule = ScaleRule::Fixed;
      cfg.kernel.sigma.clear();
      std::stringstream ss(kernel_scale);
      for (std::string item; std::getline(ss, item, ',');)
        cfg.kernel.sigma.push_back(std::stod(item));
    }
    cfg.stft.sample_rate = cfg.scene.room.sample_rate;
    cfg.sync_band();
    cfg.validate();
  }
};

// ---------------------------------------------------------------------------

struct SimulateCmd {
  PipelineFlags flags;
  std::string out;
  std::uint64_t seed = 1;
  std::string format = "float32";
  std::vector<double> source;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("simulate", "Render the dataset (or one source) to WAV files");
    flags.add_to(cmd);
    cmd->add_option("-o,--out", out, "Output directory (or .wav file with --source)")->required();
    cmd->add_option("--seed", seed, "Dataset seed");
    cmd->add_option("--format", format, "float32 | pcm16");
    cmd->add_option("--source", source, "Render a single source at X Y instead")->expected(2);
    cmd->callback([this] { run(); });
  }

  void run() {
    const auto cfg = flags.load();
    const auto wav_format = format == "pcm16" ? WavFormat::Pcm16 : WavFormat::Float32;
    const auto signals = make_signal_source(cfg.signal, cfg.scene.room.sample_rate);
    if (source.size() == 2) {
      const SamplePlan plan{SampleRole::Test, {source[0], source[1]},
                            derive_seed(seed, {1}), derive_seed(seed, {2})};
      write_wav(out, render_planned(cfg, plan, signals), wav_format);
      std::cout << "wrote " << out << '\n';
      return;
    }
    fs::create_directories(out);
    const auto plan = plan_dataset(cfg.scene.roi, cfg.grid, cfg.n_unlabeled, cfg.n_test, seed);
    std::ofstream index(fs::path(out) / "samples.csv");
    index << "id,role,x,y,file\n";
    for (std::size_t i = 0; i < plan.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "sample_%05zu.wav", i);
      write_wav(fs::path(out) / name, render_planned(cfg, plan[i], signals), wav_format);
      const bool known = plan[i].role != SampleRole::Unlabeled;
      index << i << ',' << to_string(plan[i].role) << ','
            << (known ? fmt(plan[i].position.x) : "") << ','
            << (known ? fmt(plan[i].position.y) : "") << ',' << name << '\n';
    }
    std::cout << "wrote " << plan.size() << " recordings to " << out << '\n';
  }
};

struct FeaturesCmd {
  PipelineFlags flags;
  std::string in, out;
  std::optional<std::uint64_t> seed;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("features", "Extract aggregated RTF features");
    flags.add_to(cmd);
    cmd->add_option("-i,--in", in, "Directory written by 'simulate' (samples.csv + WAVs)");
    cmd->add_option("--seed", seed, "Simulate the dataset in memory with this seed instead");
    cmd->add_option("-o,--out", out, "Feature CSV")->required();
    cmd->callback([this] { run(); });
  }

  void run() {
    const auto cfg = flags.load();
    FeatureSet set;
    if (!in.empty()) {
      set = from_directory(cfg);
    } else if (seed) {
      set = simulate_features(cfg, *seed);
    } else {
      throw ConfigError("features needs --in or --seed");
    }
    write_feature_set(out, set);
    std::cout << "wrote " << set.records.size() << " feature rows to " << out << '\n';
  }

  FeatureSet from_directory(const PipelineConfig& cfg) const {
    std::ifstream index(fs::path(in) / "samples.csv");
    if (!index) throw InputError("missing samples.csv in " + in);
    FeatureSet set{cfg.stft, cfg.band, {}};
    std::string line;
    std::getline(index, line);
    while (std::getline(index, line)) {
      if (line.empty()) continue;
      std::vector<std::string> f;
      std::stringstream ss(line);
      for (std::string item; std::getline(ss, item, ',');) f.push_back(item);
      if (line.back() == ',') f.emplace_back();
      if (f.size() != 5) throw InputError("malformed samples.csv row: " + line);
      FeatureRecord r;
      r.id = std::stoul(f[0]);
      r.role = parse_role(f[1]);
      if (!f[2].empty()) r.position = Position2{std::stod(f[2]), std::stod(f[3])};
      r.h = extract_features(read_wav(fs::path(in) / f[4]), cfg.stft, cfg.band);
      set.records.push_back(std::move(r));
    }
    return set;
  }
};

struct FitCmd {
  PipelineFlags flags;
  std::string features, out;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("fit", "Fit the manifold GP on labeled + unlabeled features");
    flags.add_to(cmd);
    cmd->add_option("-f,--features", features, "Feature CSV")->required()->check(CLI::ExistingFile);
    cmd->add_option("-o,--out", out, "Model JSON")->required();
    cmd->callback([this] { run(); });
  }

  void run() {
    auto cfg = flags.load();
    const auto set = read_feature_set(features);
    cfg.stft = set.stft;
    cfg.band = set.band;
    const auto bundle = fit_model(set, cfg);
    write_model(out, bundle);
    std::cout << "fitted on " << bundle.model.n_labeled() << " labeled / "
              << bundle.model.refs().n_unlabeled() << " unlabeled samples; wrote "
              << out << '\n';
  }
};

struct PredictCmd {
  std::string model, features, out, role = "test";
  std::vector<double> deltas{0.1};
  std::string gamma = "32";
  std::vector<std::string> methods{"gpr_cp"};
  bool baseline_noise = true;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("predict", "Point estimates and prediction intervals");
    cmd->add_option("-m,--model", model, "Model JSON")->required()->check(CLI::ExistingFile);
    cmd->add_option("-f,--features", features, "Feature CSV")->required()->check(CLI::ExistingFile);
    cmd->add_option("--role", role, "Rows to predict: test | unlabeled | labeled | all");
    cmd->add_option("--delta", deltas, "Miscoverage level(s)");
    cmd->add_option("--gamma", gamma, "LOO-variance normalization exponent (inf allowed)");
    cmd->add_option("--methods", methods, "gpr_cp, jackknife_plus, gpr")->delimiter(',');
    cmd->add_option("--baseline-noise", baseline_noise, "Include sigma_p2 in the GPR baseline");
    cmd->add_option("-o,--out", out, "Predictions CSV (stdout if omitted)");
    cmd->callback([this] { run(); });
  }

  void run() {
    const auto bundle = read_model(model);
    const auto set = read_feature_set(features);
    if (set.band.bins != bundle.band.bins)
      throw InputError("features and model use different frequency bands");
    const double g = gamma == "inf" ? std::numeric_limits<double>::infinity() : std::stod(gamma);
    std::vector<Method> ms;
    for (const auto& m : methods) ms.push_back(parse_method(m));

    std::ofstream file;
    if (!out.empty()) file.open(out);
    std::ostream& os = out.empty() ? std::cout : file;
    os << "id,method,axis,delta,point,lo,hi,pieces,width,unbounded,truth,covered\n";

    const auto& mdl = bundle.model;
    std::optional<JackknifePlus> jp;
    for (const auto& r : set.records) {
      if (role != "all" && to_string(r.role) != role) continue;
      const auto tk = mdl.test_kernel(r.h);
      std::optional<LooTable> loo;
      for (Method m : ms) {
        for (Axis axis : kAxes) {
          const double point = mdl.posterior(tk, axis).mean;
          for (double d : deltas) {
            PredictionInterval pi;
            switch (m) {
              case Method::GprCp:
                if (!loo) loo = loo_table(mdl, tk);
                pi = predict_interval(build_profile(*loo, mdl.labels(axis), g), d);
                break;
              case Method::JackknifePlus:
                if (!jp) jp.emplace(mdl);
                pi = jp->interval(tk, axis, d);
                break;
              case Method::Gpr:
                pi = gpr_baseline_interval(mdl.posterior(tk, axis), mdl.sigma_p2(), d,
                                           baseline_noise);
                break;
            }
            const auto& pieces = pi.pieces();
            const double truth = r.position ? (*r.position)[axis] : NAN;
            os << r.id << ',' << to_string(m) << ',' << to_string(axis) << ',' << fmt(d)
               << ',' << fmt(point) << ',' << fmt(pieces.empty() ? NAN : pieces.front().lo)
               << ',' << fmt(pieces.empty() ? NAN : pieces.back().hi) << ','
               << pieces.size() << ',' << fmt(pi.total_width()) << ','
               << (pi.unbounded() ? 1 : 0) << ',' << fmt(truth) << ','
               << (r.position ? (pi.contains(truth) ? "1" : "0") : "") << '\n';
          }
        }
      }
    }
  }
};

struct EvaluateCmd {
  PipelineFlags flags;
  std::string config, out;
  std::vector<double> t60s, snrs, deltas;
  std::vector<std::string> methods;
  std::optional<int> repeats, threads;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  int exit_code = 0;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("evaluate", "Run the coverage/width experiment grid");
    cmd->add_option("-c,--config", config, "Experiment YAML file")->check(CLI::ExistingFile);
    flags.add_to(cmd, false);
    cmd->add_option("--t60-list", t60s, "Reverberation times [s]")->delimiter(',');
    cmd->add_option("--snr-list", snrs, "SNR levels [dB]")->delimiter(',');
    cmd->add_option("--delta", deltas, "Miscoverage levels")->delimiter(',');
    cmd->add_option("--methods", methods, "gpr, jackknife_plus, gpr_cp")->delimiter(',');
    cmd->add_option("--repeats", repeats, "Repeats per condition");
    cmd->add_option("--seed", seed, "Master seed");
    cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");
    cmd->add_option("-o,--out", out, "Report directory (overrides output_dir)");
    cmd->add_flag("-q,--quiet", quiet, "No per-cell progress");
    cmd->callback([this] { run(); });
  }

  void run() {
    ExperimentConfig cfg;
    if (!config.empty()) {
      cfg = load_experiment_config(config);
    } else {
      cfg.pipeline = default_pipeline_config();
    }
    flags.apply(cfg.pipeline);
    if (!t60s.empty()) cfg.t60s = t60s;
    if (!snrs.empty()) cfg.snrs_db = snrs;
    if (!deltas.empty()) cfg.deltas = deltas;
    if (!methods.empty()) {
      cfg.methods.clear();
      for (const auto& m : methods) cfg.methods.push_back(parse_method(m));
    }
    if (repeats) cfg.repeats = *repeats;
    if (threads) cfg.threads = *threads;
    if (seed) cfg.seed = *seed;
    if (!out.empty()) cfg.output_dir = out;
    cfg.validate();

    ProgressFn progress;
    if (!quiet) progress = [](const std::string& msg) { std::cerr << msg << '\n'; };
    const auto report = run_experiment(cfg, progress);
    write_report(report, cfg, cfg.output_dir);
    std::cout << format_table(report) << "report written to " << cfg.output_dir.string() << '\n';
    exit_code = report.complete() ? 0 : 1;
  }
};

struct SweepCmd {
  PipelineFlags flags;
  std::string model, out, axis = "x";
  double fixed = 3.0, step = 0.05, delta = 0.1;
  std::uint64_t seed = 1;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("sweep", "Interval width along one axis of the ROI");
    flags.add_to(cmd);
    cmd->add_option("-m,--model", model, "Model JSON")->required()->check(CLI::ExistingFile);
    cmd->add_option("--axis", axis, "Swept axis: x | y");
    cmd->add_option("--fixed", fixed, "Coordinate of the other axis [m]");
    cmd->add_option("--step", step, "Spacing of the sweep [m]");
    cmd->add_option("--delta", delta, "Miscoverage level");
    cmd->add_option("--seed", seed, "Signal/noise seed of the sweep recordings");
    cmd->add_option("-o,--out", out, "Sweep CSV")->required();
    cmd->callback([this] { run(); });
  }

  void run() {
    const auto cfg = flags.load();
    const auto bundle = read_model(model);
    const auto rows = sweep_positions(bundle, cfg, parse_axis(axis), fixed, step, delta, seed);
    write_sweep_csv(out, rows);
    std::cout << "wrote " << rows.size() << " sweep positions to " << out << '\n';
  }
};

struct ReportCmd {
  std::string in;
  bool rewrite = false;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("report", "Summarize a report directory");
    cmd->add_option("-i,--in", in, "Report directory")->required()->check(CLI::ExistingDirectory);
    cmd->add_flag("--rewrite", rewrite, "Regenerate coverage.csv from repeats.csv");
    cmd->callback([this] { run(); });
  }

  void run() {
    const auto report = read_report(in);
    if (rewrite) write_report_tables(report, in);
    std::cout << format_table(report);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Manifold GP source localization with conformal prediction intervals"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  SimulateCmd simulate;
  FeaturesCmd features;
  FitCmd fit_cmd;
  PredictCmd predict;
  EvaluateCmd evaluate;
  SweepCmd sweep;
  ReportCmd report;
  simulate.add(app);
  features.add(app);
  fit_cmd.add(app);
  predict.add(app);
  evaluate.add(app);
  sweep.add(app);
  report.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return evaluate.exit_code;
}
