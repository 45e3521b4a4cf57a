#include "oracles.hpp"

#include <confloc/config.hpp>
#include <confloc/errors.hpp>
#include <confloc/feature_io.hpp>
#include <confloc/model_io.hpp>
#include <confloc/wav.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <limits>

using namespace confloc;
using confloc::oracle::Rng;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "confloc_test_io";
  fs::create_directories(dir);
  return dir / name;
}

const fs::path kConfigs = fs::path(CONFLOC_SOURCE_DIR) / "configs";

FeatureSet random_feature_set(Rng& rng) {
  FeatureSet set;
  set.band = BandSelection::from_range(150.0, 300.0, set.stft);
  const auto f = set.band.size();
  const auto feats = oracle::random_features(rng, 7, 3, f);
  for (std::size_t i = 0; i < feats.size(); ++i) {
    FeatureRecord r;
    r.id = i;
    r.h = feats[i];
    r.role = i < 4 ? SampleRole::Labeled : (i < 6 ? SampleRole::Unlabeled : SampleRole::Test);
    if (r.role != SampleRole::Unlabeled)
      r.position = Position2{1.6 + 0.1 * static_cast<double>(i), 4.1 - 1.0 / 3.0};
    set.records.push_back(r);
  }
  return set;
}

}  // namespace

TEST(FeatureFile, RoundTripsExactly) {
  Rng rng(41);
  const auto set = random_feature_set(rng);
  const auto path = scratch("features.csv");
  write_feature_set(path, set);
  const auto back = read_feature_set(path);
  EXPECT_EQ(back.band.bins, set.band.bins);
  EXPECT_EQ(back.stft.fft_size, set.stft.fft_size);
  EXPECT_EQ(back.stft.overlap, set.stft.overlap);
  ASSERT_EQ(back.records.size(), set.records.size());
  for (std::size_t i = 0; i < set.records.size(); ++i) {
    EXPECT_EQ(back.records[i].id, set.records[i].id);
    EXPECT_EQ(back.records[i].role, set.records[i].role);
    EXPECT_EQ(back.records[i].position, set.records[i].position);
    EXPECT_TRUE(back.records[i].h == set.records[i].h);
  }
}

TEST(FeatureFile, RejectsForeignFiles) {
  const auto path = scratch("not_features.csv");
  std::ofstream(path) << "id,role,x,y\n0,labeled,1,2\n";
  EXPECT_THROW(read_feature_set(path), InputError);
  EXPECT_THROW(read_feature_set(scratch("missing.csv")), InputError);
  EXPECT_THROW(parse_role("training"), InputError);
}

TEST(ModelFile, RoundTripGivesIdenticalPredictions) {
  Rng rng(42);
  const auto set = random_feature_set(rng);
  std::vector<AggregatedRtf> labeled, unlabeled;
  std::vector<Position2> labels;
  for (const auto& r : set.records) {
    if (r.role == SampleRole::Labeled) {
      labeled.push_back(r.h);
      labels.push_back(*r.position);
    } else if (r.role == SampleRole::Unlabeled) {
      unlabeled.push_back(r.h);
    }
  }
  ModelBundle bundle{fit(labeled, labels, unlabeled, KernelConfig{}, 0.03), set.stft, set.band};
  const auto path = scratch("model.json");
  write_model(path, bundle);
  const auto back = read_model(path);
  EXPECT_EQ(back.model.kernel_config().sigma, bundle.model.kernel_config().sigma);
  EXPECT_EQ(back.model.sigma_p2(), bundle.model.sigma_p2());
  EXPECT_EQ(back.band.bins, bundle.band.bins);
  const auto& h = set.records.back().h;
  for (Axis axis : kAxes) {
    EXPECT_EQ(back.model.posterior(h, axis).mean, bundle.model.posterior(h, axis).mean);
    EXPECT_EQ(back.model.posterior(h, axis).variance, bundle.model.posterior(h, axis).variance);
  }
  std::ofstream(scratch("bad_model.json")) << "{\"format\": \"something-else\"}";
  EXPECT_THROW(read_model(scratch("bad_model.json")), InputError);
}

TEST(Wav, FloatRoundTripIsExactPcmIsQuantized) {
  MultichannelRecording rec;
  rec.sample_rate = 16000.0;
  rec.samples.resize(3, 500);
  const auto noise = white_noise(1500, 3);
  for (Eigen::Index i = 0; i < 1500; ++i)
    rec.samples(i % 3, i / 3) = 0.3 * static_cast<float>(noise[static_cast<std::size_t>(i)]);
  const auto fpath = scratch("float.wav");
  write_wav(fpath, rec, WavFormat::Float32);
  const auto f = read_wav(fpath);
  EXPECT_EQ(f.sample_rate, 16000.0);
  ASSERT_EQ(f.samples.rows(), 3);
  ASSERT_EQ(f.samples.cols(), 500);
  EXPECT_LT((f.samples - rec.samples.cast<float>().cast<double>()).cwiseAbs().maxCoeff(), 1e-12);

  const auto ipath = scratch("pcm.wav");
  write_wav(ipath, rec, WavFormat::Pcm16);
  const auto q = read_wav(ipath);
  const double clipped_err =
      (q.samples - rec.samples.cwiseMax(-1.0).cwiseMin(1.0)).cwiseAbs().maxCoeff();
  EXPECT_LE(clipped_err, 1.0 / 32767.0);
}

TEST(Config, DefaultSceneMatchesBuiltInDefaults) {
  const auto cfg = load_pipeline_config(kConfigs / "default_scene.yaml");
  const auto ref = default_pipeline_config();
  EXPECT_EQ(cfg.scene.room.dimensions, ref.scene.room.dimensions);
  EXPECT_EQ(cfg.scene.room.t60, 0.3);
  ASSERT_EQ(cfg.scene.array.num_nodes(), 5u);
  for (std::size_t m = 0; m < 5; ++m) {
    EXPECT_LT((cfg.scene.array.nodes[m].mic1 - ref.scene.array.nodes[m].mic1).norm(), 1e-12);
    EXPECT_LT((cfg.scene.array.nodes[m].mic2 - ref.scene.array.nodes[m].mic2).norm(), 1e-12);
  }
  EXPECT_EQ(cfg.scene.roi.x_min, 1.6);
  EXPECT_EQ(cfg.scene.roi.y_max, 4.1);
  EXPECT_EQ(cfg.grid.nx, 15);
  EXPECT_EQ(cfg.n_unlabeled, 100);
  EXPECT_EQ(cfg.n_test, 200);
  EXPECT_EQ(cfg.band.size(), 87u);
  EXPECT_EQ(cfg.gamma, 32.0);
  EXPECT_EQ(cfg.sigma_p2, ref.sigma_p2);
  EXPECT_EQ(cfg.max_order, 0);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, ExperimentFilesResolveTheirScene) {
  const auto full = load_experiment_config(kConfigs / "experiment.yaml");
  EXPECT_EQ(full.t60s, (std::vector<double>{0.3, 0.7}));
  EXPECT_EQ(full.snrs_db, (std::vector<double>{5.0, 15.0}));
  EXPECT_EQ(full.deltas, (std::vector<double>{0.1, 0.05, 0.01}));
  EXPECT_EQ(full.repeats, 10);
  EXPECT_EQ(full.methods.size(), 3u);
  EXPECT_EQ(full.pipeline.grid.nx, 15);

  const auto quick = load_experiment_config(kConfigs / "quick_experiment.yaml");
  EXPECT_EQ(quick.repeats, 1);
  EXPECT_EQ(quick.pipeline.grid.nx, 5);
  EXPECT_EQ(quick.pipeline.n_test, 20);
  EXPECT_EQ(quick.pipeline.signal.duration, 0.5);
  EXPECT_EQ(quick.pipeline.scene.room.dimensions, full.pipeline.scene.room.dimensions);
  EXPECT_NO_THROW(quick.validate());
}

TEST(Config, RejectsBadValues) {
  const auto path = scratch("bad.yaml");
  std::ofstream(path) << "room:\n  dimensions: [1, 2]\n";
  EXPECT_THROW(load_pipeline_config(path), ConfigError);
  std::ofstream(path) << "model:\n  kernel_scale: sometimes\n";
  EXPECT_THROW(load_pipeline_config(path), ConfigError);
  std::ofstream(path) << "signal: {kind: wav}\n";
  EXPECT_THROW(load_pipeline_config(path).validate(), ConfigError);
  EXPECT_THROW(load_pipeline_config(scratch("absent.yaml")), ConfigError);
  EXPECT_THROW(parse_method("bootstrap"), ConfigError);
  EXPECT_EQ(parse_method("gpr_cp"), Method::GprCp);
  EXPECT_EQ(to_string(Method::JackknifePlus), "jackknife_plus");

  ExperimentConfig cfg;
  cfg.repeats = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.repeats = 1;
  cfg.deltas.clear();
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Config, SnrAcceptsInfinity) {
  const auto path = scratch("quiet.yaml");
  std::ofstream(path) << "snr_db: inf\n";
  EXPECT_EQ(load_pipeline_config(path).scene.snr_db, std::numeric_limits<double>::infinity());
}
