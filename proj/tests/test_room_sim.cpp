#include <confloc/config.hpp>
#include <confloc/errors.hpp>
#include <confloc/room_sim.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

using namespace confloc;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

RoomSpec anechoic() {
  RoomSpec room;
  room.t60 = 0.0;
  return room;
}

// Distance covered by exactly `samples` samples of propagation.
double whole_sample_distance(const RoomSpec& room, int samples) {
  return samples * room.speed_of_sound / room.sample_rate;
}

std::size_t argmax_abs(const std::vector<double>& h) {
  return static_cast<std::size_t>(
      std::max_element(h.begin(), h.end(),
                       [](double a, double b) { return std::abs(a) < std::abs(b); }) -
      h.begin());
}

// Decay time from the backward-integrated energy: least-squares line through
// the -5 .. -25 dB range, extrapolated to -60 dB.
double schroeder_t60(const std::vector<double>& h, double fs) {
  std::vector<double> edc(h.size());
  double acc = 0.0;
  for (std::size_t i = h.size(); i-- > 0;) {
    acc += h[i] * h[i];
    edc[i] = acc;
  }
  std::vector<double> t, db;
  for (std::size_t i = 0; i < edc.size(); ++i) {
    const double level = 10.0 * std::log10(edc[i] / edc[0]);
    if (level <= -5.0 && level >= -25.0) {
      t.push_back(static_cast<double>(i) / fs);
      db.push_back(level);
    }
  }
  const double n = static_cast<double>(t.size());
  const double mt = std::accumulate(t.begin(), t.end(), 0.0) / n;
  const double md = std::accumulate(db.begin(), db.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    sxy += (t[i] - mt) * (db[i] - md);
    sxx += (t[i] - mt) * (t[i] - mt);
  }
  return -60.0 / (sxy / sxx);
}

Scene two_node_scene(double t60, double snr_db) {
  Scene scene;
  scene.room.t60 = t60;
  scene.array = default_array_layout();
  scene.array.nodes.resize(2);
  scene.roi = default_roi();
  scene.source_pos = {2.4, 3.0};
  scene.snr_db = snr_db;
  return scene;
}

double power(const Eigen::RowVectorXd& x) {
  return x.squaredNorm() / static_cast<double>(x.size());
}

}  // namespace

TEST(Rir, AnechoicIsSingleDirectPathImpulse) {
  const RoomSpec room = anechoic();
  const double d = whole_sample_distance(room, 100);
  const Vec3 src{1.0, 3.0, 1.5};
  const Vec3 mic = src + Vec3{d, 0.0, 0.0};
  const auto h = generate_rir(room, src, mic, 5);
  ASSERT_GT(h.size(), 100u);
  EXPECT_EQ(argmax_abs(h), 100u);
  EXPECT_NEAR(h[100], 1.0 / (4.0 * std::numbers::pi * d), 1e-12);
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (i == 100) continue;
    EXPECT_NEAR(h[i], 0.0, 1e-12) << "tap " << i;
  }
}

TEST(Rir, InverseDistanceLawBetweenTwoMics) {
  const RoomSpec room = anechoic();
  const double d = whole_sample_distance(room, 40);
  const Vec3 src{1.0, 1.0, 1.5};
  const auto near = generate_rir(room, src, src + Vec3{d, 0, 0}, 0);
  const auto far = generate_rir(room, src, src + Vec3{2 * d, 0, 0}, 0);
  const auto i_near = argmax_abs(near);
  const auto i_far = argmax_abs(far);
  EXPECT_EQ(i_far - i_near, 40u);
  EXPECT_NEAR(far[i_far] / near[i_near], 0.5, 1e-12);
}

TEST(Rir, ReciprocityOfDirectPath) {
  RoomSpec room;
  room.t60 = 0.4;
  const Vec3 a{1.3, 2.2, 1.1};
  const Vec3 b{3.9, 4.4, 1.7};
  const auto ab = generate_rir(room, a, b, 3);
  const auto ba = generate_rir(room, b, a, 3);
  ASSERT_EQ(ab.size(), ba.size());
  const auto direct = static_cast<std::size_t>(
      std::floor((a - b).norm() * room.sample_rate / room.speed_of_sound));
  for (std::size_t i = 0; i <= direct + 1; ++i) EXPECT_NEAR(ab[i], ba[i], 1e-12);
}

TEST(Rir, SchroederDecayMatchesT60) {
  for (double t60 : {0.2, 0.3, 0.5, 0.7}) {
    RoomSpec room;
    room.t60 = t60;
    const auto h = generate_rir(room, {1.7, 2.3, 1.4}, {3.6, 4.1, 1.6},
                                default_max_order(room));
    const double measured = schroeder_t60(h, room.sample_rate);
    EXPECT_NEAR(measured, t60, 0.2 * t60) << "t60 " << t60;
  }
}

TEST(Rir, Errors) {
  RoomSpec room;
  room.t60 = 0.3;
  const Vec3 inside{1, 1, 1};
  EXPECT_THROW(generate_rir(room, {-0.1, 1, 1}, inside, 2), GeometryError);
  EXPECT_THROW(generate_rir(room, inside, {1, 7, 1}, 2), GeometryError);
  EXPECT_THROW(generate_rir(room, inside, inside, 2), GeometryError);
  EXPECT_THROW(generate_rir(room, inside, {2, 2, 2}, -1), ConfigError);
  room.t60 = 1e6;
  EXPECT_THROW(generate_rir(room, inside, {2, 2, 2}, 2), ConfigError);
  RoomSpec flat;
  flat.dimensions.z() = 0.0;
  EXPECT_THROW(flat.validate(), ConfigError);
}

TEST(Rir, ReflectionCoefficientGrowsWithT60) {
  EXPECT_EQ(reflection_coefficient(anechoic()), 0.0);
  double previous = 0.0;
  for (double t60 : {0.1, 0.2, 0.3, 0.5, 0.7, 1.0}) {
    RoomSpec room;
    room.t60 = t60;
    const double beta = reflection_coefficient(room);
    EXPECT_GT(beta, previous);
    EXPECT_LT(beta, 1.0);
    EXPECT_EQ(reflection_coefficient(room), beta);
    previous = beta;
  }
}

TEST(Simulate, NoiselessAnechoicIsDelayedScaledCopy) {
  Scene scene = two_node_scene(0.0, kInf);
  const auto signal = white_noise(4000, 3);
  const auto rec = simulate_recording(scene, signal, 1);
  ASSERT_EQ(rec.num_channels(), 4u);
  ASSERT_EQ(rec.num_samples(), signal.size());
  for (std::size_t ch = 0; ch < rec.num_channels(); ++ch) {
    const auto h = generate_rir(scene.room, scene.source_point(),
                                scene.array.mic(ch), 0);
    for (std::size_t t = 0; t < signal.size(); t += 97) {
      double expected = 0.0;
      for (std::size_t k = 0; k < h.size() && k <= t; ++k)
        expected += h[k] * signal[t - k];
      EXPECT_NEAR(rec.samples(static_cast<Eigen::Index>(ch),
                              static_cast<Eigen::Index>(t)),
                  expected, 1e-9);
    }
  }
}

TEST(Simulate, SnrIsCalibratedPerChannel) {
  Scene clean_scene = two_node_scene(0.3, kInf);
  Scene noisy_scene = two_node_scene(0.3, 0.0);
  const auto signal = speech_shaped_noise(5 * 16000, 16000.0, 11);
  const auto clean = simulate_recording(clean_scene, signal, 5, 4);
  const auto noisy = simulate_recording(noisy_scene, signal, 5, 4);
  for (Eigen::Index ch = 0; ch < clean.samples.rows(); ++ch) {
    const Eigen::RowVectorXd s = clean.samples.row(ch);
    const Eigen::RowVectorXd n = noisy.samples.row(ch) - s;
    const double snr = 10.0 * std::log10(power(s) / power(n));
    EXPECT_NEAR(snr, 0.0, 0.5) << "channel " << ch;
  }
}

TEST(Simulate, NoiseIsUncorrelatedAcrossChannels) {
  Scene scene = two_node_scene(0.0, 0.0);
  const auto signal = white_noise(5 * 16000, 2);
  Scene quiet = scene;
  quiet.snr_db = kInf;
  const auto clean = simulate_recording(quiet, signal, 9);
  const auto noisy = simulate_recording(scene, signal, 9);
  const Eigen::MatrixXd noise = noisy.samples - clean.samples;
  for (Eigen::Index i = 0; i < noise.rows(); ++i)
    for (Eigen::Index j = i + 1; j < noise.rows(); ++j) {
      const Eigen::RowVectorXd a = noise.row(i).array() - noise.row(i).mean();
      const Eigen::RowVectorXd b = noise.row(j).array() - noise.row(j).mean();
      EXPECT_LT(std::abs(a.dot(b) / (a.norm() * b.norm())), 0.05);
    }
}

TEST(Simulate, LinearInSourceWhenNoiseless) {
  Scene scene = two_node_scene(0.3, kInf);
  const auto signal = white_noise(3000, 4);
  std::vector<double> scaled(signal);
  for (auto& v : scaled) v *= -2.5;
  const auto base = simulate_recording(scene, signal, 1, 3);
  const auto big = simulate_recording(scene, scaled, 1, 3);
  EXPECT_LT((big.samples + 2.5 * base.samples).cwiseAbs().maxCoeff(),
            1e-10 * base.samples.cwiseAbs().maxCoeff());
}

TEST(Simulate, DeterministicGivenSeed) {
  Scene scene = two_node_scene(0.3, 10.0);
  const auto signal = speech_shaped_noise(4000, 16000.0, 8);
  const auto a = simulate_recording(scene, signal, 42, 3);
  const auto b = simulate_recording(scene, signal, 42, 3);
  const auto c = simulate_recording(scene, signal, 43, 3);
  EXPECT_TRUE(a.samples == b.samples);
  EXPECT_FALSE(a.samples == c.samples);
}

TEST(Simulate, Errors) {
  Scene scene = two_node_scene(0.3, 10.0);
  std::vector<double> silent(1000, 0.0);
  EXPECT_THROW(simulate_recording(scene, silent, 1, 2), ConfigError);
  EXPECT_THROW(simulate_recording(scene, std::vector<double>{}, 1, 2), ConfigError);
  scene.source_pos = {0.2, 0.2};
  EXPECT_THROW(simulate_recording(scene, white_noise(100, 1), 1, 2), GeometryError);
}

TEST(Dataset, GridPitchMatchesTheStatedResolution) {
  const Roi roi{1.6, 3.6, 2.1, 4.1};
  const auto grid = grid_positions(roi, {15, 15});
  ASSERT_EQ(grid.size(), 225u);
  std::vector<double> xs, ys;
  for (const auto& p : grid) {
    EXPECT_TRUE(roi.contains(p));
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end(),
                       [](double a, double b) { return std::abs(a - b) < 1e-9; }),
           xs.end());
  ASSERT_EQ(xs.size(), 15u);
  for (std::size_t i = 1; i < xs.size(); ++i)
    EXPECT_NEAR(xs[i] - xs[i - 1], 0.133, 0.0005);
  EXPECT_THROW(grid_positions(roi, {0, 15}), ConfigError);
}

TEST(Dataset, PlanCountsAndMembership) {
  const Roi roi = default_roi();
  const auto plan = plan_dataset(roi, {15, 15}, 0, 200, 17);
  ASSERT_EQ(plan.size(), 425u);
  std::size_t tests = 0;
  for (const auto& p : plan) {
    EXPECT_NE(p.role, SampleRole::Unlabeled);
    if (p.role == SampleRole::Test) {
      ++tests;
      EXPECT_TRUE(roi.contains(p.position));
    }
  }
  EXPECT_EQ(tests, 200u);
  EXPECT_THROW(plan_dataset(roi, {15, 15}, -1, 0, 1), ConfigError);
}

TEST(Dataset, BuildKeepsRolesApart) {
  Scene scene = two_node_scene(0.0, kInf);
  SignalSource signals = [](std::uint64_t seed) { return white_noise(2048, seed); };
  const auto ds = build_dataset(scene, {2, 2}, 0, 3, signals, 5);
  EXPECT_EQ(ds.labeled.size(), 4u);
  EXPECT_TRUE(ds.unlabeled.empty());
  EXPECT_EQ(ds.test.size(), 3u);
  for (const auto& t : ds.test) EXPECT_TRUE(scene.roi.contains(t.position));
}

TEST(Seeds, DerivedStreamsDiffer) {
  EXPECT_EQ(derive_seed(1, {2, 3}), derive_seed(1, {2, 3}));
  EXPECT_NE(derive_seed(1, {2, 3}), derive_seed(1, {3, 2}));
  EXPECT_NE(derive_seed(1, {2}), derive_seed(2, {2}));
}
