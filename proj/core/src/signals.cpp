#include <confloc/room_sim.hpp>

#include <cmath>
#include <numbers>
#include <random>

namespace confloc {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(master);
  for (auto p : path) h = splitmix64(h ^ splitmix64(p + 0x632BE59BD9B4E019ULL));
  return h;
}

std::vector<double> white_noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out(n);
  for (auto& v : out) v = normal(rng);
  return out;
}

std::vector<double> speech_shaped_noise(std::size_t n, double sample_rate,
                                        std::uint64_t seed) {
  auto x = white_noise(n, seed);
  const double a = std::exp(-2.0 * std::numbers::pi * 500.0 / sample_rate);
  double y = 0.0;
  double power = 0.0;
  for (auto& v : x) {
    y = (1.0 - a) * v + a * y;
    v = y;
    power += y * y;
  }
  if (n > 0 && power > 0.0) {
    const double scale = 1.0 / std::sqrt(power / static_cast<double>(n));
    for (auto& v : x) v *= scale;
  }
  return x;
}

}  // namespace confloc
