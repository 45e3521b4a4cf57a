#include "fft.hpp"

#include <confloc/errors.hpp>

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>

namespace confloc::detail {
namespace {

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};
using RealBuffer = std::unique_ptr<double, FftwFree>;
using ComplexBuffer = std::unique_ptr<fftw_complex, FftwFree>;

RealBuffer alloc_real(std::size_t n) {
  return RealBuffer(fftw_alloc_real(n));
}
ComplexBuffer alloc_complex(std::size_t n) {
  return ComplexBuffer(fftw_alloc_complex(n));
}

struct PlanPair {
  fftw_plan forward;
  fftw_plan inverse;
};

// Planning is not thread-safe in FFTW; executing an existing plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

PlanPair plans_for(std::size_t n) {
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard lock(planner_mutex());
  if (auto it = cache.find(n); it != cache.end()) return it->second;
  auto real = alloc_real(n);
  auto spec = alloc_complex(n / 2 + 1);
  const int len = static_cast<int>(n);
  // FFTW_ESTIMATE keeps the chosen algorithm, and hence the output bits,
  // identical between runs.
  PlanPair pair{
      fftw_plan_dft_r2c_1d(len, real.get(), spec.get(), FFTW_ESTIMATE),
      fftw_plan_dft_c2r_1d(len, spec.get(), real.get(), FFTW_ESTIMATE)};
  cache.emplace(n, pair);
  return pair;
}

}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  if (n < 2) throw InputError("FFT size must be at least 2");
  auto pair = plans_for(n);
  forward_plan_ = pair.forward;
  inverse_plan_ = pair.inverse;
}

void RealFft::forward(std::span<const double> input,
                      std::span<std::complex<double>> output) const {
  if (input.size() > n_ || output.size() < bins())
    throw InputError("RealFft::forward buffer size mismatch");
  auto real = alloc_real(n_);
  auto spec = alloc_complex(bins());
  std::copy(input.begin(), input.end(), real.get());
  std::fill(real.get() + input.size(), real.get() + n_, 0.0);
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), real.get(),
                       spec.get());
  std::memcpy(static_cast<void*>(output.data()), spec.get(),
              bins() * sizeof(fftw_complex));
}

void RealFft::inverse(std::span<const std::complex<double>> input,
                      std::span<double> output) const {
  if (input.size() < bins() || output.size() < n_)
    throw InputError("RealFft::inverse buffer size mismatch");
  auto real = alloc_real(n_);
  auto spec = alloc_complex(bins());
  std::memcpy(spec.get(), input.data(), bins() * sizeof(fftw_complex));
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_), spec.get(),
                       real.get());
  std::copy(real.get(), real.get() + n_, output.begin());
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<std::vector<double>> fft_convolve(
    std::span<const double> signal,
    std::span<const std::vector<double>> kernels, std::size_t out_len) {
  std::size_t longest = 0;
  for (const auto& k : kernels) longest = std::max(longest, k.size());
  const std::size_t n = next_pow2(signal.size() + longest);
  RealFft fft(n);

  std::vector<std::complex<double>> sig_spec(fft.bins());
  fft.forward(signal, sig_spec);

  std::vector<std::vector<double>> out;
  out.reserve(kernels.size());
  std::vector<std::complex<double>> spec(fft.bins());
  std::vector<double> time(n);
  const double scale = 1.0 / static_cast<double>(n);
  for (const auto& k : kernels) {
    fft.forward(k, spec);
    for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= sig_spec[i];
    fft.inverse(spec, time);
    const std::size_t len = std::min(out_len, n);
    std::vector<double> y(out_len, 0.0);
    for (std::size_t i = 0; i < len; ++i) y[i] = time[i] * scale;
    out.push_back(std::move(y));
  }
  return out;
}

}  // namespace confloc::detail
