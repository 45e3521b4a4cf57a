#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace confloc::detail {

/// Real-to-complex transform of fixed size n (n/2+1 output bins).
/// Plans are created once per size and shared; execution is thread-safe.
class RealFft {
 public:
  explicit RealFft(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  std::size_t bins() const noexcept { return n_ / 2 + 1; }

  /// input.size() must be <= n; the remainder is zero-padded.
  void forward(std::span<const double> input,
               std::span<std::complex<double>> output) const;
  /// Unnormalized inverse: forward then inverse scales by n.
  void inverse(std::span<const std::complex<double>> input,
               std::span<double> output) const;

 private:
  std::size_t n_;
  void* forward_plan_;
  void* inverse_plan_;
};

std::size_t next_pow2(std::size_t n);

/// Linear convolution of signal with each kernel, truncated to out_len.
std::vector<std::vector<double>> fft_convolve(
    std::span<const double> signal,
    std::span<const std::vector<double>> kernels, std::size_t out_len);

}  // namespace confloc::detail
