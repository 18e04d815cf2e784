#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace arnet::frontend {

bool is_power_of_two(std::size_t n);
std::size_t next_power_of_two(std::size_t n);

/// Radix-2 FFT of a real frame of length n (a power of two, n >= 2).
///
/// The frame is packed into an n/2-point complex transform and unpacked into
/// the non-negative bins 0..n/2.
class RealFft {
 public:
  explicit RealFft(std::size_t n);

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  /// Complex spectrum X[0..n/2]; `frame.size()` must equal `size()`.
  void transform(std::span<const double> frame, std::span<std::complex<double>> out) const;
  /// |X[k]|^2 for k = 0..n/2.
  void power(std::span<const double> frame, std::span<double> out) const;

 private:
  void complex_fft(std::vector<std::complex<double>>& a) const;

  std::size_t n_;
  std::size_t half_;
  std::vector<std::size_t> bitrev_;
  std::vector<std::complex<double>> twiddle_half_;  // e^{-2 pi i k / half}
  std::vector<std::complex<double>> twiddle_full_;  // e^{-2 pi i k / n}
};

}  // namespace arnet::frontend
