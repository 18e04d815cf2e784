#include "arnet/fft.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "arnet/error.hpp"

namespace arnet::frontend {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

RealFft::RealFft(std::size_t n) : n_(n), half_(n / 2) {
  if (n < 2 || !is_power_of_two(n)) {
    throw ShapeError("FFT length must be a power of two >= 2, got " + std::to_string(n));
  }
  bitrev_.resize(half_);
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < half_) ++bits;
  for (std::size_t i = 0; i < half_; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < bits; ++b) {
      if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
    }
    bitrev_[i] = r;
  }
  twiddle_half_.resize(half_ / 2 + 1);
  for (std::size_t k = 0; k < twiddle_half_.size(); ++k) {
    twiddle_half_[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(half_));
  }
  twiddle_full_.resize(half_ + 1);
  for (std::size_t k = 0; k <= half_; ++k) {
    twiddle_full_[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_));
  }
}

void RealFft::complex_fft(std::vector<std::complex<double>>& a) const {
  const std::size_t m = a.size();
  for (std::size_t i = 0; i < m; ++i) {
    if (i < bitrev_[i]) std::swap(a[i], a[bitrev_[i]]);
  }
  for (std::size_t len = 2; len <= m; len <<= 1) {
    const std::size_t step = m / len;
    for (std::size_t start = 0; start < m; start += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> w = twiddle_half_[k * step];
        const std::complex<double> u = a[start + k];
        const std::complex<double> v = a[start + k + len / 2] * w;
        a[start + k] = u + v;
        a[start + k + len / 2] = u - v;
      }
    }
  }
}

void RealFft::transform(std::span<const double> frame, std::span<std::complex<double>> out) const {
  if (frame.size() != n_ || out.size() != bins()) {
    throw ShapeError("FFT of length " + std::to_string(n_) + " given frame of " + std::to_string(frame.size()));
  }
  std::vector<std::complex<double>> z(half_);
  for (std::size_t k = 0; k < half_; ++k) z[k] = {frame[2 * k], frame[2 * k + 1]};
  complex_fft(z);
  const std::complex<double> minus_half_i(0.0, -0.5);
  for (std::size_t k = 0; k <= half_; ++k) {
    const std::complex<double> zk = z[k % half_];
    const std::complex<double> zc = std::conj(z[(half_ - k) % half_]);
    const std::complex<double> even = 0.5 * (zk + zc);
    const std::complex<double> odd = minus_half_i * (zk - zc);
    out[k] = even + twiddle_full_[k] * odd;
  }
}

void RealFft::power(std::span<const double> frame, std::span<double> out) const {
  std::vector<std::complex<double>> spec(bins());
  transform(frame, spec);
  if (out.size() != bins()) throw ShapeError("FFT power output has wrong length");
  for (std::size_t k = 0; k < spec.size(); ++k) out[k] = std::norm(spec[k]);
}

}  // namespace arnet::frontend
