#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "arnet/fft.hpp"
#include "arnet/tensor.hpp"

namespace arnet::frontend {

/// Mono audio; samples are finite and within [-1, 1].
struct Waveform {
  std::vector<double> samples;
  double sample_rate = 16000.0;
  std::string utt_id;

  /// Throws ShapeError if a sample is non-finite or out of range, or the rate is not positive.
  void validate() const;
  std::size_t size() const { return samples.size(); }
};

enum class FrontendKind { mel, cqt };

std::string_view to_string(FrontendKind kind);
FrontendKind frontend_kind_from_string(std::string_view name);

inline constexpr double kLogFloor = 1e-10;

/// Time x bin matrix of log-compressed energies.
struct FeatureMap {
  Tensor values;  // [T_frames x B]
  FrontendKind kind = FrontendKind::mel;
  double frame_rate = 0.0;

  std::size_t frames() const { return values.dim(0); }
  std::size_t bins() const { return values.dim(1); }
};

struct FilterBank {
  Tensor weights;                   // [B x (n_fft/2 + 1)]
  std::vector<double> center_freqs;  // Hz, strictly increasing
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Periodic Hann window: 0.5 - 0.5 cos(2 pi n / N).
std::vector<double> hann_window(std::size_t n);

/// [T x frame_len] frames, T = floor((len - frame_len) / hop) + 1, each
/// multiplied by a periodic Hann window.
Tensor frame_and_window(const Waveform& w, std::size_t frame_len, std::size_t hop);

/// Per-frame squared DFT magnitude for bins 0..N/2; N must be a power of two.
Tensor stft_power(const Tensor& frames);

/// Triangular filters with corners equally spaced on the mel scale. Each row
/// is scaled so its peak is exactly 1.
FilterBank mel_filterbank(std::size_t n_mels, std::size_t n_fft, double sample_rate, double fmin, double fmax);

struct MelConfig {
  std::size_t n_fft = 512;  // frame length; transformed at the next power of two
  std::size_t hop = 160;
  std::size_t n_mels = 80;
  double fmin = 20.0;
  double fmax = 8000.0;
};

/// Reusable log-mel extractor for one sample rate.
class MelExtractor {
 public:
  MelExtractor(const MelConfig& cfg, double sample_rate);
  FeatureMap operator()(const Waveform& w) const;
  const FilterBank& filterbank() const { return bank_; }
  const MelConfig& config() const { return cfg_; }

 private:
  MelConfig cfg_;
  double sample_rate_;
  std::size_t fft_len_;
  FilterBank bank_;
};

/// ln(max(filterbank * |STFT|^2, 1e-10)) per frame; [T x n_mels].
FeatureMap log_mel(const Waveform& w, const MelConfig& cfg = {});

struct CqtConfig {
  double fmin = 32.703;  // C1
  std::size_t bins_per_octave = 12;
  std::size_t n_bins = 84;
  std::size_t hop = 160;
};

/// Direct constant-Q transform with one Hann-windowed complex kernel per bin.
///
/// Bin b is centred at fmin * 2^(b / bpo) with length ceil(Q * sr / f_b),
/// Q = 1 / (2^(1/bpo) - 1). Kernels are normalized by their window sum so a
/// unit sine at a bin centre has magnitude 1/2 in that bin. Frame t is centred
/// on sample t * hop; the signal is reflected at both ends.
class CqtTransform {
 public:
  CqtTransform(const CqtConfig& cfg, double sample_rate);
  FeatureMap operator()(const Waveform& w) const;

  const CqtConfig& config() const { return cfg_; }
  double center_freq(std::size_t bin) const;
  std::size_t kernel_length(std::size_t bin) const { return kernels_[bin].size(); }
  double quality() const;

 private:
  CqtConfig cfg_;
  double sample_rate_;
  std::vector<std::vector<std::complex<double>>> kernels_;
};

FeatureMap cqt(const Waveform& w, const CqtConfig& cfg = {});

/// Per-bin mean/variance normalization over time, returned as a plain tensor.
Tensor mean_variance_normalize(const FeatureMap& f);

}  // namespace arnet::frontend
