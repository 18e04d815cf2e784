#include "arnet/frontend.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "arnet/error.hpp"

namespace arnet::frontend {

void Waveform::validate() const {
  if (!(sample_rate > 0.0)) throw ShapeError("waveform '" + utt_id + "': sample rate must be positive");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double s = samples[i];
    if (!std::isfinite(s) || std::abs(s) > 1.0) {
      throw ShapeError("waveform '" + utt_id + "': sample " + std::to_string(i) + " outside [-1, 1]");
    }
  }
}

std::string_view to_string(FrontendKind kind) { return kind == FrontendKind::mel ? "mel" : "cqt"; }

FrontendKind frontend_kind_from_string(std::string_view name) {
  if (name == "mel") return FrontendKind::mel;
  if (name == "cqt") return FrontendKind::cqt;
  throw ConfigError("unknown frontend '" + std::string(name) + "' (expected mel or cqt)");
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

Tensor frame_and_window(const Waveform& w, std::size_t frame_len, std::size_t hop) {
  if (frame_len == 0 || hop == 0) throw ShapeError("framing: frame length and hop must be positive");
  if (w.size() < frame_len) {
    throw ShapeError("framing: waveform of " + std::to_string(w.size()) + " samples is shorter than one frame of " +
                     std::to_string(frame_len));
  }
  const std::size_t frames = (w.size() - frame_len) / hop + 1;
  const auto win = hann_window(frame_len);
  Tensor out({frames, frame_len});
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t n = 0; n < frame_len; ++n) out.at(t, n) = w.samples[t * hop + n] * win[n];
  return out;
}

Tensor stft_power(const Tensor& frames) {
  if (frames.rank() != 2) throw ShapeError("stft_power: expected [T x N] frames, got " + frames.shape_string());
  const std::size_t n = frames.dim(1);
  if (!is_power_of_two(n) || n < 2) {
    throw ShapeError("stft_power: frame length " + std::to_string(n) + " is not a power of two");
  }
  const RealFft fft(n);
  Tensor out({frames.dim(0), fft.bins()});
  for (std::size_t t = 0; t < frames.dim(0); ++t) {
    fft.power(frames.data().subspan(t * n, n), out.data().subspan(t * fft.bins(), fft.bins()));
  }
  return out;
}

FilterBank mel_filterbank(std::size_t n_mels, std::size_t n_fft, double sample_rate, double fmin, double fmax) {
  if (n_mels < 2) throw ConfigError("mel filterbank: need at least 2 filters");
  if (n_fft < 2) throw ConfigError("mel filterbank: n_fft must be at least 2");
  if (!(sample_rate > 0.0) || !(fmin >= 0.0) || !(fmin < fmax) || fmax > sample_rate / 2.0) {
    throw ConfigError("mel filterbank: invalid frequency range [" + std::to_string(fmin) + ", " +
                      std::to_string(fmax) + "] at sample rate " + std::to_string(sample_rate));
  }
  const std::size_t bins = n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(fmin);
  const double mel_hi = hz_to_mel(fmax);
  std::vector<double> corners(n_mels + 2);
  for (std::size_t i = 0; i < corners.size(); ++i) {
    corners[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / static_cast<double>(n_mels + 1));
  }
  const double bin_hz = sample_rate / static_cast<double>(n_fft);

  FilterBank bank{Tensor({n_mels, bins}), {}};
  bank.center_freqs.resize(n_mels);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = corners[m];
    const double c = corners[m + 1];
    const double hi = corners[m + 2];
    bank.center_freqs[m] = c;
    double peak = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      const double v = std::max(0.0, std::min((f - lo) / (c - lo), (hi - f) / (hi - c)));
      bank.weights.at(m, k) = v;
      peak = std::max(peak, v);
    }
    if (peak > 0.0) {
      for (std::size_t k = 0; k < bins; ++k) bank.weights.at(m, k) /= peak;
    } else {
      // Triangle narrower than the bin spacing: keep a single unit tap.
      const auto k = std::min(bins - 1, static_cast<std::size_t>(std::lround(c / bin_hz)));
      bank.weights.at(m, k) = 1.0;
    }
  }
  return bank;
}

MelExtractor::MelExtractor(const MelConfig& cfg, double sample_rate)
    : cfg_(cfg),
      sample_rate_(sample_rate),
      fft_len_(next_power_of_two(std::max<std::size_t>(cfg.n_fft, 2))),
      bank_(mel_filterbank(cfg.n_mels, fft_len_, sample_rate, cfg.fmin, cfg.fmax)) {
  if (cfg.hop == 0) throw ConfigError("mel: hop must be positive");
}

FeatureMap MelExtractor::operator()(const Waveform& w) const {
  w.validate();
  if (std::abs(w.sample_rate - sample_rate_) > 1e-9) {
    throw ShapeError("mel: waveform rate " + std::to_string(w.sample_rate) + " differs from extractor rate " +
                     std::to_string(sample_rate_));
  }
  Tensor frames = frame_and_window(w, cfg_.n_fft, cfg_.hop);
  if (fft_len_ != cfg_.n_fft) {
    Tensor padded({frames.dim(0), fft_len_});
    for (std::size_t t = 0; t < frames.dim(0); ++t)
      for (std::size_t n = 0; n < cfg_.n_fft; ++n) padded.at(t, n) = frames.at(t, n);
    frames = std::move(padded);
  }
  const Tensor power = stft_power(frames);
  const std::size_t nb = power.dim(1);
  FeatureMap out{Tensor({power.dim(0), cfg_.n_mels}), FrontendKind::mel, sample_rate_ / static_cast<double>(cfg_.hop)};
  for (std::size_t t = 0; t < power.dim(0); ++t) {
    const double* p = &power[t * nb];
    for (std::size_t m = 0; m < cfg_.n_mels; ++m) {
      const double* wr = &bank_.weights[m * nb];
      double e = 0.0;
      for (std::size_t k = 0; k < nb; ++k) e += wr[k] * p[k];
      out.values.at(t, m) = std::log(std::max(e, kLogFloor));
    }
  }
  return out;
}

FeatureMap log_mel(const Waveform& w, const MelConfig& cfg) { return MelExtractor(cfg, w.sample_rate)(w); }

CqtTransform::CqtTransform(const CqtConfig& cfg, double sample_rate) : cfg_(cfg), sample_rate_(sample_rate) {
  if (cfg.bins_per_octave == 0 || cfg.n_bins == 0 || cfg.hop == 0 || !(cfg.fmin > 0.0)) {
    throw ConfigError("cqt: fmin, bins_per_octave, n_bins and hop must be positive");
  }
  const double fmax = cfg.fmin * std::pow(2.0, static_cast<double>(cfg.n_bins) / static_cast<double>(cfg.bins_per_octave));
  if (fmax > sample_rate / 2.0) {
    throw ConfigError("cqt: top frequency " + std::to_string(fmax) + " Hz exceeds Nyquist " +
                      std::to_string(sample_rate / 2.0) + " Hz");
  }
  const double q = quality();
  kernels_.resize(cfg.n_bins);
  for (std::size_t b = 0; b < cfg.n_bins; ++b) {
    const double f = center_freq(b);
    const auto len = static_cast<std::size_t>(std::ceil(q * sample_rate / f));
    const auto win = hann_window(len);
    double wsum = 0.0;
    for (double v : win) wsum += v;
    auto& k = kernels_[b];
    k.resize(len);
    for (std::size_t n = 0; n < len; ++n) {
      const double phase = -2.0 * std::numbers::pi * f * static_cast<double>(n) / sample_rate;
      k[n] = std::polar(win[n] / wsum, phase);
    }
  }
}

double CqtTransform::quality() const {
  return 1.0 / (std::pow(2.0, 1.0 / static_cast<double>(cfg_.bins_per_octave)) - 1.0);
}

double CqtTransform::center_freq(std::size_t bin) const {
  return cfg_.fmin * std::pow(2.0, static_cast<double>(bin) / static_cast<double>(cfg_.bins_per_octave));
}

namespace {

std::size_t reflect_index(std::ptrdiff_t i, std::size_t len) {
  if (len == 1) return 0;
  const auto n = static_cast<std::ptrdiff_t>(len);
  const std::ptrdiff_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return static_cast<std::size_t>(i < n ? i : period - i);
}

}  // namespace

FeatureMap CqtTransform::operator()(const Waveform& w) const {
  w.validate();
  if (w.samples.empty()) throw ShapeError("cqt: empty waveform");
  if (std::abs(w.sample_rate - sample_rate_) > 1e-9) {
    throw ShapeError("cqt: waveform rate " + std::to_string(w.sample_rate) + " differs from transform rate " +
                     std::to_string(sample_rate_));
  }
  const std::size_t len = w.size();
  const std::size_t frames = len / cfg_.hop + 1;
  FeatureMap out{Tensor({frames, cfg_.n_bins}), FrontendKind::cqt, sample_rate_ / static_cast<double>(cfg_.hop)};
  for (std::size_t t = 0; t < frames; ++t) {
    const auto centre = static_cast<std::ptrdiff_t>(t * cfg_.hop);
    for (std::size_t b = 0; b < cfg_.n_bins; ++b) {
      const auto& k = kernels_[b];
      const std::ptrdiff_t start = centre - static_cast<std::ptrdiff_t>(k.size() / 2);
      double re = 0.0, im = 0.0;
      const bool inside = start >= 0 && start + static_cast<std::ptrdiff_t>(k.size()) <= static_cast<std::ptrdiff_t>(len);
      for (std::size_t n = 0; n < k.size(); ++n) {
        const std::ptrdiff_t idx = start + static_cast<std::ptrdiff_t>(n);
        const double s = inside ? w.samples[static_cast<std::size_t>(idx)] : w.samples[reflect_index(idx, len)];
        re += s * k[n].real();
        im += s * k[n].imag();
      }
      out.values.at(t, b) = std::log(std::max(re * re + im * im, kLogFloor));
    }
  }
  return out;
}

FeatureMap cqt(const Waveform& w, const CqtConfig& cfg) { return CqtTransform(cfg, w.sample_rate)(w); }

Tensor mean_variance_normalize(const FeatureMap& f) {
  const std::size_t t_len = f.frames();
  const std::size_t nb = f.bins();
  Tensor out(f.values.shape());
  for (std::size_t b = 0; b < nb; ++b) {
    double mean = 0.0;
    for (std::size_t t = 0; t < t_len; ++t) mean += f.values.at(t, b);
    mean /= static_cast<double>(t_len);
    double var = 0.0;
    for (std::size_t t = 0; t < t_len; ++t) var += (f.values.at(t, b) - mean) * (f.values.at(t, b) - mean);
    var /= static_cast<double>(t_len);
    const double inv = 1.0 / std::sqrt(var + kLogFloor);
    for (std::size_t t = 0; t < t_len; ++t) out.at(t, b) = (f.values.at(t, b) - mean) * inv;
  }
  return out;
}

}  // namespace arnet::frontend
