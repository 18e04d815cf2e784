#include "arnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include "arnet/error.hpp"
#include "arnet/rng.hpp"

namespace arnet {

std::string_view to_string(SpoofArtifact a) {
  switch (a) {
    case SpoofArtifact::phase_flatten: return "phase_flatten";
    case SpoofArtifact::amp_quantize: return "amp_quantize";
    case SpoofArtifact::hiss: return "hiss";
  }
  return "?";
}

SpoofArtifact spoof_artifact_from_string(std::string_view name) {
  if (name == "phase_flatten") return SpoofArtifact::phase_flatten;
  if (name == "amp_quantize") return SpoofArtifact::amp_quantize;
  if (name == "hiss") return SpoofArtifact::hiss;
  throw ConfigError("unknown spoof artifact '" + std::string(name) + "' (expected phase_flatten, amp_quantize or hiss)");
}

std::size_t SynthSpec::samples() const {
  return static_cast<std::size_t>(std::floor(duration_s * sample_rate));
}

void SynthSpec::validate(std::size_t min_samples) const {
  if (n_per_class == 0) throw ConfigError("synth n_per_class must be at least 1");
  if (!(sample_rate > 0.0) || !(duration_s > 0.0)) throw ConfigError("synth duration and sample rate must be positive");
  if (samples() < min_samples) {
    throw ConfigError("synth utterances of " + std::to_string(samples()) + " samples are shorter than " +
                      std::to_string(min_samples));
  }
  if (!(noise_level >= 0.0)) throw ConfigError("synth noise_level must be non-negative");
}

namespace {

double rms(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

// Paul Kellet's economy pink filter over white Gaussian noise.
std::vector<double> pink_noise(Rng& rng, std::size_t n) {
  std::vector<double> out(n);
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = rng.normal();
    b0 = 0.99765 * b0 + w * 0.0990460;
    b1 = 0.96300 * b1 + w * 0.2965164;
    b2 = 0.57000 * b2 + w * 1.0526913;
    out[i] = b0 + b1 + b2 + w * 0.1848;
  }
  return out;
}

// White noise through a second difference, which boosts the top octave.
std::vector<double> hiss_noise(Rng& rng, std::size_t n) {
  std::vector<double> w(n + 2);
  for (auto& v : w) v = rng.normal();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = w[i + 2] - 2.0 * w[i + 1] + w[i];
  return out;
}

void add_scaled(std::vector<double>& x, const std::vector<double>& noise, double target_rms) {
  const double r = rms(noise);
  if (r == 0.0) return;
  const double k = target_rms / r;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += k * noise[i];
}

std::vector<double> utterance(const SynthSpec& spec, std::uint64_t index, bool spoof) {
  Rng rng(mix_seed(spec.seed, index));
  const std::size_t n = spec.samples();
  const double f0 = rng.uniform(90.0, 255.0);
  const auto harmonics = static_cast<std::size_t>(rng.uniform_int(4, 8));
  std::vector<double> amp(harmonics);
  std::vector<double> phase(harmonics);
  for (auto& a : amp) a = rng.uniform(0.2, 1.0);
  for (auto& p : phase) p = rng.uniform(0.0, 2.0 * std::numbers::pi);
  if (spoof && spec.artifact == SpoofArtifact::phase_flatten) std::fill(phase.begin(), phase.end(), 0.0);

  std::vector<double> x(n, 0.0);
  const double nyquist = spec.sample_rate / 2.0;
  for (std::size_t h = 0; h < harmonics; ++h) {
    const double f = f0 * static_cast<double>(h + 1);
    if (f >= nyquist) break;
    const double w = 2.0 * std::numbers::pi * f / spec.sample_rate;
    for (std::size_t i = 0; i < n; ++i) x[i] += amp[h] * std::cos(w * static_cast<double>(i) + phase[h]);
  }
  const double signal_rms = rms(x);
  add_scaled(x, pink_noise(rng, n), spec.noise_level * signal_rms);
  if (spoof && spec.artifact == SpoofArtifact::hiss) add_scaled(x, hiss_noise(rng, n), 0.05 * signal_rms);

  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    for (auto& v : x) v *= 0.9 / peak;
  }
  if (spoof && spec.artifact == SpoofArtifact::amp_quantize) {
    // 3 bits: 8 levels spanning [-1, 1) in steps of 1/4.
    for (auto& v : x) v = std::clamp(std::floor(v * 4.0) / 4.0 + 0.125, -1.0, 1.0);
  }
  return x;
}

}  // namespace

std::vector<LabeledWave> synth_dataset(const SynthSpec& spec) {
  spec.validate(1);
  std::vector<LabeledWave> out;
  out.reserve(2 * spec.n_per_class);
  for (std::size_t k = 0; k < spec.n_per_class; ++k) {
    for (int spoof = 0; spoof < 2; ++spoof) {
      char id[48];
      std::snprintf(id, sizeof id, "%s_%05zu", spoof ? "spoof" : "bona", k);
      LabeledWave item;
      item.wave.samples = utterance(spec, 2 * k + static_cast<std::uint64_t>(spoof), spoof != 0);
      item.wave.sample_rate = spec.sample_rate;
      item.wave.utt_id = id;
      item.label = spoof ? Label::spoof : Label::bonafide;
      out.push_back(std::move(item));
    }
  }
  return out;
}

std::vector<TrialRecord> synth_protocol(const SynthSpec& spec, const std::vector<LabeledWave>& data) {
  std::vector<TrialRecord> out;
  out.reserve(data.size());
  for (const auto& item : data) {
    const bool spoof = item.label == Label::spoof;
    out.push_back({"SYNTH", item.wave.utt_id, "-", spoof ? std::string(to_string(spec.artifact)) : "-", item.label});
  }
  return out;
}

}  // namespace arnet
