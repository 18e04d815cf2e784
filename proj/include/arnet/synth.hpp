#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "arnet/labels.hpp"
#include "arnet/protocol.hpp"

namespace arnet {

enum class SpoofArtifact { phase_flatten, amp_quantize, hiss };

std::string_view to_string(SpoofArtifact a);
SpoofArtifact spoof_artifact_from_string(std::string_view name);

/// Harmonic "voices" with pink noise. Bona fide utterances use random
/// harmonic phases; spoofs share the construction and add one artifact:
/// all phases zero, samples quantized to 3 bits, or a 4-8 kHz hiss band.
struct SynthSpec {
  std::uint64_t seed = 0;
  std::size_t n_per_class = 100;
  double duration_s = 0.5;
  double sample_rate = 16000.0;
  SpoofArtifact artifact = SpoofArtifact::phase_flatten;
  /// Pink-noise RMS relative to the harmonic signal's RMS.
  double noise_level = 0.02;

  std::size_t samples() const;
  /// Throws ConfigError unless n_per_class >= 1 and samples() >= min_samples.
  void validate(std::size_t min_samples = 512) const;
};

/// 2 * n_per_class utterances alternating bonafide, spoof. Utterance i draws
/// from its own stream mix_seed(seed, i), so it does not depend on the others.
/// Every waveform is peak-normalized to 0.9.
std::vector<LabeledWave> synth_dataset(const SynthSpec& spec);

/// Protocol records matching synth_dataset's utt_ids and labels.
std::vector<TrialRecord> synth_protocol(const SynthSpec& spec, const std::vector<LabeledWave>& data);

}  // namespace arnet
