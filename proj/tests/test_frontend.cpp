#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "arnet/error.hpp"
#include "arnet/fft.hpp"
#include "arnet/frontend.hpp"
#include "arnet/rng.hpp"

using namespace arnet;
using namespace arnet::frontend;

namespace {

Waveform tone(double freq, double amp = 1.0, std::size_t n = 16000, double sr = 16000.0) {
  Waveform w;
  w.sample_rate = sr;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) w.samples[i] = amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / sr);
  return w;
}

std::size_t argmax_row(const Tensor& m, std::size_t t) {
  std::size_t best = 0;
  for (std::size_t b = 1; b < m.dim(1); ++b)
    if (m.at(t, b) > m.at(t, best)) best = b;
  return best;
}

// Most common per-frame argmax over the interior frames.
std::size_t dominant_bin(const FeatureMap& f) {
  std::vector<std::size_t> votes(f.bins());
  for (std::size_t t = 2; t + 2 < f.frames(); ++t) ++votes[argmax_row(f.values, t)];
  return static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

std::size_t nearest_center(const std::vector<double>& centers, double f) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < centers.size(); ++i)
    if (std::abs(centers[i] - f) < std::abs(centers[best] - f)) best = i;
  return best;
}

}  // namespace

TEST_CASE("waveform validation") {
  Waveform w;
  w.samples = {0.0, 1.0, -1.0};
  CHECK_NOTHROW(w.validate());
  w.samples[1] = 1.5;
  CHECK_THROWS_AS(w.validate(), ShapeError);
  w.samples[1] = std::nan("");
  CHECK_THROWS_AS(w.validate(), ShapeError);
  w.samples[1] = 0.0;
  w.sample_rate = 0.0;
  CHECK_THROWS_AS(w.validate(), ShapeError);
}

TEST_CASE("framing counts and window") {
  CHECK(frame_and_window(tone(100.0, 0.5, 512), 512, 160).dim(0) == 1);
  CHECK(frame_and_window(tone(100.0, 0.5, 832), 512, 160).dim(0) == 3);
  CHECK_THROWS_AS(frame_and_window(tone(100.0, 0.5, 511), 512, 160), ShapeError);
  CHECK_THROWS_AS(frame_and_window(tone(100.0, 0.5, 600), 512, 0), ShapeError);

  Waveform ones;
  ones.samples.assign(700, 1.0);
  const Tensor f = frame_and_window(ones, 512, 160);
  const auto hann = hann_window(512);
  CHECK(hann[0] == 0.0);
  CHECK(hann[256] == doctest::Approx(1.0));
  for (std::size_t t = 0; t < f.dim(0); ++t)
    for (std::size_t i = 0; i < 512; ++i) CHECK(f.at(t, i) == hann[i]);
}

TEST_CASE("stft power examples") {
  CHECK_THROWS_AS(stft_power(Tensor({1, 48})), ShapeError);
  const Tensor silent = stft_power(Tensor({2, 64}));
  for (double v : silent.data()) CHECK(v == 0.0);

  Tensor c({1, 64});
  for (std::size_t n = 0; n < 64; ++n) c[n] = std::cos(2.0 * std::numbers::pi * 8.0 * static_cast<double>(n) / 64.0);
  const Tensor p = stft_power(c);
  CHECK(p.dim(1) == 33);
  CHECK(p[8] == doctest::Approx(1024.0).epsilon(1e-12));
  for (std::size_t k = 0; k < 33; ++k)
    if (k != 8) CHECK(p[k] < 1e-18);
}

TEST_CASE("stft power satisfies Parseval on random frames") {
  Rng rng(17);
  for (std::size_t n : {2u, 4u, 16u, 64u, 512u, 1024u}) {
    for (int trial = 0; trial < 40; ++trial) {
      Tensor f({1, n});
      double energy = 0.0;
      for (auto& v : f.data()) {
        v = rng.uniform(-1.0, 1.0);
        energy += v * v;
      }
      const Tensor p = stft_power(f);
      double total = p[0] + p[n / 2];
      for (std::size_t k = 1; k < n / 2; ++k) total += 2.0 * p[k];
      CHECK(std::abs(total - static_cast<double>(n) * energy) <= 1e-9 * static_cast<double>(n) * energy);
    }
  }
}

TEST_CASE("real fft matches the direct DFT") {
  Rng rng(23);
  std::vector<double> x(32);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  RealFft fft(32);
  std::vector<std::complex<double>> out(fft.bins());
  fft.transform(x, out);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::complex<double> ref = 0.0;
    for (std::size_t n = 0; n < 32; ++n) ref += x[n] * std::polar(1.0, -2.0 * std::numbers::pi * double(k * n) / 32.0);
    CHECK(std::abs(out[k] - ref) < 1e-12);
  }
  CHECK(next_power_of_two(400) == 512);
  CHECK(is_power_of_two(512));
  CHECK_FALSE(is_power_of_two(400));
}

TEST_CASE("mel scale") {
  CHECK(hz_to_mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)).epsilon(1e-14));
  CHECK(hz_to_mel(700.0) == doctest::Approx(781.17).epsilon(1e-5));
  for (double f : {0.0, 20.0, 440.0, 8000.0}) CHECK(mel_to_hz(hz_to_mel(f)) == doctest::Approx(f).epsilon(1e-12));
}

TEST_CASE("mel filterbank shape, peaks, unimodality, coverage") {
  const auto bank = mel_filterbank(80, 512, 16000.0, 20.0, 8000.0);
  REQUIRE(bank.weights.dim(0) == 80);
  REQUIRE(bank.weights.dim(1) == 257);
  for (std::size_t i = 0; i < 80; ++i) {
    double mx = 0.0;
    std::size_t peak = 0;
    for (std::size_t k = 0; k < 257; ++k) {
      CHECK(bank.weights.at(i, k) >= 0.0);
      if (bank.weights.at(i, k) > mx) {
        mx = bank.weights.at(i, k);
        peak = k;
      }
    }
    CHECK(mx == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t k = 1; k <= peak; ++k) CHECK(bank.weights.at(i, k) >= bank.weights.at(i, k - 1));
    for (std::size_t k = peak + 1; k < 257; ++k) CHECK(bank.weights.at(i, k) <= bank.weights.at(i, k - 1));
    CHECK(bank.center_freqs[i] > 20.0);
    CHECK(bank.center_freqs[i] < 8000.0);
    if (i > 0) CHECK(bank.center_freqs[i] > bank.center_freqs[i - 1]);
  }
  for (std::size_t k = 0; k < 257; ++k) {
    const double f = 16000.0 * static_cast<double>(k) / 512.0;
    if (f <= 20.0 || f >= 8000.0) continue;
    double col = 0.0;
    for (std::size_t i = 0; i < 80; ++i) col += bank.weights.at(i, k);
    CHECK(col > 0.0);
  }
  CHECK_THROWS_AS(mel_filterbank(80, 512, 16000.0, 4000.0, 3000.0), ConfigError);
  CHECK_THROWS_AS(mel_filterbank(80, 512, 16000.0, 20.0, 9000.0), ConfigError);
  CHECK_THROWS_AS(mel_filterbank(1, 512, 16000.0, 20.0, 8000.0), ConfigError);
}

TEST_CASE("log mel examples") {
  Waveform zero;
  zero.samples.assign(16000, 0.0);
  const FeatureMap z = log_mel(zero);
  CHECK(z.frames() == 97);
  CHECK(z.bins() == 80);
  for (double v : z.values.data()) CHECK(v == doctest::Approx(std::log(1e-10)).epsilon(1e-14));
  CHECK(std::log(1e-10) == doctest::Approx(-23.026).epsilon(1e-4));

  const MelExtractor mel(MelConfig{}, 16000.0);
  const FeatureMap k = mel(tone(1000.0));
  const std::size_t expect = nearest_center(mel.filterbank().center_freqs, 1000.0);
  for (std::size_t t = 0; t < k.frames(); ++t) CHECK(argmax_row(k.values, t) == expect);

  const FeatureMap a = log_mel(tone(1000.0, 0.4));
  const FeatureMap b = log_mel(tone(1000.0, 0.8));
  for (std::size_t i = 0; i < a.values.size(); ++i)
    if (a.values[i] > std::log(1e-10) + 1.0) CHECK(b.values[i] - a.values[i] == doctest::Approx(std::log(4.0)).epsilon(1e-9));
}

TEST_CASE("log mel tone sweep lands on the nearest filter") {
  const MelExtractor mel(MelConfig{}, 16000.0);
  const auto& centers = mel.filterbank().center_freqs;
  int tested = 0;
  // Two tones per filter pair, each a quarter of the spacing away from a centre.
  for (std::size_t i = 20; i + 1 < centers.size(); i += 5) {
    for (double frac : {0.25, 0.75}) {
      const double f = centers[i] + frac * (centers[i + 1] - centers[i]);
      INFO("tone ", f, " Hz");
      CHECK(dominant_bin(mel(tone(f))) == nearest_center(centers, f));
      ++tested;
    }
  }
  CHECK(tested >= 20);
}

TEST_CASE("cqt geometry") {
  const CqtTransform cqt_tf(CqtConfig{}, 16000.0);
  CHECK(cqt_tf.quality() == doctest::Approx(1.0 / (std::pow(2.0, 1.0 / 12.0) - 1.0)).epsilon(1e-14));
  CHECK(cqt_tf.center_freq(0) == doctest::Approx(32.703));
  CHECK(cqt_tf.center_freq(12) == doctest::Approx(65.406));
  for (std::size_t b : {0u, 30u, 83u})
    CHECK(cqt_tf.kernel_length(b) ==
          static_cast<std::size_t>(std::ceil(cqt_tf.quality() * 16000.0 / cqt_tf.center_freq(b))));
  CHECK_THROWS_AS(CqtTransform(CqtConfig{32.703, 12, 96, 160}, 16000.0), ConfigError);
}

TEST_CASE("cqt examples") {
  const CqtTransform cqt_tf(CqtConfig{}, 16000.0);
  const FeatureMap a = cqt_tf(tone(440.0));
  CHECK(a.bins() == 84);
  CHECK(a.frames() == 16000 / 160 + 1);
  CHECK(std::lround(12.0 * std::log2(440.0 / 32.703)) == 45);
  CHECK(dominant_bin(a) == 45);
  for (std::size_t t = 2; t + 2 < a.frames(); ++t) CHECK(argmax_row(a.values, t) == 45);
  CHECK(dominant_bin(cqt_tf(tone(880.0))) == 57);

  Waveform zero;
  zero.samples.assign(4000, 0.0);
  const FeatureMap silent = cqt_tf(zero);
  for (double v : silent.values.data()) CHECK(v == std::log(1e-10));
}

TEST_CASE("cqt tone sweep and octave shifts") {
  const CqtTransform cqt_tf(CqtConfig{}, 16000.0);
  int tested = 0;
  for (std::size_t b = 24; b < 72; b += 2) {
    const double f = cqt_tf.center_freq(b) * std::pow(2.0, 0.2 / 12.0);
    INFO("tone ", f, " Hz");
    const std::size_t got = dominant_bin(cqt_tf(tone(f, 0.9, 8000)));
    CHECK(got == static_cast<std::size_t>(std::lround(12.0 * std::log2(f / 32.703))));
    if (b + 12 < 84) CHECK(dominant_bin(cqt_tf(tone(2.0 * f, 0.9, 8000))) == got + 12);
    ++tested;
  }
  CHECK(tested >= 20);
}

TEST_CASE("outputs are finite, floored and deterministic") {
  Rng rng(31);
  Waveform w;
  w.samples.resize(8000);
  for (auto& v : w.samples) v = rng.uniform(-0.5, 0.5);
  for (std::size_t i = 0; i < 2000; ++i) w.samples[i] = 0.0;
  const FeatureMap m1 = log_mel(w), m2 = log_mel(w);
  const FeatureMap c1 = cqt(w), c2 = cqt(w);
  CHECK(m1.values.values() == m2.values.values());
  CHECK(c1.values.values() == c2.values.values());
  for (const FeatureMap* f : {&m1, &c1}) {
    CHECK(f->values.all_finite());
    for (double v : f->values.data()) CHECK(v >= std::log(1e-10));
  }
  CHECK(m1.frame_rate == doctest::Approx(100.0));
}

TEST_CASE("mean variance normalization") {
  const FeatureMap f = cqt(tone(300.0, 0.5, 4000));
  const Tensor n = mean_variance_normalize(f);
  for (std::size_t b = 0; b < n.dim(1); ++b) {
    double m = 0.0;
    for (std::size_t t = 0; t < n.dim(0); ++t) m += n.at(t, b);
    CHECK(std::abs(m / static_cast<double>(n.dim(0))) < 1e-9);
  }
}

TEST_CASE("frontend kind names") {
  CHECK(to_string(FrontendKind::mel) == "mel");
  CHECK(frontend_kind_from_string("cqt") == FrontendKind::cqt);
  CHECK_THROWS_AS(frontend_kind_from_string("mfcc"), ConfigError);
}
