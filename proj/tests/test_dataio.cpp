#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "arnet/error.hpp"
#include "arnet/formats.hpp"
#include "arnet/protocol.hpp"
#include "arnet/synth.hpp"
#include "arnet/wav.hpp"

using namespace arnet;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>(v >> 8));
}

// Hand-assembled RIFF/WAVE bytes.
std::string wav_bytes(const std::vector<std::uint16_t>& samples, std::uint16_t format = 1, std::uint16_t channels = 1,
                      std::uint16_t bits = 16, bool extra_chunk = false) {
  std::string body = "WAVE";
  if (extra_chunk) {
    body += "LIST";
    put_u32(body, 4);
    body += "abcd";
  }
  body += "fmt ";
  put_u32(body, 16);
  put_u16(body, format);
  put_u16(body, channels);
  put_u32(body, 16000);
  put_u32(body, 16000u * channels * bits / 8);
  put_u16(body, static_cast<std::uint16_t>(channels * bits / 8));
  put_u16(body, bits);
  body += "data";
  put_u32(body, static_cast<std::uint32_t>(samples.size() * 2));
  for (auto s : samples) put_u16(body, s);
  std::string out = "RIFF";
  put_u32(out, static_cast<std::uint32_t>(body.size()));
  return out + body;
}

}  // namespace

TEST_CASE("wav sample mapping") {
  TempDir dir("arnet_wav_map");
  const auto p = dir.path / "utt01.wav";
  write_file(p, wav_bytes({0x7FFF, 0x0000, 0x8000, 0x4000}));
  const auto w = read_wav(p);
  REQUIRE(w.size() == 4);
  CHECK(w.samples[0] == 0.999969482421875);
  CHECK(w.samples[1] == 0.0);
  CHECK(w.samples[2] == -1.0);
  CHECK(w.samples[3] == 0.5);
  CHECK(w.sample_rate == 16000.0);
  CHECK(w.utt_id == "utt01");

  write_file(p, wav_bytes({0x0001, 0xFFFF}, 1, 1, 16, true));
  CHECK(read_wav(p).samples == std::vector<double>{1.0 / 32768.0, -1.0 / 32768.0});
}

TEST_CASE("wav rejects other codecs and truncation") {
  TempDir dir("arnet_wav_bad");
  const auto p = dir.path / "x.wav";
  auto expect_format_error = [&](const std::string& bytes, const std::string& needle) {
    write_file(p, bytes);
    try {
      read_wav(p);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, std::string(e.what()));
    }
  };
  expect_format_error(wav_bytes({1, 2}, 3), "codec");
  expect_format_error(wav_bytes({1, 2}, 1, 2), "channel");
  expect_format_error(wav_bytes({1, 2}, 1, 1, 8), "bit");
  const std::string good = wav_bytes({1, 2, 3, 4});
  expect_format_error(good.substr(0, good.size() - 3), "trunc");
  expect_format_error("RIFX" + good.substr(4), "RIFF");
  expect_format_error(good.substr(0, 10), "");
  CHECK_THROWS_AS(read_wav(dir.path / "missing.wav"), FormatError);
}

TEST_CASE("wav write and read round trip") {
  TempDir dir("arnet_wav_rt");
  frontend::Waveform w;
  w.samples = {0.0, 0.25, -0.5, 0.999, -1.0, 1.0, 1e-6};
  write_wav(dir.path / "rt.wav", w);
  const auto back = read_wav(dir.path / "rt.wav");
  REQUIRE(back.size() == w.size());
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(std::abs(back.samples[i] - w.samples[i]) <= 1.0 / 32768.0);
  CHECK(back.samples[1] == 0.25);
  CHECK(back.samples[5] == 0.999969482421875);
}

TEST_CASE("protocol examples") {
  std::istringstream in("LA_0079 LA_T_1138215 - - bonafide\nLA_0079 LA_T_1000137 - A01 spoof\n\n");
  const auto recs = parse_protocol(in);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].speaker_id == "LA_0079");
  CHECK(recs[0].utt_id == "LA_T_1138215");
  CHECK(recs[0].attack_id == "-");
  CHECK(recs[0].key == Label::bonafide);
  CHECK(recs[1].attack_id == "A01");
  CHECK(recs[1].key == Label::spoof);

  std::istringstream empty("");
  CHECK(parse_protocol(empty).empty());

  std::ostringstream out;
  write_protocol(out, recs);
  std::istringstream again(out.str());
  const auto rt = parse_protocol(again);
  CHECK(rt[1].utt_id == recs[1].utt_id);
  CHECK(rt[1].attack_id == "A01");
}

TEST_CASE("protocol errors carry the line number") {
  auto error_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      parse_protocol(in, "p.txt");
    } catch (const FormatError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(error_of("a b - - bonafide\na c - spoof\n").find("p.txt:2") != std::string::npos);
  CHECK(error_of("a b - - Bonafide\n").find("p.txt:1") != std::string::npos);
  CHECK(error_of("a b - - bonafide\na b - - spoof\n").find("p.txt:2") != std::string::npos);
  CHECK(error_of("a b - - bonafide extra\n").find("p.txt:1") != std::string::npos);
}

TEST_CASE("dataset directory loading") {
  TempDir dir("arnet_dataset");
  SynthSpec spec;
  spec.n_per_class = 2;
  spec.duration_s = 0.05;
  const auto data = synth_dataset(spec);
  for (const auto& d : data) write_wav(dir.path / (d.wave.utt_id + ".wav"), d.wave);
  write_protocol(dir.path / "protocol.txt", synth_protocol(spec, data));
  const auto loaded = load_dataset(dir.path);
  REQUIRE(loaded.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(loaded[i].label == data[i].label);
    CHECK(loaded[i].wave.utt_id == data[i].wave.utt_id);
    for (std::size_t j = 0; j < data[i].wave.size(); ++j)
      CHECK(std::abs(loaded[i].wave.samples[j] - data[i].wave.samples[j]) <= 1.0 / 32768.0);
  }
  fs::remove(dir.path / (data[3].wave.utt_id + ".wav"));
  CHECK_THROWS_AS(load_dataset(dir.path), DataError);
  CHECK_THROWS_AS(load_dataset(dir.path / "nope"), DataError);
}

TEST_CASE("synthetic dataset properties") {
  SynthSpec spec;
  spec.seed = 12;
  const auto a = synth_dataset(spec);
  REQUIRE(a.size() == 200);
  std::size_t bona = 0;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < a.size(); ++i) {
    bona += a[i].label == Label::bonafide;
    CHECK(a[i].label == (i % 2 == 0 ? Label::bonafide : Label::spoof));
    CHECK(ids.insert(a[i].wave.utt_id).second);
    CHECK(a[i].wave.size() == 8000);
    double peak = 0.0;
    for (double v : a[i].wave.samples) peak = std::max(peak, std::abs(v));
    CHECK(peak <= 1.0);
    CHECK(peak == doctest::Approx(0.9).epsilon(1e-12));
    CHECK_NOTHROW(a[i].wave.validate());
  }
  CHECK(bona == 100);

  const auto b = synth_dataset(spec);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].wave.samples == b[i].wave.samples);
  spec.seed = 13;
  CHECK(synth_dataset(spec)[0].wave.samples != a[0].wave.samples);

  SynthSpec prefix = spec;
  prefix.n_per_class = 3;
  const auto small = synth_dataset(prefix);
  const auto big = synth_dataset(spec);
  for (std::size_t i = 0; i < small.size(); ++i) CHECK(small[i].wave.samples == big[i].wave.samples);

  for (auto art : {SpoofArtifact::amp_quantize, SpoofArtifact::hiss}) {
    prefix.artifact = art;
    for (const auto& d : synth_dataset(prefix))
      for (double v : d.wave.samples) CHECK(std::abs(v) <= 1.0);
  }
  const auto proto = synth_protocol(prefix, small);
  CHECK(proto[1].attack_id == "hiss");
  CHECK(proto[0].attack_id == "-");
  CHECK(proto[0].key == Label::bonafide);

  SynthSpec bad;
  bad.n_per_class = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.n_per_class = 1;
  bad.duration_s = 0.01;
  CHECK_THROWS_AS(bad.validate(512), ConfigError);
  CHECK(spoof_artifact_from_string("phase_flatten") == SpoofArtifact::phase_flatten);
  CHECK_THROWS_AS(spoof_artifact_from_string("reverb"), ConfigError);
}

TEST_CASE("feature file header and round trip") {
  Tensor t({2, 3}, {1.0, -2.5, 0.1, 3.0, 1e-3, -7.0});
  const std::string bytes = encode_features(t);
  const unsigned char header[] = {0x41, 0x52, 0x4E, 0x46, 1, 0, 0, 0, 2, 0, 0, 0, 3, 0, 0, 0};
  REQUIRE(bytes.size() == 16 + 6 * 4);
  for (std::size_t i = 0; i < 16; ++i) CHECK(static_cast<unsigned char>(bytes[i]) == header[i]);
  const Tensor back = decode_features(bytes);
  CHECK(back.shape() == Shape{2, 3});
  for (std::size_t i = 0; i < 6; ++i) CHECK(back[i] == static_cast<double>(static_cast<float>(t[i])));

  CHECK_THROWS_AS(decode_features(bytes.substr(0, bytes.size() - 1)), FormatError);
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_features(bad_magic), FormatError);
  std::string bad_version = bytes;
  bad_version[4] = 2;
  CHECK_THROWS_AS(decode_features(bad_version), FormatError);
  CHECK_THROWS_AS(decode_features(bytes + "xxxx"), FormatError);

  TempDir dir("arnet_arnf");
  write_features(dir.path / "f.arnf", t);
  CHECK(read_features(dir.path / "f.arnf").values() == back.values());
}

TEST_CASE("scores format and round trip") {
  metrics::ScoreSet s{{"a", 0.5, Label::bonafide}, {"b", -12.3456789, Label::spoof}};
  CHECK(format_scores({{"a", 0.5, Label::bonafide}}) == "a 0.500000\n");
  CHECK(format_scores({}).empty());
  TempDir dir("arnet_scores");
  write_scores(dir.path / "s.txt", s);
  const auto back = read_scores(dir.path / "s.txt");
  REQUIRE(back.size() == 2);
  CHECK(back[0].first == "a");
  CHECK(back[1].first == "b");
  CHECK(std::abs(back[1].second - s[1].score) <= 1e-6);
  write_file(dir.path / "e.txt", "");
  CHECK(read_scores(dir.path / "e.txt").empty());
  write_file(dir.path / "bad.txt", "a notanumber\n");
  CHECK_THROWS_AS(read_scores(dir.path / "bad.txt"), FormatError);
}
