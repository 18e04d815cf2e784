#include "arnet/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "arnet/error.hpp"

namespace arnet {

namespace {

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

}  // namespace

frontend::Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open WAV file " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = path.string() + ": ";
  if (bytes.size() < 12 || std::string(bytes.begin(), bytes.begin() + 4) != "RIFF" ||
      std::string(bytes.begin() + 8, bytes.begin() + 12) != "WAVE") {
    throw FormatError(where + "not a RIFF/WAVE file");
  }
  bool have_fmt = false;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.begin() + static_cast<std::ptrdiff_t>(pos + 4));
    const std::uint32_t size = le32(&bytes[pos + 4]);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      if (size < 16 || body + 16 > bytes.size()) throw FormatError(where + "truncated fmt chunk");
      const std::uint16_t format = le16(&bytes[body]);
      const std::uint16_t channels = le16(&bytes[body + 2]);
      rate = le32(&bytes[body + 4]);
      const std::uint16_t bits = le16(&bytes[body + 14]);
      if (format != 1) throw FormatError(where + "unsupported codec " + std::to_string(format) + " (only PCM is read)");
      if (channels != 1) throw FormatError(where + std::to_string(channels) + " channels (only mono is read)");
      if (bits != 16) throw FormatError(where + std::to_string(bits) + "-bit samples (only 16-bit PCM is read)");
      if (rate == 0) throw FormatError(where + "sample rate is zero");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw FormatError(where + "data chunk precedes fmt chunk");
      if (body + size > bytes.size()) throw FormatError(where + "truncated data chunk");
      if (size % 2 != 0) throw FormatError(where + "data chunk holds a partial sample");
      frontend::Waveform w;
      w.sample_rate = static_cast<double>(rate);
      w.utt_id = path.stem().string();
      w.samples.resize(size / 2);
      for (std::size_t i = 0; i < w.samples.size(); ++i) {
        const auto s = static_cast<std::int16_t>(le16(&bytes[body + 2 * i]));
        w.samples[i] = static_cast<double>(s) / 32768.0;
      }
      return w;
    }
    pos = body + size + (size & 1u);
  }
  throw FormatError(where + (have_fmt ? "missing data chunk" : "missing fmt chunk"));
}

void write_wav(const std::filesystem::path& path, const frontend::Waveform& w) {
  w.validate();
  const double rounded_rate = std::round(w.sample_rate);
  if (rounded_rate != w.sample_rate || rounded_rate > 4294967295.0) {
    throw FormatError("WAV sample rate must be a 32-bit integer, got " + std::to_string(w.sample_rate));
  }
  const auto rate = static_cast<std::uint32_t>(rounded_rate);
  const auto data_bytes = static_cast<std::uint32_t>(2 * w.samples.size());
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, rate);
  put32(out, rate * 2);
  put16(out, 2);
  put16(out, 16);
  out += "data";
  put32(out, data_bytes);
  for (double x : w.samples) {
    const double s = std::clamp(std::round(x * 32768.0), -32768.0, 32767.0);
    put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(s)));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot write WAV file " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw FormatError("write failed for " + path.string());
}

}  // namespace arnet
