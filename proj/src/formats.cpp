#include "arnet/formats.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "arnet/error.hpp"

namespace arnet {

namespace {

void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get32(const std::string& b, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[pos + static_cast<std::size_t>(i)]);
  return v;
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

std::string encode_features(const Tensor& values) {
  if (values.rank() != 2) throw ShapeError("features must be [rows x cols], got " + values.shape_string());
  if (!values.all_finite()) throw FormatError("features hold non-finite values");
  std::string out = "ARNF";
  put32(out, 1);
  put32(out, static_cast<std::uint32_t>(values.dim(0)));
  put32(out, static_cast<std::uint32_t>(values.dim(1)));
  for (double v : values.data()) put32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

Tensor decode_features(const std::string& bytes, const std::string& source) {
  const std::string where = source + ": ";
  if (bytes.size() < 16) throw FormatError(where + "truncated ARNF header");
  if (bytes.compare(0, 4, "ARNF") != 0) throw FormatError(where + "bad magic (expected ARNF)");
  const std::uint32_t version = get32(bytes, 4);
  if (version != 1) throw FormatError(where + "unsupported ARNF version " + std::to_string(version));
  const std::uint64_t rows = get32(bytes, 8);
  const std::uint64_t cols = get32(bytes, 12);
  if (rows == 0 || cols == 0) throw FormatError(where + "empty feature matrix");
  const std::uint64_t expected = 16 + 4 * rows * cols;
  if (bytes.size() != expected) {
    throw FormatError(where + "payload is " + std::to_string(bytes.size()) + " bytes, header implies " +
                      std::to_string(expected));
  }
  Tensor out({rows, cols});
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::bit_cast<float>(get32(bytes, 16 + 4 * i));
  return out;
}

void write_features(const std::filesystem::path& path, const Tensor& values) { write_file(path, encode_features(values)); }

Tensor read_features(const std::filesystem::path& path) { return decode_features(read_file(path), path.string()); }

std::string format_scores(const metrics::ScoreSet& scores) {
  std::string out;
  char buf[64];
  for (const auto& e : scores) {
    if (!std::isfinite(e.score)) throw DataError("score of '" + e.utt_id + "' is not finite");
    std::snprintf(buf, sizeof buf, " %.6f\n", e.score);
    out += e.utt_id;
    out += buf;
  }
  return out;
}

void write_scores(const std::filesystem::path& path, const metrics::ScoreSet& scores) {
  write_file(path, format_scores(scores));
}

std::vector<std::pair<std::string, double>> read_scores(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::pair<std::string, double>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string utt, score, extra;
    if (!(fields >> utt >> score) || (fields >> extra)) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected '<utt_id> <score>'");
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(score, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != score.size() || !std::isfinite(v)) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": bad score '" + score + "'");
    }
    out.emplace_back(utt, v);
  }
  return out;
}

}  // namespace arnet
