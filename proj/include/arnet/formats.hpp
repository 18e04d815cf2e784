#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "arnet/metrics.hpp"
#include "arnet/tensor.hpp"

namespace arnet {

/// ARNF: "ARNF", u32 LE version 1, u32 LE rows, u32 LE cols, rows*cols f32 LE row-major.
std::string encode_features(const Tensor& values);
Tensor decode_features(const std::string& bytes, const std::string& source = "features");
void write_features(const std::filesystem::path& path, const Tensor& values);
Tensor read_features(const std::filesystem::path& path);

/// One `<utt_id> <score>` line per entry, score printed with 6 decimals.
std::string format_scores(const metrics::ScoreSet& scores);
void write_scores(const std::filesystem::path& path, const metrics::ScoreSet& scores);
std::vector<std::pair<std::string, double>> read_scores(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace arnet
