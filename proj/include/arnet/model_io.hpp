#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "arnet/model.hpp"

namespace arnet {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

/// ARNM: "ARNM", u32 LE version 1, u32 LE tensor count, then per tensor
/// u32 name length, UTF-8 name, u32 rank, u32 dims, f64 LE values.
std::string encode_tensors(const NamedTensors& tensors);
NamedTensors decode_tensors(const std::string& bytes, const std::string& source = "model");

/// Model file contents: parameters, the architecture as `config.*` tensors and
/// free-form scalar metadata as `meta.*` tensors (including meta.main_only).
NamedTensors model_tensors(const ArNet& model, const std::map<std::string, double>& meta = {});
void save_model(const std::filesystem::path& path, const ArNet& model, const std::map<std::string, double>& meta = {});

struct LoadedModel {
  ArNet model;
  std::map<std::string, double> meta;  // keys without the "meta." prefix
};

LoadedModel model_from_tensors(NamedTensors tensors, const std::string& source = "model");
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace arnet
