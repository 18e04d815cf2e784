#include "arnet/model_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <set>

#include "arnet/error.hpp"
#include "arnet/formats.hpp"

namespace arnet {

namespace {

void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  Reader(const std::string& bytes, std::string source) : b_(bytes), where_(std::move(source) + ": ") {}

  void need(std::size_t n, const char* what) const {
    if (b_.size() - pos_ < n) throw FormatError(where_ + "truncated " + what);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b_[pos_ + static_cast<std::size_t>(i)]);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b_[pos_ + static_cast<std::size_t>(i)]);
    pos_ += 8;
    return v;
  }
  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == b_.size(); }
  const std::string& where() const { return where_; }

 private:
  const std::string& b_;
  std::string where_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_tensors(const NamedTensors& tensors) {
  std::string out = "ARNM";
  put32(out, 1);
  put32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    if (t.empty()) throw FormatError("tensor " + name + " is empty");
    put32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put32(out, static_cast<std::uint32_t>(d));
    for (double v : t.data()) put64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

NamedTensors decode_tensors(const std::string& bytes, const std::string& source) {
  Reader r(bytes, source);
  if (r.str(4, "magic") != "ARNM") throw FormatError(r.where() + "bad magic (expected ARNM)");
  const std::uint32_t version = r.u32("version");
  if (version != 1) throw FormatError(r.where() + "unsupported ARNM version " + std::to_string(version));
  const std::uint32_t count = r.u32("tensor count");
  NamedTensors out;
  std::set<std::string> names;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t len = r.u32("name length");
    std::string name = r.str(len, "tensor name");
    if (!names.insert(name).second) throw FormatError(r.where() + "duplicate tensor " + name);
    const std::uint32_t rank = r.u32("rank");
    if (rank == 0) throw FormatError(r.where() + "tensor " + name + " has rank 0");
    Shape shape;
    std::uint64_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      const std::uint32_t d = r.u32("dims");
      if (d == 0) throw FormatError(r.where() + "tensor " + name + " has a zero dimension");
      shape.push_back(d);
      n *= d;
      if (n > bytes.size()) throw FormatError(r.where() + "tensor " + name + " is larger than the file");
    }
    r.need(8 * n, "tensor values");
    std::vector<double> values(n);
    for (auto& v : values) v = std::bit_cast<double>(r.u64("tensor values"));
    out.emplace_back(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  if (!r.done()) throw FormatError(r.where() + "trailing bytes after the last tensor");
  return out;
}

namespace {

const char* kConfigPrefix = "config.";
const char* kMetaPrefix = "meta.";

void put_scalar(NamedTensors& out, const std::string& name, double v) { out.emplace_back(name, Tensor::scalar(v)); }

void put_list(NamedTensors& out, const std::string& name, const std::vector<std::size_t>& v) {
  std::vector<double> d(v.begin(), v.end());
  out.emplace_back(name, Tensor({v.size()}, std::move(d)));
}

void encode_config(NamedTensors& out, const ArNetConfig& c) {
  const std::string p = kConfigPrefix;
  auto s = [&](const std::string& k, double v) { put_scalar(out, p + k, v); };
  s("input_len", static_cast<double>(c.input_len));
  s("sample_rate", c.sample_rate);
  s("aux.conv_kernel", static_cast<double>(c.aux.conv_kernel));
  s("aux.conv_stride", static_cast<double>(c.aux.conv_stride));
  s("aux.conv_channels", static_cast<double>(c.aux.conv_channels));
  s("aux.n_pools", static_cast<double>(c.aux.n_pools));
  s("aux.pool_kernel", static_cast<double>(c.aux.pool_kernel));
  s("aux.pool_stride", static_cast<double>(c.aux.pool_stride));
  s("aux.gru_hidden", static_cast<double>(c.aux.gru_hidden));
  s("aux.embed_dim", static_cast<double>(c.aux.embed_dim));
  s("aux.project", c.aux.project ? 1.0 : 0.0);
  s("main.frontend", c.main.frontend == frontend::FrontendKind::cqt ? 1.0 : 0.0);
  put_list(out, p + "main.widths", c.main.widths);
  put_list(out, p + "main.kernels", c.main.kernels);
  put_list(out, p + "main.dilations", c.main.dilations);
  s("main.embed_dim", static_cast<double>(c.main.embed_dim));
  s("main.mel.n_fft", static_cast<double>(c.main.mel.n_fft));
  s("main.mel.hop", static_cast<double>(c.main.mel.hop));
  s("main.mel.n_mels", static_cast<double>(c.main.mel.n_mels));
  s("main.mel.fmin", c.main.mel.fmin);
  s("main.mel.fmax", c.main.mel.fmax);
  s("main.cqt.fmin", c.main.cqt.fmin);
  s("main.cqt.bins_per_octave", static_cast<double>(c.main.cqt.bins_per_octave));
  s("main.cqt.n_bins", static_cast<double>(c.main.cqt.n_bins));
  s("main.cqt.hop", static_cast<double>(c.main.cqt.hop));
  s("main.cqt_mvn", c.main.cqt_mvn ? 1.0 : 0.0);
  s("concat_out", static_cast<double>(c.concat_out));
  s("leaky_slope", c.leaky_slope);
  s("seed.lo", static_cast<double>(c.seed & 0xFFFFFFFFu));
  s("seed.hi", static_cast<double>(c.seed >> 32));
  s("bn_stats", c.bn_stats == ops::BnStats::utterance ? 1.0 : 0.0);
}

class ConfigReader {
 public:
  ConfigReader(const std::map<std::string, Tensor>& t, std::string where) : t_(t), where_(std::move(where)) {}

  const Tensor& get(const std::string& key) const {
    auto it = t_.find(kConfigPrefix + key);
    if (it == t_.end()) throw FormatError(where_ + "missing " + kConfigPrefix + key);
    return it->second;
  }
  double real(const std::string& key) const {
    const Tensor& t = get(key);
    if (t.size() != 1) throw FormatError(where_ + kConfigPrefix + key + " must hold one value");
    return t[0];
  }
  std::size_t count(const std::string& key) const { return to_count(key, real(key)); }
  bool flag(const std::string& key) const {
    const double v = real(key);
    if (v != 0.0 && v != 1.0) throw FormatError(where_ + kConfigPrefix + key + " must be 0 or 1");
    return v == 1.0;
  }
  std::vector<std::size_t> list(const std::string& key) const {
    std::vector<std::size_t> out;
    for (double v : get(key).data()) out.push_back(to_count(key, v));
    return out;
  }

 private:
  std::size_t to_count(const std::string& key, double v) const {
    if (!(v >= 0.0) || v != std::floor(v) || v > 9.0e15) {
      throw FormatError(where_ + kConfigPrefix + key + " must be a non-negative integer");
    }
    return static_cast<std::size_t>(v);
  }

  const std::map<std::string, Tensor>& t_;
  std::string where_;
};

ArNetConfig decode_config(const ConfigReader& r) {
  ArNetConfig c;
  c.input_len = r.count("input_len");
  c.sample_rate = r.real("sample_rate");
  c.aux.conv_kernel = r.count("aux.conv_kernel");
  c.aux.conv_stride = r.count("aux.conv_stride");
  c.aux.conv_channels = r.count("aux.conv_channels");
  c.aux.n_pools = r.count("aux.n_pools");
  c.aux.pool_kernel = r.count("aux.pool_kernel");
  c.aux.pool_stride = r.count("aux.pool_stride");
  c.aux.gru_hidden = r.count("aux.gru_hidden");
  c.aux.embed_dim = r.count("aux.embed_dim");
  c.aux.project = r.flag("aux.project");
  c.main.frontend = r.flag("main.frontend") ? frontend::FrontendKind::cqt : frontend::FrontendKind::mel;
  c.main.widths = r.list("main.widths");
  c.main.kernels = r.list("main.kernels");
  c.main.dilations = r.list("main.dilations");
  c.main.embed_dim = r.count("main.embed_dim");
  c.main.mel.n_fft = r.count("main.mel.n_fft");
  c.main.mel.hop = r.count("main.mel.hop");
  c.main.mel.n_mels = r.count("main.mel.n_mels");
  c.main.mel.fmin = r.real("main.mel.fmin");
  c.main.mel.fmax = r.real("main.mel.fmax");
  c.main.cqt.fmin = r.real("main.cqt.fmin");
  c.main.cqt.bins_per_octave = r.count("main.cqt.bins_per_octave");
  c.main.cqt.n_bins = r.count("main.cqt.n_bins");
  c.main.cqt.hop = r.count("main.cqt.hop");
  c.main.cqt_mvn = r.flag("main.cqt_mvn");
  c.concat_out = r.count("concat_out");
  c.leaky_slope = r.real("leaky_slope");
  c.seed = static_cast<std::uint64_t>(r.count("seed.lo")) | static_cast<std::uint64_t>(r.count("seed.hi")) << 32;
  c.bn_stats = r.flag("bn_stats") ? ops::BnStats::utterance : ops::BnStats::batch;
  return c;
}

}  // namespace

NamedTensors model_tensors(const ArNet& model, const std::map<std::string, double>& meta) {
  NamedTensors out;
  for (const auto& e : model.params().entries()) out.emplace_back(e.name, Tensor(e.value.shape(), e.value.values()));
  encode_config(out, model.config());
  put_scalar(out, std::string(kMetaPrefix) + "main_only", model.main_only() ? 1.0 : 0.0);
  for (const auto& [k, v] : meta) {
    if (k == "main_only") continue;
    put_scalar(out, kMetaPrefix + k, v);
  }
  return out;
}

void save_model(const std::filesystem::path& path, const ArNet& model, const std::map<std::string, double>& meta) {
  write_file(path, encode_tensors(model_tensors(model, meta)));
}

LoadedModel model_from_tensors(NamedTensors tensors, const std::string& source) {
  const std::string where = source + ": ";
  std::map<std::string, Tensor> config;
  for (const auto& [name, t] : tensors) {
    if (name.rfind(kConfigPrefix, 0) == 0) config.emplace(name, t);
  }
  const ArNetConfig cfg = decode_config(ConfigReader(config, where));
  std::map<std::string, double> meta;
  ParamStore params;
  std::map<std::string, bool> trainable;
  for (const auto& s : param_specs(cfg)) trainable[s.name] = s.trainable;
  for (auto& [name, t] : tensors) {
    if (name.rfind(kConfigPrefix, 0) == 0) continue;
    if (name.rfind(kMetaPrefix, 0) == 0) {
      if (t.size() != 1) throw FormatError(where + name + " must hold one value");
      meta[name.substr(std::char_traits<char>::length(kMetaPrefix))] = t[0];
      continue;
    }
    auto it = trainable.find(name);
    if (it == trainable.end()) throw FormatError(where + "unexpected tensor " + name);
    params.add(name, std::move(t), it->second);
  }
  const auto mo = meta.find("main_only");
  if (mo == meta.end() || (mo->second != 0.0 && mo->second != 1.0)) throw FormatError(where + "meta.main_only missing or invalid");
  const Branches branches = mo->second == 1.0 ? Branches::main_only : Branches::arnet;
  try {
    return {ArNet(cfg, branches, std::move(params)), std::move(meta)};
  } catch (const ConfigError& e) {
    throw FormatError(where + "stored architecture is invalid: " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(where + e.what());
  }
}

LoadedModel load_model(const std::filesystem::path& path) {
  return model_from_tensors(decode_tensors(read_file(path), path.string()), path.string());
}

}  // namespace arnet
