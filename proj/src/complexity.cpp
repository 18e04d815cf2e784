#include "arnet/complexity.hpp"

#include <cstdio>
#include <sstream>

#include "arnet/error.hpp"

namespace arnet::complexity {

std::string_view to_string(Encoder e) {
  switch (e) {
    case Encoder::aux: return "E_A";
    case Encoder::main: return "E_M";
    case Encoder::concat: return "E_C";
    case Encoder::decoder: return "decoder";
  }
  return "?";
}

Totals ComplexityReport::total(Encoder e) const {
  Totals t;
  for (const auto& r : rows) {
    if (r.encoder != e) continue;
    t.params += r.params;
    t.macs += r.macs;
  }
  return t;
}

Totals ComplexityReport::aux_and_concat() const {
  const Totals a = total(Encoder::aux);
  const Totals c = total(Encoder::concat);
  return {a.params + c.params, a.macs + c.macs};
}

Totals ComplexityReport::grand_total() const {
  Totals t;
  for (const auto& r : rows) {
    t.params += r.params;
    t.macs += r.macs;
  }
  return t;
}

namespace {

using u64 = std::uint64_t;

LayerCost conv(std::string name, Encoder e, u64 c_out, u64 c_in, u64 k, u64 t_out) {
  return {std::move(name), e, c_out * c_in * k + c_out, t_out * c_out * c_in * k};
}

LayerCost bn(std::string name, Encoder e, u64 c) { return {std::move(name), e, 2 * c, 0}; }

LayerCost linear(std::string name, Encoder e, u64 d_out, u64 d_in) {
  return {std::move(name), e, d_out * d_in + d_out, d_out * d_in};
}

}  // namespace

ComplexityReport count_macs(const ArNetConfig& cfg, std::size_t input_len) {
  cfg.validate_structure();
  ArNetConfig at_len = cfg;
  at_len.input_len = input_len;
  at_len.validate_structure();

  ComplexityReport r;
  r.input_len = input_len;
  const auto& a = cfg.aux;
  const auto frames = at_len.aux_frame_counts();
  const u64 c = a.conv_channels;
  r.rows.push_back(conv("aux.conv", Encoder::aux, c, 1, a.conv_kernel, frames[0]));
  r.rows.push_back(bn("aux.bn0", Encoder::aux, c));
  for (std::size_t i = 1; i <= a.n_pools; ++i) r.rows.push_back(bn("aux.pool" + std::to_string(i) + ".bn", Encoder::aux, c));
  const u64 h = a.gru_hidden;
  r.rows.push_back({"aux.gru", Encoder::aux, 3 * (h * c + h * h + 2 * h), frames.back() * 3 * (h * c + h * h)});
  if (a.project) r.rows.push_back(linear("aux.proj", Encoder::aux, a.embed_dim, h));

  const auto& m = cfg.main;
  const auto tdnn = at_len.tdnn_frame_counts(at_len.feature_frames(input_len));
  u64 c_in = m.feature_bins();
  for (std::size_t i = 0; i < m.widths.size(); ++i) {
    const std::string prefix = "main.tdnn" + std::to_string(i + 1);
    r.rows.push_back(conv(prefix + ".conv", Encoder::main, m.widths[i], c_in, m.kernels[i], tdnn[i]));
    r.rows.push_back(bn(prefix + ".bn", Encoder::main, m.widths[i]));
    c_in = m.widths[i];
  }
  r.rows.push_back(linear("main.embed", Encoder::main, m.embed_dim, 2 * c_in));

  const u64 concat_in = cfg.aux_dim() + m.embed_dim;
  r.rows.push_back(bn("concat.bn", Encoder::concat, concat_in));
  r.rows.push_back(conv("concat.conv", Encoder::concat, cfg.concat_out, concat_in, 1, 1));
  r.rows.push_back(linear("decoder", Encoder::decoder, 2, cfg.concat_out));

  r.notes.push_back("one MAC = one multiply-accumulate; biases, batch norm, activations and pooling count as 0 MACs");
  r.notes.push_back("batch-norm rows count gain and offset only; running statistics are not trainable");
  r.notes.push_back("GRU counts separate input and recurrent biases (2H per gate set); a single-bias GRU has " +
                    std::to_string(3 * h) + " fewer parameters");
  return r;
}

ComplexityReport count_params(const ArNetConfig& cfg) { return count_macs(cfg, cfg.input_len); }

namespace {

std::string fmt_row(const std::string& name, const std::string& enc, u64 params, u64 macs) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-20s %-8s %14llu %16llu\n", name.c_str(), enc.c_str(),
                static_cast<unsigned long long>(params), static_cast<unsigned long long>(macs));
  return buf;
}

}  // namespace

std::string render_table(const ComplexityReport& r) {
  std::ostringstream os;
  char head[160];
  std::snprintf(head, sizeof head, "%-20s %-8s %14s %16s\n", "layer", "encoder", "params", "macs");
  os << "input_len " << r.input_len << "\n" << head;
  for (const auto& row : r.rows) os << fmt_row(row.name, std::string(to_string(row.encoder)), row.params, row.macs);
  os << "totals\n";
  for (Encoder e : {Encoder::aux, Encoder::main, Encoder::concat, Encoder::decoder}) {
    const Totals t = r.total(e);
    os << fmt_row("total." + std::string(to_string(e)), "", t.params, t.macs);
  }
  const Totals ac = r.aux_and_concat();
  os << fmt_row("total.E_A+E_C", "", ac.params, ac.macs);
  const Totals all = r.grand_total();
  os << fmt_row("total", "", all.params, all.macs);
  for (const auto& n : r.notes) os << "note: " << n << "\n";
  return os.str();
}

std::string render_csv(const ComplexityReport& r) {
  std::ostringstream os;
  for (const auto& row : r.rows) os << row.name << ',' << row.params << ',' << row.macs << '\n';
  for (Encoder e : {Encoder::aux, Encoder::main, Encoder::concat, Encoder::decoder}) {
    const Totals t = r.total(e);
    os << "total." << to_string(e) << ',' << t.params << ',' << t.macs << '\n';
  }
  const Totals ac = r.aux_and_concat();
  os << "total.E_A+E_C," << ac.params << ',' << ac.macs << '\n';
  const Totals all = r.grand_total();
  os << "total," << all.params << ',' << all.macs << '\n';
  return os.str();
}

}  // namespace arnet::complexity
