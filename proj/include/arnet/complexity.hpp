#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "arnet/model.hpp"

namespace arnet::complexity {

enum class Encoder { aux, main, concat, decoder };

std::string_view to_string(Encoder e);

/// One parameterized layer. `name` is the parameter-name prefix of the layer.
struct LayerCost {
  std::string name;
  Encoder encoder = Encoder::aux;
  std::uint64_t params = 0;  // trainable values
  std::uint64_t macs = 0;    // multiply-accumulates per forward pass
};

struct Totals {
  std::uint64_t params = 0;
  std::uint64_t macs = 0;
};

/// Analytic per-layer costs for one utterance of `input_len` samples.
///
/// Counting rules: conv C_out*C_in*K + C_out params and T'*C_out*C_in*K MACs;
/// BN 2C params (gain and offset) and no MACs; GRU 3(H*C_in + H*H + 2H)
/// params and T*3(H*C_in + H*H) MACs; linear D_out*D_in + D_out params and
/// D_out*D_in MACs. Biases, normalization, activations and pooling add no MACs.
struct ComplexityReport {
  std::size_t input_len = 0;
  std::vector<LayerCost> rows;
  std::vector<std::string> notes;

  Totals total(Encoder e) const;
  /// E_A + E_C, the cost the auxiliary design adds on top of E_M.
  Totals aux_and_concat() const;
  Totals grand_total() const;
};

/// Costs at cfg.input_len. Accepts configs that only pass validate_structure().
ComplexityReport count_params(const ArNetConfig& cfg);
ComplexityReport count_macs(const ArNetConfig& cfg, std::size_t input_len);

/// Fixed-width table with per-layer rows and per-encoder totals.
std::string render_table(const ComplexityReport& r);
/// `layer,params,macs` lines: one per row, then one per total.
std::string render_csv(const ComplexityReport& r);

}  // namespace arnet::complexity
