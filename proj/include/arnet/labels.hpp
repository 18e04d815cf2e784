#pragma once

#include <string>
#include <string_view>

#include "arnet/error.hpp"
#include "arnet/frontend.hpp"

namespace arnet {

/// Class index order matches the decoder's logits: [bonafide, spoof].
enum class Label { bonafide = 0, spoof = 1 };

inline std::string_view to_string(Label l) { return l == Label::bonafide ? "bonafide" : "spoof"; }

/// Case-sensitive; throws FormatError for anything but "bonafide" / "spoof".
inline Label label_from_string(std::string_view s) {
  if (s == "bonafide") return Label::bonafide;
  if (s == "spoof") return Label::spoof;
  throw FormatError("unknown key '" + std::string(s) + "' (expected bonafide or spoof)");
}

struct LabeledWave {
  frontend::Waveform wave;
  Label label = Label::bonafide;
};

}  // namespace arnet
