#pragma once

#include <filesystem>

#include "arnet/frontend.hpp"

namespace arnet {

/// Reads a RIFF/WAVE file holding 16-bit PCM mono. Samples map to s / 32768;
/// utt_id is the file stem. Throws FormatError for other codecs, channel
/// counts, missing chunks or truncated data.
frontend::Waveform read_wav(const std::filesystem::path& path);

/// Writes 16-bit PCM mono; samples are scaled by 32768, rounded and clipped.
void write_wav(const std::filesystem::path& path, const frontend::Waveform& w);

}  // namespace arnet
