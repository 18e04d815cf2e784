#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "arnet/labels.hpp"

namespace arnet {

/// One line of an ASVspoof-style protocol: `speaker utt_id system attack key`.
struct TrialRecord {
  std::string speaker_id;
  std::string utt_id;
  std::string system_id = "-";
  std::string attack_id = "-";
  Label key = Label::bonafide;
};

/// Records in file order. Blank lines are skipped. Throws FormatError with
/// the line number on a wrong field count, an unknown key or a repeated utt_id.
std::vector<TrialRecord> parse_protocol(std::istream& in, const std::string& source = "protocol");
std::vector<TrialRecord> parse_protocol(const std::filesystem::path& path);

void write_protocol(std::ostream& out, const std::vector<TrialRecord>& records);
void write_protocol(const std::filesystem::path& path, const std::vector<TrialRecord>& records);

/// Loads DIR/protocol.txt and DIR/<utt_id>.wav for every record. Throws
/// DataError if the directory, protocol or a listed WAV is missing.
std::vector<LabeledWave> load_dataset(const std::filesystem::path& dir);

}  // namespace arnet
