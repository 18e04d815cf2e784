#include "arnet/protocol.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "arnet/error.hpp"
#include "arnet/wav.hpp"

namespace arnet {

std::vector<TrialRecord> parse_protocol(std::istream& in, const std::string& source) {
  std::vector<TrialRecord> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (tok.size() != 5) {
      throw FormatError(where + "expected 5 fields, found " + std::to_string(tok.size()));
    }
    TrialRecord r;
    r.speaker_id = tok[0];
    r.utt_id = tok[1];
    r.system_id = tok[2];
    r.attack_id = tok[3];
    try {
      r.key = label_from_string(tok[4]);
    } catch (const FormatError& e) {
      throw FormatError(where + e.what());
    }
    if (!seen.insert(r.utt_id).second) throw FormatError(where + "duplicate utt_id " + r.utt_id);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<TrialRecord> parse_protocol(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open protocol " + path.string());
  return parse_protocol(in, path.string());
}

void write_protocol(std::ostream& out, const std::vector<TrialRecord>& records) {
  for (const auto& r : records) {
    out << r.speaker_id << ' ' << r.utt_id << ' ' << r.system_id << ' ' << r.attack_id << ' ' << to_string(r.key)
        << '\n';
  }
}

void write_protocol(const std::filesystem::path& path, const std::vector<TrialRecord>& records) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write protocol " + path.string());
  write_protocol(out, records);
  if (!out) throw FormatError("write failed for " + path.string());
}

std::vector<LabeledWave> load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("dataset directory " + dir.string() + " does not exist");
  const auto protocol = dir / "protocol.txt";
  if (!std::filesystem::exists(protocol)) throw DataError("dataset has no protocol.txt: " + protocol.string());
  std::vector<LabeledWave> out;
  for (const auto& r : parse_protocol(protocol)) {
    const auto wav = dir / (r.utt_id + ".wav");
    if (!std::filesystem::exists(wav)) throw DataError("protocol lists " + r.utt_id + " but " + wav.string() + " is missing");
    out.push_back({read_wav(wav), r.key});
  }
  return out;
}

}  // namespace arnet
