#include "affect/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "affect/errors.hpp"
#include "affect/tensor_io.hpp"

namespace affect {

std::vector<std::string> tokenize_lower(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

namespace {

constexpr const char* kManifestHeader =
    "video_id,utterance_index,arousal,valence,transcript_path,clip_path,audio_row";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s, const std::string& what, std::vector<std::string>& errors) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    if (!std::isfinite(v)) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    errors.push_back(what + ": bad number '" + s + "'");
    return 0.0;
  }
}

std::size_t parse_index(const std::string& s, const std::string& what, std::vector<std::string>& errors) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    errors.push_back(what + ": bad index '" + s + "'");
    return 0;
  }
}

}  // namespace

DatasetSplit DatasetSplit::load(const std::filesystem::path& dir) {
  DatasetSplit split;
  split.root_ = dir;
  std::vector<std::string> errors;

  const auto manifest_path = dir / "manifest.csv";
  std::ifstream manifest(manifest_path);
  if (!manifest) throw PipelineError("missing manifest " + manifest_path.string());

  std::string line;
  if (!std::getline(manifest, line) || split_csv(line) != split_csv(kManifestHeader))
    throw FormatError(manifest_path.string() + ": first line must be '" + kManifestHeader + "'");

  std::size_t lineno = 1;
  while (std::getline(manifest, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    const std::string where = "manifest line " + std::to_string(lineno);
    if (fields.size() != 7) {
      errors.push_back(where + ": expected 7 fields, got " + std::to_string(fields.size()));
      continue;
    }
    Utterance u;
    u.video_id = fields[0];
    u.utterance_index = parse_index(fields[1], where + " utterance_index", errors);
    u.arousal = parse_double(fields[2], where + " arousal", errors);
    u.valence = parse_double(fields[3], where + " valence", errors);
    u.transcript_path = fields[4];
    u.clip_path = fields[5];
    u.audio_row = parse_index(fields[6], where + " audio_row", errors);
    if (u.video_id.empty()) errors.push_back(where + ": empty video_id");
    split.utterances_.push_back(std::move(u));
  }

  // group rows by video, in order of first appearance
  std::map<std::string, std::size_t> video_slot;
  for (std::size_t i = 0; i < split.utterances_.size(); ++i) {
    const auto& u = split.utterances_[i];
    auto [it, fresh] = video_slot.emplace(u.video_id, split.videos_.size());
    if (fresh) split.videos_.push_back(VideoSequence{u.video_id, {}});
    split.videos_[it->second].rows.push_back(i);
  }
  for (auto& v : split.videos_) {
    std::sort(v.rows.begin(), v.rows.end(), [&](std::size_t a, std::size_t b) {
      return split.utterances_[a].utterance_index < split.utterances_[b].utterance_index;
    });
    for (std::size_t t = 0; t < v.rows.size(); ++t) {
      const std::size_t idx = split.utterances_[v.rows[t]].utterance_index;
      if (idx != t) {
        errors.push_back("video " + v.video_id + ": utterance indices not contiguous from 0 (saw " +
                         std::to_string(idx) + " at position " + std::to_string(t) + ")");
        break;
      }
    }
  }

  // transcripts
  for (auto& u : split.utterances_) {
    const auto path = dir / u.transcript_path;
    std::ifstream in(path);
    if (!in) {
      errors.push_back(u.id() + ": missing transcript " + path.string());
      continue;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    u.tokens = tokenize_lower(buf.str());
  }

  // clips must exist; payloads load lazily
  for (const auto& u : split.utterances_) {
    if (!std::filesystem::exists(dir / u.clip_path))
      errors.push_back(u.id() + ": missing clip " + (dir / u.clip_path).string());
  }

  // audio matrix + id sidecar
  const auto audio_path = dir / "audio.omgt";
  std::vector<std::string> audio_ids;
  if (!std::filesystem::exists(audio_path)) {
    errors.push_back("missing audio feature matrix " + audio_path.string());
  } else {
    split.audio_features_ = read_tensor_file(audio_path);
    if (split.audio_features_.rank() != 2) {
      errors.push_back(audio_path.string() + ": expected an [n x D] matrix, got " +
                       shape_str(split.audio_features_.shape()));
    }
    const auto ids_path = dir / "audio_ids.txt";
    std::ifstream ids(ids_path);
    if (!ids) {
      errors.push_back("missing audio id sidecar " + ids_path.string());
    } else {
      std::string id_line;
      while (std::getline(ids, id_line)) {
        if (!id_line.empty() && id_line.back() == '\r') id_line.pop_back();
        if (!id_line.empty()) audio_ids.push_back(id_line);
      }
      if (split.audio_features_.rank() == 2 && audio_ids.size() != split.audio_features_.extent(0))
        errors.push_back(ids_path.string() + ": " + std::to_string(audio_ids.size()) +
                         " ids for " + std::to_string(split.audio_features_.extent(0)) + " rows");
    }
  }
  if (split.audio_features_.defined() && split.audio_features_.rank() == 2) {
    const std::size_t rows = split.audio_features_.extent(0);
    for (const auto& u : split.utterances_) {
      if (u.audio_row >= rows) {
        errors.push_back(u.id() + ": audio_row " + std::to_string(u.audio_row) + " out of range (" +
                         std::to_string(rows) + " rows)");
      } else if (u.audio_row < audio_ids.size() && audio_ids[u.audio_row] != u.id()) {
        errors.push_back(u.id() + ": audio_ids row " + std::to_string(u.audio_row) + " is '" +
                         audio_ids[u.audio_row] + "'");
      }
    }
  }

  if (split.utterances_.empty()) errors.push_back("manifest has no utterances");

  if (!errors.empty()) {
    std::string msg = "dataset " + dir.string() + " failed validation:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw PipelineError(msg);
  }
  split.clip_cache_.resize(split.utterances_.size());
  return split;
}

const Tensor& DatasetSplit::clip(std::size_t row) const {
  if (row >= utterances_.size())
    throw PipelineError("clip row " + std::to_string(row) + " out of range");
  if (!clip_cache_[row].defined())
    clip_cache_[row] = read_tensor_file(root_ / utterances_[row].clip_path);
  return clip_cache_[row];
}

}  // namespace affect
