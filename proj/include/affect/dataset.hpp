#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "affect/tensor.hpp"

namespace affect {

/// One labeled utterance: manifest row plus its loaded transcript tokens.
struct Utterance {
  std::string video_id;
  std::size_t utterance_index = 0;
  double arousal = 0.0;
  double valence = 0.0;
  std::string transcript_path;
  std::string clip_path;
  std::size_t audio_row = 0;
  std::vector<std::string> tokens;

  std::string id() const { return video_id + ":" + std::to_string(utterance_index); }
};

/// Ordered utterances of one video, as row indices into the split.
struct VideoSequence {
  std::string video_id;
  std::vector<std::size_t> rows;
};

std::vector<std::string> tokenize_lower(const std::string& text);

/// A self-contained dataset directory:
///   manifest.csv  (video_id,utterance_index,arousal,valence,transcript_path,clip_path,audio_row)
///   transcripts/, clips/, audio.omgt ([n x D]), audio_ids.txt
/// Loading validates referential integrity and reports every violation.
class DatasetSplit {
 public:
  static DatasetSplit load(const std::filesystem::path& dir);

  const std::filesystem::path& root() const { return root_; }
  const std::vector<Utterance>& utterances() const { return utterances_; }
  const std::vector<VideoSequence>& videos() const { return videos_; }
  const Tensor& audio_features() const { return audio_features_; }

  /// Raw clip tensor [3 x F x 32 x 32] for one utterance, cached after the
  /// first read.
  const Tensor& clip(std::size_t row) const;

 private:
  std::filesystem::path root_;
  std::vector<Utterance> utterances_;
  std::vector<VideoSequence> videos_;
  Tensor audio_features_;
  mutable std::vector<Tensor> clip_cache_;
};

}  // namespace affect
