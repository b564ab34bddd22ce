#include "affect/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "affect/errors.hpp"
#include "affect/rng.hpp"
#include "affect/tensor_io.hpp"

namespace affect {

std::vector<double> context_labels(const std::vector<double>& bases, double alpha, double lo, double hi) {
  const std::size_t T = bases.size();
  std::vector<double> labels(T);
  for (std::size_t t = 0; t < T; ++t) {
    double neighbor_sum = 0.0;
    int neighbors = 0;
    if (t > 0) {
      neighbor_sum += bases[t - 1];
      ++neighbors;
    }
    if (t + 1 < T) {
      neighbor_sum += bases[t + 1];
      ++neighbors;
    }
    double v = bases[t];
    if (neighbors > 0) v = (1.0 - alpha) * bases[t] + alpha * neighbor_sum / neighbors;
    labels[t] = std::clamp(v, lo, hi);
  }
  return labels;
}

namespace {

constexpr std::size_t kSide = 32;

std::string level_token(char prefix, std::size_t level) { return prefix + std::to_string(level); }

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

std::size_t quantize_level(double normalized, std::size_t levels) {
  const double scaled = normalized * static_cast<double>(levels - 1);
  const auto idx = static_cast<long long>(std::llround(scaled));
  return static_cast<std::size_t>(std::clamp<long long>(idx, 0, static_cast<long long>(levels - 1)));
}

void write_embeddings(const PipelineConfig& c, const std::filesystem::path& path, Rng& rng) {
  const std::size_t k = c.embedding_dim;
  if (k < 2) throw ConfigError("embedding_dim must be at least 2");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw PipelineError("cannot write " + path.string());

  const std::size_t vocab = 2 * c.vocab_levels + c.filler_vocab;
  out << vocab << " " << k << "\n";
  char buf[40];
  auto emit = [&](const std::string& token, double c0, double c1) {
    out << token;
    for (std::size_t j = 0; j < k; ++j) {
      double v = j == 0 ? c0 : j == 1 ? c1 : rng.uniform(-0.5, 0.5);
      std::snprintf(buf, sizeof(buf), "%.9g", v);
      out << " " << buf;
    }
    out << "\n";
  };
  // level value lives on a dedicated coordinate per target
  for (std::size_t i = 0; i < c.vocab_levels; ++i) {
    const double value = 2.0 * static_cast<double>(i) / static_cast<double>(c.vocab_levels - 1) - 1.0;
    emit(level_token('a', i), value, 0.0);
  }
  for (std::size_t i = 0; i < c.vocab_levels; ++i) {
    const double value = 2.0 * static_cast<double>(i) / static_cast<double>(c.vocab_levels - 1) - 1.0;
    emit(level_token('v', i), 0.0, value);
  }
  for (std::size_t i = 0; i < c.filler_vocab; ++i) emit("w" + std::to_string(i), 0.0, 0.0);
}

struct SplitWriter {
  const PipelineConfig& c;
  std::filesystem::path dir;
  Rng rng;
  std::ofstream manifest;
  std::ofstream audio_ids;
  std::vector<double> audio_rows;  // flattened [n x D]
  std::size_t n_rows = 0;

  SplitWriter(const PipelineConfig& cfg, std::filesystem::path d, std::uint64_t seed)
      : c(cfg), dir(std::move(d)), rng(seed) {
    std::filesystem::create_directories(dir / "transcripts");
    std::filesystem::create_directories(dir / "clips");
    manifest.open(dir / "manifest.csv", std::ios::trunc);
    audio_ids.open(dir / "audio_ids.txt", std::ios::trunc);
    if (!manifest || !audio_ids) throw PipelineError("cannot write dataset files under " + dir.string());
    manifest << "video_id,utterance_index,arousal,valence,transcript_path,clip_path,audio_row\n";
  }

  void add_video(const std::string& video_id) {
    const std::size_t T =
        c.utterances_min + rng.below(c.utterances_max - c.utterances_min + 1);
    std::vector<double> base_a(T), base_v(T);
    for (std::size_t t = 0; t < T; ++t) {
      base_a[t] = rng.uniform(c.arousal_min, c.arousal_max);
      base_v[t] = rng.uniform(c.valence_min, c.valence_max);
    }
    const auto label_a = context_labels(base_a, c.context_alpha, c.arousal_min, c.arousal_max);
    const auto label_v = context_labels(base_v, c.context_alpha, c.valence_min, c.valence_max);

    for (std::size_t t = 0; t < T; ++t) {
      const double na = (base_a[t] - c.arousal_min) / (c.arousal_max - c.arousal_min);
      const double nv = (base_v[t] - c.valence_min) / (c.valence_max - c.valence_min);
      const std::string stem = video_id + "_" + std::to_string(t);

      write_transcript(stem, na, nv);
      write_clip(stem, na, nv);
      write_audio_row(video_id, t, na, nv);

      char a_buf[40], v_buf[40];
      std::snprintf(a_buf, sizeof(a_buf), "%.9g", label_a[t]);
      std::snprintf(v_buf, sizeof(v_buf), "%.9g", label_v[t]);
      manifest << video_id << "," << t << "," << a_buf << "," << v_buf << ",transcripts/" << stem
               << ".txt,clips/" << stem << ".omgt," << (n_rows - 1) << "\n";
    }
  }

  void write_transcript(const std::string& stem, double na, double nv) {
    const std::size_t ia = quantize_level(clamp01(na + c.noise_text * rng.normal()), c.vocab_levels);
    const std::size_t iv = quantize_level(clamp01(nv + c.noise_text * rng.normal()), c.vocab_levels);
    std::ofstream out(dir / "transcripts" / (stem + ".txt"), std::ios::trunc);
    out << level_token('a', ia) << " " << level_token('v', iv);
    for (std::size_t i = 0; i < c.transcript_fillers; ++i)
      out << " w" << rng.below(std::max<std::size_t>(1, c.filler_vocab));
    out << "\n";
  }

  void write_clip(const std::string& stem, double na, double nv) {
    const std::size_t F = c.clip_frames_min + rng.below(c.clip_frames_max - c.clip_frames_min + 1);
    const double red = 0.15 + 0.7 * clamp01(na + c.noise_visual * rng.normal());
    const double blue = 0.15 + 0.7 * clamp01(nv + c.noise_visual * rng.normal());
    const std::size_t plane = kSide * kSide;
    std::vector<double> px(3 * F * plane);
    for (std::size_t f = 0; f < F; ++f) {
      double* r = px.data() + (0 * F + f) * plane;
      double* g = px.data() + (1 * F + f) * plane;
      double* b = px.data() + (2 * F + f) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        r[i] = clamp01(red + 0.02 * (rng.uniform() - 0.5));
        g[i] = clamp01(0.1 + 0.02 * (rng.uniform() - 0.5));
        b[i] = clamp01(blue + 0.02 * (rng.uniform() - 0.5));
      }
      // a bright dot drifting across the green channel gives the clips
      // their temporal structure
      const std::size_t cy = (4 + 3 * f) % (kSide - 2);
      const std::size_t cx = (7 + 5 * f) % (kSide - 2);
      for (std::size_t dy = 0; dy < 3; ++dy)
        for (std::size_t dx = 0; dx < 3; ++dx) g[(cy + dy) * kSide + (cx + dx)] = 0.95;
    }
    write_tensor_file(dir / "clips" / (stem + ".omgt"),
                      Tensor::from({3, F, kSide, kSide}, std::move(px)));
  }

  void write_audio_row(const std::string& video_id, std::size_t t, double na, double nv) {
    std::vector<double> row(c.audio_dim);
    for (std::size_t j = 0; j < c.audio_dim; ++j) row[j] = rng.normal();
    for (std::size_t i = 0; i < c.audio_informative; ++i) {
      row[i] = na + c.noise_audio * rng.normal();
      row[c.audio_informative + i] = nv + c.noise_audio * rng.normal();
    }
    audio_rows.insert(audio_rows.end(), row.begin(), row.end());
    ++n_rows;
    audio_ids << video_id << ":" << t << "\n";
  }

  void finish() {
    write_tensor_file(dir / "audio.omgt", Tensor::from({n_rows, c.audio_dim}, std::move(audio_rows)));
    manifest.flush();
    audio_ids.flush();
    if (!manifest || !audio_ids) throw PipelineError("failed writing dataset under " + dir.string());
  }
};

void generate_split(const PipelineConfig& c, const std::filesystem::path& dir, std::uint64_t seed,
                    const std::string& prefix, std::size_t n_videos) {
  SplitWriter w(c, dir, seed);
  for (std::size_t v = 0; v < n_videos; ++v) {
    char vid[32];
    std::snprintf(vid, sizeof(vid), "%s%04zu", prefix.c_str(), v);
    w.add_video(vid);
  }
  w.finish();
}

}  // namespace

void generate_synthetic(const PipelineConfig& c, const std::filesystem::path& data_dir) {
  std::filesystem::create_directories(data_dir);
  Rng embed_rng(mix_seed(c.seed, 11));
  write_embeddings(c, data_dir / "embeddings.txt", embed_rng);
  generate_split(c, data_dir / "train", mix_seed(c.seed, 12), "tr", c.videos_train);
  generate_split(c, data_dir / "validation", mix_seed(c.seed, 13), "va", c.videos_validation);
}

}  // namespace affect
