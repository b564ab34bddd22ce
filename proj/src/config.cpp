#include "affect/config.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "affect/errors.hpp"

namespace affect {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::map<std::string, std::string> parse_pairs(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
    if (!out.emplace(key, value).second)
      throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return out;
}

class Fields {
 public:
  explicit Fields(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

  void get(const char* key, std::uint64_t& v) {
    if (auto s = take(key)) v = parse_u64(key, *s);
  }
  void get(const char* key, std::size_t& v) {
    if (auto s = take(key)) v = static_cast<std::size_t>(parse_u64(key, *s));
  }
  void get(const char* key, double& v) {
    if (auto s = take(key)) {
      try {
        std::size_t pos = 0;
        v = std::stod(*s, &pos);
        if (pos != s->size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw ConfigError(std::string("config key '") + key + "': bad number '" + *s + "'");
      }
    }
  }
  void get(const char* key, std::vector<std::size_t>& v) {
    if (auto s = take(key)) {
      std::vector<std::size_t> parsed;
      std::istringstream in(*s);
      std::string item;
      while (std::getline(in, item, ',')) parsed.push_back(parse_u64(key, trim(item)));
      if (parsed.empty()) throw ConfigError(std::string("config key '") + key + "': empty list");
      v = std::move(parsed);
    }
  }
  void get(const char* key, FusionVariant& v) {
    if (auto s = take(key)) {
      if (*s == "concat") v = FusionVariant::Concat;
      else if (*s == "mcb") v = FusionVariant::Mcb;
      else throw ConfigError(std::string("config key '") + key + "': expected concat or mcb");
    }
  }
  void get(const char* key, OptimizerKind& v) {
    if (auto s = take(key)) {
      if (*s == "adam") v = OptimizerKind::Adam;
      else if (*s == "sgd") v = OptimizerKind::Sgd;
      else throw ConfigError(std::string("config key '") + key + "': expected adam or sgd");
    }
  }
  void get(const char* key, CccScope& v) {
    if (auto s = take(key)) {
      if (*s == "video") v = CccScope::Video;
      else if (*s == "pooled") v = CccScope::Pooled;
      else throw ConfigError(std::string("config key '") + key + "': expected video or pooled");
    }
  }

  void finish() const {
    if (!kv_.empty()) throw ConfigError("unknown config key '" + kv_.begin()->first + "'");
  }

 private:
  std::optional<std::string> take(const char* key) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    std::string v = it->second;
    kv_.erase(it);
    return v;
  }

  static std::uint64_t parse_u64(const char* key, const std::string& s) {
    try {
      std::size_t pos = 0;
      const std::uint64_t v = std::stoull(s, &pos);
      if (pos != s.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(std::string("config key '") + key + "': bad integer '" + s + "'");
    }
  }

  std::map<std::string, std::string> kv_;
};

}  // namespace

PipelineConfig PipelineConfig::from_text(const std::string& text) {
  PipelineConfig c;
  Fields f(parse_pairs(text));

  f.get("seed", c.seed);

  f.get("videos_train", c.videos_train);
  f.get("videos_validation", c.videos_validation);
  f.get("utterances_min", c.utterances_min);
  f.get("utterances_max", c.utterances_max);
  f.get("context_alpha", c.context_alpha);
  f.get("vocab_levels", c.vocab_levels);
  f.get("filler_vocab", c.filler_vocab);
  f.get("transcript_fillers", c.transcript_fillers);
  f.get("embedding_dim", c.embedding_dim);
  f.get("audio_dim", c.audio_dim);
  f.get("audio_informative", c.audio_informative);
  f.get("clip_frames_min", c.clip_frames_min);
  f.get("clip_frames_max", c.clip_frames_max);
  f.get("noise_text", c.noise_text);
  f.get("noise_visual", c.noise_visual);
  f.get("noise_audio", c.noise_audio);
  f.get("arousal_min", c.arousal_min);
  f.get("arousal_max", c.arousal_max);
  f.get("valence_min", c.valence_min);
  f.get("valence_max", c.valence_max);

  f.get("text_kernel_widths", c.text_kernel_widths);
  f.get("text_feature_maps", c.text_feature_maps);
  f.get("visual_channels", c.visual_channels);
  f.get("visual_kernel", c.visual_kernel);
  f.get("visual_feature_dim", c.visual_feature_dim);
  f.get("audio_k_best", c.audio_k_best);
  f.get("audio_hidden", c.audio_hidden);
  f.get("enc_heads", c.enc_heads);
  f.get("enc_d_k", c.enc_d_k);
  f.get("enc_d_v", c.enc_d_v);
  f.get("enc_blocks", c.enc_blocks);
  f.get("enc_ff_mult", c.enc_ff_mult);
  f.get("enc_eps", c.enc_eps);
  f.get("fusion_variant", c.fusion_variant);
  f.get("mcb_dim", c.mcb_dim);

  f.get("optimizer", c.optimizer);
  f.get("learning_rate", c.learning_rate);
  f.get("adam_beta1", c.adam_beta1);
  f.get("adam_beta2", c.adam_beta2);
  f.get("adam_eps", c.adam_eps);
  f.get("batch_videos", c.batch_videos);
  f.get("epochs_text", c.epochs_text);
  f.get("epochs_visual", c.epochs_visual);
  f.get("epochs_audio", c.epochs_audio);
  f.get("epochs_context", c.epochs_context);
  f.get("epochs_fusion", c.epochs_fusion);
  f.get("ccc_weight", c.ccc_weight);
  f.get("ccc_scope", c.ccc_scope);
  f.get("eval_pool", c.eval_pool);

  f.finish();
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str());
}

void PipelineConfig::validate() const {
  if (videos_train == 0 || videos_validation == 0)
    throw ConfigError("video counts must be positive");
  if (utterances_min == 0 || utterances_min > utterances_max)
    throw ConfigError("utterance count range is empty");
  if (!(context_alpha >= 0.0 && context_alpha < 1.0))
    throw ConfigError("context_alpha must be in [0, 1)");
  if (vocab_levels < 2) throw ConfigError("vocab_levels must be at least 2");
  if (clip_frames_min == 0 || clip_frames_min > clip_frames_max)
    throw ConfigError("clip frame count range is empty");
  if (arousal_min >= arousal_max || valence_min >= valence_max)
    throw ConfigError("label ranges are empty");
  if (text_kernel_widths.empty() || text_kernel_widths.size() != text_feature_maps.size())
    throw ConfigError("text kernel widths and feature maps must align");
  if (visual_kernel % 2 == 0) throw ConfigError("visual_kernel must be odd");
  if (audio_k_best == 0 || audio_k_best > audio_dim)
    throw ConfigError("audio_k_best must be in [1, audio_dim]");
  if (audio_informative * 2 > audio_dim)
    throw ConfigError("too many informative audio columns for audio_dim");
  if (enc_heads == 0 || enc_blocks == 0 || enc_d_k == 0 || enc_d_v == 0 || enc_ff_mult == 0)
    throw ConfigError("encoder dimensions must be positive");
  if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
  if (batch_videos == 0) throw ConfigError("batch_videos must be positive");
  if (ccc_weight < 0.0) throw ConfigError("ccc_weight must be non-negative");
}

namespace {

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace

std::string to_string(FusionVariant v) { return v == FusionVariant::Concat ? "concat" : "mcb"; }

std::string PipelineConfig::serialize() const {
  std::ostringstream o;
  o << "seed = " << seed << "\n";
  o << "videos_train = " << videos_train << "\n";
  o << "videos_validation = " << videos_validation << "\n";
  o << "utterances_min = " << utterances_min << "\n";
  o << "utterances_max = " << utterances_max << "\n";
  o << "context_alpha = " << fmt_num(context_alpha) << "\n";
  o << "vocab_levels = " << vocab_levels << "\n";
  o << "filler_vocab = " << filler_vocab << "\n";
  o << "transcript_fillers = " << transcript_fillers << "\n";
  o << "embedding_dim = " << embedding_dim << "\n";
  o << "audio_dim = " << audio_dim << "\n";
  o << "audio_informative = " << audio_informative << "\n";
  o << "clip_frames_min = " << clip_frames_min << "\n";
  o << "clip_frames_max = " << clip_frames_max << "\n";
  o << "noise_text = " << fmt_num(noise_text) << "\n";
  o << "noise_visual = " << fmt_num(noise_visual) << "\n";
  o << "noise_audio = " << fmt_num(noise_audio) << "\n";
  o << "arousal_min = " << fmt_num(arousal_min) << "\n";
  o << "arousal_max = " << fmt_num(arousal_max) << "\n";
  o << "valence_min = " << fmt_num(valence_min) << "\n";
  o << "valence_max = " << fmt_num(valence_max) << "\n";
  o << "text_kernel_widths = " << fmt_list(text_kernel_widths) << "\n";
  o << "text_feature_maps = " << fmt_list(text_feature_maps) << "\n";
  o << "visual_channels = " << visual_channels << "\n";
  o << "visual_kernel = " << visual_kernel << "\n";
  o << "visual_feature_dim = " << visual_feature_dim << "\n";
  o << "audio_k_best = " << audio_k_best << "\n";
  o << "audio_hidden = " << audio_hidden << "\n";
  o << "enc_heads = " << enc_heads << "\n";
  o << "enc_d_k = " << enc_d_k << "\n";
  o << "enc_d_v = " << enc_d_v << "\n";
  o << "enc_blocks = " << enc_blocks << "\n";
  o << "enc_ff_mult = " << enc_ff_mult << "\n";
  o << "enc_eps = " << fmt_num(enc_eps) << "\n";
  o << "fusion_variant = " << to_string(fusion_variant) << "\n";
  o << "mcb_dim = " << mcb_dim << "\n";
  o << "optimizer = " << (optimizer == OptimizerKind::Adam ? "adam" : "sgd") << "\n";
  o << "learning_rate = " << fmt_num(learning_rate) << "\n";
  o << "adam_beta1 = " << fmt_num(adam_beta1) << "\n";
  o << "adam_beta2 = " << fmt_num(adam_beta2) << "\n";
  o << "adam_eps = " << fmt_num(adam_eps) << "\n";
  o << "batch_videos = " << batch_videos << "\n";
  o << "epochs_text = " << epochs_text << "\n";
  o << "epochs_visual = " << epochs_visual << "\n";
  o << "epochs_audio = " << epochs_audio << "\n";
  o << "epochs_context = " << epochs_context << "\n";
  o << "epochs_fusion = " << epochs_fusion << "\n";
  o << "ccc_weight = " << fmt_num(ccc_weight) << "\n";
  o << "ccc_scope = " << (ccc_scope == CccScope::Video ? "video" : "pooled") << "\n";
  o << "eval_pool = " << (eval_pool == CccScope::Video ? "video" : "pooled") << "\n";
  return o.str();
}

}  // namespace affect
