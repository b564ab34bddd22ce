#include "affect/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "affect/audio_pipeline.hpp"
#include "affect/checkpoint.hpp"
#include "affect/dataset.hpp"
#include "affect/errors.hpp"
#include "affect/fusion.hpp"
#include "affect/losses.hpp"
#include "affect/optimizer.hpp"
#include "affect/rng.hpp"
#include "affect/synthetic.hpp"
#include "affect/tensor_io.hpp"
#include "affect/text_encoder.hpp"
#include "affect/transformer.hpp"
#include "affect/visual_encoder.hpp"

namespace affect {

namespace {

constexpr std::uint64_t kInitStream = 100;
constexpr std::uint64_t kShuffleStream = 200;
constexpr std::uint64_t kSketchStream = 300;

std::size_t stage_index(Stage s) { return static_cast<std::size_t>(s); }

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// ---------------------------------------------------------------- naming

NamedTensors name_text(const TextEncoderParams& p) {
  NamedTensors out;
  for (std::size_t i = 0; i < p.banks.size(); ++i) {
    out.emplace_back("bank" + std::to_string(i) + ".kernels", p.banks[i].kernels);
    out.emplace_back("bank" + std::to_string(i) + ".bias", p.banks[i].bias);
  }
  out.emplace_back("fc_out.W", p.fc_out.W);
  out.emplace_back("fc_out.b", p.fc_out.b);
  return out;
}

NamedTensors name_visual(const VisualEncoderParams& p) {
  return {{"conv1.kernels", p.conv1.kernels}, {"conv1.bias", p.conv1.bias},
          {"conv2.kernels", p.conv2.kernels}, {"conv2.bias", p.conv2.bias},
          {"fc1.W", p.fc1.W},                 {"fc1.b", p.fc1.b},
          {"fc2.W", p.fc2.W},                 {"fc2.b", p.fc2.b}};
}

NamedTensors name_audio(const AudioEncoderParams& p) {
  return {{"fc1.W", p.fc1.W}, {"fc1.b", p.fc1.b}, {"fc2.W", p.fc2.W}, {"fc2.b", p.fc2.b}};
}

NamedTensors name_context(const ContextEncoderParams& p) {
  NamedTensors out;
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    const std::string pre = "block" + std::to_string(b) + ".";
    const auto& blk = p.blocks[b];
    for (std::size_t h = 0; h < blk.mha.Wq.size(); ++h) {
      out.emplace_back(pre + "Wq" + std::to_string(h), blk.mha.Wq[h]);
      out.emplace_back(pre + "Wk" + std::to_string(h), blk.mha.Wk[h]);
      out.emplace_back(pre + "Wv" + std::to_string(h), blk.mha.Wv[h]);
    }
    out.emplace_back(pre + "Wo", blk.mha.Wo);
    out.emplace_back(pre + "ln1.gamma", blk.ln1_gamma);
    out.emplace_back(pre + "ln1.beta", blk.ln1_beta);
    out.emplace_back(pre + "ff1.W", blk.ff1.W);
    out.emplace_back(pre + "ff1.b", blk.ff1.b);
    out.emplace_back(pre + "ff2.W", blk.ff2.W);
    out.emplace_back(pre + "ff2.b", blk.ff2.b);
    out.emplace_back(pre + "ln2.gamma", blk.ln2_gamma);
    out.emplace_back(pre + "ln2.beta", blk.ln2_beta);
  }
  out.emplace_back("head.W", p.head.W);
  out.emplace_back("head.b", p.head.b);
  return out;
}

void apply_checkpoint(const Checkpoint& c, NamedTensors named) {
  if (c.tensors.size() != named.size())
    throw PipelineError("checkpoint for stage '" + c.stage + "' has " +
                        std::to_string(c.tensors.size()) + " tensors, model expects " +
                        std::to_string(named.size()));
  for (auto& [name, dst] : named) {
    const Tensor* src = c.find(name);
    if (!src) throw PipelineError("checkpoint missing tensor '" + name + "'");
    if (src->shape() != dst.shape())
      throw PipelineError("checkpoint tensor '" + name + "' has shape " + shape_str(src->shape()) +
                          ", model expects " + shape_str(dst.shape()));
    auto v = dst.mutable_values();
    std::copy(src->values().begin(), src->values().end(), v.begin());
  }
}

Checkpoint load_stage_checkpoint(const PipelinePaths& paths, const std::string& artifact) {
  const auto path = paths.checkpoint_file(artifact);
  if (!std::filesystem::exists(path))
    throw PipelineError("missing checkpoint " + path.string() + "; run train --stage first");
  return load_checkpoint(path);
}

// ---------------------------------------------------------------- data

struct Bundle {
  DatasetSplit split;
  std::vector<std::array<double, 2>> gold;  // per utterance row
};

Bundle load_bundle(const std::filesystem::path& dir) {
  Bundle b{DatasetSplit::load(dir), {}};
  b.gold.reserve(b.split.utterances().size());
  for (const auto& u : b.split.utterances()) b.gold.push_back({u.arousal, u.valence});
  return b;
}

std::vector<Tensor> build_windows(const Bundle& b, const EmbeddingTable& table) {
  std::vector<Tensor> out;
  out.reserve(b.split.utterances().size());
  for (const auto& u : b.split.utterances()) out.push_back(embed_sentence(u.tokens, table));
  return out;
}

std::vector<Tensor> matrix_rows(const Tensor& m) {
  const std::size_t n = m.extent(0), d = m.extent(1);
  std::vector<Tensor> rows;
  rows.reserve(n);
  const auto v = m.values();
  for (std::size_t i = 0; i < n; ++i)
    rows.push_back(Tensor::from({d}, {v.begin() + static_cast<std::ptrdiff_t>(i * d),
                                      v.begin() + static_cast<std::ptrdiff_t>((i + 1) * d)}));
  return rows;
}

// ---------------------------------------------------------------- metrics

struct SplitPredictions {
  std::vector<double> pred_a, pred_v, gold_a, gold_v;
};

double split_metric(const SplitPredictions& p, const Bundle& b, CccScope scope) {
  if (scope == CccScope::Pooled) return mean_ccc(p.pred_a, p.gold_a, p.pred_v, p.gold_v);
  double sum = 0.0;
  std::size_t counted = 0;
  for (const auto& video : b.split.videos()) {
    if (video.rows.size() < 2) continue;
    std::vector<double> pa, pv, ga, gv;
    for (std::size_t row : video.rows) {
      pa.push_back(p.pred_a[row]);
      pv.push_back(p.pred_v[row]);
      ga.push_back(p.gold_a[row]);
      gv.push_back(p.gold_v[row]);
    }
    sum += mean_ccc(pa, ga, pv, gv);
    ++counted;
  }
  if (counted == 0) throw PipelineError("no video with at least 2 utterances for per-video metric");
  return sum / static_cast<double>(counted);
}

SplitPredictions collect_predictions(const Bundle& b,
                                     const std::function<Tensor(std::size_t)>& predict) {
  SplitPredictions out;
  const std::size_t n = b.split.utterances().size();
  out.pred_a.reserve(n);
  for (std::size_t row = 0; row < n; ++row) {
    Tensor p = predict(row);
    out.pred_a.push_back(p.values()[0]);
    out.pred_v.push_back(p.values()[1]);
    out.gold_a.push_back(b.gold[row][0]);
    out.gold_v.push_back(b.gold[row][1]);
  }
  return out;
}

// ---------------------------------------------------------------- training

std::vector<std::vector<double>> snapshot_params(const std::vector<Tensor>& params) {
  std::vector<std::vector<double>> out;
  out.reserve(params.size());
  for (const auto& p : params) out.emplace_back(p.values().begin(), p.values().end());
  return out;
}

void restore_params(std::vector<Tensor>& params, const std::vector<std::vector<double>>& snap) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto v = params[i].mutable_values();
    std::copy(snap[i].begin(), snap[i].end(), v.begin());
  }
}

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  return idx;
}

Tensor gold_tensor(const Bundle& b, std::size_t row) {
  return Tensor::from({2}, {b.gold[row][0], b.gold[row][1]});
}

/// Shared stage-1 loop: batch MSE over utterances, per-epoch validation,
/// best-validation snapshot restored at the end.
void fit_stage1(Stage stage, const std::string& name, std::vector<Tensor> params,
                const std::function<Tensor(std::size_t)>& pred_train,
                const std::function<Tensor(std::size_t)>& pred_val, const Bundle& train,
                const Bundle& val, const PipelineConfig& c, std::size_t epochs, std::ostream& log) {
  Optimizer opt(params, OptimizerSettings::from(c));
  Rng shuffle_rng(mix_seed(c.seed, kShuffleStream + stage_index(stage)));
  auto best = snapshot_params(params);
  double best_metric = -2.0;
  std::size_t best_epoch = 0;

  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    auto order = shuffled_indices(train.split.videos().size(), shuffle_rng);
    double epoch_loss = 0.0;
    std::size_t epoch_count = 0;
    for (std::size_t start = 0; start < order.size(); start += c.batch_videos) {
      std::vector<std::size_t> rows;
      const std::size_t stop = std::min(order.size(), start + c.batch_videos);
      for (std::size_t i = start; i < stop; ++i)
        for (std::size_t row : train.split.videos()[order[i]].rows) rows.push_back(row);
      opt.zero_grad();
      std::vector<Tensor> sq;
      sq.reserve(rows.size());
      for (std::size_t row : rows) {
        Tensor d = sub(pred_train(row), gold_tensor(train, row));
        sq.push_back(sum(mul(d, d)));
      }
      Tensor loss = scale(add_n(sq), 1.0 / static_cast<double>(rows.size()));
      loss.backward();
      opt.step();
      epoch_loss += loss.item() * static_cast<double>(rows.size());
      epoch_count += rows.size();
    }
    const double val_metric = split_metric(collect_predictions(val, pred_val), val, c.eval_pool);
    log << name << " epoch " << epoch << " train_mse=" << fmt6(epoch_loss / epoch_count)
        << " val_mean_ccc=" << fmt6(val_metric) << "\n";
    if (val_metric > best_metric) {
      best_metric = val_metric;
      best_epoch = epoch;
      best = snapshot_params(params);
    }
  }
  restore_params(params, best);
  if (epochs > 0)
    log << name << " selected epoch " << best_epoch << " val_mean_ccc=" << fmt6(best_metric) << "\n";
}

// per-video sequence inputs for the context stages
struct VideoInput {
  Tensor X;       // [T x d] constant
  Tensor gold_a;  // [T]
  Tensor gold_v;  // [T]
};

std::vector<VideoInput> make_video_inputs(const Bundle& b, const Tensor& features) {
  if (features.extent(0) != b.split.utterances().size())
    throw PipelineError("feature rows (" + std::to_string(features.extent(0)) +
                        ") do not match manifest utterances (" +
                        std::to_string(b.split.utterances().size()) + ")");
  const std::size_t d = features.extent(1);
  const auto fv = features.values();
  std::vector<VideoInput> out;
  out.reserve(b.split.videos().size());
  for (const auto& video : b.split.videos()) {
    const std::size_t T = video.rows.size();
    std::vector<double> x(T * d), ga(T), gv(T);
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t row = video.rows[t];
      std::copy_n(fv.data() + row * d, d, x.data() + t * d);
      ga[t] = b.gold[row][0];
      gv[t] = b.gold[row][1];
    }
    out.push_back({Tensor::from({T, d}, std::move(x)), Tensor::from({T}, std::move(ga)),
                   Tensor::from({T}, std::move(gv))});
  }
  return out;
}

Tensor video_total_loss(const Tensor& pred, const VideoInput& video, double ccc_weight) {
  Tensor pa = select_col(pred, 0);
  Tensor pv = select_col(pred, 1);
  if (video.gold_a.numel() < 2)  // concordance needs a series
    return add(mse(pa, video.gold_a), mse(pv, video.gold_v));
  return add(total_loss(pa, video.gold_a, ccc_weight), total_loss(pv, video.gold_v, ccc_weight));
}

SplitPredictions collect_context_predictions(const std::vector<VideoInput>& videos,
                                             const ContextEncoderParams& p) {
  SplitPredictions out;
  for (const auto& video : videos) {
    const std::size_t T = video.X.extent(0);
    Tensor pred = context_predict(video.X, p, AttentionMask::all_valid(T));
    const auto pv = pred.values();
    for (std::size_t t = 0; t < T; ++t) {
      out.pred_a.push_back(pv[t * 2]);
      out.pred_v.push_back(pv[t * 2 + 1]);
      out.gold_a.push_back(video.gold_a.values()[t]);
      out.gold_v.push_back(video.gold_v.values()[t]);
    }
  }
  return out;
}

void fit_context(Stage stage, const std::string& name, ContextEncoderParams& model,
                 const std::vector<VideoInput>& train_videos,
                 const std::vector<VideoInput>& val_videos, const Bundle& val_bundle,
                 const PipelineConfig& c, std::size_t epochs, std::ostream& log) {
  std::vector<Tensor> params = model.parameters();
  Optimizer opt(params, OptimizerSettings::from(c));
  Rng shuffle_rng(mix_seed(c.seed, kShuffleStream + stage_index(stage)));
  auto best = snapshot_params(params);
  double best_metric = -2.0;
  std::size_t best_epoch = 0;

  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    auto order = shuffled_indices(train_videos.size(), shuffle_rng);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += c.batch_videos) {
      const std::size_t stop = std::min(order.size(), start + c.batch_videos);
      opt.zero_grad();
      Tensor loss;
      if (c.ccc_scope == CccScope::Video) {
        std::vector<Tensor> per_video;
        for (std::size_t i = start; i < stop; ++i) {
          const auto& video = train_videos[order[i]];
          Tensor pred = context_predict(video.X, model, AttentionMask::all_valid(video.X.extent(0)));
          per_video.push_back(video_total_loss(pred, video, c.ccc_weight));
        }
        loss = scale(add_n(per_video), 1.0 / static_cast<double>(per_video.size()));
      } else {  // pooled within the batch
        std::vector<Tensor> preds_a, preds_v, golds_a, golds_v;
        for (std::size_t i = start; i < stop; ++i) {
          const auto& video = train_videos[order[i]];
          Tensor pred = context_predict(video.X, model, AttentionMask::all_valid(video.X.extent(0)));
          preds_a.push_back(select_col(pred, 0));
          preds_v.push_back(select_col(pred, 1));
          golds_a.push_back(video.gold_a);
          golds_v.push_back(video.gold_v);
        }
        Tensor pa = concat(preds_a, 0), pv = concat(preds_v, 0);
        Tensor ga = concat(golds_a, 0), gv = concat(golds_v, 0);
        loss = add(total_loss(pa, ga, c.ccc_weight), total_loss(pv, gv, c.ccc_weight));
      }
      loss.backward();
      opt.step();
      epoch_loss += loss.item();
      ++batches;
    }
    const double val_metric =
        split_metric(collect_context_predictions(val_videos, model), val_bundle, c.eval_pool);
    log << name << " epoch " << epoch << " train_loss=" << fmt6(epoch_loss / batches)
        << " val_mean_ccc=" << fmt6(val_metric) << "\n";
    if (val_metric > best_metric) {
      best_metric = val_metric;
      best_epoch = epoch;
      best = snapshot_params(params);
    }
  }
  restore_params(params, best);
  if (epochs > 0)
    log << name << " selected epoch " << best_epoch << " val_mean_ccc=" << fmt6(best_metric) << "\n";
}

// ---------------------------------------------------------------- models

struct TextModel {
  EmbeddingTable table;
  TextEncoderParams p;
};

TextModel build_text_model(const PipelineConfig& c, const PipelinePaths& paths, std::uint64_t init_stream) {
  TextModel m{load_embeddings(paths.data() / "embeddings.txt"), {}};
  Rng rng(mix_seed(c.seed, init_stream));
  m.p = make_text_encoder(m.table.dim(), rng, c.text_kernel_widths, c.text_feature_maps);
  return m;
}

VisualEncoderParams build_visual_model(const PipelineConfig& c) {
  Rng rng(mix_seed(c.seed, kInitStream + stage_index(Stage::Visual)));
  return make_visual_encoder(c.visual_channels, c.visual_kernel, c.visual_feature_dim, rng);
}

struct AudioModel {
  std::vector<std::size_t> selected;
  StandardizeStats stats;
  AudioEncoderParams p;
};

AudioModel build_audio_model_from_train(const PipelineConfig& c, const Bundle& train) {
  AudioModel m;
  std::vector<double> ya, yv;
  for (const auto& u : train.split.utterances()) {
    ya.push_back(u.arousal);
    yv.push_back(u.valence);
  }
  const Tensor& X = train.split.audio_features();
  m.selected = kbest_merge(X, ya, yv, c.audio_k_best);
  m.stats = column_stats(X);
  Rng rng(mix_seed(c.seed, kInitStream + stage_index(Stage::Audio)));
  m.p = make_audio_encoder(m.selected.size(), c.audio_hidden, rng);
  return m;
}

/// Standardized selected columns, the audio feature rows of the context stage.
Tensor audio_feature_matrix(const Bundle& b, const AudioModel& m) {
  return select_columns(standardize_apply(b.split.audio_features(), m.stats), m.selected);
}

EncoderConfig encoder_config(const PipelineConfig& c, std::size_t d_model) {
  EncoderConfig ec;
  ec.d_model = d_model;
  ec.d_k = c.enc_d_k;
  ec.d_v = c.enc_d_v;
  ec.heads = c.enc_heads;
  ec.blocks = c.enc_blocks;
  ec.d_ff = d_model * c.enc_ff_mult;
  ec.eps = c.enc_eps;
  return ec;
}

// ---------------------------------------------------------------- features on disk

std::string modality_name(Stage stage) {
  switch (stage) {
    case Stage::Text:
    case Stage::ContextText: return "text";
    case Stage::Visual:
    case Stage::ContextVisual: return "visual";
    case Stage::Audio:
    case Stage::ContextAudio: return "audio";
    default: throw ContractError("no single modality for stage");
  }
}

std::filesystem::path feature_file(const PipelinePaths& paths, const std::string& modality,
                                   const std::string& split) {
  return paths.features() / (modality + "_" + split + ".omgt");
}

void write_features(const PipelinePaths& paths, const std::string& modality, const std::string& split,
                    const Tensor& matrix, const Bundle& b) {
  std::filesystem::create_directories(paths.features());
  write_tensor_file(feature_file(paths, modality, split), matrix);
  std::ofstream ids(paths.features() / (modality + "_" + split + "_ids.txt"), std::ios::trunc);
  for (const auto& u : b.split.utterances()) ids << u.id() << "\n";
  if (!ids) throw PipelineError("failed writing feature ids for " + modality + " " + split);
}

Tensor load_features(const PipelinePaths& paths, const std::string& modality, const std::string& split,
                     const Bundle& b) {
  const auto path = feature_file(paths, modality, split);
  if (!std::filesystem::exists(path))
    throw PipelineError("missing features " + path.string() + "; run extract-features --stage " +
                        modality + " first");
  Tensor t = read_tensor_file(path);
  if (t.rank() != 2) throw PipelineError(path.string() + ": expected a 2-D feature matrix");
  const auto ids_path = paths.features() / (modality + "_" + split + "_ids.txt");
  std::ifstream ids(ids_path);
  if (!ids) throw PipelineError("missing feature id sidecar " + ids_path.string());
  std::string line;
  std::size_t row = 0;
  const auto& utts = b.split.utterances();
  while (std::getline(ids, line)) {
    if (line.empty()) continue;
    if (row >= utts.size() || line != utts[row].id())
      throw PipelineError(ids_path.string() + ": id mismatch at row " + std::to_string(row));
    ++row;
  }
  if (row != utts.size())
    throw PipelineError(ids_path.string() + ": " + std::to_string(row) + " ids for " +
                        std::to_string(utts.size()) + " utterances");
  return t;
}

std::vector<SketchParams> make_fusion_sketches(const PipelineConfig& c, std::size_t wl, std::size_t wv,
                                               std::size_t wa) {
  return {make_sketch(wl, c.mcb_dim, mix_seed(c.seed, kSketchStream)),
          make_sketch(wv, c.mcb_dim, mix_seed(c.seed, kSketchStream + 1)),
          make_sketch(wa, c.mcb_dim, mix_seed(c.seed, kSketchStream + 2))};
}

Tensor fuse_matrix(const PipelineConfig& c, const Tensor& ft, const Tensor& fv, const Tensor& fa,
                   const std::vector<SketchParams>& sketches) {
  const std::size_t n = ft.extent(0);
  if (fv.extent(0) != n || fa.extent(0) != n)
    throw PipelineError("modality feature row counts differ");
  auto rt = matrix_rows(ft);
  auto rv = matrix_rows(fv);
  auto ra = matrix_rows(fa);
  std::vector<double> out;
  std::size_t width = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Tensor fused = c.fusion_variant == FusionVariant::Concat
                       ? concat_fusion(rt[i], rv[i], ra[i])
                       : mcb3(rt[i], rv[i], ra[i], sketches[0], sketches[1], sketches[2]);
    width = fused.numel();
    out.insert(out.end(), fused.values().begin(), fused.values().end());
  }
  return Tensor::from({n, width}, std::move(out));
}

// ---------------------------------------------------------------- stage runners

void save_stage_checkpoint(const PipelinePaths& paths, const PipelineConfig& c,
                           const std::string& artifact, NamedTensors named,
                           std::vector<SketchParams> sketches = {},
                           std::vector<std::size_t> selected = {}, StandardizeStats stats = {}) {
  std::filesystem::create_directories(paths.checkpoints());
  Checkpoint ck;
  ck.stage = artifact;
  ck.config_snapshot = c.serialize();
  for (auto& [name, t] : named) ck.tensors.emplace_back(name, t.detached());
  ck.sketches = std::move(sketches);
  ck.selected_indices = std::move(selected);
  ck.audio_stats = std::move(stats);
  save_checkpoint(paths.checkpoint_file(artifact), ck);
}

void train_text_stage(const PipelineConfig& c, const PipelinePaths& paths, std::ostream& log) {
  TextModel m = build_text_model(c, paths, kInitStream + stage_index(Stage::Text));
  Bundle train = load_bundle(paths.data() / "train");
  Bundle val = load_bundle(paths.data() / "validation");
  auto train_windows = build_windows(train, m.table);
  auto val_windows = build_windows(val, m.table);
  std::vector<Tensor> params;
  for (auto& [name, t] : name_text(m.p)) params.push_back(t);
  fit_stage1(Stage::Text, "text", params,
             [&](std::size_t row) { return text_forward(train_windows[row], m.p).prediction; },
             [&](std::size_t row) { return text_forward(val_windows[row], m.p).prediction; }, train,
             val, c, c.epochs_text, log);
  save_stage_checkpoint(paths, c, "text", name_text(m.p));
}

void train_visual_stage(const PipelineConfig& c, const PipelinePaths& paths, std::ostream& log) {
  VisualEncoderParams p = build_visual_model(c);
  Bundle train = load_bundle(paths.data() / "train");
  Bundle val = load_bundle(paths.data() / "validation");
  std::vector<Tensor> params = p.parameters();
  auto predict = [&p](const Bundle& b) {
    return [&p, &b](std::size_t row) {
      return visual_forward(sample_frames(b.split.clip(row)), p).prediction;
    };
  };
  fit_stage1(Stage::Visual, "visual", params, predict(train), predict(val), train, val, c,
             c.epochs_visual, log);
  save_stage_checkpoint(paths, c, "visual", name_visual(p));
}

void train_audio_stage(const PipelineConfig& c, const PipelinePaths& paths, std::ostream& log) {
  Bundle train = load_bundle(paths.data() / "train");
  Bundle val = load_bundle(paths.data() / "validation");
  AudioModel m = build_audio_model_from_train(c, train);
  log << "audio selected " << m.selected.size() << " of " << train.split.audio_features().extent(1)
      << " features\n";
  auto train_rows = matrix_rows(audio_feature_matrix(train, m));
  auto val_rows = matrix_rows(audio_feature_matrix(val, m));
  std::vector<Tensor> params = m.p.parameters();
  fit_stage1(Stage::Audio, "audio", params,
             [&](std::size_t row) { return audio_forward(train_rows[row], m.p).prediction; },
             [&](std::size_t row) { return audio_forward(val_rows[row], m.p).prediction; }, train, val,
             c, c.epochs_audio, log);
  save_stage_checkpoint(paths, c, "audio", name_audio(m.p), {}, m.selected, m.stats);
}

// rebuilds a trained stage-1 model from its checkpoint
TextModel restore_text_model(const PipelineConfig& c, const PipelinePaths& paths) {
  TextModel m = build_text_model(c, paths, kInitStream + stage_index(Stage::Text));
  apply_checkpoint(load_stage_checkpoint(paths, "text"), name_text(m.p));
  return m;
}

VisualEncoderParams restore_visual_model(const PipelineConfig& c, const PipelinePaths& paths) {
  VisualEncoderParams p = build_visual_model(c);
  apply_checkpoint(load_stage_checkpoint(paths, "visual"), name_visual(p));
  return p;
}

AudioModel restore_audio_model(const PipelineConfig& c, const PipelinePaths& paths) {
  Checkpoint ck = load_stage_checkpoint(paths, "audio");
  AudioModel m;
  m.selected = ck.selected_indices;
  m.stats = ck.audio_stats;
  if (m.selected.empty() || m.stats.mean.empty())
    throw PipelineError("audio checkpoint lacks feature selection state");
  Rng rng(mix_seed(c.seed, kInitStream + stage_index(Stage::Audio)));
  m.p = make_audio_encoder(m.selected.size(), c.audio_hidden, rng);
  apply_checkpoint(ck, name_audio(m.p));
  return m;
}

Tensor extract_matrix(Stage stage, const PipelineConfig& c, const PipelinePaths& paths,
                      const Bundle& b) {
  const std::size_t n = b.split.utterances().size();
  std::vector<double> flat;
  std::size_t width = 0;
  if (stage == Stage::Text) {
    TextModel m = restore_text_model(c, paths);
    for (std::size_t row = 0; row < n; ++row) {
      Tensor f = text_forward(embed_sentence(b.split.utterances()[row].tokens, m.table), m.p).features;
      width = f.numel();
      flat.insert(flat.end(), f.values().begin(), f.values().end());
    }
  } else if (stage == Stage::Visual) {
    VisualEncoderParams p = restore_visual_model(c, paths);
    for (std::size_t row = 0; row < n; ++row) {
      Tensor f = visual_forward(sample_frames(b.split.clip(row)), p).features;
      width = f.numel();
      flat.insert(flat.end(), f.values().begin(), f.values().end());
    }
  } else if (stage == Stage::Audio) {
    AudioModel m = restore_audio_model(c, paths);
    Tensor matrix = audio_feature_matrix(b, m);
    return matrix;
  } else {
    throw ContractError("extract_matrix: not a stage-1 stage");
  }
  return Tensor::from({n, width}, std::move(flat));
}

void train_context_stage(Stage stage, const PipelineConfig& c, const PipelinePaths& paths,
                         std::ostream& log) {
  Bundle train = load_bundle(paths.data() / "train");
  Bundle val = load_bundle(paths.data() / "validation");
  const std::string artifact = stage_artifact_name(stage, c);

  Tensor train_features, val_features;
  std::vector<SketchParams> sketches;
  if (stage == Stage::Fusion) {
    Tensor ft = load_features(paths, "text", "train", train);
    Tensor fv = load_features(paths, "visual", "train", train);
    Tensor fa = load_features(paths, "audio", "train", train);
    if (c.fusion_variant == FusionVariant::Mcb)
      sketches = make_fusion_sketches(c, ft.extent(1), fv.extent(1), fa.extent(1));
    train_features = fuse_matrix(c, ft, fv, fa, sketches);
    Tensor gt = load_features(paths, "text", "validation", val);
    Tensor gv = load_features(paths, "visual", "validation", val);
    Tensor ga = load_features(paths, "audio", "validation", val);
    val_features = fuse_matrix(c, gt, gv, ga, sketches);
  } else {
    const std::string modality = modality_name(stage);
    train_features = load_features(paths, modality, "train", train);
    val_features = load_features(paths, modality, "validation", val);
  }

  auto train_videos = make_video_inputs(train, train_features);
  auto val_videos = make_video_inputs(val, val_features);
  Rng rng(mix_seed(c.seed, kInitStream + stage_index(stage)));
  ContextEncoderParams model = make_context_encoder(encoder_config(c, train_features.extent(1)), rng);
  const std::size_t epochs = stage == Stage::Fusion ? c.epochs_fusion : c.epochs_context;
  fit_context(stage, artifact, model, train_videos, val_videos, val, c, epochs, log);
  save_stage_checkpoint(paths, c, artifact, name_context(model), sketches);
}

}  // namespace

Stage parse_stage(const std::string& name) {
  if (name == "text") return Stage::Text;
  if (name == "visual") return Stage::Visual;
  if (name == "audio") return Stage::Audio;
  if (name == "context-text") return Stage::ContextText;
  if (name == "context-visual") return Stage::ContextVisual;
  if (name == "context-audio") return Stage::ContextAudio;
  if (name == "fusion") return Stage::Fusion;
  throw InputError("unknown stage '" + name +
                   "' (expected text|visual|audio|context-text|context-visual|context-audio|fusion)");
}

std::string stage_cli_name(Stage stage) {
  switch (stage) {
    case Stage::Text: return "text";
    case Stage::Visual: return "visual";
    case Stage::Audio: return "audio";
    case Stage::ContextText: return "context-text";
    case Stage::ContextVisual: return "context-visual";
    case Stage::ContextAudio: return "context-audio";
    case Stage::Fusion: return "fusion";
  }
  throw ContractError("unreachable stage");
}

std::string stage_artifact_name(Stage stage, const PipelineConfig& config) {
  if (stage == Stage::Fusion) return "fusion-" + to_string(config.fusion_variant);
  return stage_cli_name(stage);
}

void run_gen_data(const PipelineConfig& config, const PipelinePaths& paths) {
  generate_synthetic(config, paths.data());
}

void run_train(Stage stage, const PipelineConfig& config, const PipelinePaths& paths,
               std::ostream& log) {
  switch (stage) {
    case Stage::Text: train_text_stage(config, paths, log); return;
    case Stage::Visual: train_visual_stage(config, paths, log); return;
    case Stage::Audio: train_audio_stage(config, paths, log); return;
    case Stage::ContextText:
    case Stage::ContextVisual:
    case Stage::ContextAudio:
    case Stage::Fusion: train_context_stage(stage, config, paths, log); return;
  }
}

void run_extract(Stage stage, const PipelineConfig& config, const PipelinePaths& paths) {
  if (stage != Stage::Text && stage != Stage::Visual && stage != Stage::Audio)
    throw InputError("extract-features expects a stage-1 stage (text|visual|audio)");
  const std::string modality = modality_name(stage);
  for (const std::string split : {"train", "validation"}) {
    Bundle b = load_bundle(paths.data() / split);
    write_features(paths, modality, split, extract_matrix(stage, config, paths, b), b);
  }
}

std::string run_evaluate(Stage stage, const std::string& split, const PipelineConfig& config,
                         const PipelinePaths& paths) {
  if (split != "train" && split != "validation")
    throw InputError("unknown split '" + split + "' (expected train|validation)");
  Bundle b = load_bundle(paths.data() / split);
  const std::string artifact = stage_artifact_name(stage, config);

  SplitPredictions preds;
  if (stage == Stage::Text) {
    TextModel m = restore_text_model(config, paths);
    preds = collect_predictions(b, [&](std::size_t row) {
      return text_forward(embed_sentence(b.split.utterances()[row].tokens, m.table), m.p).prediction;
    });
  } else if (stage == Stage::Visual) {
    VisualEncoderParams p = restore_visual_model(config, paths);
    preds = collect_predictions(b, [&](std::size_t row) {
      return visual_forward(sample_frames(b.split.clip(row)), p).prediction;
    });
  } else if (stage == Stage::Audio) {
    AudioModel m = restore_audio_model(config, paths);
    auto rows = matrix_rows(audio_feature_matrix(b, m));
    preds = collect_predictions(b, [&](std::size_t row) { return audio_forward(rows[row], m.p).prediction; });
  } else {
    Tensor features;
    std::vector<SketchParams> sketches;
    Checkpoint ck = load_stage_checkpoint(paths, artifact);
    if (stage == Stage::Fusion) {
      Tensor ft = load_features(paths, "text", split, b);
      Tensor fv = load_features(paths, "visual", split, b);
      Tensor fa = load_features(paths, "audio", split, b);
      if (config.fusion_variant == FusionVariant::Mcb) {
        if (ck.sketches.size() != 3)
          throw PipelineError("fusion checkpoint lacks the three sketch maps");
        sketches = ck.sketches;
      }
      features = fuse_matrix(config, ft, fv, fa, sketches);
    } else {
      features = load_features(paths, modality_name(stage), split, b);
    }
    auto videos = make_video_inputs(b, features);
    Rng rng(mix_seed(config.seed, kInitStream + stage_index(stage)));
    ContextEncoderParams model = make_context_encoder(encoder_config(config, features.extent(1)), rng);
    apply_checkpoint(ck, name_context(model));
    preds = collect_context_predictions(videos, model);
  }

  const double ca = ccc_value(preds.pred_a, preds.gold_a);
  const double cv = ccc_value(preds.pred_v, preds.gold_v);
  const std::string line = format_metric_line(split, artifact, ca, cv);
  std::filesystem::create_directories(paths.reports());
  const auto report_path = paths.reports() / (artifact + "_" + split + ".csv");
  std::ofstream out(report_path, std::ios::trunc);
  out << line << "\n";
  if (!out) throw PipelineError("failed writing report " + report_path.string());
  return line;
}

OverfitResult overfit_single_video(Stage stage, const PipelineConfig& config,
                                   const PipelinePaths& paths, std::size_t max_steps,
                                   double stop_loss, std::ostream& log) {
  Bundle train = load_bundle(paths.data() / "train");
  if (train.split.videos().empty()) throw PipelineError("no training videos");
  const auto& video = train.split.videos()[0];
  const std::vector<std::size_t> rows = video.rows;

  // per-utterance prediction for stage 1, per-video for context stages
  std::function<Tensor(std::size_t)> predict_row;
  std::vector<Tensor> params;
  std::vector<VideoInput> vids;

  TextModel text_model;
  VisualEncoderParams visual_model;
  AudioModel audio_model;
  std::vector<Tensor> audio_rows;
  ContextEncoderParams context_model;
  std::vector<Tensor> windows;

  const bool stage1 = stage == Stage::Text || stage == Stage::Visual || stage == Stage::Audio;
  if (stage == Stage::Text) {
    text_model = build_text_model(config, paths, kInitStream + stage_index(stage));
    for (const auto& u : train.split.utterances())
      windows.push_back(embed_sentence(u.tokens, text_model.table));
    predict_row = [&](std::size_t row) { return text_forward(windows[row], text_model.p).prediction; };
    for (auto& [n, t] : name_text(text_model.p)) params.push_back(t);
  } else if (stage == Stage::Visual) {
    visual_model = build_visual_model(config);
    predict_row = [&](std::size_t row) {
      return visual_forward(sample_frames(train.split.clip(row)), visual_model).prediction;
    };
    params = visual_model.parameters();
  } else if (stage == Stage::Audio) {
    audio_model = build_audio_model_from_train(config, train);
    audio_rows = matrix_rows(audio_feature_matrix(train, audio_model));
    predict_row = [&](std::size_t row) {
      return audio_forward(audio_rows[row], audio_model.p).prediction;
    };
    params = audio_model.p.parameters();
  } else {
    Tensor features;
    std::vector<SketchParams> sketches;
    if (stage == Stage::Fusion) {
      Tensor ft = load_features(paths, "text", "train", train);
      Tensor fv = load_features(paths, "visual", "train", train);
      Tensor fa = load_features(paths, "audio", "train", train);
      if (config.fusion_variant == FusionVariant::Mcb)
        sketches = make_fusion_sketches(config, ft.extent(1), fv.extent(1), fa.extent(1));
      features = fuse_matrix(config, ft, fv, fa, sketches);
    } else {
      features = load_features(paths, modality_name(stage), "train", train);
    }
    vids = make_video_inputs(train, features);
    Rng rng(mix_seed(config.seed, kInitStream + stage_index(stage)));
    context_model = make_context_encoder(encoder_config(config, features.extent(1)), rng);
    params = context_model.parameters();
  }

  Optimizer opt(params, OptimizerSettings::from(config));
  OverfitResult result;
  for (std::size_t step = 1; step <= max_steps; ++step) {
    opt.zero_grad();
    Tensor loss;
    if (stage1) {
      std::vector<Tensor> sq;
      for (std::size_t row : rows) {
        Tensor d = sub(predict_row(row), gold_tensor(train, row));
        sq.push_back(sum(mul(d, d)));
      }
      loss = scale(add_n(sq), 1.0 / static_cast<double>(rows.size()));
    } else {
      const auto& v = vids[0];
      Tensor pred = context_predict(v.X, context_model, AttentionMask::all_valid(v.X.extent(0)));
      loss = video_total_loss(pred, v, config.ccc_weight);
    }
    loss.backward();
    opt.step();
    result.steps = step;

    // stop on the summed total loss over both targets of this video
    std::vector<double> pa, pv, ga, gv;
    if (stage1) {
      for (std::size_t row : rows) {
        Tensor p = predict_row(row);
        pa.push_back(p.values()[0]);
        pv.push_back(p.values()[1]);
        ga.push_back(train.gold[row][0]);
        gv.push_back(train.gold[row][1]);
      }
    } else {
      const auto& v = vids[0];
      Tensor pred = context_predict(v.X, context_model, AttentionMask::all_valid(v.X.extent(0)));
      for (std::size_t t = 0; t < v.X.extent(0); ++t) {
        pa.push_back(pred.values()[t * 2]);
        pv.push_back(pred.values()[t * 2 + 1]);
        ga.push_back(v.gold_a.values()[t]);
        gv.push_back(v.gold_v.values()[t]);
      }
    }
    Tensor ta = Tensor::from({pa.size()}, pa), tga = Tensor::from({ga.size()}, ga);
    Tensor tv = Tensor::from({pv.size()}, pv), tgv = Tensor::from({gv.size()}, gv);
    result.loss = total_loss(ta, tga, config.ccc_weight).item() +
                  total_loss(tv, tgv, config.ccc_weight).item();
    if (result.loss < stop_loss) break;
  }
  log << stage_artifact_name(stage, config) << " overfit steps=" << result.steps
      << " total_loss=" << fmt6(result.loss) << "\n";
  return result;
}

// ---------------------------------------------------------------- gradient suite

namespace {

struct GradCheckCase {
  std::string name;
  double err;
  double tol;
};

GradCheckCase check(const std::string& name, double tol, const std::function<Tensor()>& loss,
                    const std::vector<Tensor>& params, double h = 1e-5) {
  return {name, gradient_check_params(loss, params, h), tol};
}

Tensor rand_param(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  Tensor t = Tensor::from(std::move(shape), std::move(v));
  t.set_requires_grad(true);
  return t;
}

}  // namespace

bool run_grad_check(std::ostream& out) {
  Rng rng(20240811);
  std::vector<GradCheckCase> cases;

  {
    Tensor A = rand_param({3, 4}, rng), B = rand_param({4, 2}, rng);
    Tensor C = rand_param({3, 2}, rng);
    cases.push_back(check("matmul", 1e-6, [&] { return sum(mul(matmul(A, B), C)); }, {A, B}));
  }
  {
    Rng r2(7);
    DenseParams p = make_dense(5, 3, r2);
    Tensor x = rand_param({4, 5}, rng);
    cases.push_back(check("dense", 1e-6, [&] { return sum(dense(x, p)); }, {x, p.W, p.b}));
  }
  {
    // keep probes away from the kink at zero
    std::vector<double> v(12);
    for (double& x : v) x = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.2, 1.0);
    Tensor x = Tensor::from({12}, v);
    x.set_requires_grad(true);
    Tensor w = rand_param({12}, rng);
    cases.push_back(check("relu", 1e-4, [&] { return sum(mul(relu(x), w)); }, {x}));
  }
  {
    Tensor x = rand_param({3, 5}, rng), w = rand_param({3, 5}, rng);
    cases.push_back(check("softmax", 1e-4, [&] { return sum(mul(softmax_rows(x), w)); }, {x}));
  }
  {
    Tensor x = rand_param({3, 6}, rng);
    Tensor gamma = rand_param({6}, rng, 0.5, 1.5), beta = rand_param({6}, rng);
    Tensor w = rand_param({3, 6}, rng);
    cases.push_back(check("layer_norm", 1e-4,
                          [&] { return sum(mul(layer_norm(x, gamma, beta, 1e-5), w)); },
                          {x, gamma, beta}));
  }
  {
    Tensor x = rand_param({6, 3}, rng), k = rand_param({2, 2, 3}, rng);
    Tensor w = rand_param({5, 2}, rng);
    cases.push_back(check("conv1d_valid", 1e-6, [&] { return sum(mul(conv1d_valid(x, k), w)); }, {x, k}));
  }
  {
    Tensor x = rand_param({2, 4, 4, 4}, rng), k = rand_param({3, 2, 3, 3, 3}, rng);
    Tensor b = rand_param({3}, rng);
    Tensor w = rand_param({3, 4, 4, 4}, rng);
    cases.push_back(check("conv3d_same", 1e-6,
                          [&] { return sum(mul(add_channelwise(conv3d_same(x, k), b), w)); },
                          {x, k, b}));
  }
  {
    Tensor x = rand_param({2, 5, 5, 5}, rng);
    Tensor w = rand_param({2, 2, 2, 2}, rng);
    cases.push_back(check("max_pool3d", 1e-6, [&] { return sum(mul(max_pool3d(x, 3), w)); }, {x}));
  }
  {
    Tensor x = rand_param({7, 4}, rng), w = rand_param({4}, rng);
    cases.push_back(check("max_over_time", 1e-6, [&] { return sum(mul(max_over_time(x), w)); }, {x}));
  }
  {
    Tensor x = rand_param({10}, rng);
    SketchParams p = make_sketch(10, 4, 99);
    Tensor w = rand_param({4}, rng);
    cases.push_back(check("count_sketch", 1e-10, [&] { return sum(mul(count_sketch(x, p), w)); }, {x}));
  }
  {
    Tensor a = rand_param({8}, rng), b = rand_param({8}, rng), w = rand_param({8}, rng);
    cases.push_back(
        check("circular_convolution", 1e-6, [&] { return sum(mul(circular_convolution(a, b), w)); }, {a, b}));
  }
  {
    Tensor xl = rand_param({3}, rng), xv = rand_param({4}, rng), xa = rand_param({2}, rng);
    SketchParams pl = make_sketch(3, 8, 1), pv = make_sketch(4, 8, 2), pa = make_sketch(2, 8, 3);
    Tensor w = rand_param({8}, rng);
    cases.push_back(check("mcb3", 1e-6,
                          [&] { return sum(mul(mcb3(xl, xv, xa, pl, pv, pa), w)); }, {xl, xv, xa}));
  }
  {
    Tensor q = rand_param({3, 4}, rng), k = rand_param({3, 4}, rng), v = rand_param({3, 4}, rng);
    Tensor w = rand_param({3, 4}, rng);
    AttentionMask mask = AttentionMask::all_valid(3);
    cases.push_back(check("scaled_dot_attention", 1e-4,
                          [&] { return sum(mul(scaled_dot_attention(q, k, v, mask), w)); }, {q, k, v}));
  }
  {
    Rng r2(21);
    EncoderConfig ec;
    ec.d_model = 6;
    ec.d_k = ec.d_v = 3;
    ec.heads = 2;
    ec.blocks = 1;
    ec.d_ff = 12;
    ContextEncoderParams enc = make_context_encoder(ec, r2);
    Tensor x = rand_param({3, 6}, rng);
    Tensor w = rand_param({3, 6}, rng);
    AttentionMask mask = AttentionMask::all_valid(3);
    std::vector<Tensor> params = enc.blocks[0].mha.parameters();
    params.push_back(x);
    cases.push_back(check("multi_head_attention", 1e-4,
                          [&] { return sum(mul(multi_head_attention(x, enc.blocks[0].mha, mask), w)); },
                          params));
  }
  {
    Rng r2(22);
    EncoderConfig ec;
    ec.d_model = 6;
    ec.d_k = ec.d_v = 3;
    ec.heads = 2;
    ec.blocks = 2;
    ec.d_ff = 12;
    ContextEncoderParams enc = make_context_encoder(ec, r2);
    Tensor x = rand_param({3, 6}, rng);
    Tensor gold_a = rand_param({3}, rng), gold_v = rand_param({3}, rng);
    gold_a.set_requires_grad(false);
    gold_v.set_requires_grad(false);
    AttentionMask mask = AttentionMask::all_valid(3);
    auto loss = [&] {
      Tensor pred = context_predict(x, enc, mask);
      return add(total_loss(select_col(pred, 0), gold_a), total_loss(select_col(pred, 1), gold_v));
    };
    std::vector<Tensor> params = enc.parameters();
    params.push_back(x);
    cases.push_back(check("context_stage_loss", 1e-4, loss, params));
  }
  {
    Tensor x = rand_param({10}, rng), y = rand_param({10}, rng);
    y.set_requires_grad(false);
    cases.push_back(check("total_loss", 1e-6, [&] { return total_loss(x, y); }, {x}, 1e-6));
  }
  {
    Rng r2(23);
    TextEncoderParams p = make_text_encoder(8, r2, {2, 3}, {3, 4});
    Tensor window = rand_param({10, 8}, rng);
    window.set_requires_grad(false);
    Tensor gold = Tensor::from({2}, {0.3, -0.2});
    auto loss = [&] {
      Tensor d = sub(text_forward(window, p).prediction, gold);
      return sum(mul(d, d));
    };
    cases.push_back(check("text_stage_loss", 1e-4, loss, p.parameters()));
  }
  {
    Rng r2(24);
    VisualEncoderParams p = make_visual_encoder(3, 3, 4, r2, 2, 6);
    Tensor x = rand_param({2, 6, 6, 6}, rng, 0.0, 1.0);
    x.set_requires_grad(false);
    Tensor gold = Tensor::from({2}, {0.6, 0.1});
    auto loss = [&] {
      Tensor d = sub(visual_net_forward(x, p).prediction, gold);
      return sum(mul(d, d));
    };
    cases.push_back(check("visual_stage_loss", 1e-4, loss, p.parameters()));
  }
  {
    Rng r2(25);
    AudioEncoderParams p = make_audio_encoder(5, 4, r2);
    Tensor x = rand_param({5}, rng);
    x.set_requires_grad(false);
    Tensor gold = Tensor::from({2}, {-0.4, 0.9});
    auto loss = [&] {
      Tensor d = sub(audio_forward(x, p).prediction, gold);
      return sum(mul(d, d));
    };
    cases.push_back(check("audio_stage_loss", 1e-4, loss, p.parameters()));
  }
  {
    Rng r2(26);
    EncoderConfig ec;
    ec.d_model = 8;
    ec.d_k = ec.d_v = 4;
    ec.heads = 2;
    ec.blocks = 1;
    ec.d_ff = 16;
    ContextEncoderParams enc = make_context_encoder(ec, r2);
    Tensor xl = rand_param({3}, rng), xv = rand_param({4}, rng), xa = rand_param({2}, rng);
    SketchParams pl = make_sketch(3, 8, 4), pv = make_sketch(4, 8, 5), pa = make_sketch(2, 8, 6);
    Tensor gold_a = Tensor::from({2}, {0.2, 0.8});
    Tensor gold_v = Tensor::from({2}, {-0.1, 0.4});
    AttentionMask mask = AttentionMask::all_valid(2);
    auto loss = [&] {
      // two fused utterances stacked as a sequence
      Tensor f1 = mcb3(xl, xv, xa, pl, pv, pa);
      Tensor f2 = mcb3(scale(xl, 0.5), scale(xv, -1.0), xa, pl, pv, pa);
      Tensor X = reshape(concat({f1, f2}, 0), {2, 8});
      Tensor pred = context_predict(X, enc, mask);
      return add(total_loss(select_col(pred, 0), gold_a), total_loss(select_col(pred, 1), gold_v));
    };
    std::vector<Tensor> params = enc.parameters();
    params.push_back(xl);
    params.push_back(xv);
    params.push_back(xa);
    cases.push_back(check("fusion_stage_loss", 1e-4, loss, params));
  }
  {
    Tensor x = rand_param({9}, rng, -2.0, 2.0);
    cases.push_back(check("sine_sum", 1e-6, [&] { return sum(sine(x)); }, {x}));
  }

  bool all_pass = true;
  for (const auto& c : cases) {
    const bool pass = c.err < c.tol;
    all_pass = all_pass && pass;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-24s max_rel_err=%.3e tol=%.0e %s", c.name.c_str(), c.err,
                  c.tol, pass ? "PASS" : "FAIL");
    out << buf << "\n";
  }
  return all_pass;
}

}  // namespace affect
