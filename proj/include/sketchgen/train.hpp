#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "sketchgen/adam.hpp"
#include "sketchgen/checkpoint.hpp"
#include "sketchgen/loss.hpp"
#include "sketchgen/models.hpp"
#include "sketchgen/synth.hpp"

namespace sketchgen {

enum class LossKind { mse, psim };

inline const char* to_string(LossKind k) {
  return k == LossKind::mse ? "mse" : "psim";
}

struct TrainConfig {
  int epochs = 20;
  int batch_size = 16;
  double lr = 2e-4;
  std::uint64_t seed = 1;
  LossKind loss = LossKind::psim;
  bool flip = true;
  Conditioning conditioning = Conditioning::batchnorm;
  SkipVariant skip_variant = SkipVariant::none;
  double dropout_rate = 0.5;  // phase-1 classifier head
};

// ---------------------------------------------------------------------------
// Img <-> Tensor bridges
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> to_tensor_batch(const std::vector<const Img*>& imgs) {
  if (imgs.empty()) throw ShapeError("to_tensor_batch: empty batch");
  const int c = imgs[0]->c, h = imgs[0]->h, w = imgs[0]->w;
  Tensor<T> out({int(imgs.size()), c, h, w});
  T* o = out.data();
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    if (imgs[i]->c != c || imgs[i]->h != h || imgs[i]->w != w)
      throw ShapeError("to_tensor_batch: mixed image shapes");
    for (std::size_t j = 0; j < imgs[i]->v.size(); ++j)
      o[i * imgs[i]->v.size() + j] = T(imgs[i]->v[j]);
  }
  return out;
}

template <typename T>
Img tensor_to_img(const Tensor<T>& t, int sample) {
  if (t.ndim() != 4) throw ShapeError("tensor_to_img: expected 4-d tensor");
  Img img(t.dim(1), t.dim(2), t.dim(3));
  const long n = long(img.v.size());
  for (long i = 0; i < n; ++i)
    img.v[i] = float(t.data()[long(sample) * n + i]);
  return img;
}

// top-k accuracy with deterministic tie-break by class index: a class beats
// the true label only if its score is strictly higher, or equal with a
// smaller index
template <typename T>
double topk_accuracy(const Tensor<T>& logits, const std::vector<int>& labels,
                     int k) {
  if (logits.ndim() != 2 || long(labels.size()) != logits.dim(0))
    throw ShapeError("topk_accuracy: logits " + shape_str(logits.shape()) +
                     " vs " + std::to_string(labels.size()) + " labels");
  if (labels.empty()) throw std::invalid_argument("topk_accuracy: empty set");
  const long n = logits.dim(0), c = logits.dim(1);
  long hits = 0;
  for (long i = 0; i < n; ++i) {
    const T* row = logits.data() + i * c;
    const int lab = labels[i];
    int rank = 0;
    for (long j = 0; j < c; ++j)
      if (row[j] > row[lab] || (row[j] == row[lab] && j < lab)) ++rank;
    if (rank < k) ++hits;
  }
  return double(hits) / double(n);
}

// ---------------------------------------------------------------------------
// Encoder batchnorm statistics, estimated once from data and then frozen
// ---------------------------------------------------------------------------

template <typename T>
void estimate_bn_stats(Encoder<T>& enc, const Tensor<T>& images) {
  Tensor<T> h = images;
  for (std::size_t b = 0; b < enc.convs.size(); ++b) {
    for (std::size_t i = 0; i < enc.convs[b].size(); ++i) {
      Tensor<T> pre = enc.convs[b][i](h);
      const int n = pre.dim(0), c = pre.dim(1);
      const long hw = long(pre.dim(2)) * pre.dim(3);
      auto& bn = enc.bns[b][i];
      for (int ch = 0; ch < c; ++ch) {
        double m = 0, m2 = 0;
        for (int s = 0; s < n; ++s) {
          const T* base = pre.data() + (long(s) * c + ch) * hw;
          for (long j = 0; j < hw; ++j) {
            m += base[j];
            m2 += double(base[j]) * base[j];
          }
        }
        const double cnt = double(n) * hw;
        m /= cnt;
        bn.running_mean.data()[ch] = T(m);
        bn.running_var.data()[ch] = T(std::max(m2 / cnt - m * m, 0.0));
      }
      h = relu(batchnorm_inference(pre, bn));
    }
    h = maxpool2(h);
  }
}

// ---------------------------------------------------------------------------
// Phase 1a: the loss-network sketch classifier
// ---------------------------------------------------------------------------

template <typename T>
struct LossPretrainResult {
  FeatureStack<T> trunk;
  ClassifierHead<T> head;
  double test_top1 = 0;
  std::vector<double> train_losses;  // one smoothed value per epoch
};

namespace detail {

template <typename T>
double check_finite_loss(const Tensor<T>& loss, const char* where) {
  const double v = double(loss.item());
  if (!std::isfinite(v))
    throw NumericError(std::string(where) + ": loss diverged (NaN/Inf)");
  return v;
}

}  // namespace detail

template <typename T>
LossPretrainResult<T> pretrain_loss_classifier(
    const std::vector<SketchSample>& data, const FeatureStackConfig& net_cfg,
    int num_classes, const TrainConfig& cfg) {
  if (num_classes < 2)
    throw std::invalid_argument("pretrain_loss_classifier: need >= 2 classes");
  LossPretrainResult<T> res;
  res.trunk = build_feature_extractor<T>(net_cfg, cfg.seed);
  Rng init_rng(derive_stream(cfg.seed, 0x4EAD));
  res.head.dropout_rate = cfg.dropout_rate;
  res.head.fc =
      LinearLayer<T>::create(res.trunk.feature_dim(), num_classes, init_rng);

  const DatasetSplit split = split_dataset(data, 0.8, cfg.seed);
  // (sample, sketch) pairs on the training side
  std::vector<std::pair<int, int>> pairs;
  for (int id : split.train_ids)
    for (std::size_t k = 0; k < data[id].sketches.size(); ++k)
      pairs.push_back({id, int(k)});

  res.trunk.set_trainable(true);
  ParamList<T> ps;
  res.trunk.params(ps);
  res.head.params(ps);
  Adam<T> opt(ps, {cfg.lr});

  AugmentSpec aug;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(derive_stream(cfg.seed, 0x10C, epoch));
    auto order = pairs;
    shuffle(order, rng);
    double loss_sum = 0;
    long seen = 0;
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size) {
      const std::size_t stop =
          std::min(order.size(), start + cfg.batch_size);
      std::vector<Img> augd;
      std::vector<const Img*> ptrs;
      std::vector<int> labels;
      for (std::size_t i = start; i < stop; ++i) {
        const auto [id, k] = order[i];
        augd.push_back(augment_sketch(data[id].sketches[k], aug, rng));
        labels.push_back(data[id].label);
      }
      for (const auto& im : augd) ptrs.push_back(&im);
      Tensor<T> x = to_tensor_batch<T>(ptrs);
      Tensor<T> logits =
          res.head(trunk_features(res.trunk, x), true, rng, res.trunk);
      Tensor<T> loss = softmax_cross_entropy(logits, labels);
      loss_sum += detail::check_finite_loss(loss, "pretrain_loss_classifier") *
                  double(labels.size());
      seen += long(labels.size());
      opt.zero_grad();
      backward(loss);
      opt.step();
    }
    res.train_losses.push_back(loss_sum / double(seen));
  }

  res.trunk.set_trainable(false);
  // held-out accuracy over every sketch of every test image
  std::vector<const Img*> test_ptrs;
  std::vector<int> test_labels;
  for (int id : split.test_ids)
    for (const auto& sk : data[id].sketches) {
      test_ptrs.push_back(&sk);
      test_labels.push_back(data[id].label);
    }
  Rng eval_rng(0);
  Tensor<T> logits = res.head(
      trunk_features(res.trunk, to_tensor_batch<T>(test_ptrs)), false,
      eval_rng, res.trunk);
  res.test_top1 = topk_accuracy(logits, test_labels, 1);
  return res;
}

// ---------------------------------------------------------------------------
// Phase 1b: encoder pretraining as an image classifier, then freeze
// ---------------------------------------------------------------------------

template <typename T>
struct EncoderPretrainResult {
  Encoder<T> encoder;
  double test_top1 = 0;
  std::vector<double> train_losses;
};

template <typename T>
EncoderPretrainResult<T> pretrain_encoder(const std::vector<SketchSample>& data,
                                          const EncoderConfig& net_cfg,
                                          int num_classes,
                                          const TrainConfig& cfg) {
  EncoderPretrainResult<T> res;
  res.encoder = build_encoder<T>(net_cfg, cfg.seed);
  const DatasetSplit split = split_dataset(data, 0.9, cfg.seed);

  // fix the normalization statistics from a data batch before any training
  {
    std::vector<const Img*> stats_ptrs;
    for (int id : split.train_ids) {
      stats_ptrs.push_back(&data[id].image);
      if (stats_ptrs.size() >= 64) break;
    }
    estimate_bn_stats(res.encoder, to_tensor_batch<T>(stats_ptrs));
  }

  const int bottleneck_dim = [&] {
    int size = net_cfg.input_size;
    for (std::size_t b = 0; b < net_cfg.blocks.size(); ++b) size /= 2;
    return net_cfg.blocks.back().back() * size * size;
  }();
  Rng init_rng(derive_stream(cfg.seed, 0x4EAD2));
  LinearLayer<T> head =
      LinearLayer<T>::create(bottleneck_dim, num_classes, init_rng);

  res.encoder.set_trainable(true);
  ParamList<T> ps;
  res.encoder.params(ps);
  ParamList<T> trainable;
  for (auto& [n, p] : ps)
    if (p.requires_grad()) trainable.push_back({n, p});
  trainable.push_back({"enc_head.weight", head.weight});
  trainable.push_back({"enc_head.bias", head.bias});
  Adam<T> opt(trainable, {cfg.lr});

  AugmentSpec aug;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(derive_stream(cfg.seed, 0x20C, epoch));
    auto order = split.train_ids;
    shuffle(order, rng);
    double loss_sum = 0;
    long seen = 0;
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size) {
      const std::size_t stop =
          std::min(order.size(), start + cfg.batch_size);
      std::vector<Img> augd;
      std::vector<const Img*> ptrs;
      std::vector<int> labels;
      for (std::size_t i = start; i < stop; ++i) {
        bool flipped = false;
        augd.push_back(augment_image(data[order[i]].image, aug, rng, &flipped));
        labels.push_back(data[order[i]].label);
      }
      for (const auto& im : augd) ptrs.push_back(&im);
      auto eo = res.encoder(to_tensor_batch<T>(ptrs));
      Tensor<T> flat =
          reshape(eo.bottleneck, {int(labels.size()), bottleneck_dim});
      Tensor<T> loss = softmax_cross_entropy(head(flat), labels);
      loss_sum += detail::check_finite_loss(loss, "pretrain_encoder") *
                  double(labels.size());
      seen += long(labels.size());
      opt.zero_grad();
      backward(loss);
      opt.step();
    }
    res.train_losses.push_back(loss_sum / double(seen));
  }

  res.encoder.set_trainable(false);
  std::vector<const Img*> test_ptrs;
  std::vector<int> test_labels;
  for (int id : split.test_ids) {
    test_ptrs.push_back(&data[id].image);
    test_labels.push_back(data[id].label);
  }
  auto eo = res.encoder(to_tensor_batch<T>(test_ptrs));
  Tensor<T> flat =
      reshape(eo.bottleneck, {int(test_labels.size()), bottleneck_dim});
  res.test_top1 = topk_accuracy(head(flat), test_labels, 1);
  return res;
}

// ---------------------------------------------------------------------------
// Phase 2: end-to-end decoder training with frozen encoder and trunk
// ---------------------------------------------------------------------------

struct EpochStats {
  int epoch = 0;
  double train_loss = 0;
  double eval_loss = 0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
};

// One epoch callback slot lets callers checkpoint mid-run.
template <typename T>
TrainHistory train_end_to_end(
    const std::vector<SketchSample>& data, const DatasetSplit& split,
    const Encoder<T>& enc, const FeatureStack<T>& trunk, Decoder<T>& dec,
    Adam<T>& opt, const TrainConfig& cfg, int start_epoch = 0,
    const std::function<void(int, const TrainHistory&)>& on_epoch = {}) {
  if (cfg.loss == LossKind::psim && trunk.convs.empty())
    throw std::invalid_argument("train_end_to_end: psim loss needs a trunk");
  TrainHistory hist;
  AugmentSpec aug;
  const bool adain = dec.cfg.conditioning == Conditioning::adain;
  const bool skips = dec.cfg.skip_variant != SkipVariant::none;

  auto batch_loss = [&](const std::vector<int>& ids,
                        const std::vector<int>& sketch_pick,
                        const std::vector<bool>& flips, Rng* aug_rng) {
    std::vector<Img> imgs, targets;
    std::vector<const Img*> img_ptrs, tgt_ptrs;
    std::vector<int> class_ids;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto& s = data[ids[i]];
      Img im = flips[i] ? hflip_img(s.image) : s.image;
      if (aug_rng) im = augment_image(im, aug, *aug_rng);
      Img sk = s.sketches[sketch_pick[i]];
      if (flips[i]) sk = hflip_img(sk);
      imgs.push_back(std::move(im));
      targets.push_back(std::move(sk));
      class_ids.push_back(s.label);
    }
    for (const auto& im : imgs) img_ptrs.push_back(&im);
    for (const auto& sk : targets) tgt_ptrs.push_back(&sk);
    auto eo = enc(to_tensor_batch<T>(img_ptrs));
    Tensor<T> gen = dec(eo.bottleneck, skips ? eo.taps : std::vector<Tensor<T>>{},
                        adain ? class_ids : std::vector<int>{});
    Tensor<T> tgt = to_tensor_batch<T>(tgt_ptrs);
    return cfg.loss == LossKind::psim ? psim(gen, tgt, trunk)
                                      : mse_loss(gen, tgt);
  };

  for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    // every epoch derives its own stream from (seed, epoch), so a resumed
    // run consumes randomness exactly like a straight-through one
    Rng rng(derive_stream(cfg.seed, 0xE2E, epoch));
    auto order = split.train_ids;
    shuffle(order, rng);
    double loss_sum = 0;
    long batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size) {
      const std::size_t stop =
          std::min(order.size(), start + cfg.batch_size);
      std::vector<int> ids(order.begin() + start, order.begin() + stop);
      std::vector<int> picks;
      std::vector<bool> flips;
      for (int id : ids) {
        picks.push_back(int(rng.uniform_int(data[id].sketches.size())));
        // the coin is always drawn so that toggling the flag leaves the
        // rest of the random sequence untouched
        const bool coin = rng.coin();
        flips.push_back(cfg.flip && coin);
      }
      Tensor<T> loss = batch_loss(ids, picks, flips, &rng);
      loss_sum += detail::check_finite_loss(loss, "train_end_to_end");
      ++batches;
      opt.zero_grad();
      backward(loss);
      opt.step();
    }

    // held-out loss against each test image's first sketch, no augmentation
    double eval_sum = 0;
    long eval_batches = 0;
    for (std::size_t start = 0; start < split.test_ids.size();
         start += cfg.batch_size) {
      const std::size_t stop =
          std::min(split.test_ids.size(), start + cfg.batch_size);
      std::vector<int> ids(split.test_ids.begin() + start,
                           split.test_ids.begin() + stop);
      std::vector<int> picks(ids.size(), 0);
      std::vector<bool> flips(ids.size(), false);
      eval_sum += detail::check_finite_loss(
          batch_loss(ids, picks, flips, nullptr), "train_end_to_end eval");
      ++eval_batches;
    }

    hist.epochs.push_back({epoch, loss_sum / double(std::max(batches, 1L)),
                           eval_sum / double(std::max(eval_batches, 1L))});
    if (on_epoch) on_epoch(epoch, hist);
  }
  return hist;
}

// ---------------------------------------------------------------------------
// Checkpoint bridges for optimizer state and history
// ---------------------------------------------------------------------------

template <typename T>
void pack_optimizer(Checkpoint& ckpt, Adam<T>& opt) {
  const auto& params = opt.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    Checkpoint::Entry m{"opt.m." + params[i].first, params[i].second.shape(),
                        {}};
    Checkpoint::Entry v{"opt.v." + params[i].first, params[i].second.shape(),
                        {}};
    for (T x : opt.m()[i]) m.values.push_back(float(x));
    for (T x : opt.v()[i]) v.values.push_back(float(x));
    ckpt.tensors.push_back(std::move(m));
    ckpt.tensors.push_back(std::move(v));
  }
  ckpt.metadata["opt.step"] = std::to_string(opt.step_count());
}

template <typename T>
void unpack_optimizer(const Checkpoint& ckpt, Adam<T>& opt) {
  const auto& params = opt.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto* m = ckpt.find("opt.m." + params[i].first);
    const auto* v = ckpt.find("opt.v." + params[i].first);
    if (!m || !v)
      throw CheckpointError("checkpoint: missing optimizer state for '" +
                            params[i].first + "'");
    for (std::size_t j = 0; j < m->values.size(); ++j)
      opt.m()[i][j] = T(m->values[j]);
    for (std::size_t j = 0; j < v->values.size(); ++j)
      opt.v()[i][j] = T(v->values[j]);
  }
  opt.set_step_count(std::stol(ckpt.metadata.at("opt.step")));
}

inline std::string history_csv(const TrainHistory& hist) {
  std::string out = "epoch,train_loss,eval_loss\n";
  char buf[96];
  for (const auto& e : hist.epochs) {
    std::snprintf(buf, sizeof(buf), "%d,%.9e,%.9e\n", e.epoch, e.train_loss,
                  e.eval_loss);
    out += buf;
  }
  return out;
}

inline std::string history_json(const TrainHistory& hist) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& e : hist.epochs)
    j.push_back({{"epoch", e.epoch},
                 {"train_loss", e.train_loss},
                 {"eval_loss", e.eval_loss}});
  return j.dump();
}

inline TrainHistory history_from_json(const std::string& s) {
  TrainHistory h;
  for (const auto& e : nlohmann::json::parse(s))
    h.epochs.push_back({e.at("epoch").get<int>(),
                        e.at("train_loss").get<double>(),
                        e.at("eval_loss").get<double>()});
  return h;
}

// Inference: one sketch per image, deterministic.
template <typename T>
std::vector<Img> generate_sketches(const std::vector<SketchSample>& data,
                                   const std::vector<int>& ids,
                                   const Encoder<T>& enc, Decoder<T>& dec,
                                   int batch_size = 16) {
  const bool adain = dec.cfg.conditioning == Conditioning::adain;
  const bool skips = dec.cfg.skip_variant != SkipVariant::none;
  std::vector<Img> out;
  for (std::size_t start = 0; start < ids.size(); start += batch_size) {
    const std::size_t stop = std::min(ids.size(), start + batch_size);
    std::vector<const Img*> ptrs;
    std::vector<int> class_ids;
    for (std::size_t i = start; i < stop; ++i) {
      ptrs.push_back(&data[ids[i]].image);
      class_ids.push_back(data[ids[i]].label);
    }
    auto eo = enc(to_tensor_batch<T>(ptrs));
    Tensor<T> gen = dec(eo.bottleneck, skips ? eo.taps : std::vector<Tensor<T>>{},
                        adain ? class_ids : std::vector<int>{});
    for (std::size_t i = 0; i < ptrs.size(); ++i)
      out.push_back(tensor_to_img(gen, int(i)));
  }
  return out;
}

}  // namespace sketchgen
