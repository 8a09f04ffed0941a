#pragma once

#include <map>
#include <string>
#include <vector>

#include "sketchgen/layers.hpp"
#include "sketchgen/rng.hpp"
#include "sketchgen/tensor.hpp"

namespace sketchgen {

// ---------------------------------------------------------------------------
// Configs
// ---------------------------------------------------------------------------

struct EncoderConfig {
  // output channels of every conv, grouped into blocks; a 2x2 max-pool
  // follows each block
  std::vector<std::vector<int>> blocks;
  int in_channels = 3;
  int input_size = 32;
};

inline EncoderConfig desk_encoder_config() {
  return {{{16, 16}, {32, 32}, {64, 64}, {128, 128}, {128, 128}}, 3, 32};
}

// VGG16 convolutional stack.
inline EncoderConfig fullscale_encoder_config() {
  return {{{64, 64},
           {128, 128},
           {256, 256, 256},
           {512, 512, 512},
           {512, 512, 512}},
          3,
          224};
}

enum class Conditioning { batchnorm, adain };
enum class SkipVariant { none, skip1, skip };

inline const char* to_string(Conditioning c) {
  return c == Conditioning::batchnorm ? "batchnorm" : "adain";
}
inline const char* to_string(SkipVariant v) {
  switch (v) {
    case SkipVariant::none: return "none";
    case SkipVariant::skip1: return "skip1";
    default: return "skip";
  }
}

struct DecoderConfig {
  // (block width, conv count) in execution order, lowest resolution first;
  // each block is preceded by a bilinear 2x upsample
  std::vector<std::pair<int, int>> blocks;
  int bottleneck_channels = 128;
  // encoder tap channels injected before blocks 1..4 (block 1 first)
  std::vector<int> tap_channels;
  Conditioning conditioning = Conditioning::batchnorm;
  SkipVariant skip_variant = SkipVariant::none;
  int out_channels = 1;
};

// The decoder mirrors the encoder: blocks run at the encoder widths in
// reverse, the width change happens at the first conv of each block, and the
// last conv of the last block produces the sketch channel.
inline DecoderConfig mirror_decoder(const EncoderConfig& enc,
                                    Conditioning cond, SkipVariant skip) {
  DecoderConfig d;
  const int nb = int(enc.blocks.size());
  for (int j = nb - 1; j >= 0; --j)
    d.blocks.push_back({enc.blocks[j].back(), int(enc.blocks[j].size())});
  d.bottleneck_channels = enc.blocks.back().back();
  for (int j = nb - 2; j >= 0; --j)
    d.tap_channels.push_back(enc.blocks[j].back());
  d.conditioning = cond;
  d.skip_variant = skip;
  return d;
}

// ---------------------------------------------------------------------------
// Encoder
// ---------------------------------------------------------------------------

template <typename T>
struct Encoder {
  EncoderConfig cfg;
  std::vector<std::vector<Conv2dLayer<T>>> convs;
  std::vector<std::vector<BatchNormParams<T>>> bns;

  struct Output {
    Tensor<T> bottleneck;
    std::vector<Tensor<T>> taps;  // pre-pool activations of the first 4 blocks
  };

  Output operator()(const Tensor<T>& image) const {
    if (image.ndim() != 4 || image.dim(1) != cfg.in_channels ||
        image.dim(2) != cfg.input_size || image.dim(3) != cfg.input_size)
      throw ShapeError("encoder: image " + shape_str(image.shape()) +
                       " does not match config (" +
                       std::to_string(cfg.in_channels) + "," +
                       std::to_string(cfg.input_size) + ")");
    Output out;
    Tensor<T> h = image;
    for (std::size_t b = 0; b < convs.size(); ++b) {
      for (std::size_t i = 0; i < convs[b].size(); ++i)
        h = relu(batchnorm_inference(convs[b][i](h), bns[b][i]));
      if (b + 1 < convs.size()) out.taps.push_back(h);
      h = maxpool2(h);
    }
    out.bottleneck = h;
    return out;
  }

  void params(ParamList<T>& out) {
    for (std::size_t b = 0; b < convs.size(); ++b)
      for (std::size_t i = 0; i < convs[b].size(); ++i) {
        const std::string p =
            "encoder.b" + std::to_string(b) + ".c" + std::to_string(i);
        out.push_back({p + ".weight", convs[b][i].weight});
        out.push_back({p + ".bias", convs[b][i].bias});
        out.push_back({p + ".bn.scale", bns[b][i].scale});
        out.push_back({p + ".bn.shift", bns[b][i].shift});
        out.push_back({p + ".bn.mean", bns[b][i].running_mean});
        out.push_back({p + ".bn.var", bns[b][i].running_var});
      }
  }

  void set_trainable(bool on) {
    ParamList<T> ps;
    params(ps);
    for (auto& [name, t] : ps) {
      const bool stats = name.find(".bn.mean") != std::string::npos ||
                         name.find(".bn.var") != std::string::npos;
      t.node()->requires_grad = on && !stats;
    }
  }
};

template <typename T>
Encoder<T> build_encoder(const EncoderConfig& cfg, std::uint64_t seed) {
  int size = cfg.input_size;
  for (std::size_t b = 0; b < cfg.blocks.size(); ++b) {
    if (size % 2)
      throw ShapeError("encoder config: spatial size " + std::to_string(size) +
                       " not divisible by 2 at block " + std::to_string(b));
    size /= 2;
  }
  Rng rng(derive_stream(seed, 0xE11C0DE));
  Encoder<T> e;
  e.cfg = cfg;
  int in_c = cfg.in_channels;
  for (const auto& block : cfg.blocks) {
    e.convs.emplace_back();
    e.bns.emplace_back();
    for (int out_c : block) {
      e.convs.back().push_back(
          Conv2dLayer<T>::create(in_c, out_c, 3, 1, 1, rng));
      e.bns.back().push_back(BatchNormParams<T>::create(out_c));
      in_c = out_c;
    }
  }
  e.set_trainable(false);
  return e;
}

// ---------------------------------------------------------------------------
// Decoder
// ---------------------------------------------------------------------------

template <typename T>
struct Decoder {
  DecoderConfig cfg;
  struct Block {
    bool has_adapter = false;
    Conv2dLayer<T> adapter;  // skip1: 1x1 reduction after concatenation
    std::vector<Conv2dLayer<T>> convs;
    std::vector<BatchNormParams<T>> bns;              // batchnorm conditioning
    std::vector<ClassEmbeddingTable<T>> embeddings;   // adain conditioning
  };
  std::vector<Block> blocks;

  Tensor<T> operator()(const Tensor<T>& bottleneck,
                       const std::vector<Tensor<T>>& taps,
                       const std::vector<int>& class_ids) const {
    if (cfg.skip_variant != SkipVariant::none &&
        taps.size() != cfg.tap_channels.size())
      throw ShapeError("decoder: skip variant needs " +
                       std::to_string(cfg.tap_channels.size()) +
                       " taps, got " + std::to_string(taps.size()));
    if (cfg.conditioning == Conditioning::adain &&
        int(class_ids.size()) != bottleneck.dim(0))
      throw ShapeError("decoder: adain conditioning needs one class id per "
                       "sample");
    Tensor<T> h = bottleneck;
    for (std::size_t j = 0; j < blocks.size(); ++j) {
      h = bilinear_upsample2(h);
      if (j >= 1 && cfg.skip_variant != SkipVariant::none) {
        // taps come highest-resolution-first from the encoder; block j takes
        // the tap matching its resolution
        const Tensor<T>& tap = taps[taps.size() - j];
        h = concat_channels(h, tap);
        if (cfg.skip_variant == SkipVariant::skip1) h = blocks[j].adapter(h);
      }
      const auto& blk = blocks[j];
      for (std::size_t i = 0; i < blk.convs.size(); ++i) {
        h = blk.convs[i](h);
        const bool is_output =
            j + 1 == blocks.size() && i + 1 == blk.convs.size();
        if (is_output) {
          h = sigmoid(h);
        } else {
          if (cfg.conditioning == Conditioning::adain)
            h = adain(h, class_ids, blk.embeddings[i]);
          else
            h = batchnorm_inference(h, blk.bns[i]);
          h = relu(h);
        }
      }
    }
    return h;
  }

  void params(ParamList<T>& out) {
    for (std::size_t j = 0; j < blocks.size(); ++j) {
      auto& blk = blocks[j];
      const std::string bp = "decoder.b" + std::to_string(j);
      if (blk.has_adapter) {
        out.push_back({bp + ".adapter.weight", blk.adapter.weight});
        out.push_back({bp + ".adapter.bias", blk.adapter.bias});
      }
      for (std::size_t i = 0; i < blk.convs.size(); ++i) {
        const std::string p = bp + ".c" + std::to_string(i);
        out.push_back({p + ".weight", blk.convs[i].weight});
        out.push_back({p + ".bias", blk.convs[i].bias});
        if (i < blk.bns.size()) {
          out.push_back({p + ".bn.scale", blk.bns[i].scale});
          out.push_back({p + ".bn.shift", blk.bns[i].shift});
        }
        if (i < blk.embeddings.size()) {
          out.push_back({p + ".adain.mu", blk.embeddings[i].mu});
          out.push_back({p + ".adain.sigma", blk.embeddings[i].sigma_raw});
        }
      }
    }
  }
};

template <typename T>
Decoder<T> build_decoder(const DecoderConfig& cfg, int num_classes,
                         std::uint64_t seed) {
  Rng rng(derive_stream(seed, 0xDEC0DE));
  Decoder<T> d;
  d.cfg = cfg;
  int in_c = cfg.bottleneck_channels;
  for (std::size_t j = 0; j < cfg.blocks.size(); ++j) {
    typename Decoder<T>::Block blk;
    const auto [width, nconv] = cfg.blocks[j];
    if (j >= 1 && cfg.skip_variant != SkipVariant::none) {
      const int tap_c = cfg.tap_channels[j - 1];
      if (cfg.skip_variant == SkipVariant::skip1) {
        blk.adapter = Conv2dLayer<T>::create(in_c + tap_c, in_c, 1, 1, 0, rng);
        blk.has_adapter = true;
      } else {
        in_c += tap_c;  // widen the first conv of the block
      }
    }
    for (int i = 0; i < nconv; ++i) {
      const bool is_output =
          j + 1 == cfg.blocks.size() && i + 1 == nconv;
      const int out_c = is_output ? cfg.out_channels : width;
      blk.convs.push_back(Conv2dLayer<T>::create(in_c, out_c, 3, 1, 1, rng));
      if (!is_output) {
        if (cfg.conditioning == Conditioning::adain)
          blk.embeddings.push_back(
              ClassEmbeddingTable<T>::create(num_classes, out_c, rng));
        else
          blk.bns.push_back(BatchNormParams<T>::create(out_c));
      }
      in_c = out_c;
    }
    in_c = width;  // after the block the running width is the block width
    if (j + 1 == cfg.blocks.size()) in_c = cfg.out_channels;
    d.blocks.push_back(std::move(blk));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Feature extractor trunk (loss network) with a detachable head
// ---------------------------------------------------------------------------

struct FeatureStackConfig {
  std::vector<int> channels = {16, 32, 48, 48, 32};  // five conv layers
  std::vector<int> pool_after = {0, 1, 4};           // conv indices
  int in_channels = 1;
  int input_size = 32;
};

template <typename T>
struct FeatureStack {
  FeatureStackConfig cfg;
  std::vector<Conv2dLayer<T>> convs;

  // activations of every conv layer (post-ReLU), for the perceptual loss
  std::vector<Tensor<T>> operator()(const Tensor<T>& x) const {
    std::vector<Tensor<T>> acts;
    Tensor<T> h = x;
    for (std::size_t i = 0; i < convs.size(); ++i) {
      h = relu(convs[i](h));
      acts.push_back(h);
      for (int p : cfg.pool_after)
        if (p == int(i)) h = maxpool2(h);
    }
    return acts;
  }

  int feature_dim() const {
    int size = cfg.input_size;
    for (std::size_t i = 0; i < cfg.pool_after.size(); ++i) size /= 2;
    return cfg.channels.back() * size * size;
  }

  void params(ParamList<T>& out) {
    for (std::size_t i = 0; i < convs.size(); ++i) {
      const std::string p = "trunk.c" + std::to_string(i);
      out.push_back({p + ".weight", convs[i].weight});
      out.push_back({p + ".bias", convs[i].bias});
    }
  }

  void set_trainable(bool on) {
    ParamList<T> ps;
    params(ps);
    for (auto& [name, t] : ps) t.node()->requires_grad = on;
  }
};

template <typename T>
struct ClassifierHead {
  double dropout_rate = 0.5;
  LinearLayer<T> fc;

  Tensor<T> operator()(const Tensor<T>& features, bool training, Rng& rng,
                       const FeatureStack<T>& trunk) const {
    // features: final pooled trunk activation [N,C,H,W]
    Tensor<T> flat =
        reshape(features, {features.dim(0), trunk.feature_dim()});
    flat = dropout(flat, dropout_rate, training, rng);
    return fc(flat);
  }

  void params(ParamList<T>& out) {
    out.push_back({"head.fc.weight", fc.weight});
    out.push_back({"head.fc.bias", fc.bias});
  }
};

template <typename T>
FeatureStack<T> build_feature_extractor(const FeatureStackConfig& cfg,
                                        std::uint64_t seed) {
  Rng rng(derive_stream(seed, 0xF00D));
  FeatureStack<T> t;
  t.cfg = cfg;
  int in_c = cfg.in_channels;
  for (int out_c : cfg.channels) {
    t.convs.push_back(Conv2dLayer<T>::create(in_c, out_c, 3, 1, 1, rng));
    in_c = out_c;
  }
  return t;
}

// Final pooled trunk output for classification use.
template <typename T>
Tensor<T> trunk_features(const FeatureStack<T>& trunk, const Tensor<T>& x) {
  Tensor<T> h = x;
  for (std::size_t i = 0; i < trunk.convs.size(); ++i) {
    h = relu(trunk.convs[i](h));
    for (int p : trunk.cfg.pool_after)
      if (p == int(i)) h = maxpool2(h);
  }
  return h;
}

// ---------------------------------------------------------------------------
// Evaluation classifier: small residual network, architecturally disjoint
// from the feature stack
// ---------------------------------------------------------------------------

struct EvalClassifierConfig {
  std::vector<int> stage_widths = {16, 32, 64};
  int in_channels = 1;
  int input_size = 32;
  int num_classes = 8;
};

template <typename T>
struct EvalClassifier {
  EvalClassifierConfig cfg;
  struct Stage {
    Conv2dLayer<T> proj;  // 1x1 width change at stage entry
    Conv2dLayer<T> c1, c2;
  };
  Conv2dLayer<T> stem;
  std::vector<Stage> stages;
  LinearLayer<T> fc;

  Tensor<T> operator()(const Tensor<T>& sketch) const {
    Tensor<T> h = relu(stem(sketch));
    for (const auto& st : stages) {
      h = relu(st.proj(h));
      Tensor<T> r = st.c2(relu(st.c1(h)));
      h = relu(add(h, r));
      h = maxpool2(h);
    }
    Tensor<T> pooled = reduce_mean(h, {2, 3});  // global average pool
    return fc(pooled);
  }

  void params(ParamList<T>& out) {
    out.push_back({"eval.stem.weight", stem.weight});
    out.push_back({"eval.stem.bias", stem.bias});
    for (std::size_t s = 0; s < stages.size(); ++s) {
      const std::string p = "eval.s" + std::to_string(s);
      out.push_back({p + ".proj.weight", stages[s].proj.weight});
      out.push_back({p + ".proj.bias", stages[s].proj.bias});
      out.push_back({p + ".c1.weight", stages[s].c1.weight});
      out.push_back({p + ".c1.bias", stages[s].c1.bias});
      out.push_back({p + ".c2.weight", stages[s].c2.weight});
      out.push_back({p + ".c2.bias", stages[s].c2.bias});
    }
    out.push_back({"eval.fc.weight", fc.weight});
    out.push_back({"eval.fc.bias", fc.bias});
  }
};

template <typename T>
EvalClassifier<T> build_eval_classifier(const EvalClassifierConfig& cfg,
                                        std::uint64_t seed) {
  Rng rng(derive_stream(seed, 0xEBA1));
  EvalClassifier<T> m;
  m.cfg = cfg;
  m.stem = Conv2dLayer<T>::create(cfg.in_channels, cfg.stage_widths[0], 3, 1,
                                  1, rng);
  int in_c = cfg.stage_widths[0];
  for (int w : cfg.stage_widths) {
    typename EvalClassifier<T>::Stage st;
    st.proj = Conv2dLayer<T>::create(in_c, w, 1, 1, 0, rng);
    st.c1 = Conv2dLayer<T>::create(w, w, 3, 1, 1, rng);
    st.c2 = Conv2dLayer<T>::create(w, w, 3, 1, 1, rng);
    m.stages.push_back(std::move(st));
    in_c = w;
  }
  m.fc = LinearLayer<T>::create(in_c, cfg.num_classes, rng);
  return m;
}

// ---------------------------------------------------------------------------
// Parameter accounting
// ---------------------------------------------------------------------------

struct ParamReport {
  long decoder_convs = 0;    // conv weights/biases and batchnorm affines
  long skip_adapters = 0;    // skip1 1x1 reductions
  long embeddings = 0;       // adain class embedding tables
  long total = 0;
};

template <typename T>
ParamReport count_params(Decoder<T>& decoder) {
  ParamReport r;
  ParamList<T> ps;
  decoder.params(ps);
  for (auto& [name, t] : ps) {
    if (name.find(".adapter.") != std::string::npos)
      r.skip_adapters += t.size();
    else if (name.find(".adain.") != std::string::npos)
      r.embeddings += t.size();
    else
      r.decoder_convs += t.size();
  }
  r.total = r.decoder_convs + r.skip_adapters + r.embeddings;
  return r;
}

template <typename T, typename Model>
long total_trainable_params(Model& m) {
  ParamList<T> ps;
  m.params(ps);
  long n = 0;
  for (auto& [name, t] : ps)
    if (t.requires_grad()) n += t.size();
  return n;
}

}  // namespace sketchgen
