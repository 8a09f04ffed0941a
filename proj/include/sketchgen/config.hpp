#pragma once

#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "sketchgen/checkpoint.hpp"
#include "sketchgen/models.hpp"
#include "sketchgen/train.hpp"

namespace sketchgen {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Run description: one JSON document with a section per pipeline stage.
// All fields are explicit and unknown fields are rejected, so a config file
// can never silently drift from the code.
struct RunConfig {
  struct Data {
    std::uint64_t seed = 1;
    int num_classes = 8;
    int images_per_class = 12;
    int sketches_per_image = 5;
    int size = 32;
  } data;
  struct EncoderSec {
    std::string scale = "desk";  // "desk" or "fullscale"
    int pretrain_epochs = 12;
    double pretrain_lr = 1e-3;
    std::uint64_t seed = 2;
  } encoder;
  struct DecoderSec {
    std::string conditioning = "adain";
    std::string skip = "skip";
    std::uint64_t seed = 3;
  } decoder;
  struct LossSec {
    std::string kind = "psim";
    std::vector<int> trunk_channels = {16, 32, 48, 48, 32};
    std::vector<int> trunk_pool_after = {0, 1, 4};
    int pretrain_epochs = 20;
    double pretrain_lr = 1e-3;
    double dropout = 0.5;
    std::uint64_t seed = 4;
  } loss;
  struct TrainSec {
    int epochs = 8;
    int batch_size = 16;
    double lr = 2e-4;
    bool flip = true;
    std::uint64_t seed = 5;
  } train;
  struct EvalSec {
    int epochs = 25;
    double lr = 1e-3;
    std::uint64_t seed = 6;
    std::vector<std::uint64_t> ablation_seeds = {1, 2, 3};
    int ablation_epochs = 8;
  } eval;
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j,
                           const std::set<std::string>& allowed,
                           const std::string& where) {
  for (const auto& [key, val] : j.items())
    if (!allowed.count(key))
      throw ConfigError("config: unknown field '" + where + "." + key + "'");
}

template <typename T>
T fetch(const nlohmann::json& j, const std::string& section,
        const std::string& field) {
  if (!j.contains(field))
    throw ConfigError("config: missing field '" + section + "." + field +
                      "'");
  try {
    return j.at(field).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config: bad value for '" + section + "." + field +
                      "'");
  }
}

inline const nlohmann::json& section(const nlohmann::json& j,
                                     const std::string& name) {
  if (!j.contains(name))
    throw ConfigError("config: missing section '" + name + "'");
  if (!j.at(name).is_object())
    throw ConfigError("config: section '" + name + "' must be an object");
  return j.at(name);
}

}  // namespace detail

inline Conditioning parse_conditioning(const std::string& s) {
  if (s == "batchnorm") return Conditioning::batchnorm;
  if (s == "adain") return Conditioning::adain;
  throw ConfigError("config: conditioning must be 'batchnorm' or 'adain', "
                    "got '" + s + "'");
}

inline SkipVariant parse_skip(const std::string& s) {
  if (s == "none") return SkipVariant::none;
  if (s == "skip1") return SkipVariant::skip1;
  if (s == "skip") return SkipVariant::skip;
  throw ConfigError("config: skip must be 'none', 'skip1' or 'skip', got '" +
                    s + "'");
}

inline LossKind parse_loss_kind(const std::string& s) {
  if (s == "mse") return LossKind::mse;
  if (s == "psim") return LossKind::psim;
  throw ConfigError("config: loss kind must be 'mse' or 'psim', got '" + s +
                    "'");
}

inline RunConfig parse_run_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  detail::reject_unknown(
      j, {"data", "encoder", "decoder", "loss", "train", "eval"}, "<top>");

  RunConfig c;
  using detail::fetch;
  {
    const auto& s = detail::section(j, "data");
    detail::reject_unknown(s,
                           {"seed", "num_classes", "images_per_class",
                            "sketches_per_image", "size"},
                           "data");
    c.data.seed = fetch<std::uint64_t>(s, "data", "seed");
    c.data.num_classes = fetch<int>(s, "data", "num_classes");
    c.data.images_per_class = fetch<int>(s, "data", "images_per_class");
    c.data.sketches_per_image = fetch<int>(s, "data", "sketches_per_image");
    c.data.size = fetch<int>(s, "data", "size");
  }
  {
    const auto& s = detail::section(j, "encoder");
    detail::reject_unknown(
        s, {"scale", "pretrain_epochs", "pretrain_lr", "seed"}, "encoder");
    c.encoder.scale = fetch<std::string>(s, "encoder", "scale");
    if (c.encoder.scale != "desk" && c.encoder.scale != "fullscale")
      throw ConfigError("config: encoder.scale must be 'desk' or 'fullscale'");
    c.encoder.pretrain_epochs = fetch<int>(s, "encoder", "pretrain_epochs");
    c.encoder.pretrain_lr = fetch<double>(s, "encoder", "pretrain_lr");
    c.encoder.seed = fetch<std::uint64_t>(s, "encoder", "seed");
  }
  {
    const auto& s = detail::section(j, "decoder");
    detail::reject_unknown(s, {"conditioning", "skip", "seed"}, "decoder");
    c.decoder.conditioning = fetch<std::string>(s, "decoder", "conditioning");
    c.decoder.skip = fetch<std::string>(s, "decoder", "skip");
    parse_conditioning(c.decoder.conditioning);
    parse_skip(c.decoder.skip);
    c.decoder.seed = fetch<std::uint64_t>(s, "decoder", "seed");
  }
  {
    const auto& s = detail::section(j, "loss");
    detail::reject_unknown(s,
                           {"kind", "trunk_channels", "trunk_pool_after",
                            "pretrain_epochs", "pretrain_lr", "dropout",
                            "seed"},
                           "loss");
    c.loss.kind = fetch<std::string>(s, "loss", "kind");
    parse_loss_kind(c.loss.kind);
    c.loss.trunk_channels =
        fetch<std::vector<int>>(s, "loss", "trunk_channels");
    c.loss.trunk_pool_after =
        fetch<std::vector<int>>(s, "loss", "trunk_pool_after");
    c.loss.pretrain_epochs = fetch<int>(s, "loss", "pretrain_epochs");
    c.loss.pretrain_lr = fetch<double>(s, "loss", "pretrain_lr");
    c.loss.dropout = fetch<double>(s, "loss", "dropout");
    c.loss.seed = fetch<std::uint64_t>(s, "loss", "seed");
  }
  {
    const auto& s = detail::section(j, "train");
    detail::reject_unknown(s, {"epochs", "batch_size", "lr", "flip", "seed"},
                           "train");
    c.train.epochs = fetch<int>(s, "train", "epochs");
    c.train.batch_size = fetch<int>(s, "train", "batch_size");
    c.train.lr = fetch<double>(s, "train", "lr");
    c.train.flip = fetch<bool>(s, "train", "flip");
    c.train.seed = fetch<std::uint64_t>(s, "train", "seed");
  }
  {
    const auto& s = detail::section(j, "eval");
    detail::reject_unknown(
        s, {"epochs", "lr", "seed", "ablation_seeds", "ablation_epochs"},
        "eval");
    c.eval.epochs = fetch<int>(s, "eval", "epochs");
    c.eval.lr = fetch<double>(s, "eval", "lr");
    c.eval.seed = fetch<std::uint64_t>(s, "eval", "seed");
    c.eval.ablation_seeds =
        fetch<std::vector<std::uint64_t>>(s, "eval", "ablation_seeds");
    c.eval.ablation_epochs = fetch<int>(s, "eval", "ablation_epochs");
  }
  return c;
}

// Canonical form: compact JSON with keys sorted lexicographically (the
// default nlohmann::json object ordering). Parsing then serializing any
// accepted document yields this form.
inline std::string serialize_run_config(const RunConfig& c) {
  nlohmann::json j;
  j["data"] = {{"seed", c.data.seed},
               {"num_classes", c.data.num_classes},
               {"images_per_class", c.data.images_per_class},
               {"sketches_per_image", c.data.sketches_per_image},
               {"size", c.data.size}};
  j["encoder"] = {{"scale", c.encoder.scale},
                  {"pretrain_epochs", c.encoder.pretrain_epochs},
                  {"pretrain_lr", c.encoder.pretrain_lr},
                  {"seed", c.encoder.seed}};
  j["decoder"] = {{"conditioning", c.decoder.conditioning},
                  {"skip", c.decoder.skip},
                  {"seed", c.decoder.seed}};
  j["loss"] = {{"kind", c.loss.kind},
               {"trunk_channels", c.loss.trunk_channels},
               {"trunk_pool_after", c.loss.trunk_pool_after},
               {"pretrain_epochs", c.loss.pretrain_epochs},
               {"pretrain_lr", c.loss.pretrain_lr},
               {"dropout", c.loss.dropout},
               {"seed", c.loss.seed}};
  j["train"] = {{"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"lr", c.train.lr},
                {"flip", c.train.flip},
                {"seed", c.train.seed}};
  j["eval"] = {{"epochs", c.eval.epochs},
               {"lr", c.eval.lr},
               {"seed", c.eval.seed},
               {"ablation_seeds", c.eval.ablation_seeds},
               {"ablation_epochs", c.eval.ablation_epochs}};
  return j.dump();
}

inline std::uint32_t config_hash(const RunConfig& c) {
  const std::string s = serialize_run_config(c);
  return detail::crc32(s.data(), s.size());
}

// Derived builders

inline SynthConfig synth_config(const RunConfig& c) {
  SynthConfig s;
  s.seed = c.data.seed;
  s.num_classes = c.data.num_classes;
  s.images_per_class = c.data.images_per_class;
  s.sketches_per_image = c.data.sketches_per_image;
  s.size = c.data.size;
  return s;
}

inline EncoderConfig encoder_config(const RunConfig& c) {
  if (c.encoder.scale == "fullscale") return fullscale_encoder_config();
  EncoderConfig e = desk_encoder_config();
  e.input_size = c.data.size;
  return e;
}

inline FeatureStackConfig trunk_config(const RunConfig& c) {
  FeatureStackConfig f;
  f.channels = c.loss.trunk_channels;
  f.pool_after = c.loss.trunk_pool_after;
  f.in_channels = 1;
  f.input_size = c.data.size;
  return f;
}

inline EvalClassifierConfig eval_classifier_config(const RunConfig& c) {
  EvalClassifierConfig e;
  e.in_channels = 1;
  e.input_size = c.data.size;
  e.num_classes = c.data.num_classes;
  return e;
}

}  // namespace sketchgen
