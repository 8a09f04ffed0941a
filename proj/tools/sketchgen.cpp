#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <sketchgen/config.hpp>
#include <sketchgen/dataset_io.hpp>
#include <sketchgen/eval.hpp>
#include <sketchgen/gradcheck.hpp>
#include <sketchgen/train.hpp>

namespace fs = std::filesystem;
using namespace sketchgen;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitMissingPrereq = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitVerification = 5;

struct PrereqError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string g_workdir;

std::string resolve(const std::string& path) {
  if (g_workdir.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(g_workdir) / path).string();
}

std::string read_file(const std::string& path, const char* what) {
  std::ifstream f(resolve(path), std::ios::binary);
  if (!f)
    throw PrereqError(std::string(what) + " not found: " + path);
  return std::string((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
}

RunConfig load_config(const std::string& path) {
  return parse_run_config(read_file(path, "config file"));
}

Checkpoint load_ckpt(const std::string& path, const std::string& kind) {
  if (!fs::exists(resolve(path)))
    throw PrereqError(kind + " checkpoint not found: " + path);
  Checkpoint ckpt = load_checkpoint(resolve(path));
  const auto it = ckpt.metadata.find("kind");
  if (it == ckpt.metadata.end() || it->second != kind)
    throw PrereqError("checkpoint " + path + " is not a '" + kind +
                      "' checkpoint");
  return ckpt;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(resolve(path), std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << text;
}

void base_metadata(Checkpoint& ckpt, const RunConfig& cfg,
                   const std::string& kind) {
  ckpt.metadata["kind"] = kind;
  ckpt.metadata["config"] = serialize_run_config(cfg);
  ckpt.metadata["config_hash"] = std::to_string(config_hash(cfg));
}

// ---------------------------------------------------------------------------

int cmd_gen_data(const std::string& cfg_path, const std::string& out,
                 std::int64_t seed_override) {
  RunConfig cfg = load_config(cfg_path);
  if (seed_override >= 0) cfg.data.seed = std::uint64_t(seed_override);
  auto samples = generate_dataset(synth_config(cfg));
  auto split = split_dataset(samples, 0.9, cfg.data.seed);
  write_dataset(resolve(out), samples, split);
  std::printf("wrote %zu samples (%zu train / %zu test images) to %s\n",
              samples.size(), split.train_ids.size(), split.test_ids.size(),
              out.c_str());
  return kExitOk;
}

int cmd_pretrain_loss(const std::string& cfg_path, const std::string& data_dir,
                      const std::string& out) {
  RunConfig cfg = load_config(cfg_path);
  if (!fs::exists(fs::path(resolve(data_dir)) / "manifest.json"))
    throw PrereqError("dataset not found: " + data_dir);
  auto ds = load_dataset(resolve(data_dir));

  TrainConfig tc;
  tc.epochs = cfg.loss.pretrain_epochs;
  tc.lr = cfg.loss.pretrain_lr;
  tc.seed = cfg.loss.seed;
  tc.dropout_rate = cfg.loss.dropout;
  auto res = pretrain_loss_classifier<float>(ds.samples, trunk_config(cfg),
                                             cfg.data.num_classes, tc);

  Checkpoint ckpt;
  base_metadata(ckpt, cfg, "loss-trunk");
  ckpt.metadata["test_top1"] = std::to_string(res.test_top1);
  ParamList<float> ps;
  res.trunk.params(ps);
  res.head.params(ps);
  pack_params(ckpt, ps);
  save_checkpoint(resolve(out), ckpt);
  std::printf("loss classifier held-out top1: %.4f\n", res.test_top1);
  return kExitOk;
}

int cmd_pretrain_encoder(const std::string& cfg_path,
                         const std::string& data_dir, const std::string& out) {
  RunConfig cfg = load_config(cfg_path);
  if (!fs::exists(fs::path(resolve(data_dir)) / "manifest.json"))
    throw PrereqError("dataset not found: " + data_dir);
  auto ds = load_dataset(resolve(data_dir));

  TrainConfig tc;
  tc.epochs = cfg.encoder.pretrain_epochs;
  tc.lr = cfg.encoder.pretrain_lr;
  tc.seed = cfg.encoder.seed;
  auto res = pretrain_encoder<float>(ds.samples, encoder_config(cfg),
                                     cfg.data.num_classes, tc);

  Checkpoint ckpt;
  base_metadata(ckpt, cfg, "encoder");
  ckpt.metadata["test_top1"] = std::to_string(res.test_top1);
  ParamList<float> ps;
  res.encoder.params(ps);
  pack_params(ckpt, ps);
  save_checkpoint(resolve(out), ckpt);
  std::printf("encoder held-out top1: %.4f\n", res.test_top1);
  return kExitOk;
}

Encoder<float> encoder_from_ckpt(const RunConfig& cfg,
                                 const Checkpoint& ckpt) {
  auto enc = build_encoder<float>(encoder_config(cfg), cfg.encoder.seed);
  ParamList<float> ps;
  enc.params(ps);
  unpack_params(ckpt, ps);
  return enc;
}

FeatureStack<float> trunk_from_ckpt(const RunConfig& cfg,
                                    const Checkpoint& ckpt) {
  auto trunk = build_feature_extractor<float>(trunk_config(cfg),
                                              cfg.loss.seed);
  ParamList<float> ps;
  trunk.params(ps);
  unpack_params(ckpt, ps);
  trunk.set_trainable(false);
  return trunk;
}

int cmd_train(const std::string& cfg_path, const std::string& data_dir,
              const std::string& enc_path, const std::string& trunk_path,
              const std::string& out, const std::string& metrics,
              const std::string& resume) {
  RunConfig cfg = load_config(cfg_path);
  if (!fs::exists(fs::path(resolve(data_dir)) / "manifest.json"))
    throw PrereqError("dataset not found: " + data_dir);
  auto ds = load_dataset(resolve(data_dir));

  auto enc = encoder_from_ckpt(cfg, load_ckpt(enc_path, "encoder"));
  const LossKind kind = parse_loss_kind(cfg.loss.kind);
  FeatureStack<float> trunk;
  if (kind == LossKind::psim) {
    if (trunk_path.empty())
      throw PrereqError("loss kind 'psim' requires --trunk (the pretrained "
                        "loss-network checkpoint)");
    trunk = trunk_from_ckpt(cfg, load_ckpt(trunk_path, "loss-trunk"));
  }

  TrainConfig tc;
  tc.epochs = cfg.train.epochs;
  tc.batch_size = cfg.train.batch_size;
  tc.lr = cfg.train.lr;
  tc.seed = cfg.train.seed;
  tc.loss = kind;
  tc.flip = cfg.train.flip;
  tc.conditioning = parse_conditioning(cfg.decoder.conditioning);
  tc.skip_variant = parse_skip(cfg.decoder.skip);

  auto dec = build_decoder<float>(
      mirror_decoder(encoder_config(cfg), tc.conditioning, tc.skip_variant),
      cfg.data.num_classes, cfg.decoder.seed);
  ParamList<float> dec_ps;
  dec.params(dec_ps);
  Adam<float> opt(dec_ps, {tc.lr});

  int start_epoch = 0;
  TrainHistory hist;
  if (!resume.empty()) {
    Checkpoint prev = load_ckpt(resume, "train");
    unpack_params(prev, dec_ps);
    unpack_optimizer(prev, opt);
    start_epoch = std::stoi(prev.metadata.at("epoch"));
    hist = history_from_json(prev.metadata.at("history"));
  }

  auto more = train_end_to_end(ds.samples, ds.split, enc, trunk, dec, opt, tc,
                               start_epoch);
  for (const auto& e : more.epochs) hist.epochs.push_back(e);

  Checkpoint ckpt;
  base_metadata(ckpt, cfg, "train");
  ckpt.metadata["epoch"] = std::to_string(tc.epochs);
  ckpt.metadata["history"] = history_json(hist);
  pack_params(ckpt, dec_ps);
  pack_optimizer(ckpt, opt);
  // the encoder rides along so inference needs a single file
  ParamList<float> enc_ps;
  enc.params(enc_ps);
  pack_params(ckpt, enc_ps);
  save_checkpoint(resolve(out), ckpt);

  const std::string metrics_path =
      metrics.empty() ? out + ".metrics.csv" : metrics;
  write_text(metrics_path, history_csv(hist));
  std::printf("trained %d epochs; final train loss %.6f, eval loss %.6f\n",
              tc.epochs,
              hist.epochs.empty() ? 0.0 : hist.epochs.back().train_loss,
              hist.epochs.empty() ? 0.0 : hist.epochs.back().eval_loss);
  return kExitOk;
}

int cmd_sketch(const std::string& ckpt_path, const std::string& image_path,
               std::int64_t cls, const std::string& out) {
  Checkpoint ckpt = load_ckpt(ckpt_path, "train");
  RunConfig cfg = parse_run_config(ckpt.metadata.at("config"));
  auto enc = encoder_from_ckpt(cfg, ckpt);
  const Conditioning cond = parse_conditioning(cfg.decoder.conditioning);
  const SkipVariant skip = parse_skip(cfg.decoder.skip);
  auto dec = build_decoder<float>(mirror_decoder(encoder_config(cfg), cond,
                                                 skip),
                                  cfg.data.num_classes, cfg.decoder.seed);
  ParamList<float> dec_ps;
  dec.params(dec_ps);
  unpack_params(ckpt, dec_ps);

  if (!fs::exists(resolve(image_path)))
    throw PrereqError("input image not found: " + image_path);
  Img img = read_pnm(resolve(image_path));
  if (img.c != 3 || img.h != cfg.data.size || img.w != cfg.data.size) {
    std::fprintf(stderr,
                 "error: image must be RGB %dx%d for this checkpoint, got "
                 "%d-channel %dx%d\n",
                 cfg.data.size, cfg.data.size, img.c, img.w, img.h);
    return kExitUsage;
  }
  std::vector<int> ids;
  if (cond == Conditioning::adain) {
    if (cls < 0) {
      std::fprintf(stderr,
                   "error: --class is required for an adain-conditioned "
                   "checkpoint\n");
      return kExitUsage;
    }
    if (cls >= cfg.data.num_classes) {
      std::fprintf(stderr, "error: --class %lld out of range [0,%d)\n",
                   (long long)cls, cfg.data.num_classes);
      return kExitUsage;
    }
    ids.push_back(int(cls));
  }
  std::vector<const Img*> ptrs = {&img};
  auto eo = enc(to_tensor_batch<float>(ptrs));
  Tensor<float> gen =
      dec(eo.bottleneck,
          skip == SkipVariant::none ? std::vector<Tensor<float>>{} : eo.taps,
          ids);
  write_pgm(resolve(out), invert(tensor_to_img(gen, 0)));
  std::printf("wrote %s\n", out.c_str());
  return kExitOk;
}

EvalClassifier<float> classifier_from_ckpt(const RunConfig& cfg,
                                           const Checkpoint& ckpt) {
  auto clf =
      build_eval_classifier<float>(eval_classifier_config(cfg), cfg.eval.seed);
  ParamList<float> ps;
  clf.params(ps);
  unpack_params(ckpt, ps);
  return clf;
}

int cmd_train_classifier(const std::string& cfg_path,
                         const std::string& data_dir, const std::string& out) {
  RunConfig cfg = load_config(cfg_path);
  if (!fs::exists(fs::path(resolve(data_dir)) / "manifest.json"))
    throw PrereqError("dataset not found: " + data_dir);
  auto ds = load_dataset(resolve(data_dir));
  TrainConfig tc;
  tc.epochs = cfg.eval.epochs;
  tc.lr = cfg.eval.lr;
  tc.seed = cfg.eval.seed;
  auto res = train_eval_classifier<float>(ds.samples,
                                          eval_classifier_config(cfg), tc);
  Checkpoint ckpt;
  base_metadata(ckpt, cfg, "classifier");
  ckpt.metadata["top1"] = std::to_string(res.top1);
  ckpt.metadata["top5"] = std::to_string(res.top5);
  ParamList<float> ps;
  res.classifier.params(ps);
  pack_params(ckpt, ps);
  save_checkpoint(resolve(out), ckpt);
  std::printf("classifier held-out top1 %.4f top5 %.4f\n", res.top1,
              res.top5);
  return kExitOk;
}

int cmd_eval(const std::string& cfg_path, const std::string& data_dir,
             const std::string& clf_path, const std::string& train_path) {
  RunConfig cfg = load_config(cfg_path);
  if (!fs::exists(fs::path(resolve(data_dir)) / "manifest.json"))
    throw PrereqError("dataset not found: " + data_dir);
  auto ds = load_dataset(resolve(data_dir));
  auto clf = classifier_from_ckpt(cfg, load_ckpt(clf_path, "classifier"));

  std::vector<Img> sketches;
  std::vector<int> labels;
  for (int id : ds.split.test_ids) labels.push_back(ds.samples[id].label);
  if (train_path.empty()) {
    // ground-truth sketches of the test split
    labels.clear();
    for (int id : ds.split.test_ids)
      for (const auto& sk : ds.samples[id].sketches) {
        sketches.push_back(sk);
        labels.push_back(ds.samples[id].label);
      }
  } else {
    Checkpoint tck = load_ckpt(train_path, "train");
    RunConfig tcfg = parse_run_config(tck.metadata.at("config"));
    auto enc = encoder_from_ckpt(tcfg, tck);
    auto dec = build_decoder<float>(
        mirror_decoder(encoder_config(tcfg),
                       parse_conditioning(tcfg.decoder.conditioning),
                       parse_skip(tcfg.decoder.skip)),
        tcfg.data.num_classes, tcfg.decoder.seed);
    ParamList<float> ps;
    dec.params(ps);
    unpack_params(tck, ps);
    sketches = generate_sketches(ds.samples, ds.split.test_ids, enc, dec);
  }
  const double t1 = evaluate_topk(sketches, labels, clf, 1);
  const double t5 =
      evaluate_topk(sketches, labels, clf,
                    std::min(5, cfg.data.num_classes));
  std::printf("top1 %.6f\ntop5 %.6f\n", t1, t5);
  return kExitOk;
}

int cmd_ablate(const std::string& cfg_path, const std::string& data_dir,
               const std::string& enc_path, const std::string& trunk_path,
               const std::string& clf_path, const std::string& out) {
  RunConfig cfg = load_config(cfg_path);
  if (!fs::exists(fs::path(resolve(data_dir)) / "manifest.json"))
    throw PrereqError("dataset not found: " + data_dir);
  auto ds = load_dataset(resolve(data_dir));
  auto enc = encoder_from_ckpt(cfg, load_ckpt(enc_path, "encoder"));
  auto trunk = trunk_from_ckpt(cfg, load_ckpt(trunk_path, "loss-trunk"));
  auto clf = classifier_from_ckpt(cfg, load_ckpt(clf_path, "classifier"));

  AblationBudget budget;
  budget.epochs = cfg.eval.ablation_epochs;
  budget.batch_size = cfg.train.batch_size;
  budget.lr = cfg.train.lr;
  auto matrix = run_ablation<float>(
      ds.samples, ds.split, enc, trunk, clf, cfg.data.num_classes, budget,
      cfg.eval.ablation_seeds, default_ablation_methods(),
      [](const AblationCell& c) {
        if (c.failed)
          std::printf("%-22s seed %llu  FAILED: %s\n", c.method.c_str(),
                      (unsigned long long)c.seed, c.error.c_str());
        else
          std::printf("%-22s seed %llu  top1 %.4f  top5 %.4f\n",
                      c.method.c_str(), (unsigned long long)c.seed, c.top1,
                      c.top5);
        std::fflush(stdout);
      });
  const std::string csv = ablation_csv(matrix);
  if (!out.empty()) write_text(out, csv);
  std::printf("%s", csv.c_str());
  return kExitOk;
}

int cmd_param_count(const std::string& name) {
  const auto dash = name.find('-');
  if (dash == std::string::npos) {
    std::fprintf(stderr,
                 "error: expected <scale>-<variant>, e.g. fullscale-skip\n");
    return kExitUsage;
  }
  const std::string scale = name.substr(0, dash);
  const std::string variant = name.substr(dash + 1);
  EncoderConfig enc_cfg;
  int num_classes = 0;
  if (scale == "desk") {
    enc_cfg = desk_encoder_config();
    num_classes = 8;
  } else if (scale == "fullscale") {
    enc_cfg = fullscale_encoder_config();
    num_classes = 125;
  } else {
    std::fprintf(stderr, "error: scale must be 'desk' or 'fullscale'\n");
    return kExitUsage;
  }
  Conditioning cond = Conditioning::adain;
  SkipVariant skip = SkipVariant::none;
  if (variant == "none") {
    cond = Conditioning::batchnorm;
  } else if (variant == "adain") {
  } else if (variant == "skip1") {
    skip = SkipVariant::skip1;
  } else if (variant == "skip") {
    skip = SkipVariant::skip;
  } else {
    std::fprintf(stderr,
                 "error: variant must be none, adain, skip1 or skip\n");
    return kExitUsage;
  }

  auto build = [&](Conditioning c, SkipVariant s) {
    auto d = build_decoder<float>(mirror_decoder(enc_cfg, c, s), num_classes,
                                  1);
    return count_params(d);
  };
  auto rep = build(cond, skip);
  std::printf("config           %s\n", name.c_str());
  std::printf("decoder convs    %ld\n", rep.decoder_convs);
  std::printf("skip adapters    %ld\n", rep.skip_adapters);
  std::printf("embeddings       %ld\n", rep.embeddings);
  std::printf("total            %ld\n", rep.total);

  if (scale == "fullscale") {
    // reference bands for the mirrored-VGG16 decoder family
    const long base = build(Conditioning::batchnorm, SkipVariant::none).total;
    const long adain = build(Conditioning::adain, SkipVariant::none).total;
    const long wide = build(Conditioning::adain, SkipVariant::skip).total;
    const bool base_ok = base > long(17.0e6 * 0.85) && base < long(17.0e6 * 1.15);
    const bool emb_ok = adain - base >= 1000000 && adain - base <= 1400000;
    const bool skip_ok = wide - adain > long(3.1e6 * 0.8) &&
                         wide - adain < long(3.1e6 * 1.2);
    const bool ok = base_ok && emb_ok && skip_ok;
    std::printf("band check       %s (base 17.0M+-15%%: %s; embedding delta "
                "[1.0M,1.4M]: %s; skip delta 3.1M+-20%%: %s)\n",
                ok ? "PASS" : "FAIL", base_ok ? "ok" : "out of band",
                emb_ok ? "ok" : "out of band", skip_ok ? "ok" : "out of band");
    if (!ok) return kExitVerification;
  }
  return kExitOk;
}

int cmd_gradcheck() {
  using Td = Tensor<double>;
  double worst = 0;
  std::string worst_name = "none";
  auto record = [&](const std::string& name, double err) {
    if (err > worst) {
      worst = err;
      worst_name = name;
    }
  };
  auto rand_t = [](Shape shape, Rng& rng, double lo = -1, double hi = 1) {
    Td t(shape);
    for (long i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(lo, hi);
    return t;
  };

  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    {
      Td w = rand_t({3, 2, 3, 3}, rng);
      Td b = rand_t({3}, rng);
      Td pt = rand_t({2, 2, 5, 5}, rng);
      record("conv2d", finite_diff_check(
                           [&](Td& x) {
                             return mean_all(mul(conv2d(x, w, b, 1, 1),
                                                 conv2d(x, w, b, 1, 1)));
                           },
                           pt));
    }
    {
      Td pt = rand_t({1, 2, 4, 4}, rng);
      record("maxpool2", finite_diff_check(
                             [&](Td& x) { return mean_all(maxpool2(x)); },
                             pt));
      record("upsample",
             finite_diff_check(
                 [&](Td& x) {
                   Td u = bilinear_upsample2(x);
                   return mean_all(mul(u, u));
                 },
                 pt));
      record("relu+sigmoid",
             finite_diff_check(
                 [&](Td& x) { return mean_all(sigmoid(relu(x))); }, pt));
    }
    {
      Rng r2(seed + 100);
      auto bn = BatchNormParams<double>::create(3);
      for (long i = 0; i < 3; ++i) {
        bn.running_mean.data()[i] = r2.uniform(-0.5, 0.5);
        bn.running_var.data()[i] = r2.uniform(0.5, 1.5);
      }
      Td pt = rand_t({2, 3, 3, 3}, rng);
      record("batchnorm",
             finite_diff_check(
                 [&](Td& x) {
                   Td y = batchnorm_inference(x, bn);
                   return mean_all(mul(y, y));
                 },
                 pt));
      auto table = ClassEmbeddingTable<double>::create(4, 3, r2);
      std::vector<int> ids = {1, 3};
      record("adain", finite_diff_check(
                          [&](Td& x) {
                            Td y = adain(x, ids, table);
                            return mean_all(mul(y, y));
                          },
                          pt));
      Td emb = rand_t({4, 3}, rng);
      record("embedding_lookup",
             finite_diff_check(
                 [&](Td& x) {
                   Td row = embedding_lookup(x, 2);
                   return mean_all(mul(row, row));
                 },
                 emb));
    }
    {
      FeatureStackConfig tc;
      tc.channels = {4, 6};
      tc.pool_after = {0};
      tc.in_channels = 1;
      tc.input_size = 8;
      auto trunk = build_feature_extractor<double>(tc, seed);
      Td target = rand_t({1, 1, 8, 8}, rng, 0, 1);
      Td pt = rand_t({1, 1, 8, 8}, rng, 0, 1);
      record("psim", finite_diff_check(
                         [&](Td& x) { return psim(x, target, trunk); }, pt,
                         1e-5));
    }
  }
  const bool pass = worst < 1e-5;
  std::printf("%s (max rel err = %.3e in %s)\n", pass ? "PASS" : "FAIL",
              worst, worst_name.c_str());
  return pass ? kExitOk : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conditional encoder-decoder sketch synthesis toolkit"};
  app.require_subcommand(1);
  app.add_option("--workdir", g_workdir, "resolve relative paths from here");

  std::string cfg_path, data_dir, out, enc_path, trunk_path, clf_path,
      ckpt_path, image_path, metrics, resume, pc_name;
  std::int64_t seed_override = -1, cls = -1;

  auto* gen = app.add_subcommand("gen-data", "generate the synthetic dataset");
  gen->add_option("--config", cfg_path)->required();
  gen->add_option("--out", out)->required();
  gen->add_option("--seed", seed_override, "override data.seed");

  auto* ploss = app.add_subcommand("pretrain-loss",
                                   "train the loss-network sketch classifier");
  ploss->add_option("--config", cfg_path)->required();
  ploss->add_option("--data", data_dir)->required();
  ploss->add_option("--out", out)->required();

  auto* penc =
      app.add_subcommand("pretrain-encoder", "train and freeze the encoder");
  penc->add_option("--config", cfg_path)->required();
  penc->add_option("--data", data_dir)->required();
  penc->add_option("--out", out)->required();

  auto* train = app.add_subcommand("train", "end-to-end decoder training");
  train->add_option("--config", cfg_path)->required();
  train->add_option("--data", data_dir)->required();
  train->add_option("--encoder", enc_path)->required();
  train->add_option("--trunk", trunk_path);
  train->add_option("--out", out)->required();
  train->add_option("--metrics", metrics, "metrics CSV path");
  train->add_option("--resume", resume, "checkpoint to resume from");

  auto* sketch = app.add_subcommand("sketch", "image to sketch inference");
  sketch->add_option("--checkpoint", ckpt_path)->required();
  sketch->add_option("--image", image_path)->required();
  sketch->add_option("--class", cls, "class id (adain conditioning)");
  sketch->add_option("--out", out)->required();

  auto* tclf = app.add_subcommand("train-classifier",
                                  "train the evaluation classifier");
  tclf->add_option("--config", cfg_path)->required();
  tclf->add_option("--data", data_dir)->required();
  tclf->add_option("--out", out)->required();

  auto* ev = app.add_subcommand("eval", "score sketches with the classifier");
  ev->add_option("--config", cfg_path)->required();
  ev->add_option("--data", data_dir)->required();
  ev->add_option("--classifier", clf_path)->required();
  ev->add_option("--checkpoint", ckpt_path,
                 "train checkpoint; omitted = score ground-truth sketches");

  auto* abl = app.add_subcommand("ablate", "run the ablation matrix");
  abl->add_option("--config", cfg_path)->required();
  abl->add_option("--data", data_dir)->required();
  abl->add_option("--encoder", enc_path)->required();
  abl->add_option("--trunk", trunk_path)->required();
  abl->add_option("--classifier", clf_path)->required();
  abl->add_option("--out", out, "CSV output path");

  auto* pc = app.add_subcommand("param-count", "parameter accounting report");
  pc->add_option("--config", pc_name, "e.g. fullscale-skip, desk-adain")
      ->required();

  auto* gc =
      app.add_subcommand("gradcheck", "finite-difference gradient suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(cfg_path, out, seed_override);
    if (ploss->parsed()) return cmd_pretrain_loss(cfg_path, data_dir, out);
    if (penc->parsed()) return cmd_pretrain_encoder(cfg_path, data_dir, out);
    if (train->parsed())
      return cmd_train(cfg_path, data_dir, enc_path, trunk_path, out, metrics,
                       resume);
    if (sketch->parsed()) return cmd_sketch(ckpt_path, image_path, cls, out);
    if (tclf->parsed()) return cmd_train_classifier(cfg_path, data_dir, out);
    if (ev->parsed()) return cmd_eval(cfg_path, data_dir, clf_path, ckpt_path);
    if (abl->parsed())
      return cmd_ablate(cfg_path, data_dir, enc_path, trunk_path, clf_path,
                        out);
    if (pc->parsed()) return cmd_param_count(pc_name);
    if (gc->parsed()) return cmd_gradcheck();
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const PrereqError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitMissingPrereq;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
