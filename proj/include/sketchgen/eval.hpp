#pragma once

#include <string>
#include <vector>

#include "sketchgen/train.hpp"

namespace sketchgen {

// ---------------------------------------------------------------------------
// Top-k scoring of generated sketches with an independent classifier
// ---------------------------------------------------------------------------

template <typename T>
double evaluate_topk(const std::vector<Img>& sketches,
                     const std::vector<int>& labels,
                     const EvalClassifier<T>& clf, int k,
                     int batch_size = 32) {
  if (sketches.empty() || sketches.size() != labels.size())
    throw std::invalid_argument("evaluate_topk: empty or mismatched inputs");
  long hits = 0;
  for (std::size_t start = 0; start < sketches.size(); start += batch_size) {
    const std::size_t stop =
        std::min(sketches.size(), start + std::size_t(batch_size));
    std::vector<const Img*> ptrs;
    std::vector<int> batch_labels;
    for (std::size_t i = start; i < stop; ++i) {
      ptrs.push_back(&sketches[i]);
      batch_labels.push_back(labels[i]);
    }
    Tensor<T> logits = clf(to_tensor_batch<T>(ptrs));
    hits += std::lround(topk_accuracy(logits, batch_labels, k) *
                        double(batch_labels.size()));
  }
  return double(hits) / double(sketches.size());
}

// ---------------------------------------------------------------------------
// Evaluation classifier training on ground-truth sketches
// ---------------------------------------------------------------------------

template <typename T>
struct EvalClassifierResult {
  EvalClassifier<T> classifier;
  double top1 = 0, top5 = 0;
  std::vector<double> train_losses;
};

template <typename T>
EvalClassifierResult<T> train_eval_classifier(
    const std::vector<SketchSample>& data, const EvalClassifierConfig& net_cfg,
    const TrainConfig& cfg) {
  if (net_cfg.num_classes < 2)
    throw std::invalid_argument("train_eval_classifier: need >= 2 classes");
  EvalClassifierResult<T> res;
  res.classifier = build_eval_classifier<T>(net_cfg, cfg.seed);

  const DatasetSplit split = split_dataset(data, 0.8, cfg.seed);
  std::vector<std::pair<int, int>> pairs;
  for (int id : split.train_ids)
    for (std::size_t k = 0; k < data[id].sketches.size(); ++k)
      pairs.push_back({id, int(k)});

  ParamList<T> ps;
  res.classifier.params(ps);
  Adam<T> opt(ps, {cfg.lr});
  AugmentSpec aug;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(derive_stream(cfg.seed, 0xEC, epoch));
    auto order = pairs;
    shuffle(order, rng);
    double loss_sum = 0;
    long seen = 0;
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size) {
      const std::size_t stop =
          std::min(order.size(), start + std::size_t(cfg.batch_size));
      std::vector<Img> augd;
      std::vector<const Img*> ptrs;
      std::vector<int> labels;
      for (std::size_t i = start; i < stop; ++i) {
        const auto [id, k] = order[i];
        augd.push_back(augment_sketch(data[id].sketches[k], aug, rng));
        labels.push_back(data[id].label);
      }
      for (const auto& im : augd) ptrs.push_back(&im);
      Tensor<T> loss = softmax_cross_entropy(
          res.classifier(to_tensor_batch<T>(ptrs)), labels);
      loss_sum += detail::check_finite_loss(loss, "train_eval_classifier") *
                  double(labels.size());
      seen += long(labels.size());
      opt.zero_grad();
      backward(loss);
      opt.step();
    }
    res.train_losses.push_back(loss_sum / double(seen));
  }

  std::vector<Img> test_sketches;
  std::vector<int> test_labels;
  for (int id : split.test_ids)
    for (const auto& sk : data[id].sketches) {
      test_sketches.push_back(sk);
      test_labels.push_back(data[id].label);
    }
  res.top1 = evaluate_topk(test_sketches, test_labels, res.classifier, 1);
  res.top5 = evaluate_topk(test_sketches, test_labels, res.classifier, 5);
  return res;
}

// ---------------------------------------------------------------------------
// Ablation harness
// ---------------------------------------------------------------------------

struct AblationMethod {
  std::string name;
  LossKind loss = LossKind::psim;
  bool flip = false;
  Conditioning conditioning = Conditioning::batchnorm;
  SkipVariant skip_variant = SkipVariant::none;
};

inline std::vector<AblationMethod> default_ablation_methods() {
  return {
      {"mse", LossKind::mse, false, Conditioning::batchnorm,
       SkipVariant::none},
      {"psim", LossKind::psim, false, Conditioning::batchnorm,
       SkipVariant::none},
      {"psim+flip", LossKind::psim, true, Conditioning::batchnorm,
       SkipVariant::none},
      {"psim+flip+adain", LossKind::psim, true, Conditioning::adain,
       SkipVariant::none},
      {"psim+flip+adain+skip1", LossKind::psim, true, Conditioning::adain,
       SkipVariant::skip1},
      {"psim+flip+adain+skip", LossKind::psim, true, Conditioning::adain,
       SkipVariant::skip},
  };
}

struct AblationCell {
  std::string method;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  double top1 = 0, top5 = 0;
  ParamReport params;
};

struct AblationMatrix {
  std::vector<AblationCell> cells;  // one per (method, seed)

  std::vector<double> top1_of(const std::string& method) const {
    std::vector<double> v;
    for (const auto& c : cells)
      if (c.method == method && !c.failed) v.push_back(c.top1);
    return v;
  }
  static double median(std::vector<double> v) {
    if (v.empty()) return -1.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  }
};

// CSV per (method, seed) plus an aggregated median row per method.
inline std::string ablation_csv(const AblationMatrix& m) {
  std::string out =
      "method,top1,top5,params_total,params_embeddings,params_skip,seed\n";
  char buf[192];
  for (const auto& c : m.cells) {
    if (c.failed) {
      std::snprintf(buf, sizeof(buf), "%s,failed,failed,%ld,%ld,%ld,%llu\n",
                    c.method.c_str(), c.params.total, c.params.embeddings,
                    c.params.skip_adapters,
                    (unsigned long long)c.seed);
    } else {
      std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%ld,%ld,%ld,%llu\n",
                    c.method.c_str(), c.top1, c.top5, c.params.total,
                    c.params.embeddings, c.params.skip_adapters,
                    (unsigned long long)c.seed);
    }
    out += buf;
  }
  // aggregate rows keep method order of first appearance
  std::vector<std::string> seen;
  for (const auto& c : m.cells) {
    bool dup = false;
    for (const auto& s : seen) dup = dup || s == c.method;
    if (dup) continue;
    seen.push_back(c.method);
    const double med1 = AblationMatrix::median(m.top1_of(c.method));
    std::vector<double> t5;
    for (const auto& cc : m.cells)
      if (cc.method == c.method && !cc.failed) t5.push_back(cc.top5);
    const double med5 = AblationMatrix::median(t5);
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%ld,%ld,%ld,median\n",
                  c.method.c_str(), med1, med5, c.params.total,
                  c.params.embeddings, c.params.skip_adapters);
    out += buf;
  }
  return out;
}

struct AblationBudget {
  int epochs = 15;
  int batch_size = 16;
  double lr = 2e-4;
};

// Trains one decoder per (method, seed) against the shared frozen encoder,
// trunk, and scoring classifier, then scores generations on the test images.
// A cell that throws is marked failed; the others continue.
template <typename T>
AblationMatrix run_ablation(const std::vector<SketchSample>& data,
                            const DatasetSplit& split, const Encoder<T>& enc,
                            const FeatureStack<T>& trunk,
                            const EvalClassifier<T>& scorer, int num_classes,
                            const AblationBudget& budget,
                            const std::vector<std::uint64_t>& seeds,
                            const std::vector<AblationMethod>& methods =
                                default_ablation_methods(),
                            const std::function<void(const AblationCell&)>&
                                on_cell = {}) {
  AblationMatrix matrix;
  std::vector<int> test_labels;
  for (int id : split.test_ids) test_labels.push_back(data[id].label);

  for (const auto& method : methods)
    for (std::uint64_t seed : seeds) {
      AblationCell cell;
      cell.method = method.name;
      cell.seed = seed;
      try {
        auto dec = build_decoder<T>(
            mirror_decoder(enc.cfg, method.conditioning, method.skip_variant),
            num_classes, seed);
        cell.params = count_params(dec);
        TrainConfig cfg;
        cfg.epochs = budget.epochs;
        cfg.batch_size = budget.batch_size;
        cfg.lr = budget.lr;
        cfg.seed = seed;
        cfg.loss = method.loss;
        cfg.flip = method.flip;
        cfg.conditioning = method.conditioning;
        cfg.skip_variant = method.skip_variant;
        ParamList<T> ps;
        dec.params(ps);
        Adam<T> opt(ps, {cfg.lr});
        train_end_to_end(data, split, enc, trunk, dec, opt, cfg);
        auto gens = generate_sketches(data, split.test_ids, enc, dec);
        cell.top1 = evaluate_topk(gens, test_labels, scorer, 1);
        cell.top5 = evaluate_topk(gens, test_labels, scorer, 5);
      } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
      }
      if (on_cell) on_cell(cell);
      matrix.cells.push_back(std::move(cell));
    }
  return matrix;
}

}  // namespace sketchgen
