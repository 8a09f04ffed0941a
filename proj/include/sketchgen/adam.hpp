#pragma once

#include <cmath>
#include <vector>

#include "sketchgen/layers.hpp"

namespace sketchgen {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
class Adam {
 public:
  Adam(ParamList<T> params, AdamConfig cfg = {})
      : params_(std::move(params)), cfg_(cfg) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
      m_[i].assign(params_[i].second.size(), 0.0);
      v_[i].assign(params_[i].second.size(), 0.0);
    }
  }

  void set_lr(double lr) { cfg_.lr = lr; }
  double lr() const { return cfg_.lr; }
  long step_count() const { return t_; }
  const ParamList<T>& params() const { return params_; }

  void zero_grad() {
    for (auto& [n, p] : params_) p.zero_grad();
  }

  // one bias-corrected update from the currently accumulated gradients;
  // parameters without a gradient this step keep their moments decaying
  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, double(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, double(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& p = params_[i].second;
      const T* g = p.has_grad() ? p.grad().data() : nullptr;
      for (long j = 0; j < p.size(); ++j) {
        const double gj = g ? double(g[j]) : 0.0;
        // moments are stored at parameter precision so checkpointed state
        // round-trips exactly
        m_[i][j] = T(cfg_.beta1 * double(m_[i][j]) + (1.0 - cfg_.beta1) * gj);
        v_[i][j] =
            T(cfg_.beta2 * double(v_[i][j]) + (1.0 - cfg_.beta2) * gj * gj);
        const double mhat = double(m_[i][j]) / bc1;
        const double vhat = double(v_[i][j]) / bc2;
        p.data()[j] -= T(cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
      }
    }
  }

  // moment access for checkpointing
  std::vector<std::vector<T>>& m() { return m_; }
  std::vector<std::vector<T>>& v() { return v_; }
  void set_step_count(long t) { t_ = t; }

 private:
  ParamList<T> params_;
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<std::vector<T>> m_, v_;
};

}  // namespace sketchgen
