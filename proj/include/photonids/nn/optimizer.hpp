#pragma once

#include <cmath>
#include <vector>

#include "photonids/nn/layers.hpp"

namespace photonids::nn {

/// Adam with bias correction; beta = (0.9, 0.999), eps = 1e-8.
template <class T>
class Adam {
 public:
  explicit Adam(std::vector<ParamRef<T>> params, double lr)
      : params_(std::move(params)), lr_(lr) {
    for (const auto& p : params_) {
      m_.emplace_back(p.size, T(0));
      v_.emplace_back(p.size, T(0));
    }
  }

  void step() {
    ++t_;
    double bc1 = 1.0 - std::pow(0.9, t_);
    double bc2 = 1.0 - std::pow(0.999, t_);
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
      auto& p = params_[pi];
      T* m = m_[pi].data();
      T* v = v_[pi].data();
      for (std::size_t i = 0; i < p.size; ++i) {
        double g = p.grad[i];
        double mi = 0.9 * m[i] + 0.1 * g;
        double vi = 0.999 * v[i] + 0.001 * g * g;
        m[i] = static_cast<T>(mi);
        v[i] = static_cast<T>(vi);
        double mhat = mi / bc1;
        double vhat = vi / bc2;
        p.value[i] =
            static_cast<T>(p.value[i] - lr_ * mhat / (std::sqrt(vhat) + 1e-8));
      }
    }
  }

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  std::vector<ParamRef<T>> params_;
  std::vector<std::vector<T>> m_, v_;
  double lr_;
  long t_ = 0;
};

/// Plain SGD, kept for configuration parity.
template <class T>
class Sgd {
 public:
  explicit Sgd(std::vector<ParamRef<T>> params, double lr)
      : params_(std::move(params)), lr_(lr) {}

  void step() {
    for (auto& p : params_)
      for (std::size_t i = 0; i < p.size; ++i)
        p.value[i] = static_cast<T>(p.value[i] - lr_ * p.grad[i]);
  }

 private:
  std::vector<ParamRef<T>> params_;
  double lr_;
};

}  // namespace photonids::nn
