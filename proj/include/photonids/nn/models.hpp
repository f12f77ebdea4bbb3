#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "photonids/nn/layers.hpp"

namespace photonids::nn {

// Layers cache activations for the backward pass, so a model object is
// confined to one thread at a time; for concurrent inference give each
// thread its own copy (models have plain value semantics). Outputs are a
// pure function of (weights, input) either way.

/// 1-D CNN pseudo-position regressor:
/// conv(1->64,k3,p1) + BN + ReLU, conv(64->32,k3,p1) + BN + ReLU,
/// global average pooling, fc(32->128) + ReLU + dropout(0.2), fc(128->4).
///
/// Targets are z-scored per output channel during training; the constants
/// live on the model and the network's outputs stay in that standardized
/// space. The downstream monotone calibrator owns the map back to the
/// anchored position scale.
template <class T>
struct CnnRegressorT {
  Conv1d<T> conv1{1, 64};
  BatchNorm1d<T> bn1{64};
  Conv1d<T> conv2{64, 32};
  BatchNorm1d<T> bn2{32};
  Dense<T> fc1{32, 128};
  Dense<T> fc2{128, 4};
  Dropout<T> dropout{};  // p = 0.2
  std::array<double, 4> target_mean{0, 0, 0, 0};
  std::array<double, 4> target_std{1, 1, 1, 1};
  std::uint64_t init_seed = 0;

  CnnRegressorT() {
    conv1.input_grad_needed = false;
    bn1.fuse_relu = true;
    bn2.fuse_relu = true;
  }

  void init(std::uint64_t seed) {
    init_seed = seed;
    Rng rng(derive_seed(seed, 101));
    conv1.init(rng);
    conv2.init(rng);
    fc1.init(rng);
    fc2.init(rng);
  }

  /// x: [N][1][L]. Returns [N][4] in standardized target space.
  /// The two BN layers apply their ReLU in the same pass.
  Tensor<T> forward(Tensor<T> x, bool train, Rng* dropout_rng) {
    auto a = bn1.forward(conv1.forward(std::move(x)), train);
    auto b = bn2.forward(conv2.forward(std::move(a)), train);
    auto pooled = gap_.forward(b);
    auto h = dropout.forward(relu3_.forward(fc1.forward(std::move(pooled))),
                             train, dropout_rng);
    return fc2.forward(std::move(h));
  }

  void backward(const Tensor<T>& gout) {
    auto g = fc2.backward(gout);
    g = relu3_.backward(dropout.backward(std::move(g)));
    g = fc1.backward(g);
    g = gap_.backward(g);
    g = bn2.backward(g);
    g = conv2.backward(g);
    g = bn1.backward(g);
    conv1.backward(g);
  }

  std::vector<ParamRef<T>> params() {
    std::vector<ParamRef<T>> out;
    auto append = [&out](std::vector<ParamRef<T>> v) {
      out.insert(out.end(), v.begin(), v.end());
    };
    append(conv1.params());
    append(bn1.params());
    append(conv2.params());
    append(bn2.params());
    append(fc1.params());
    append(fc2.params());
    return out;
  }

  void zero_grad() {
    conv1.zero_grad();
    bn1.zero_grad();
    conv2.zero_grad();
    bn2.zero_grad();
    fc1.zero_grad();
    fc2.zero_grad();
  }

 private:
  Relu<T> relu3_;
  GlobalAvgPool<T> gap_;
};

/// Fully connected classifier: input -> 256 -> 128 -> 64 -> 32 -> 2 with
/// ReLU between layers and softmax on the logits. Input standardization
/// constants (fit on the training split) are part of the model; identity
/// constants mean the model consumes raw feature scales.
template <class T>
struct FcnnClassifierT {
  int input_dim = 8;
  Dense<T> fc1, fc2, fc3, fc4, fc5;
  std::vector<double> input_mean, input_std;
  std::uint64_t init_seed = 0;

  explicit FcnnClassifierT(int input_dim_ = 8)
      : input_dim(input_dim_),
        fc1(input_dim_, 256),
        fc2(256, 128),
        fc3(128, 64),
        fc4(64, 32),
        fc5(32, 2),
        input_mean(input_dim_, 0.0),
        input_std(input_dim_, 1.0) {}

  void init(std::uint64_t seed) {
    init_seed = seed;
    Rng rng(derive_seed(seed, 202));
    fc1.init(rng);
    fc2.init(rng);
    fc3.init(rng);
    fc4.init(rng);
    fc5.init(rng);
  }

  /// x: [N][input_dim] raw features; standardization happens inside.
  Tensor<T> forward(Tensor<T> x, bool train) {
    (void)train;
    int n = x.dim(0);
    for (int s = 0; s < n; ++s)
      for (int i = 0; i < input_dim; ++i) {
        auto idx = static_cast<std::size_t>(s) * input_dim + i;
        x.data[idx] = static_cast<T>(
            (double(x.data[idx]) - input_mean[static_cast<std::size_t>(i)]) /
            input_std[static_cast<std::size_t>(i)]);
      }
    auto h1 = relu1_.forward(fc1.forward(std::move(x)));
    auto h2 = relu2_.forward(fc2.forward(h1));
    auto h3 = relu3_.forward(fc3.forward(h2));
    penultimate_ = relu4_.forward(fc4.forward(h3));
    return fc5.forward(penultimate_);
  }

  void backward(const Tensor<T>& gout) {
    auto g = fc5.backward(gout);
    g = fc4.backward(relu4_.backward(g));
    g = fc3.backward(relu3_.backward(g));
    g = fc2.backward(relu2_.backward(g));
    fc1.backward(relu1_.backward(g));
  }

  /// 32-wide activations feeding the output layer (for cluster metrics).
  const Tensor<T>& penultimate() const { return penultimate_; }

  std::vector<ParamRef<T>> params() {
    std::vector<ParamRef<T>> out;
    for (auto* d : {&fc1, &fc2, &fc3, &fc4, &fc5}) {
      auto v = d->params();
      out.insert(out.end(), v.begin(), v.end());
    }
    return out;
  }

  void zero_grad() {
    fc1.zero_grad();
    fc2.zero_grad();
    fc3.zero_grad();
    fc4.zero_grad();
    fc5.zero_grad();
  }

 private:
  Relu<T> relu1_, relu2_, relu3_, relu4_;
  Tensor<T> penultimate_;
};

}  // namespace photonids::nn

namespace photonids {
using CnnModel = nn::CnnRegressorT<float>;
using FcnnModel = nn::FcnnClassifierT<float>;
}  // namespace photonids
