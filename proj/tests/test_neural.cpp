#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "photonids/nn/conv_kernels.hpp"
#include "photonids/nn/models.hpp"
#include "photonids/nn/optimizer.hpp"
#include "photonids/nn/train.hpp"

using namespace photonids;
using namespace photonids::nn;

namespace {

constexpr double kFdStep = 1e-4;
constexpr double kFdTol = 1e-4;

double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-6});
}

Tensor<double> random_tensor(std::vector<int> shape, Rng& rng,
                             double scale = 1.0, double keep_away = 0.0) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.data) {
    v = rng.gaussian() * scale;
    if (keep_away > 0.0 && std::fabs(v) < keep_away)
      v = v < 0.0 ? v - keep_away : v + keep_away;
  }
  return t;
}

// Central-difference check of dL/dtheta for L = sum(c .* f(theta)).
// `forward` must be a pure function of the tensors it closes over.
void check_param_gradient(double* param, const double* analytic, std::size_t n,
                          const std::function<double()>& loss, Rng& rng,
                          int samples = 6) {
  for (int s = 0; s < samples; ++s) {
    auto i = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
    if (i >= n) i = n - 1;
    double orig = param[i];
    param[i] = orig + kFdStep;
    double lp = loss();
    param[i] = orig - kFdStep;
    double lm = loss();
    param[i] = orig;
    double fd = (lp - lm) / (2.0 * kFdStep);
    CHECK(rel_err(fd, analytic[i]) <= kFdTol);
  }
}

double weighted_sum(const Tensor<double>& y, const Tensor<double>& c) {
  double acc = 0.0;
  for (std::size_t i = 0; i < y.numel(); ++i) acc += y.data[i] * c.data[i];
  return acc;
}

}  // namespace

TEST_CASE("conv1d with zero weights emits the bias at every position") {
  Conv1d<double> conv(2, 3);
  conv.bias.data = {0.5, -1.0, 2.0};
  Rng rng(3);
  auto x = random_tensor({2, 2, 7}, rng);
  auto z = conv.forward(x);
  for (int n = 0; n < 2; ++n)
    for (int c = 0; c < 3; ++c)
      for (int l = 0; l < 7; ++l)
        CHECK(z.data[static_cast<std::size_t>((n * 3 + c) * 7 + l)] ==
              doctest::Approx(conv.bias.data[static_cast<std::size_t>(c)]));
}

TEST_CASE("conv1d delta kernel is the identity") {
  Conv1d<double> conv(1, 1);
  conv.weight.data = {0.0, 1.0, 0.0};
  conv.bias.data = {0.0};
  Rng rng(5);
  auto x = random_tensor({1, 1, 9}, rng);
  auto z = conv.forward(x);
  for (std::size_t i = 0; i < x.numel(); ++i)
    CHECK(z.data[i] == doctest::Approx(x.data[i]).epsilon(1e-15));
}

TEST_CASE("conv1d matches the nested-loop oracle on random small tensors") {
  Rng rng(7);
  for (int rep = 0; rep < 200; ++rep) {
    int cin = 1 + static_cast<int>(rng.uniform() * 3);
    int cout = 1 + static_cast<int>(rng.uniform() * 4);
    int len = 2 + static_cast<int>(rng.uniform() * 7);
    int n = 1 + static_cast<int>(rng.uniform() * 3);
    Conv1d<double> conv(cin, cout);
    conv.init(rng);
    auto x = random_tensor({n, cin, len}, rng);
    auto z = conv.forward(x);
    // Direct triple loop, independently written.
    for (int s = 0; s < n; ++s)
      for (int co = 0; co < cout; ++co)
        for (int l = 0; l < len; ++l) {
          double acc = conv.bias.data[static_cast<std::size_t>(co)];
          for (int ci = 0; ci < cin; ++ci)
            for (int j = 0; j < 3; ++j) {
              int src = l + j - 1;
              if (src < 0 || src >= len) continue;
              acc += conv.weight
                         .data[static_cast<std::size_t>((co * cin + ci) * 3 +
                                                        j)] *
                     x.data[static_cast<std::size_t>((s * cin + ci) * len +
                                                     src)];
            }
          CHECK(std::fabs(
                    z.data[static_cast<std::size_t>((s * cout + co) * len + l)] -
                    acc) <= 1e-12);
        }
  }
}

TEST_CASE("float fast-path conv matches the double reference") {
  Rng rng(11);
  int cin = 64, cout = 32, len = 512, n = 2;
  Conv1d<float> fast(cin, cout);
  Conv1d<double> ref(cin, cout);
  fast.init(rng);
  for (std::size_t i = 0; i < fast.weight.numel(); ++i)
    ref.weight.data[i] = fast.weight.data[i];
  for (std::size_t i = 0; i < fast.bias.numel(); ++i)
    ref.bias.data[i] = fast.bias.data[i];
  Tensor<float> xf({n, cin, len});
  Tensor<double> xd({n, cin, len});
  for (std::size_t i = 0; i < xf.numel(); ++i) {
    float v = static_cast<float>(rng.gaussian());
    xf.data[i] = v;
    xd.data[i] = v;
  }
  auto zf = fast.forward(xf);
  auto zd = ref.forward(xd);
  // float32 accumulates ~cin*3 terms; compare at the output scale so
  // cancellation near zero does not dominate.
  double zscale = 0.0;
  for (double v : zd.data) zscale = std::max(zscale, std::fabs(v));
  for (std::size_t i = 0; i < zf.numel(); ++i)
    CHECK(std::fabs(double(zf.data[i]) - zd.data[i]) <= 1e-4 * zscale);

  // Weight gradients through both paths.
  Tensor<float> gf({n, cout, len});
  Tensor<double> gd({n, cout, len});
  for (std::size_t i = 0; i < gf.numel(); ++i) {
    float v = static_cast<float>(rng.gaussian());
    gf.data[i] = v;
    gd.data[i] = v;
  }
  fast.zero_grad();
  ref.zero_grad();
  auto gxf = fast.backward(gf);
  auto gxd = ref.backward(gd);
  double wscale = 0.0, xscale = 0.0;
  for (double v : ref.gweight.data) wscale = std::max(wscale, std::fabs(v));
  for (double v : gxd.data) xscale = std::max(xscale, std::fabs(v));
  for (std::size_t i = 0; i < fast.gweight.numel(); ++i)
    CHECK(std::fabs(double(fast.gweight.data[i]) - ref.gweight.data[i]) <=
          1e-4 * wscale);
  for (std::size_t i = 0; i < gxf.numel(); ++i)
    CHECK(std::fabs(double(gxf.data[i]) - gxd.data[i]) <= 1e-4 * xscale);
}

TEST_CASE("conv1d finite-difference gradients") {
  Rng rng(13);
  for (int rep = 0; rep < 50; ++rep) {
    int cin = 1 + static_cast<int>(rng.uniform() * 3);
    int cout = 1 + static_cast<int>(rng.uniform() * 4);
    int len = 3 + static_cast<int>(rng.uniform() * 6);
    int n = 1 + static_cast<int>(rng.uniform() * 3);
    Conv1d<double> conv(cin, cout);
    conv.init(rng);
    auto x = random_tensor({n, cin, len}, rng);
    auto c = random_tensor({n, cout, len}, rng);

    auto loss = [&]() {
      Conv1d<double> tmp = conv;
      return weighted_sum(tmp.forward(x), c);
    };
    conv.zero_grad();
    auto z = conv.forward(x);
    auto gx = conv.backward(c);
    check_param_gradient(conv.weight.ptr(), conv.gweight.ptr(),
                         conv.weight.numel(), loss, rng, 4);
    check_param_gradient(conv.bias.ptr(), conv.gbias.ptr(), conv.bias.numel(),
                         loss, rng, 2);
    auto input_loss = [&]() {
      Conv1d<double> tmp = conv;
      return weighted_sum(tmp.forward(x), c);
    };
    check_param_gradient(x.ptr(), gx.ptr(), x.numel(), input_loss, rng, 4);
    (void)z;
  }
}

TEST_CASE("batchnorm inference with unit running stats is the identity") {
  BatchNorm1d<double> bn(3);
  Rng rng(17);
  auto x = random_tensor({2, 3, 5}, rng);
  auto y = bn.forward(x, /*train=*/false);
  for (std::size_t i = 0; i < x.numel(); ++i)
    CHECK(y.data[i] == doctest::Approx(x.data[i]).epsilon(1e-5));
}

TEST_CASE("batchnorm train output is normalized per channel") {
  BatchNorm1d<double> bn(4);
  Rng rng(19);
  auto x = random_tensor({8, 4, 16}, rng, 5.0);
  auto y = bn.forward(x, /*train=*/true);
  for (int c = 0; c < 4; ++c) {
    double sum = 0.0, sq = 0.0;
    int count = 0;
    for (int s = 0; s < 8; ++s)
      for (int l = 0; l < 16; ++l) {
        double v = y.data[static_cast<std::size_t>((s * 4 + c) * 16 + l)];
        sum += v;
        sq += v * v;
        ++count;
      }
    double mean = sum / count;
    double var = sq / count - mean * mean;
    CHECK(std::fabs(mean) <= 1e-6);
    CHECK(std::fabs(var - 1.0) <= 1e-3);
  }
}

TEST_CASE("batchnorm train matches the direct formula oracle") {
  BatchNorm1d<double> bn(2);
  Rng rng(23);
  bn.gamma.data = {1.3, 0.7};
  bn.beta.data = {-0.2, 0.4};
  auto x = random_tensor({3, 2, 4}, rng, 2.0);
  auto y = bn.forward(x, /*train=*/true);
  for (int c = 0; c < 2; ++c) {
    double sum = 0.0, sq = 0.0;
    for (int s = 0; s < 3; ++s)
      for (int l = 0; l < 4; ++l) {
        double v = x.data[static_cast<std::size_t>((s * 2 + c) * 4 + l)];
        sum += v;
        sq += v * v;
      }
    double mean = sum / 12.0;
    double var = sq / 12.0 - mean * mean;
    for (int s = 0; s < 3; ++s)
      for (int l = 0; l < 4; ++l) {
        auto idx = static_cast<std::size_t>((s * 2 + c) * 4 + l);
        double expect = (x.data[idx] - mean) / std::sqrt(var + 1e-5) *
                            bn.gamma.data[static_cast<std::size_t>(c)] +
                        bn.beta.data[static_cast<std::size_t>(c)];
        CHECK(std::fabs(y.data[idx] - expect) <= 1e-9);
      }
  }
}

TEST_CASE("batchnorm rejects training batches of one") {
  BatchNorm1d<double> bn(2);
  Tensor<double> x({1, 2, 4});
  CHECK_THROWS_AS(bn.forward(x, true), Error);
}

TEST_CASE("batchnorm finite-difference gradients, train and infer") {
  Rng rng(29);
  for (int rep = 0; rep < 50; ++rep) {
    int ch = 1 + static_cast<int>(rng.uniform() * 3);
    int len = 2 + static_cast<int>(rng.uniform() * 4);
    int n = 2 + static_cast<int>(rng.uniform() * 3);
    bool train = rep % 2 == 0;
    bool fused = rep % 4 < 2;
    BatchNorm1d<double> bn(ch);
    bn.fuse_relu = fused;
    for (auto& g : bn.gamma.data) g = 0.5 + rng.uniform();
    for (auto& b : bn.beta.data) b = rng.gaussian() * 0.3;
    for (auto& v : bn.running_var.data) v = 0.5 + rng.uniform();
    for (auto& m : bn.running_mean.data) m = rng.gaussian() * 0.2;
    auto bn_frozen = bn;  // forward mutates running stats in train mode
    auto x = random_tensor({n, ch, len}, rng, 1.0, 0.05);
    auto c = random_tensor({n, ch, len}, rng);

    auto loss = [&]() {
      BatchNorm1d<double> tmp = bn_frozen;
      return weighted_sum(tmp.forward(x, train), c);
    };
    bn.zero_grad();
    bn.forward(x, train);
    auto gx = bn.backward(c);
    check_param_gradient(bn.gamma.ptr(), bn.ggamma.ptr(), bn.gamma.numel(),
                         [&]() {
                           BatchNorm1d<double> tmp = bn_frozen;
                           tmp.gamma = bn.gamma;
                           tmp.beta = bn.beta;
                           return weighted_sum(tmp.forward(x, train), c);
                         },
                         rng, 3);
    check_param_gradient(bn.beta.ptr(), bn.gbeta.ptr(), bn.beta.numel(),
                         [&]() {
                           BatchNorm1d<double> tmp = bn_frozen;
                           tmp.gamma = bn.gamma;
                           tmp.beta = bn.beta;
                           return weighted_sum(tmp.forward(x, train), c);
                         },
                         rng, 3);
    check_param_gradient(x.ptr(), gx.ptr(), x.numel(), loss, rng, 5);
  }
}

TEST_CASE("gap: constant channels, single column, and the mean oracle") {
  GlobalAvgPool<double> gap;
  Tensor<double> x({1, 2, 4});
  for (int l = 0; l < 4; ++l) {
    x.data[static_cast<std::size_t>(l)] = 3.5;
    x.data[static_cast<std::size_t>(4 + l)] = -1.0;
  }
  auto y = gap.forward(x);
  CHECK(y.data[0] == doctest::Approx(3.5));
  CHECK(y.data[1] == doctest::Approx(-1.0));

  Tensor<double> one({1, 3, 1});
  one.data = {1.0, 2.0, 3.0};
  auto y1 = gap.forward(one);
  CHECK(y1.data == one.data);

  Rng rng(31);
  auto xr = random_tensor({3, 4, 7}, rng);
  auto yr = gap.forward(xr);
  for (int s = 0; s < 3; ++s)
    for (int ch = 0; ch < 4; ++ch) {
      double mean = 0.0;
      for (int l = 0; l < 7; ++l)
        mean += xr.data[static_cast<std::size_t>((s * 4 + ch) * 7 + l)];
      mean /= 7.0;
      CHECK(std::fabs(yr.data[static_cast<std::size_t>(s * 4 + ch)] - mean) <=
            1e-12);
    }
}

TEST_CASE("gap finite-difference gradients") {
  Rng rng(37);
  for (int rep = 0; rep < 50; ++rep) {
    int n = 1 + static_cast<int>(rng.uniform() * 3);
    int ch = 1 + static_cast<int>(rng.uniform() * 4);
    int len = 1 + static_cast<int>(rng.uniform() * 6);
    GlobalAvgPool<double> gap;
    auto x = random_tensor({n, ch, len}, rng);
    auto c = random_tensor({n, ch}, rng);
    auto loss = [&]() {
      GlobalAvgPool<double> t;
      return weighted_sum(t.forward(x), c);
    };
    gap.forward(x);
    auto gx = gap.backward(c);
    check_param_gradient(x.ptr(), gx.ptr(), x.numel(), loss, rng, 5);
  }
}

TEST_CASE("dense finite-difference gradients") {
  Rng rng(41);
  for (int rep = 0; rep < 50; ++rep) {
    int in = 1 + static_cast<int>(rng.uniform() * 5);
    int out = 1 + static_cast<int>(rng.uniform() * 4);
    int n = 1 + static_cast<int>(rng.uniform() * 3);
    Dense<double> d(in, out);
    d.init(rng);
    auto x = random_tensor({n, in}, rng);
    auto c = random_tensor({n, out}, rng);
    auto loss = [&]() {
      Dense<double> tmp = d;
      return weighted_sum(tmp.forward(x), c);
    };
    d.zero_grad();
    d.forward(x);
    auto gx = d.backward(c);
    check_param_gradient(d.weight.ptr(), d.gweight.ptr(), d.weight.numel(),
                         loss, rng, 4);
    check_param_gradient(d.bias.ptr(), d.gbias.ptr(), d.bias.numel(), loss,
                         rng, 2);
    check_param_gradient(x.ptr(), gx.ptr(), x.numel(), loss, rng, 4);
  }
}

TEST_CASE("relu finite-difference gradients away from the kink") {
  Rng rng(43);
  for (int rep = 0; rep < 50; ++rep) {
    int n = 2 + static_cast<int>(rng.uniform() * 20);
    auto x = random_tensor({n}, rng, 1.0, 0.05);
    auto c = random_tensor({n}, rng);
    Relu<double> relu;
    auto loss = [&]() {
      Relu<double> t;
      Tensor<double> xc = x;
      return weighted_sum(t.forward(std::move(xc)), c);
    };
    Tensor<double> xc = x;
    relu.forward(std::move(xc));
    Tensor<double> cc = c;
    auto gx = relu.backward(std::move(cc));
    check_param_gradient(x.ptr(), gx.ptr(), x.numel(), loss, rng, 5);
  }
}

TEST_CASE("dropout: inference passthrough, train scaling and gradients") {
  Rng rng(47);
  Dropout<double> drop;
  drop.p = 0.3;
  auto x = random_tensor({40}, rng, 1.0, 0.05);
  Tensor<double> xc = x;
  auto y_inf = drop.forward(std::move(xc), /*train=*/false, nullptr);
  CHECK(y_inf.data == x.data);

  // Fixed mask via a fixed seed makes the map linear; gradients are exact.
  for (int rep = 0; rep < 50; ++rep) {
    auto seed = static_cast<std::uint64_t>(1000 + rep);
    auto c = random_tensor({40}, rng);
    auto loss = [&]() {
      Dropout<double> t;
      t.p = 0.3;
      Rng r(seed);
      Tensor<double> in = x;
      return weighted_sum(t.forward(std::move(in), true, &r), c);
    };
    Dropout<double> d2;
    d2.p = 0.3;
    Rng r(seed);
    Tensor<double> in = x;
    auto y = d2.forward(std::move(in), true, &r);
    for (std::size_t i = 0; i < y.numel(); ++i) {
      bool kept = y.data[i] != 0.0;
      if (kept)
        CHECK(y.data[i] == doctest::Approx(x.data[i] / 0.7).epsilon(1e-12));
    }
    Tensor<double> cc = c;
    auto gx = d2.backward(std::move(cc));
    check_param_gradient(x.ptr(), gx.ptr(), x.numel(), loss, rng, 4);
  }
}

TEST_CASE("softmax: uniform logits, unit sum, shift invariance, stability") {
  double logits[4] = {0.3, 0.3, 0.3, 0.3};
  double probs[4];
  softmax_row(logits, probs, 4);
  for (double p : probs) CHECK(p == doctest::Approx(0.25).epsilon(1e-12));

  Rng rng(53);
  for (int rep = 0; rep < 100; ++rep) {
    double l[5], p1[5], p2[5];
    for (auto& v : l) v = rng.gaussian() * 3.0;
    softmax_row(l, p1, 5);
    double sum = 0.0;
    for (double v : p1) sum += v;
    CHECK(std::fabs(sum - 1.0) <= 1e-12);
    double shift = rng.gaussian() * 10.0;
    double ls[5];
    for (int i = 0; i < 5; ++i) ls[i] = l[i] + shift;
    softmax_row(ls, p2, 5);
    for (int i = 0; i < 5; ++i)
      CHECK(std::fabs(p1[i] - p2[i]) <= 1e-12);
  }

  double big[2] = {1e4, -1e4};
  double pb[2];
  softmax_row(big, pb, 2);
  CHECK(std::isfinite(pb[0]));
  CHECK(pb[0] == doctest::Approx(1.0));
  CHECK(pb[1] == doctest::Approx(0.0));
}

TEST_CASE("loss layers: finite-difference gradients") {
  Rng rng(59);
  for (int rep = 0; rep < 50; ++rep) {
    int n = 2 + static_cast<int>(rng.uniform() * 4);
    int k = 2 + static_cast<int>(rng.uniform() * 3);
    auto pred = random_tensor({n, k}, rng);
    auto target = random_tensor({n, k}, rng);
    MseLoss<double> mse;
    mse.forward(pred, target);
    auto g = mse.backward();
    auto loss = [&]() {
      MseLoss<double> t;
      return t.forward(pred, target);
    };
    check_param_gradient(pred.ptr(), g.ptr(), pred.numel(), loss, rng, 4);

    std::vector<int> labels(static_cast<std::size_t>(n));
    for (auto& l : labels) l = static_cast<int>(rng.uniform() * k);
    auto logits = random_tensor({n, k}, rng);
    SoftmaxCrossEntropy<double> ce;
    ce.forward(logits, labels);
    auto gl = ce.backward();
    auto ce_loss = [&]() {
      SoftmaxCrossEntropy<double> t;
      return t.forward(logits, labels);
    };
    check_param_gradient(logits.ptr(), gl.ptr(), logits.numel(), ce_loss, rng,
                         4);
  }
}

TEST_CASE("full regressor model: finite-difference gradients on a tiny input") {
  CnnRegressorT<double> model;
  model.init(99);
  Rng rng(61);
  int n = 2, len = 12;
  auto x = random_tensor({n, 1, len}, rng, 1.0, 0.02);
  auto c = random_tensor({n, 4}, rng);
  std::uint64_t dropout_seed = 777;

  auto loss = [&]() {
    CnnRegressorT<double> tmp = model;
    Rng dr(dropout_seed);
    Tensor<double> xc = x;
    return weighted_sum(tmp.forward(std::move(xc), true, &dr), c);
  };
  CnnRegressorT<double> work = model;
  Rng dr(dropout_seed);
  Tensor<double> xc = x;
  auto y = work.forward(std::move(xc), true, &dr);
  work.zero_grad();
  work.backward(c);
  (void)y;
  auto params = work.params();
  auto ref_params = model.params();
  for (std::size_t pi = 0; pi < params.size(); ++pi)
    check_param_gradient(ref_params[pi].value, params[pi].grad,
                         params[pi].size, loss, rng, 3);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  std::vector<float> w = {1.0f, -2.0f, 3.0f};
  std::vector<float> g = {0.0f, 0.0f, 0.0f};
  Adam<float> adam({{w.data(), g.data(), 3, "w"}}, 0.01);
  auto before = w;
  for (int i = 0; i < 5; ++i) adam.step();
  CHECK(w == before);
}

TEST_CASE("one adam step on f(w) = w^2 descends") {
  std::vector<double> w = {1.0};
  std::vector<double> g = {2.0};  // df/dw at w=1
  Adam<double> adam({{w.data(), g.data(), 1, "w"}}, 0.1);
  adam.step();
  CHECK(w[0] < 1.0);
  CHECK(w[0] * w[0] < 1.0);
}

TEST_CASE("bn train/infer gap shrinks as running statistics converge") {
  CnnRegressorT<float> model;
  model.init(5);
  Rng rng(67);
  int n = 16, len = 64;
  Tensor<float> x({n, 1, len});
  for (auto& v : x.data) v = static_cast<float>(rng.gaussian());

  auto diff_now = [&]() {
    Tensor<float> a = x, b = x;
    Rng r1(1);
    auto yt = model.forward(std::move(a), true, &r1);
    auto yi = model.forward(std::move(b), false, nullptr);
    double d = 0.0;
    for (std::size_t i = 0; i < yt.numel(); ++i)
      d += std::fabs(double(yt.data[i]) - double(yi.data[i]));
    return d;
  };
  double first = diff_now();
  for (int it = 0; it < 60; ++it) {
    Tensor<float> a = x;
    Rng r1(1);
    model.forward(std::move(a), true, &r1);  // updates running stats only
  }
  double last = diff_now();
  CHECK(last < first);
}

TEST_CASE("train_regressor memorizes a repeated waveform") {
  WaveBank bank;
  bank.resize(8, 101);
  Rng rng(71);
  std::vector<float> proto(101);
  for (auto& v : proto) v = static_cast<float>(rng.gaussian() * 10.0);
  for (int i = 0; i < 8; ++i)
    std::copy(proto.begin(), proto.end(), bank.row(i));
  std::vector<PseudoPosition> targets(8, PseudoPosition{1.0, -2.0, 0.5, 3.0});

  CnnModel model;
  model.init(3);
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 8;
  cfg.epochs = 150;
  cfg.seed = 4;
  auto hist = train_regressor(model, bank, targets, cfg);
  // Dropout keeps a small noise floor; memorization still shrinks the loss
  // by orders of magnitude.
  CHECK(hist.epoch_loss.back() < 1e-3);
  CHECK(hist.epoch_loss.back() < hist.epoch_loss.front() / 50.0);
}

TEST_CASE("train_regressor loss decreases and training is deterministic") {
  Rng rng(73);
  int n = 96, len = 101;
  WaveBank bank;
  bank.resize(n, len);
  std::vector<PseudoPosition> targets(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double a = rng.uniform(0.5, 2.0);
    for (int l = 0; l < len; ++l)
      bank.row(i)[l] = static_cast<float>(
          a * std::exp(-std::pow((l - 30.0 - 10.0 * a) / 8.0, 2)) * 50.0 +
          rng.gaussian() * 0.1);
    targets[static_cast<std::size_t>(i)] = {a, 2.0 * a, -a, a * a};
  }
  TrainConfig cfg;
  cfg.learning_rate = 5e-4;
  cfg.batch_size = 16;
  cfg.epochs = 8;
  cfg.seed = 11;

  CnnModel m1;
  m1.init(21);
  auto h1 = train_regressor(m1, bank, targets, cfg);
  CHECK(h1.epoch_loss.back() < h1.epoch_loss.front());

  CnnModel m2;
  m2.init(21);
  auto h2 = train_regressor(m2, bank, targets, cfg);
  CHECK(h1.epoch_loss == h2.epoch_loss);
  CHECK(m1.conv1.weight.data == m2.conv1.weight.data);
  CHECK(m1.fc2.weight.data == m2.fc2.weight.data);
  CHECK(m1.bn1.running_mean.data == m2.bn1.running_mean.data);
}

TEST_CASE("inference is pure: identical inputs give identical outputs") {
  CnnModel model;
  model.init(9);
  Rng rng(79);
  ProcessedWaveform w;
  w.sample_period = 0.025;
  w.samples.resize(301);
  for (auto& v : w.samples) v = rng.gaussian() * 5.0;
  auto p1 = predict_positions(model, w);
  auto p2 = predict_positions(model, w);
  CHECK(p1 == p2);
}

TEST_CASE("classifier probabilities sum to one and argmax picks the label") {
  FcnnModel model(8);
  model.init(31);
  Rng rng(83);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> z(8);
    for (auto& v : z) v = rng.gaussian() * 100.0;
    auto c = classify(model, z);
    CHECK(c.probabilities[0] + c.probabilities[1] ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK((c.label == Label::Photon) ==
          (c.probabilities[1] > c.probabilities[0]));
  }
}

TEST_CASE("train_classifier separates a separable toy problem") {
  Rng rng(89);
  int n = 600, d = 4;
  FeatureMatrix x, xv;
  x.resize(n, d);
  xv.resize(200, d);
  std::vector<int> y(static_cast<std::size_t>(n)), yv(200);
  auto fill = [&](FeatureMatrix& m, std::vector<int>& lab) {
    for (int i = 0; i < m.count; ++i) {
      int cls = i % 2;
      lab[static_cast<std::size_t>(i)] = cls;
      for (int k = 0; k < d; ++k)
        m.row(i)[k] = rng.gaussian() + (cls ? 1.5 : -1.5);
    }
  };
  fill(x, y);
  fill(xv, yv);
  FcnnModel model(d);
  model.init(41);
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 32;
  cfg.epochs = 30;
  cfg.seed = 7;
  auto hist = train_classifier(model, x, y, xv, yv, cfg, 10, true);
  CHECK(hist.epochs_run >= 1);
  auto pred = classify_batch(model, xv);
  int correct = 0;
  for (int i = 0; i < xv.count; ++i)
    correct += pred.labels[static_cast<std::size_t>(i)] ==
               yv[static_cast<std::size_t>(i)];
  CHECK(correct >= 190);
}
