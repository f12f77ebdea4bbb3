#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "photonids/nn/conv_kernels.hpp"
#include "photonids/nn/tensor.hpp"
#include "photonids/rng.hpp"

namespace photonids::nn {

/// Flat view of one trainable parameter block and its gradient.
template <class T>
struct ParamRef {
  T* value = nullptr;
  T* grad = nullptr;
  std::size_t size = 0;
  const char* name = "";
};

// Cross-sample gradient accumulation always runs over a fixed number of
// sample buckets reduced in order, so results do not depend on the thread
// count.
inline constexpr int kGradBuckets = 8;

/// Kernel-size-3 zero-padded 1-D convolution over [N][Cin][L] tensors.
template <class T>
struct Conv1d {
  int cin = 0, cout = 0;
  Tensor<T> weight;  // [cout][cin][3]
  Tensor<T> bias;    // [cout]
  Tensor<T> gweight, gbias;
  bool input_grad_needed = true;

  Conv1d() = default;
  Conv1d(int cin_, int cout_) : cin(cin_), cout(cout_) {
    weight.resize({cout, cin, 3});
    bias.resize({cout});
    gweight.resize({cout, cin, 3});
    gbias.resize({cout});
  }

  void init(Rng& rng) {
    // Uniform fan-in scaling for weights and biases.
    T bound = T(1) / std::sqrt(T(cin * 3));
    for (auto& w : weight.data)
      w = static_cast<T>(rng.uniform(-double(bound), double(bound)));
    for (auto& b : bias.data)
      b = static_cast<T>(rng.uniform(-double(bound), double(bound)));
  }

  Tensor<T> forward(Tensor<T> x) {
    check_input(x);
    input_cache_ = std::move(x);
    const Tensor<T>& xc = input_cache_;
    int n = xc.dim(0), len = xc.dim(2);
    auto z = make_uninit<T>({n, cout, len});
    bool fast = run_fast(len);
    if (fast) repack();
#pragma omp parallel for schedule(static)
    for (int s = 0; s < n; ++s) {
      const T* u = xc.ptr() + static_cast<std::size_t>(s) * cin * len;
      T* zp = z.ptr() + static_cast<std::size_t>(s) * cout * len;
      if constexpr (std::is_same_v<T, float>) {
        if (fast) {
          kernels::conv3_forward_f32(u, packed_.data(), bias.ptr(), zp, cin,
                                     cout, len);
          continue;
        }
      }
      kernels::conv3_forward_ref(u, weight.ptr(), bias.ptr(), zp, cin, cout,
                                 len);
    }
    return z;
  }

  Tensor<T> backward(const Tensor<T>& gz) {
    const Tensor<T>& x = input_cache_;
    int n = x.dim(0), len = x.dim(2);

    // dW / db over fixed sample buckets, reduced in bucket order.
    std::size_t wsz = weight.numel();
    std::vector<T> bucket_w(static_cast<std::size_t>(kGradBuckets) * wsz,
                            T(0));
    std::vector<T> bucket_b(static_cast<std::size_t>(kGradBuckets) * cout,
                            T(0));
#pragma omp parallel for schedule(static)
    for (int bkt = 0; bkt < kGradBuckets; ++bkt) {
      int lo = static_cast<int>(static_cast<std::int64_t>(n) * bkt /
                                kGradBuckets);
      int hi = static_cast<int>(static_cast<std::int64_t>(n) * (bkt + 1) /
                                kGradBuckets);
      T* gw = bucket_w.data() + static_cast<std::size_t>(bkt) * wsz;
      T* gb = bucket_b.data() + static_cast<std::size_t>(bkt) * cout;
      for (int s = lo; s < hi; ++s) {
        const T* u = x.ptr() + static_cast<std::size_t>(s) * cin * len;
        const T* g = gz.ptr() + static_cast<std::size_t>(s) * cout * len;
        if constexpr (std::is_same_v<T, float>) {
          if (run_fast(len)) {
            kernels::conv3_grad_weights_f32(u, g, gw, gb, cin, cout, len);
            continue;
          }
        }
        kernels::conv3_grad_weights_ref(u, g, gw, gb, cin, cout, len);
      }
    }
    for (int bkt = 0; bkt < kGradBuckets; ++bkt) {
      const T* gw = bucket_w.data() + static_cast<std::size_t>(bkt) * wsz;
      const T* gb = bucket_b.data() + static_cast<std::size_t>(bkt) * cout;
      for (std::size_t i = 0; i < wsz; ++i) gweight.data[i] += gw[i];
      for (int c = 0; c < cout; ++c) gbias.data[static_cast<std::size_t>(c)] +=
          gb[c];
    }

    Tensor<T> gx;
    if (!input_grad_needed) return gx;

    // du = conv(gz, transpose+flip(W)) — same kernel, swapped channel roles.
    gx.resize_uninit({n, cin, len});
    bool fast = kernels::conv3_fast_available(cout, cin, len);
    if (fast) repack_transposed();
    std::vector<T> vcanon;
    if constexpr (!std::is_same_v<T, float>) fast = false;
    if (!fast) {
      vcanon.resize(static_cast<std::size_t>(cin) * cout * 3);
      kernels::transpose_flip_canonical(weight.ptr(), vcanon.data(), cin,
                                        cout);
    }
#pragma omp parallel for schedule(static)
    for (int s = 0; s < n; ++s) {
      const T* g = gz.ptr() + static_cast<std::size_t>(s) * cout * len;
      T* du = gx.ptr() + static_cast<std::size_t>(s) * cin * len;
      if constexpr (std::is_same_v<T, float>) {
        if (fast) {
          kernels::conv3_forward_f32(g, packed_t_.data(), nullptr, du, cout,
                                     cin, len);
          continue;
        }
      }
      kernels::conv3_forward_ref<T>(g, vcanon.data(), nullptr, du, cout, cin,
                                    len);
    }
    return gx;
  }

  std::vector<ParamRef<T>> params() {
    return {{weight.ptr(), gweight.ptr(), weight.numel(), "conv.weight"},
            {bias.ptr(), gbias.ptr(), bias.numel(), "conv.bias"}};
  }

  void zero_grad() {
    gweight.fill(T(0));
    gbias.fill(T(0));
  }

 private:
  void check_input(const Tensor<T>& x) const {
    if (x.shape.size() != 3 || x.dim(1) != cin)
      throw Error(ErrorCategory::InvalidArgument,
                  "conv1d input must be [N][Cin][L]");
  }
  bool run_fast(int len) const {
    return std::is_same_v<T, float> &&
           kernels::conv3_fast_available(cin, cout, len);
  }
  void repack() {
    if constexpr (std::is_same_v<T, float>) {
      packed_.resize(weight.numel());
      kernels::pack_weights(weight.ptr(), packed_.data(), cin, cout);
    }
  }
  void repack_transposed() {
    if constexpr (std::is_same_v<T, float>) {
      packed_t_.resize(weight.numel());
      kernels::pack_weights_transposed(weight.ptr(), packed_t_.data(), cin,
                                       cout);
    }
  }

  Tensor<T> input_cache_;
  std::vector<float> packed_, packed_t_;
};

/// Batch normalization over [N][C][L]; statistics per channel across N and
/// L. Training mode uses batch statistics (biased variance) and updates the
/// running estimates with momentum; inference normalizes with the running
/// estimates. Running variance uses the unbiased batch variance.
template <class T>
struct BatchNorm1d {
  int channels = 0;
  T momentum = T(0.1);
  T eps = T(1e-5);
  bool fuse_relu = false;  // apply max(0, .) on the output in one pass
  Tensor<T> gamma, beta, running_mean, running_var;
  Tensor<T> ggamma, gbeta;

  BatchNorm1d() = default;
  explicit BatchNorm1d(int c) : channels(c) {
    gamma.resize({c});
    beta.resize({c});
    running_mean.resize({c});
    running_var.resize({c});
    ggamma.resize({c});
    gbeta.resize({c});
    gamma.fill(T(1));
    running_var.fill(T(1));
  }

  Tensor<T> forward(Tensor<T> x, bool train) {
    if (x.shape.size() != 3 || x.dim(1) != channels)
      throw Error(ErrorCategory::InvalidArgument,
                  "batchnorm input must be [N][C][L]");
    if (train && x.dim(0) < 2)
      throw Error(ErrorCategory::InvalidArgument,
                  "batch statistics need a batch of at least 2");
    train_ = train;
    input_cache_ = std::move(x);
    const Tensor<T>& xc = input_cache_;
    int n = xc.dim(0), len = xc.dim(2);
    mean_.assign(channels, T(0));
    inv_std_.assign(channels, T(0));

    auto y = make_uninit<T>({n, channels, len});
    double count = static_cast<double>(n) * len;
    if (train) {
      // Per-sample partial sums (contiguous streaming), reduced in sample
      // order so the result never depends on the thread count.
      std::vector<double> psum(static_cast<std::size_t>(n) * channels);
      std::vector<double> psq(static_cast<std::size_t>(n) * channels);
#pragma omp parallel for schedule(static)
      for (int s = 0; s < n; ++s) {
        for (int c = 0; c < channels; ++c) {
          const T* xp =
              xc.ptr() + (static_cast<std::size_t>(s) * channels + c) * len;
          double sum = 0.0, sq = 0.0;
#pragma omp simd reduction(+ : sum, sq)
          for (int l = 0; l < len; ++l) {
            double v = xp[l];
            sum += v;
            sq += v * v;
          }
          psum[static_cast<std::size_t>(s) * channels + c] = sum;
          psq[static_cast<std::size_t>(s) * channels + c] = sq;
        }
      }
      for (int c = 0; c < channels; ++c) {
        double sum = 0.0, sq = 0.0;
        for (int s = 0; s < n; ++s) {
          sum += psum[static_cast<std::size_t>(s) * channels + c];
          sq += psq[static_cast<std::size_t>(s) * channels + c];
        }
        double mu = sum / count;
        double var = sq / count - mu * mu;
        if (var < 0.0) var = 0.0;
        double unbiased = var * count / (count - 1.0);
        running_mean.data[c] = static_cast<T>(
            (1.0 - momentum) * running_mean.data[c] + momentum * mu);
        running_var.data[c] = static_cast<T>(
            (1.0 - momentum) * running_var.data[c] + momentum * unbiased);
        mean_[c] = static_cast<T>(mu);
        inv_std_[c] = static_cast<T>(1.0 / std::sqrt(var + double(eps)));
      }
    } else {
      for (int c = 0; c < channels; ++c) {
        mean_[c] = running_mean.data[c];
        inv_std_[c] = static_cast<T>(
            1.0 / std::sqrt(double(running_var.data[c]) + double(eps)));
      }
    }
#pragma omp parallel for schedule(static)
    for (int s = 0; s < n; ++s) {
      for (int c = 0; c < channels; ++c) {
        const T* xp =
            xc.ptr() + (static_cast<std::size_t>(s) * channels + c) * len;
        T* yp = y.ptr() + (static_cast<std::size_t>(s) * channels + c) * len;
        T m = mean_[c], is = inv_std_[c];
        T g = gamma.data[c], b = beta.data[c];
        T a = is * g;
        T off = b - m * a;
        if (fuse_relu) {
#pragma omp simd
          for (int l = 0; l < len; ++l) {
            T v = xp[l] * a + off;
            yp[l] = v > T(0) ? v : T(0);
          }
        } else {
#pragma omp simd
          for (int l = 0; l < len; ++l) yp[l] = xp[l] * a + off;
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const Tensor<T>& x = input_cache_;
    int n = x.dim(0), len = x.dim(2);
    auto gx = make_uninit<T>({n, channels, len});
    double count = static_cast<double>(n) * len;

    std::vector<double> pg(static_cast<std::size_t>(n) * channels);
    std::vector<double> pgx(static_cast<std::size_t>(n) * channels);
#pragma omp parallel for schedule(static)
    for (int s = 0; s < n; ++s) {
      for (int c = 0; c < channels; ++c) {
        const T* xp =
            x.ptr() + (static_cast<std::size_t>(s) * channels + c) * len;
        const T* gp =
            gy.ptr() + (static_cast<std::size_t>(s) * channels + c) * len;
        double m = mean_[c], is = inv_std_[c];
        double sum_g = 0.0, sum_gx = 0.0;
        if (fuse_relu) {
          T a = gamma.data[c] * mean_is(c);
          T off = beta.data[c] - mean_[c] * a;
#pragma omp simd reduction(+ : sum_g, sum_gx)
          for (int l = 0; l < len; ++l) {
            T gm = (xp[l] * a + off) > T(0) ? gp[l] : T(0);
            sum_g += gm;
            sum_gx += gm * ((xp[l] - m) * is);
          }
        } else {
#pragma omp simd reduction(+ : sum_g, sum_gx)
          for (int l = 0; l < len; ++l) {
            sum_g += gp[l];
            sum_gx += gp[l] * ((xp[l] - m) * is);
          }
        }
        pg[static_cast<std::size_t>(s) * channels + c] = sum_g;
        pgx[static_cast<std::size_t>(s) * channels + c] = sum_gx;
      }
    }
    std::vector<double> mean_g(static_cast<std::size_t>(channels));
    std::vector<double> mean_gx(static_cast<std::size_t>(channels));
    for (int c = 0; c < channels; ++c) {
      double sum_g = 0.0, sum_gx = 0.0;
      for (int s = 0; s < n; ++s) {
        sum_g += pg[static_cast<std::size_t>(s) * channels + c];
        sum_gx += pgx[static_cast<std::size_t>(s) * channels + c];
      }
      ggamma.data[c] += static_cast<T>(sum_gx);
      gbeta.data[c] += static_cast<T>(sum_g);
      mean_g[static_cast<std::size_t>(c)] = sum_g / count;
      mean_gx[static_cast<std::size_t>(c)] = sum_gx / count;
    }

#pragma omp parallel for schedule(static)
    for (int s = 0; s < n; ++s) {
      for (int c = 0; c < channels; ++c) {
        const T* xp =
            x.ptr() + (static_cast<std::size_t>(s) * channels + c) * len;
        const T* gp =
            gy.ptr() + (static_cast<std::size_t>(s) * channels + c) * len;
        T* op = gx.ptr() + (static_cast<std::size_t>(s) * channels + c) * len;
        T m = mean_[c], is = inv_std_[c], g = gamma.data[c];
        T a = g * is;
        T off = beta.data[c] - m * a;
        if (!train_) {
          // Inference-mode backward (gradient checks): constant normalizer.
          if (fuse_relu) {
            for (int l = 0; l < len; ++l)
              op[l] = (xp[l] * a + off) > T(0) ? gp[l] * a : T(0);
          } else {
#pragma omp simd
            for (int l = 0; l < len; ++l) op[l] = gp[l] * a;
          }
          continue;
        }
        T mg = static_cast<T>(mean_g[static_cast<std::size_t>(c)]);
        T mgx = static_cast<T>(mean_gx[static_cast<std::size_t>(c)]);
        if (fuse_relu) {
          for (int l = 0; l < len; ++l) {
            T gm = (xp[l] * a + off) > T(0) ? gp[l] : T(0);
            T xh = (xp[l] - m) * is;
            op[l] = a * (gm - mg - xh * mgx);
          }
        } else {
#pragma omp simd
          for (int l = 0; l < len; ++l) {
            T xh = (xp[l] - m) * is;
            op[l] = a * (gp[l] - mg - xh * mgx);
          }
        }
      }
    }
    return gx;
  }

  std::vector<ParamRef<T>> params() {
    return {{gamma.ptr(), ggamma.ptr(), gamma.numel(), "bn.gamma"},
            {beta.ptr(), gbeta.ptr(), beta.numel(), "bn.beta"}};
  }

  void zero_grad() {
    ggamma.fill(T(0));
    gbeta.fill(T(0));
  }

 private:
  T mean_is(int c) const { return inv_std_[static_cast<std::size_t>(c)]; }

  bool train_ = false;
  Tensor<T> input_cache_;
  std::vector<T> mean_, inv_std_;
};

template <class T>
struct Relu {
  Tensor<T> forward(Tensor<T> x) {  // in place
    mask_.assign(x.numel(), 0);
    T* xp = x.ptr();
#pragma omp parallel for schedule(static) if (x.numel() > (1u << 16))
    for (long long i = 0; i < static_cast<long long>(x.numel()); ++i) {
      bool on = xp[i] > T(0);
      mask_[static_cast<std::size_t>(i)] = on;
      if (!on) xp[i] = T(0);
    }
    return x;
  }

  Tensor<T> backward(Tensor<T> gy) {  // in place
    T* gp = gy.ptr();
#pragma omp parallel for schedule(static) if (gy.numel() > (1u << 16))
    for (long long i = 0; i < static_cast<long long>(gy.numel()); ++i)
      if (!mask_[static_cast<std::size_t>(i)]) gp[i] = T(0);
    return gy;
  }

 private:
  std::vector<char> mask_;
};

/// Inverted dropout: scales kept activations by 1/(1-p) during training,
/// identity at inference.
template <class T>
struct Dropout {
  double p = 0.2;

  Tensor<T> forward(Tensor<T> x, bool train, Rng* rng) {  // in place
    if (!train || p <= 0.0) {
      active_ = false;
      return x;
    }
    if (!rng)
      throw Error(ErrorCategory::InvalidArgument,
                  "dropout needs an rng in training mode");
    active_ = true;
    scale_ = T(1.0 / (1.0 - p));
    mask_.assign(x.numel(), 0);
    for (std::size_t i = 0; i < x.numel(); ++i) {
      bool keep = rng->uniform() >= p;
      mask_[i] = keep;
      x.data[i] = keep ? x.data[i] * scale_ : T(0);
    }
    return x;
  }

  Tensor<T> backward(Tensor<T> gy) {  // in place
    if (!active_) return gy;
    for (std::size_t i = 0; i < gy.numel(); ++i)
      gy.data[i] = mask_[i] ? gy.data[i] * scale_ : T(0);
    return gy;
  }

 private:
  bool active_ = false;
  T scale_ = T(1);
  std::vector<char> mask_;
};

/// Global average pooling over the temporal axis: [N][C][L] -> [N][C].
template <class T>
struct GlobalAvgPool {
  Tensor<T> forward(const Tensor<T>& x) {
    if (x.shape.size() != 3)
      throw Error(ErrorCategory::InvalidArgument, "gap input must be 3-d");
    n_ = x.dim(0);
    c_ = x.dim(1);
    len_ = x.dim(2);
    auto y = make_uninit<T>({n_, c_});
#pragma omp parallel for schedule(static)     if (static_cast<long long>(n_) * c_ * len_ > (1 << 16))
    for (int s = 0; s < n_; ++s) {
      for (int c = 0; c < c_; ++c) {
        const T* xp =
            x.ptr() + (static_cast<std::size_t>(s) * c_ + c) * len_;
        double acc = 0.0;
        for (int l = 0; l < len_; ++l) acc += xp[l];
        y.data[static_cast<std::size_t>(s) * c_ + c] =
            static_cast<T>(acc / len_);
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    auto gx = make_uninit<T>({n_, c_, len_});
    T inv = T(1) / T(len_);
#pragma omp parallel for schedule(static)     if (static_cast<long long>(n_) * c_ * len_ > (1 << 16))
    for (int s = 0; s < n_; ++s)
      for (int c = 0; c < c_; ++c) {
        T g = gy.data[static_cast<std::size_t>(s) * c_ + c] * inv;
        T* xp = gx.ptr() + (static_cast<std::size_t>(s) * c_ + c) * len_;
        for (int l = 0; l < len_; ++l) xp[l] = g;
      }
    return gx;
  }

 private:
  int n_ = 0, c_ = 0, len_ = 0;
};

/// Fully connected layer over [N][in] -> [N][out].
template <class T>
struct Dense {
  int in = 0, out = 0;
  Tensor<T> weight;  // [out][in]
  Tensor<T> bias;    // [out]
  Tensor<T> gweight, gbias;

  Dense() = default;
  Dense(int in_, int out_) : in(in_), out(out_) {
    weight.resize({out, in});
    bias.resize({out});
    gweight.resize({out, in});
    gbias.resize({out});
  }

  void init(Rng& rng) {
    T bound = T(1) / std::sqrt(T(in));
    for (auto& w : weight.data)
      w = static_cast<T>(rng.uniform(-double(bound), double(bound)));
    for (auto& b : bias.data)
      b = static_cast<T>(rng.uniform(-double(bound), double(bound)));
  }

  Tensor<T> forward(Tensor<T> x) {
    if (x.shape.size() != 2 || x.dim(1) != in)
      throw Error(ErrorCategory::InvalidArgument, "dense input shape");
    input_cache_ = std::move(x);
    const Tensor<T>& xc = input_cache_;
    int n = xc.dim(0);
    auto y = make_uninit<T>({n, out});
#pragma omp parallel for schedule(static)     if (static_cast<long long>(n) * in * out > (1 << 16))
    for (int s = 0; s < n; ++s) {
      const T* xp = xc.ptr() + static_cast<std::size_t>(s) * in;
      T* yp = y.ptr() + static_cast<std::size_t>(s) * out;
      for (int o = 0; o < out; ++o) {
        const T* w = weight.ptr() + static_cast<std::size_t>(o) * in;
        T acc = bias.data[static_cast<std::size_t>(o)];
        for (int i = 0; i < in; ++i) acc += w[i] * xp[i];
        yp[o] = acc;
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const Tensor<T>& x = input_cache_;
    int n = x.dim(0);
    // Parameter gradients: each output row scans samples in order.
#pragma omp parallel for schedule(static)     if (static_cast<long long>(n) * in * out > (1 << 16))
    for (int o = 0; o < out; ++o) {
      T* gw = gweight.ptr() + static_cast<std::size_t>(o) * in;
      T gb = T(0);
      for (int s = 0; s < n; ++s) {
        T g = gy.data[static_cast<std::size_t>(s) * out + o];
        gb += g;
        const T* xp = x.ptr() + static_cast<std::size_t>(s) * in;
        for (int i = 0; i < in; ++i) gw[i] += g * xp[i];
      }
      gbias.data[static_cast<std::size_t>(o)] += gb;
    }
    Tensor<T> gx({n, in});
#pragma omp parallel for schedule(static)     if (static_cast<long long>(n) * in * out > (1 << 16))
    for (int s = 0; s < n; ++s) {
      const T* gp = gy.ptr() + static_cast<std::size_t>(s) * out;
      T* xp = gx.ptr() + static_cast<std::size_t>(s) * in;
      for (int o = 0; o < out; ++o) {
        T g = gp[o];
        const T* w = weight.ptr() + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) xp[i] += g * w[i];
      }
    }
    return gx;
  }

  std::vector<ParamRef<T>> params() {
    return {{weight.ptr(), gweight.ptr(), weight.numel(), "dense.weight"},
            {bias.ptr(), gbias.ptr(), bias.numel(), "dense.bias"}};
  }

  void zero_grad() {
    gweight.fill(T(0));
    gbias.fill(T(0));
  }

 private:
  Tensor<T> input_cache_;
};

/// Numerically stable softmax of one logit row.
template <class T>
inline void softmax_row(const T* logits, T* probs, int k) {
  T mx = logits[0];
  for (int i = 1; i < k; ++i) mx = std::max(mx, logits[i]);
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    double e = std::exp(double(logits[i] - mx));
    probs[i] = static_cast<T>(e);
    sum += e;
  }
  for (int i = 0; i < k; ++i) probs[i] = static_cast<T>(double(probs[i]) / sum);
}

/// Mean over the batch of the summed squared error.
template <class T>
struct MseLoss {
  double forward(const Tensor<T>& pred, const Tensor<T>& target) {
    if (pred.shape != target.shape)
      throw Error(ErrorCategory::InvalidArgument, "mse shape mismatch");
    pred_ = pred;
    target_ = target;
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.numel(); ++i) {
      double e = double(pred.data[i]) - double(target.data[i]);
      acc += e * e;
    }
    return acc / pred.dim(0);
  }

  Tensor<T> backward() {
    Tensor<T> g;
    g.shape = pred_.shape;
    g.data.resize(pred_.numel());
    T scale = T(2) / T(pred_.dim(0));
    for (std::size_t i = 0; i < pred_.numel(); ++i)
      g.data[i] = scale * (pred_.data[i] - target_.data[i]);
    return g;
  }

 private:
  Tensor<T> pred_, target_;
};

/// Softmax + cross entropy, mean over the batch.
template <class T>
struct SoftmaxCrossEntropy {
  double forward(const Tensor<T>& logits, std::span<const int> labels) {
    if (logits.shape.size() != 2 ||
        labels.size() != static_cast<std::size_t>(logits.dim(0)))
      throw Error(ErrorCategory::InvalidArgument, "loss input shape");
    int n = logits.dim(0), k = logits.dim(1);
    probs_.resize({n, k});
    labels_.assign(labels.begin(), labels.end());
    double loss = 0.0;
    for (int s = 0; s < n; ++s) {
      const T* lp = logits.ptr() + static_cast<std::size_t>(s) * k;
      T* pp = probs_.ptr() + static_cast<std::size_t>(s) * k;
      softmax_row(lp, pp, k);
      double p = std::max(double(pp[labels_[static_cast<std::size_t>(s)]]),
                          1e-300);
      loss -= std::log(p);
    }
    return loss / n;
  }

  Tensor<T> backward() {
    int n = probs_.dim(0), k = probs_.dim(1);
    Tensor<T> g({n, k});
    T inv = T(1) / T(n);
    for (int s = 0; s < n; ++s) {
      const T* pp = probs_.ptr() + static_cast<std::size_t>(s) * k;
      T* gp = g.ptr() + static_cast<std::size_t>(s) * k;
      for (int i = 0; i < k; ++i) gp[i] = pp[i] * inv;
      gp[labels_[static_cast<std::size_t>(s)]] -= inv;
    }
    return g;
  }

  const Tensor<T>& probs() const { return probs_; }

 private:
  Tensor<T> probs_;
  std::vector<int> labels_;
};

}  // namespace photonids::nn
