#include "photonids/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "photonids/nn/optimizer.hpp"

namespace photonids::nn {

namespace {

// Large activation tensors churn every step; keep them on the regular heap
// so freed blocks are reused instead of being unmapped (and re-zeroed by the
// kernel) each batch.
void keep_large_allocations() {
#if defined(__GLIBC__)
  static bool done = [] {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    return true;
  }();
  (void)done;
#endif
}

void shuffle_indices(std::vector<int>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
    if (j >= i) j = i - 1;
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace

RegressorHistory train_regressor(CnnModel& model, const WaveBank& waves,
                                 const std::vector<PseudoPosition>& targets,
                                 const TrainConfig& cfg) {
  cfg.validate();
  keep_large_allocations();
  int n = waves.count;
  if (n < 2 || targets.size() != static_cast<std::size_t>(n))
    throw Error(ErrorCategory::InvalidArgument,
                "regressor needs a non-empty train split with targets");

  // Per-channel z-scoring of the targets; constants stay on the model.
  for (int k = 0; k < 4; ++k) {
    double mean = 0.0;
    for (const auto& t : targets) mean += t[static_cast<std::size_t>(k)];
    mean /= n;
    double ss = 0.0;
    for (const auto& t : targets) {
      double d = t[static_cast<std::size_t>(k)] - mean;
      ss += d * d;
    }
    double sd = std::sqrt(ss / n);
    // A constant channel (as in single-waveform sanity runs) trains against
    // its centered value with unit scale.
    model.target_mean[static_cast<std::size_t>(k)] = mean;
    model.target_std[static_cast<std::size_t>(k)] = sd > 0.0 ? sd : 1.0;
  }
  std::vector<std::array<float, 4>> zt(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < 4; ++k)
      zt[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
          static_cast<float>(
              (targets[static_cast<std::size_t>(i)][static_cast<std::size_t>(
                   k)] -
               model.target_mean[static_cast<std::size_t>(k)]) /
              model.target_std[static_cast<std::size_t>(k)]);

  Adam<float> adam(model.params(), cfg.learning_rate);
  Sgd<float> sgd(model.params(), cfg.learning_rate);
  Rng dropout_rng(derive_seed(cfg.seed, 0xd0));
  Rng shuffle_rng(derive_seed(cfg.seed, 0x5f));
  MseLoss<float> loss;

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  RegressorHistory hist;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_indices(order, shuffle_rng);
    double loss_sum = 0.0;
    long seen = 0;
    for (int start = 0; start < n; start += cfg.batch_size) {
      int b = std::min(cfg.batch_size, n - start);
      if (b < 2) continue;  // batch statistics need >= 2 rows
      auto x = make_uninit<float>({b, 1, waves.length});
      auto t = make_uninit<float>({b, 4});
      for (int s = 0; s < b; ++s) {
        int src = order[static_cast<std::size_t>(start + s)];
        std::copy_n(waves.row(src), waves.length,
                    x.ptr() + static_cast<std::size_t>(s) * waves.length);
        for (int k = 0; k < 4; ++k)
          t.data[static_cast<std::size_t>(s) * 4 + k] =
              zt[static_cast<std::size_t>(src)][static_cast<std::size_t>(k)];
      }
      auto pred = model.forward(std::move(x), /*train=*/true, &dropout_rng);
      double l = loss.forward(pred, t);
      if (!std::isfinite(l))
        throw Error(ErrorCategory::Internal,
                    "non-finite training loss at epoch " +
                        std::to_string(epoch) + ", batch " +
                        std::to_string(start / cfg.batch_size));
      loss_sum += l * b;
      seen += b;
      model.zero_grad();
      model.backward(loss.backward());
      if (cfg.optimizer == Optimizer::Adam)
        adam.step();
      else
        sgd.step();
    }
    hist.epoch_loss.push_back(loss_sum / static_cast<double>(seen));
  }
  return hist;
}

std::vector<PseudoPosition> predict_positions_batch(CnnModel& model,
                                                    const WaveBank& waves,
                                                    int batch) {
  keep_large_allocations();
  std::vector<PseudoPosition> out(static_cast<std::size_t>(waves.count));
  for (int start = 0; start < waves.count; start += batch) {
    int b = std::min(batch, waves.count - start);
    auto x = make_uninit<float>({b, 1, waves.length});
    for (int s = 0; s < b; ++s)
      std::copy_n(waves.row(start + s), waves.length,
                  x.ptr() + static_cast<std::size_t>(s) * waves.length);
    auto pred = model.forward(std::move(x), /*train=*/false, nullptr);
    for (int s = 0; s < b; ++s)
      for (int k = 0; k < 4; ++k)
        out[static_cast<std::size_t>(start + s)][static_cast<std::size_t>(k)] =
            pred.data[static_cast<std::size_t>(s) * 4 + k];
  }
  return out;
}

PseudoPosition predict_positions(CnnModel& model,
                                 const ProcessedWaveform& waveform) {
  auto len = static_cast<int>(waveform.samples.size());
  Tensor<float> x({1, 1, len});
  for (int i = 0; i < len; ++i)
    x.data[static_cast<std::size_t>(i)] =
        static_cast<float>(waveform.samples[static_cast<std::size_t>(i)]);
  auto pred = model.forward(std::move(x), /*train=*/false, nullptr);
  PseudoPosition p;
  for (int k = 0; k < 4; ++k) p[static_cast<std::size_t>(k)] = pred.data[static_cast<std::size_t>(k)];
  return p;
}

namespace {

double classifier_loss(FcnnModel& model, const FeatureMatrix& x,
                       const std::vector<int>& y, int batch) {
  SoftmaxCrossEntropy<float> ce;
  double loss_sum = 0.0;
  for (int start = 0; start < x.count; start += batch) {
    int b = std::min(batch, x.count - start);
    auto xb = make_uninit<float>({b, x.dim});
    for (int s = 0; s < b; ++s)
      for (int i = 0; i < x.dim; ++i)
        xb.data[static_cast<std::size_t>(s) * x.dim + i] =
            static_cast<float>(x.row(start + s)[i]);
    auto logits = model.forward(std::move(xb), /*train=*/false);
    loss_sum +=
        ce.forward(logits, std::span<const int>(y.data() + start,
                                                static_cast<std::size_t>(b))) *
        b;
  }
  return loss_sum / x.count;
}

std::vector<std::vector<float>> snapshot_params(FcnnModel& model) {
  std::vector<std::vector<float>> snap;
  for (auto& p : model.params())
    snap.emplace_back(p.value, p.value + p.size);
  return snap;
}

void restore_params(FcnnModel& model, const std::vector<std::vector<float>>& snap) {
  auto ps = model.params();
  for (std::size_t i = 0; i < ps.size(); ++i)
    std::copy(snap[i].begin(), snap[i].end(), ps[i].value);
}

}  // namespace

ClassifierHistory train_classifier(FcnnModel& model, const FeatureMatrix& x,
                                   const std::vector<int>& y,
                                   const FeatureMatrix& x_val,
                                   const std::vector<int>& y_val,
                                   const TrainConfig& cfg, int patience,
                                   bool standardize) {
  cfg.validate();
  if (x.count < 1 || y.size() != static_cast<std::size_t>(x.count) ||
      x.dim != model.input_dim)
    throw Error(ErrorCategory::InvalidArgument, "bad classifier train data");
  if (x_val.count < 1 || y_val.size() != static_cast<std::size_t>(x_val.count))
    throw Error(ErrorCategory::InvalidArgument, "bad classifier val data");

  if (standardize) {
    for (int i = 0; i < x.dim; ++i) {
      double mean = 0.0;
      for (int s = 0; s < x.count; ++s) mean += x.row(s)[i];
      mean /= x.count;
      double ss = 0.0;
      for (int s = 0; s < x.count; ++s) {
        double d = x.row(s)[i] - mean;
        ss += d * d;
      }
      double sd = std::sqrt(ss / x.count);
      model.input_mean[static_cast<std::size_t>(i)] = mean;
      model.input_std[static_cast<std::size_t>(i)] = sd > 0.0 ? sd : 1.0;
    }
  } else {
    std::fill(model.input_mean.begin(), model.input_mean.end(), 0.0);
    std::fill(model.input_std.begin(), model.input_std.end(), 1.0);
  }

  Adam<float> adam(model.params(), cfg.learning_rate);
  Sgd<float> sgd(model.params(), cfg.learning_rate);
  Rng shuffle_rng(derive_seed(cfg.seed, 0xc1));
  SoftmaxCrossEntropy<float> ce;

  std::vector<int> order(static_cast<std::size_t>(x.count));
  std::iota(order.begin(), order.end(), 0);

  ClassifierHistory hist;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<std::vector<float>> best_snap = snapshot_params(model);
  int since_best = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_indices(order, shuffle_rng);
    double loss_sum = 0.0;
    for (int start = 0; start < x.count; start += cfg.batch_size) {
      int b = std::min(cfg.batch_size, x.count - start);
      auto xb = make_uninit<float>({b, x.dim});
      std::vector<int> yb(static_cast<std::size_t>(b));
      for (int s = 0; s < b; ++s) {
        int src = order[static_cast<std::size_t>(start + s)];
        for (int i = 0; i < x.dim; ++i)
          xb.data[static_cast<std::size_t>(s) * x.dim + i] =
              static_cast<float>(x.row(src)[i]);
        yb[static_cast<std::size_t>(s)] = y[static_cast<std::size_t>(src)];
      }
      auto logits = model.forward(std::move(xb), /*train=*/true);
      double l = ce.forward(logits, yb);
      if (!std::isfinite(l))
        throw Error(ErrorCategory::Internal,
                    "non-finite classifier loss at epoch " +
                        std::to_string(epoch));
      loss_sum += l * b;
      model.zero_grad();
      model.backward(ce.backward());
      if (cfg.optimizer == Optimizer::Adam)
        adam.step();
      else
        sgd.step();
    }
    hist.train_loss.push_back(loss_sum / x.count);

    double vl = classifier_loss(model, x_val, y_val, 1024);
    hist.val_loss.push_back(vl);
    ++hist.epochs_run;
    if (vl < best_val) {
      best_val = vl;
      best_snap = snapshot_params(model);
      hist.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= patience) {
      break;
    }
  }
  restore_params(model, best_snap);
  return hist;
}

Classification classify(FcnnModel& model, std::span<const double> features) {
  if (features.size() != static_cast<std::size_t>(model.input_dim))
    throw Error(ErrorCategory::InvalidArgument, "feature vector length");
  Tensor<float> x({1, model.input_dim});
  for (int i = 0; i < model.input_dim; ++i)
    x.data[static_cast<std::size_t>(i)] =
        static_cast<float>(features[static_cast<std::size_t>(i)]);
  auto logits = model.forward(std::move(x), /*train=*/false);
  float probs[2];
  softmax_row(logits.ptr(), probs, 2);
  Classification c;
  c.probabilities = {probs[0], probs[1]};
  c.label = probs[1] > probs[0] ? Label::Photon : Label::Dark;
  return c;
}

BatchClassification classify_batch(FcnnModel& model, const FeatureMatrix& x,
                                   int batch) {
  BatchClassification out;
  out.labels.resize(static_cast<std::size_t>(x.count));
  out.photon_scores.resize(static_cast<std::size_t>(x.count));
  out.penultimate.resize(static_cast<std::size_t>(x.count) * 32);
  for (int start = 0; start < x.count; start += batch) {
    int b = std::min(batch, x.count - start);
    auto xb = make_uninit<float>({b, x.dim});
    for (int s = 0; s < b; ++s)
      for (int i = 0; i < x.dim; ++i)
        xb.data[static_cast<std::size_t>(s) * x.dim + i] =
            static_cast<float>(x.row(start + s)[i]);
    auto logits = model.forward(std::move(xb), /*train=*/false);
    const auto& pen = model.penultimate();
    for (int s = 0; s < b; ++s) {
      float probs[2];
      softmax_row(logits.ptr() + static_cast<std::size_t>(s) * 2, probs, 2);
      out.photon_scores[static_cast<std::size_t>(start + s)] = probs[1];
      out.labels[static_cast<std::size_t>(start + s)] =
          probs[1] > probs[0] ? 1 : 0;
      for (int k = 0; k < 32; ++k)
        out.penultimate[static_cast<std::size_t>(start + s) * 32 + k] =
            pen.data[static_cast<std::size_t>(s) * 32 + k];
    }
  }
  return out;
}

}  // namespace photonids::nn
