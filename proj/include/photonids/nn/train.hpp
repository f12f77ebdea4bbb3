#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "photonids/nn/models.hpp"

namespace photonids::nn {

enum class Optimizer : std::uint8_t { Adam, Sgd };

struct TrainConfig {
  double learning_rate = 5e-4;
  int batch_size = 64;
  int epochs = 50;
  std::uint64_t seed = 1;
  Optimizer optimizer = Optimizer::Adam;

  void validate() const {
    if (!(learning_rate > 0.0))
      throw Error(ErrorCategory::InvalidArgument, "learning_rate must be > 0");
    if (batch_size < 1)
      throw Error(ErrorCategory::InvalidArgument, "batch_size must be >= 1");
    if (epochs < 1)
      throw Error(ErrorCategory::InvalidArgument, "epochs must be >= 1");
  }
};

/// Row-major bank of fixed-length float waveforms feeding the CNN.
struct WaveBank {
  int count = 0;
  int length = 0;
  std::vector<float> data;

  void resize(int n, int len) {
    count = n;
    length = len;
    data.assign(static_cast<std::size_t>(n) * len, 0.0f);
  }
  float* row(int i) { return data.data() + static_cast<std::size_t>(i) * length; }
  const float* row(int i) const {
    return data.data() + static_cast<std::size_t>(i) * length;
  }
};

struct RegressorHistory {
  std::vector<double> epoch_loss;  // standardized-target MSE per epoch
};

/// Trains the regressor with MSE on per-channel z-scored targets.
/// Deterministic given cfg.seed; aborts with diagnostics if the loss stops
/// being finite. Running BN statistics are frozen simply by never training
/// again.
RegressorHistory train_regressor(CnnModel& model, const WaveBank& waves,
                                 const std::vector<PseudoPosition>& targets,
                                 const TrainConfig& cfg);

/// Batched inference: raw (standardized-space) position predictions.
std::vector<PseudoPosition> predict_positions_batch(CnnModel& model,
                                                    const WaveBank& waves,
                                                    int batch = 256);

/// Single-waveform inference (dropout off, running BN statistics).
PseudoPosition predict_positions(CnnModel& model,
                                 const ProcessedWaveform& waveform);

struct ClassifierHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  int best_epoch = -1;  // 0-based; weights restored from this epoch
  int epochs_run = 0;
};

/// Feature matrix [n][dim], row-major double.
struct FeatureMatrix {
  int count = 0;
  int dim = 0;
  std::vector<double> data;

  void resize(int n, int d) {
    count = n;
    dim = d;
    data.assign(static_cast<std::size_t>(n) * d, 0.0);
  }
  double* row(int i) { return data.data() + static_cast<std::size_t>(i) * dim; }
  const double* row(int i) const {
    return data.data() + static_cast<std::size_t>(i) * dim;
  }
};

/// Cross-entropy training with early stopping: stops after `patience`
/// epochs without a validation-loss improvement and restores the best
/// weights. When `standardize` is set, per-dimension mean/std from the
/// training split are stored on the model; otherwise the model consumes raw
/// feature scales.
ClassifierHistory train_classifier(FcnnModel& model, const FeatureMatrix& x,
                                   const std::vector<int>& y,
                                   const FeatureMatrix& x_val,
                                   const std::vector<int>& y_val,
                                   const TrainConfig& cfg, int patience = 20,
                                   bool standardize = true);

struct Classification {
  std::array<double, 2> probabilities{0.0, 0.0};  // [dark, photon]
  Label label = Label::Unknown;
};

Classification classify(FcnnModel& model, std::span<const double> features);

/// Batched scores/labels/penultimate activations for evaluation.
struct BatchClassification {
  std::vector<int> labels;            // argmax class per row
  std::vector<double> photon_scores;  // P(photon)
  std::vector<double> penultimate;    // [n][32] row-major
};

BatchClassification classify_batch(FcnnModel& model, const FeatureMatrix& x,
                                   int batch = 1024);

}  // namespace photonids::nn
