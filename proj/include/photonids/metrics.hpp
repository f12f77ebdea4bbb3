#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "photonids/types.hpp"

namespace photonids::metrics {

struct RegressionStats {
  double mae = 0.0;
  double rmse = 0.0;
  std::optional<double> r_squared;  // empty when the target is constant
  double tolerance_accuracy = 0.0;
  double tau = 0.0;
};

/// MAE, RMSE, R^2 and the fraction of |error| <= tau.
RegressionStats regression_metrics(std::span<const double> pred,
                                   std::span<const double> target, double tau);

struct ClassStats {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct ClassificationReport {
  double accuracy = 0.0;
  std::array<ClassStats, 2> per_class;     // [dark, photon]
  std::array<std::array<std::int64_t, 2>, 2> confusion{};  // [actual][pred]
  std::array<std::array<double, 2>, 2> confusion_rows{};   // row-normalized
  std::int64_t total = 0;
};

/// labels/predictions are 0 (dark) / 1 (photon).
ClassificationReport classification_metrics(std::span<const int> labels,
                                            std::span<const int> predictions);

/// Rank-statistic AUC: probability that a random positive outranks a random
/// negative, ties counted half. Throws when only one class is present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Mean silhouette over points (Euclidean); singleton clusters contribute 0.
/// `points` is row-major n x dim. Throws with fewer than 2 clusters.
double silhouette(std::span<const double> points, std::size_t dim,
                  std::span<const int> labels);

struct SnrReport {
  double photon_rate = 0.0;  // S, events/s
  double dark_rate = 0.0;    // B, events/s
  double tpr = 0.0;
  double fpr = 0.0;
  double snr = 0.0;
  double snr_db = 0.0;
  bool infinite_gain = false;  // fpr == 0: gated dark rate vanishes
  std::optional<double> gain;  // G = tpr/fpr
  std::optional<double> snr_prime;
  std::optional<double> snr_prime_db;
};

/// Stream-level SNR before/after classification gating:
/// SNR = S/B, SNR' = (tpr S)/(fpr B) = G * SNR with G = tpr/fpr.
SnrReport snr_gain(double photon_rate, double dark_rate, double tpr,
                   double fpr);

}  // namespace photonids::metrics
