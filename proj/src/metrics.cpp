#include "photonids/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace photonids::metrics {

RegressionStats regression_metrics(std::span<const double> pred,
                                   std::span<const double> target,
                                   double tau) {
  auto n = pred.size();
  if (n == 0 || target.size() != n)
    throw Error(ErrorCategory::InvalidArgument,
                "prediction/target lengths must match and be non-zero");
  RegressionStats s;
  s.tau = tau;
  double abs_sum = 0.0, sq_sum = 0.0;
  std::size_t within = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double e = pred[i] - target[i];
    abs_sum += std::fabs(e);
    sq_sum += e * e;
    if (std::fabs(e) <= tau) ++within;
  }
  s.mae = abs_sum / static_cast<double>(n);
  s.rmse = std::sqrt(sq_sum / static_cast<double>(n));
  s.tolerance_accuracy = static_cast<double>(within) / static_cast<double>(n);

  double mean = 0.0;
  for (double t : target) mean += t;
  mean /= static_cast<double>(n);
  double var_sum = 0.0;
  for (double t : target) var_sum += (t - mean) * (t - mean);
  if (var_sum > 0.0)
    s.r_squared = 1.0 - sq_sum / var_sum;
  // else: left empty — R^2 is undefined for a constant target
  return s;
}

ClassificationReport classification_metrics(std::span<const int> labels,
                                            std::span<const int> predictions) {
  auto n = labels.size();
  if (n == 0 || predictions.size() != n)
    throw Error(ErrorCategory::InvalidArgument,
                "label/prediction lengths must match and be non-zero");
  ClassificationReport r;
  r.total = static_cast<std::int64_t>(n);
  for (std::size_t i = 0; i < n; ++i) {
    int a = labels[i], p = predictions[i];
    if ((a != 0 && a != 1) || (p != 0 && p != 1))
      throw Error(ErrorCategory::InvalidArgument, "labels must be 0 or 1");
    ++r.confusion[a][p];
  }
  r.accuracy = static_cast<double>(r.confusion[0][0] + r.confusion[1][1]) /
               static_cast<double>(n);
  for (int c = 0; c < 2; ++c) {
    std::int64_t tp = r.confusion[c][c];
    std::int64_t pred_c = r.confusion[0][c] + r.confusion[1][c];
    std::int64_t actual_c = r.confusion[c][0] + r.confusion[c][1];
    ClassStats cs;
    cs.precision = pred_c > 0 ? static_cast<double>(tp) / pred_c : 0.0;
    cs.recall = actual_c > 0 ? static_cast<double>(tp) / actual_c : 0.0;
    cs.f1 = (cs.precision + cs.recall) > 0.0
                ? 2.0 * cs.precision * cs.recall / (cs.precision + cs.recall)
                : 0.0;
    r.per_class[c] = cs;
    for (int p = 0; p < 2; ++p)
      r.confusion_rows[c][p] =
          actual_c > 0 ? static_cast<double>(r.confusion[c][p]) / actual_c
                       : 0.0;
  }
  return r;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  auto n = scores.size();
  if (n == 0 || labels.size() != n)
    throw Error(ErrorCategory::InvalidArgument,
                "score/label lengths must match and be non-zero");
  std::size_t n_pos = 0;
  for (int l : labels) {
    if (l != 0 && l != 1)
      throw Error(ErrorCategory::InvalidArgument, "labels must be 0 or 1");
    n_pos += static_cast<std::size_t>(l);
  }
  std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw Error(ErrorCategory::InvalidArgument,
                "roc_auc needs both classes present");

  // Midrank formulation: AUC = (R_pos - n_pos (n_pos + 1)/2) / (n_pos n_neg)
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    double midrank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
    for (std::size_t k = i; k <= j; ++k)
      if (labels[order[k]] == 1) rank_sum_pos += midrank;
    i = j + 1;
  }
  double n_pos_d = static_cast<double>(n_pos);
  return (rank_sum_pos - n_pos_d * (n_pos_d + 1.0) / 2.0) /
         (n_pos_d * static_cast<double>(n_neg));
}

double silhouette(std::span<const double> points, std::size_t dim,
                  std::span<const int> labels) {
  if (dim == 0) throw Error(ErrorCategory::InvalidArgument, "dim must be > 0");
  auto n = labels.size();
  if (n == 0 || points.size() != n * dim)
    throw Error(ErrorCategory::InvalidArgument, "points/labels size mismatch");

  std::vector<int> uniq(labels.begin(), labels.end());
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  if (uniq.size() < 2)
    throw Error(ErrorCategory::InvalidArgument,
                "silhouette needs at least 2 clusters");
  std::vector<std::size_t> cluster_size(uniq.size(), 0);
  std::vector<std::size_t> cluster_of(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = std::lower_bound(uniq.begin(), uniq.end(), labels[i]);
    cluster_of[i] = static_cast<std::size_t>(it - uniq.begin());
    ++cluster_size[cluster_of[i]];
  }

  double total = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : total)
  for (long long ii = 0; ii < static_cast<long long>(n); ++ii) {
    auto i = static_cast<std::size_t>(ii);
    if (cluster_size[cluster_of[i]] <= 1) continue;  // contributes 0
    std::vector<double> dist_sum(uniq.size(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double d2 = 0.0;
      const double* pi = points.data() + i * dim;
      const double* pj = points.data() + j * dim;
      for (std::size_t k = 0; k < dim; ++k) {
        double d = pi[k] - pj[k];
        d2 += d * d;
      }
      dist_sum[cluster_of[j]] += std::sqrt(d2);
    }
    double a = dist_sum[cluster_of[i]] /
               static_cast<double>(cluster_size[cluster_of[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < uniq.size(); ++c) {
      if (c == cluster_of[i] || cluster_size[c] == 0) continue;
      b = std::min(b, dist_sum[c] / static_cast<double>(cluster_size[c]));
    }
    double s = (b - a) / std::max(a, b);
    if (a == 0.0 && b == 0.0) s = 0.0;
    total += s;
  }
  return total / static_cast<double>(n);
}

SnrReport snr_gain(double photon_rate, double dark_rate, double tpr,
                   double fpr) {
  if (!(photon_rate > 0.0) || !(dark_rate > 0.0))
    throw Error(ErrorCategory::InvalidArgument, "rates must be positive");
  if (!(tpr >= 0.0 && tpr <= 1.0) || !(fpr >= 0.0 && fpr <= 1.0))
    throw Error(ErrorCategory::InvalidArgument, "tpr/fpr must be in [0,1]");

  SnrReport r;
  r.photon_rate = photon_rate;
  r.dark_rate = dark_rate;
  r.tpr = tpr;
  r.fpr = fpr;
  r.snr = photon_rate / dark_rate;
  r.snr_db = 10.0 * std::log10(r.snr);
  if (fpr == 0.0) {
    r.infinite_gain = true;  // no dark counts survive the gate
    return r;
  }
  r.gain = tpr / fpr;
  r.snr_prime = *r.gain * r.snr;
  r.snr_prime_db = 10.0 * std::log10(*r.snr_prime);
  return r;
}

}  // namespace photonids::metrics
