#include "photonids/anchor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace photonids::anchor {

namespace {
constexpr double kInvSqrt2Pi = 0.3989422804014327;
}

double kde_density(std::span<const double> samples, double h, double t) {
  if (samples.empty())
    throw Error(ErrorCategory::InvalidArgument, "kde needs samples");
  if (!(h > 0.0))
    throw Error(ErrorCategory::InvalidArgument, "bandwidth must be positive");
  double acc = 0.0;
  for (double v : samples) {
    double z = (t - v) / h;
    acc += std::exp(-0.5 * z * z);
  }
  return acc * kInvSqrt2Pi / (static_cast<double>(samples.size()) * h);
}

double kde_mode(std::span<const double> samples, double h, int grid_points) {
  if (samples.empty())
    throw Error(ErrorCategory::InvalidArgument, "kde needs samples");
  if (!(h > 0.0))
    throw Error(ErrorCategory::InvalidArgument, "bandwidth must be positive");
  if (grid_points < 2)
    throw Error(ErrorCategory::InvalidArgument, "grid too small");
  auto [mn_it, mx_it] = std::minmax_element(samples.begin(), samples.end());
  double lo = *mn_it - 3.0 * h;
  double hi = *mx_it + 3.0 * h;
  double best_t = lo;
  double best_f = -1.0;
  double step = (hi - lo) / (grid_points - 1);
#pragma omp parallel
  {
    double loc_t = lo, loc_f = -1.0;
#pragma omp for schedule(static) nowait
    for (int g = 0; g < grid_points; ++g) {
      double t = lo + g * step;
      double f = kde_density(samples, h, t);
      if (f > loc_f) {  // strict: earliest grid point wins on ties
        loc_f = f;
        loc_t = t;
      }
    }
#pragma omp critical
    {
      if (loc_f > best_f || (loc_f == best_f && loc_t < best_t)) {
        best_f = loc_f;
        best_t = loc_t;
      }
    }
  }
  return best_t;
}

double scott_bandwidth(std::span<const double> samples) {
  auto n = samples.size();
  if (n < 2)
    throw Error(ErrorCategory::InvalidArgument,
                "need at least 2 samples for a bandwidth");
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  double sigma = std::sqrt(ss / static_cast<double>(n - 1));
  return sigma * std::pow(static_cast<double>(n), -0.2);
}

void AnchorModel::validate() const {
  if (!(scale_factor > 0.0))
    throw Error(ErrorCategory::InvalidArgument, "scale factor must be > 0");
  for (const auto& f : feature) {
    if (!(f.ruler > 0.0) || !(f.bandwidth > 0.0) || !(f.min <= f.mode) ||
        !(f.mode <= f.max))
      throw Error(ErrorCategory::InvalidArgument, "anchor model inconsistent");
  }
}

AnchorModel fit_anchor(std::span<const ScalarFeatures> features,
                       double scale_factor, int grid_points) {
  if (features.size() < 2)
    throw Error(ErrorCategory::InvalidArgument,
                "need at least 2 feature rows");
  if (!(scale_factor > 0.0))
    throw Error(ErrorCategory::InvalidArgument, "scale factor must be > 0");

  AnchorModel model;
  model.scale_factor = scale_factor;
  std::vector<double> col(features.size());
  for (int k = 0; k < 4; ++k) {
    for (std::size_t i = 0; i < features.size(); ++i)
      col[i] = features[i].as_array()[k];
    auto [mn_it, mx_it] = std::minmax_element(col.begin(), col.end());
    if (*mn_it == *mx_it)
      throw Error(ErrorCategory::DegenerateFeature,
                  std::string("feature '") + kFeatureNames[k] +
                      "' is constant; no ruler can be built");
    FeatureAnchor fa;
    fa.min = *mn_it;
    fa.max = *mx_it;
    fa.bandwidth = scott_bandwidth(col);
    fa.mode = kde_mode(col, fa.bandwidth, grid_points);
    fa.ruler = (fa.max - fa.min) / scale_factor;
    model.feature[k] = fa;
  }
  return model;
}

PseudoPosition encode_position(const ScalarFeatures& v, const AnchorModel& a) {
  PseudoPosition p;
  auto arr = v.as_array();
  for (int k = 0; k < 4; ++k)
    p[k] = (arr[k] - a.feature[k].mode) / a.feature[k].ruler;
  return p;
}

}  // namespace photonids::anchor
