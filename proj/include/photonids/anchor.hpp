#pragma once

#include <array>
#include <span>

#include "photonids/types.hpp"

namespace photonids::anchor {

/// Gaussian KDE evaluated at t: (1/(N h)) * sum_i phi((t - v_i)/h).
double kde_density(std::span<const double> samples, double h, double t);

/// Argmax of the KDE over a uniform grid of grid_points spanning
/// [min - 3h, max + 3h]; ties resolve to the smallest t.
double kde_mode(std::span<const double> samples, double h,
                int grid_points = 2048);

/// Scott's rule bandwidth: sigma_hat * N^(-1/5).
double scott_bandwidth(std::span<const double> samples);

struct FeatureAnchor {
  double mode = 0.0;       // KDE mode mu
  double ruler = 0.0;      // (max - min) / F
  double bandwidth = 0.0;  // KDE bandwidth h
  double min = 0.0;
  double max = 0.0;
};

/// The offline per-feature ruler: for each of the four scalar features,
/// the KDE mode anchors the origin and (max-min)/F sets the unit. Fit on
/// the training split only and frozen afterwards.
struct AnchorModel {
  std::array<FeatureAnchor, 4> feature;  // peak, rise, fall, fwhm
  double scale_factor = 1000.0;          // F

  void validate() const;
};

AnchorModel fit_anchor(std::span<const ScalarFeatures> features,
                       double scale_factor = 1000.0, int grid_points = 2048);

/// p_k = (v_k - mu_k) / ruler_k, componentwise.
PseudoPosition encode_position(const ScalarFeatures& v, const AnchorModel& a);

}  // namespace photonids::anchor
