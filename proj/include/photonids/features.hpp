#pragma once

#include "photonids/types.hpp"

namespace photonids::features {

/// Threshold fractions for the timing features, relative to the
/// baseline-corrected peak.
struct FeatureConfig {
  double rise_lo = 0.10;
  double rise_hi = 0.90;
  double fwhm_frac = 0.50;
};

/// Extracts peak amplitude, 10-90% rising time, 90-10% falling time and
/// FWHM time from a processed waveform. Crossing times are linearly
/// interpolated between grid points; leading-edge crossings are searched
/// from the peak outward (nearest crossing wins), trailing-edge crossings
/// take the last crossing inside the window so ripple on the tail cannot
/// truncate the pulse.
///
/// Throws NoPulse when no sample is strictly positive and TruncatedPulse
/// (naming the missing edge) when a crossing never happens in the window.
ScalarFeatures extract_features(const ProcessedWaveform& w,
                                const FeatureConfig& cfg = {});

}  // namespace photonids::features
