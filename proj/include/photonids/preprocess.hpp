#pragma once

#include <span>
#include <vector>

#include "photonids/types.hpp"

namespace photonids::preprocess {

struct PreprocessConfig {
  int savgol_window = 11;
  int savgol_order = 3;
  int upsample_factor = 20;
  int pre_samples = 8;  // baseline estimated over these leading samples
};

/// Savitzky-Golay smoothing: each output is the center value of the
/// least-squares polynomial of the given order fit over the window. Near
/// the edges the window is truncated one-sided and the same polynomial is
/// evaluated at the output position (no data is mirrored or fabricated).
std::vector<double> savgol_filter(std::span<const double> samples,
                                  int window = 11, int order = 3);

/// Natural cubic spline through the input knots, evaluated on a grid
/// refined by `factor`. Output length (N-1)*factor + 1; knot values are
/// preserved exactly.
std::vector<double> cubic_interpolate(std::span<const double> samples,
                                      int factor = 20);

/// Baseline-subtract (mean of the pre-trigger samples), filter, upsample.
ProcessedWaveform preprocess_event(const CapturedEvent& event,
                                   const PreprocessConfig& cfg,
                                   double sample_period_ns);

}  // namespace photonids::preprocess
