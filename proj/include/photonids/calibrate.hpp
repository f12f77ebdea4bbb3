#pragma once

#include <array>
#include <span>
#include <vector>

#include "photonids/types.hpp"

namespace photonids::calibrate {

/// Monotone cubic Hermite interpolant for one pseudo-position channel.
/// Knots are strictly increasing in t with non-decreasing u; slopes follow
/// the Fritsch-Carlson limiter so the interpolant never overshoots.
/// Outside the knot range the map extends linearly with the boundary slope.
struct ChannelCalibrator {
  std::vector<double> knot_t;
  std::vector<double> knot_u;
  std::vector<double> slope;

  double eval(double t) const;
  void validate() const;
};

/// Monotonicity-preserving Hermite slopes for the given knots. Intervals
/// with equal u get zero slopes at both ends; other interior slopes are the
/// weighted harmonic mean of the adjacent secants. Throws NonMonotoneKnots
/// when u decreases anywhere.
std::vector<double> fritsch_carlson_slopes(std::span<const double> t,
                                           std::span<const double> u);

/// Reduces scattered (raw, target) pairs to PCHIP knots: sort by raw value,
/// split into equal-count quantile bins, take per-bin means, then run a
/// pool-adjacent-violators pass over the bin targets so the monotone
/// precondition always holds.
ChannelCalibrator fit_channel(std::span<const double> raw,
                              std::span<const double> target, int bins = 50);

struct CalibratorModel {
  std::array<ChannelCalibrator, 4> channel;
};

/// Fits all four channels; raw[k] and target[k] are the per-channel pairs.
CalibratorModel fit_calibrator(
    const std::array<std::vector<double>, 4>& raw,
    const std::array<std::vector<double>, 4>& target, int bins = 50);

PseudoPosition apply_calibration(const CalibratorModel& cal,
                                 const PseudoPosition& raw);

}  // namespace photonids::calibrate
