#include "photonids/features.hpp"

#include <cmath>
#include <cstddef>
#include <string>

namespace photonids::features {

namespace {

// Nearest up-crossing of `thr` on the leading edge, scanning left from the
// peak. Returns the interpolated grid time, or -1 if the edge never drops
// below the threshold inside the window.
double leading_crossing(const std::vector<double>& v, std::size_t peak,
                        double thr) {
  for (std::size_t i = peak; i > 0; --i) {
    double a = v[i - 1], b = v[i];
    if (a < thr && b >= thr) {
      return static_cast<double>(i - 1) + (thr - a) / (b - a);
    }
  }
  return -1.0;
}

// Last down-crossing of `thr` after the peak, scanning right-to-left from
// the end of the window.
double trailing_crossing(const std::vector<double>& v, std::size_t peak,
                         double thr) {
  for (std::size_t i = v.size() - 1; i > peak; --i) {
    double a = v[i - 1], b = v[i];
    if (a >= thr && b < thr) {
      return static_cast<double>(i - 1) + (a - thr) / (a - b);
    }
  }
  return -1.0;
}

[[noreturn]] void throw_truncated(const char* edge, double frac) {
  throw Error(ErrorCategory::TruncatedPulse,
              std::string("pulse truncated: missing ") + edge + " crossing at " +
                  std::to_string(static_cast<int>(frac * 100)) + "% of peak");
}

}  // namespace

ScalarFeatures extract_features(const ProcessedWaveform& w,
                                const FeatureConfig& cfg) {
  const auto& v = w.samples;
  if (v.empty()) throw Error(ErrorCategory::NoPulse, "empty waveform");

  std::size_t peak_idx = 0;
  double peak = v[0];
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > peak) {  // ties keep the earliest index
      peak = v[i];
      peak_idx = i;
    }
  }
  if (!(peak > 0.0))
    throw Error(ErrorCategory::NoPulse, "no strictly positive sample");

  double dt = w.sample_period;
  double t_rise_lo = leading_crossing(v, peak_idx, cfg.rise_lo * peak);
  if (t_rise_lo < 0.0) throw_truncated("leading", cfg.rise_lo);
  double t_rise_hi = leading_crossing(v, peak_idx, cfg.rise_hi * peak);
  if (t_rise_hi < 0.0) throw_truncated("leading", cfg.rise_hi);
  double t_fall_hi = trailing_crossing(v, peak_idx, cfg.rise_hi * peak);
  if (t_fall_hi < 0.0) throw_truncated("trailing", cfg.rise_hi);
  double t_fall_lo = trailing_crossing(v, peak_idx, cfg.rise_lo * peak);
  if (t_fall_lo < 0.0) throw_truncated("trailing", cfg.rise_lo);
  double t_half_up = leading_crossing(v, peak_idx, cfg.fwhm_frac * peak);
  if (t_half_up < 0.0) throw_truncated("leading", cfg.fwhm_frac);
  double t_half_dn = trailing_crossing(v, peak_idx, cfg.fwhm_frac * peak);
  if (t_half_dn < 0.0) throw_truncated("trailing", cfg.fwhm_frac);

  ScalarFeatures f;
  f.peak_amplitude = peak;
  f.rising_time = (t_rise_hi - t_rise_lo) * dt;
  f.falling_time = (t_fall_lo - t_fall_hi) * dt;
  f.fwhm_time = (t_half_dn - t_half_up) * dt;
  return f;
}

}  // namespace photonids::features
