#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace photonids {

enum class Label : std::uint8_t { Dark = 0, Photon = 1, Unknown = 255 };

inline const char* label_name(Label l) {
  switch (l) {
    case Label::Dark: return "dark";
    case Label::Photon: return "photon";
    default: return "unknown";
  }
}

/// A fixed-length detector event: 8 pre-trigger samples followed by the
/// trigger sample and the post-trigger tail (200 samples total under the
/// default acquisition window). Synthetic waveforms use the same record
/// with a synthetic trigger index.
struct CapturedEvent {
  std::uint64_t trigger_index = 0;
  std::vector<std::int16_t> samples;
  Label label = Label::Unknown;
};

using RawWaveform = CapturedEvent;

/// Denoised, baseline-subtracted, upsampled waveform.
struct ProcessedWaveform {
  std::vector<double> samples;
  double sample_period = 0.0;  // ns
  double baseline = 0.0;       // ADC counts, already subtracted
};

/// The four pulse-morphology scalars. Times in ns, amplitude in ADC counts.
struct ScalarFeatures {
  double peak_amplitude = 0.0;
  double rising_time = 0.0;
  double falling_time = 0.0;
  double fwhm_time = 0.0;

  std::array<double, 4> as_array() const {
    return {peak_amplitude, rising_time, falling_time, fwhm_time};
  }
};

inline constexpr std::array<const char*, 4> kFeatureNames = {"peak", "rise",
                                                             "fall", "fwhm"};

/// Dimensionless per-feature position vector (see anchor module).
using PseudoPosition = std::array<double, 4>;

enum class ErrorCategory {
  InvalidArgument,
  InsufficientSamples,
  NoPulse,
  TruncatedPulse,
  DegenerateFeature,
  NonMonotoneKnots,
  Io,
  Config,
  Internal,
};

inline const char* error_category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::InvalidArgument: return "invalid_argument";
    case ErrorCategory::InsufficientSamples: return "insufficient_samples";
    case ErrorCategory::NoPulse: return "no_pulse";
    case ErrorCategory::TruncatedPulse: return "truncated_pulse";
    case ErrorCategory::DegenerateFeature: return "degenerate_feature";
    case ErrorCategory::NonMonotoneKnots: return "non_monotone_knots";
    case ErrorCategory::Io: return "io";
    case ErrorCategory::Config: return "config";
    default: return "internal";
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

}  // namespace photonids
