#pragma once

#include <cstdint>
#include <vector>

#include "photonids/rng.hpp"
#include "photonids/types.hpp"

namespace photonids::synth {

/// Double-exponential pulse parameters. position_x is the dimensionless
/// coordinate along the nanowire that modulates the pulse morphology.
struct PulseParams {
  double amplitude_scale = 0.0;  // ADC counts
  double rise_tau = 1.0;         // ns
  double fall_tau = 10.0;        // ns
  double onset = 0.0;            // ns
  double position_x = 0.0;       // in [0, 1]

  void validate() const;
};

/// Beta(alpha, beta) distribution over the position coordinate.
struct PositionDist {
  double alpha = 1.0;
  double beta = 1.0;
};

struct SynthConfig {
  double sample_period = 0.5;  // ns; 200 samples span 100 ns
  int window_samples = 200;
  double noise_sigma = 6.0;         // ADC counts
  double interference_amp = 4.0;    // ADC counts
  double interference_freq = 0.35;  // GHz
  double base_amplitude = 24000.0;  // ADC counts before position modulation
  int adc_min = -32768;
  int adc_max = 32767;
  PositionDist photon_pos{2.0, 2.0};
  PositionDist dark_pos{2.0, 2.0};
  std::uint64_t seed = 0x5eed0001u;

  void validate() const;
};

/// Amplitude modulation along the wire: strictly increasing in x.
/// a(x) = 0.4 + 1.2 x, so pulses at the far end are ~4x taller.
double position_modulation(double x);

/// Evaluates the noiseless pulse at time t (ns): zero before onset, then
/// A (1 - exp(-(t-onset)/rise)) exp(-(t-onset)/fall) with
/// A = amplitude_scale * a(position_x).
double pulse_shape(double t_ns, const PulseParams& p);

/// Time of the pulse maximum: onset + rise_tau * ln(1 + fall_tau/rise_tau).
double pulse_peak_time(const PulseParams& p);

/// Maps the position coordinate to pulse parameters for one class. The two
/// classes use mirrored timing maps (photon timescales grow with x, dark
/// timescales shrink), which makes the per-feature marginals overlap while
/// the joint amplitude/timing manifolds stay distinct.
PulseParams map_position(const SynthConfig& cfg, Label cls, double x);

/// One labeled 200-sample window with the pulse onset near sample 8,
/// i.i.d. Gaussian noise and a fixed-frequency interference tone with a
/// random phase, quantized to the ADC range.
RawWaveform synth_waveform(const SynthConfig& cfg, Label cls, Rng& rng);

/// As synth_waveform, but also reports the drawn position coordinate.
RawWaveform synth_waveform(const SynthConfig& cfg, Label cls, Rng& rng,
                           double* position_out);

struct StreamEventTruth {
  std::uint64_t onset_index = 0;
  Label label = Label::Unknown;
  double position_x = 0.0;
};

struct SyntheticStream {
  std::vector<std::int16_t> samples;
  std::vector<StreamEventTruth> truth;
  double sample_period = 0.5;  // ns
};

/// Continuous sample stream with pulses at Poisson-distributed onsets plus
/// the ground-truth onset indices and labels. Rejects rates whose mean
/// inter-arrival time is shorter than the capture window.
SyntheticStream synth_stream(const SynthConfig& cfg, std::size_t n_events,
                             double mean_rate_hz, Rng& rng);

/// Batch generator: n_photon + n_dark labeled waveforms, each event seeded
/// from (cfg.seed, event index) so generation order never matters.
/// Photon events occupy even slots, dark events odd slots, until one class
/// is exhausted.
struct Dataset {
  std::vector<RawWaveform> events;
  std::vector<double> position_x;
};

Dataset make_dataset(const SynthConfig& cfg, std::size_t n_photon,
                     std::size_t n_dark);

}  // namespace photonids::synth
