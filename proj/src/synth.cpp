#include "photonids/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace photonids::synth {

namespace {

std::int16_t quantize(double v, int lo, int hi) {
  double r = std::nearbyint(v);
  r = std::clamp(r, static_cast<double>(lo), static_cast<double>(hi));
  return static_cast<std::int16_t>(r);
}

// Onset jitter keeps the threshold crossing near sample 8 while exercising
// sub-sample alignment, mirroring how a trigger lands between ADC ticks.
constexpr double kOnsetBase = 3.7;    // ns
constexpr double kOnsetJitter = 0.6;  // ns

}  // namespace

void PulseParams::validate() const {
  if (!(rise_tau > 0.0))
    throw Error(ErrorCategory::InvalidArgument, "rise_tau must be positive");
  if (!(fall_tau > rise_tau))
    throw Error(ErrorCategory::InvalidArgument,
                "fall_tau must exceed rise_tau");
  if (!(amplitude_scale >= 0.0))
    throw Error(ErrorCategory::InvalidArgument,
                "amplitude_scale must be non-negative");
  if (!(position_x >= 0.0 && position_x <= 1.0))
    throw Error(ErrorCategory::InvalidArgument, "position_x must be in [0,1]");
}

void SynthConfig::validate() const {
  if (!(sample_period > 0.0))
    throw Error(ErrorCategory::InvalidArgument,
                "sample_period must be positive");
  if (window_samples < 16)
    throw Error(ErrorCategory::InvalidArgument, "window_samples too small");
  if (!(noise_sigma >= 0.0))
    throw Error(ErrorCategory::InvalidArgument,
                "noise_sigma must be non-negative");
  if (!(interference_amp >= 0.0))
    throw Error(ErrorCategory::InvalidArgument,
                "interference_amp must be non-negative");
  if (!(base_amplitude >= 0.0))
    throw Error(ErrorCategory::InvalidArgument,
                "base_amplitude must be non-negative");
  if (adc_min >= adc_max)
    throw Error(ErrorCategory::InvalidArgument, "bad ADC range");
  auto check_dist = [](const PositionDist& d) {
    if (!(d.alpha > 0.0) || !(d.beta > 0.0))
      throw Error(ErrorCategory::InvalidArgument,
                  "position distribution parameters must be positive");
  };
  check_dist(photon_pos);
  check_dist(dark_pos);
}

double position_modulation(double x) { return 0.4 + 1.2 * x; }

double pulse_shape(double t_ns, const PulseParams& p) {
  p.validate();
  if (t_ns < p.onset) return 0.0;
  double s = t_ns - p.onset;
  double amp = p.amplitude_scale * position_modulation(p.position_x);
  return amp * (1.0 - std::exp(-s / p.rise_tau)) * std::exp(-s / p.fall_tau);
}

double pulse_peak_time(const PulseParams& p) {
  return p.onset + p.rise_tau * std::log(1.0 + p.fall_tau / p.rise_tau);
}

PulseParams map_position(const SynthConfig& cfg, Label cls, double x) {
  PulseParams p;
  p.position_x = x;
  p.amplitude_scale = cfg.base_amplitude * (1.0 + 0.05 * x);
  // Timing follows a shared monotone trend in x; the class enters only as a
  // small antisymmetric residual around that trend (rise and fall pushed in
  // opposite directions), fading out at the ends of the wire. Per-feature
  // marginals therefore almost coincide and the class signal lives in the
  // joint amplitude/timing structure.
  double cls_sign = (cls == Label::Photon) ? 1.0 : -1.0;
  double residual = 4.0 * x * (1.0 - x) * cls_sign;
  p.rise_tau = 2.5 + 3.5 * x + 0.35 * residual;
  p.fall_tau = 14.0 + 18.0 * x - 1.8 * residual;
  return p;
}

namespace {

RawWaveform synth_waveform_impl(const SynthConfig& cfg, Label cls, Rng& rng,
                                double* position_out) {
  cfg.validate();
  double x = (cls == Label::Photon)
                 ? rng.beta(cfg.photon_pos.alpha, cfg.photon_pos.beta)
                 : rng.beta(cfg.dark_pos.alpha, cfg.dark_pos.beta);
  PulseParams p = map_position(cfg, cls, x);
  p.onset = kOnsetBase + kOnsetJitter * rng.uniform();
  double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

  RawWaveform w;
  w.label = cls;
  w.trigger_index = 0;
  w.samples.resize(cfg.window_samples);
  double omega = 2.0 * std::numbers::pi * cfg.interference_freq;  // rad/ns
  for (int i = 0; i < cfg.window_samples; ++i) {
    double t = i * cfg.sample_period;
    double v = pulse_shape(t, p);
    if (cfg.interference_amp > 0.0)
      v += cfg.interference_amp * std::sin(omega * t + phase);
    if (cfg.noise_sigma > 0.0) v += cfg.noise_sigma * rng.gaussian();
    w.samples[i] = quantize(v, cfg.adc_min, cfg.adc_max);
  }
  if (position_out) *position_out = x;
  return w;
}

}  // namespace

RawWaveform synth_waveform(const SynthConfig& cfg, Label cls, Rng& rng) {
  return synth_waveform_impl(cfg, cls, rng, nullptr);
}

RawWaveform synth_waveform(const SynthConfig& cfg, Label cls, Rng& rng,
                           double* position_out) {
  return synth_waveform_impl(cfg, cls, rng, position_out);
}

SyntheticStream synth_stream(const SynthConfig& cfg, std::size_t n_events,
                             double mean_rate_hz, Rng& rng) {
  cfg.validate();
  if (!(mean_rate_hz > 0.0))
    throw Error(ErrorCategory::InvalidArgument, "mean_rate must be positive");
  double period_s = cfg.sample_period * 1e-9;
  double mean_gap_samples = 1.0 / (mean_rate_hz * period_s);
  if (mean_gap_samples < cfg.window_samples)
    throw Error(ErrorCategory::InvalidArgument,
                "mean inter-arrival shorter than the capture window");

  SyntheticStream out;
  out.sample_period = cfg.sample_period;

  // Draw arrivals first so the stream length covers the last capture window.
  std::vector<double> onsets_ns;
  std::vector<Label> labels;
  std::vector<double> xs;
  double t = cfg.window_samples * cfg.sample_period;  // lead-in of baseline
  double mean_gap_ns = mean_gap_samples * cfg.sample_period;
  for (std::size_t i = 0; i < n_events; ++i) {
    t += rng.exponential(mean_gap_ns);
    Label cls = rng.uniform() < 0.5 ? Label::Photon : Label::Dark;
    onsets_ns.push_back(t);
    labels.push_back(cls);
    xs.push_back(cls == Label::Photon
                     ? rng.beta(cfg.photon_pos.alpha, cfg.photon_pos.beta)
                     : rng.beta(cfg.dark_pos.alpha, cfg.dark_pos.beta));
  }
  double total_ns = (n_events == 0 ? 4096.0 * cfg.sample_period
                                   : onsets_ns.back()) +
                    2.0 * cfg.window_samples * cfg.sample_period;
  std::size_t n_samples =
      static_cast<std::size_t>(std::ceil(total_ns / cfg.sample_period));

  std::vector<double> acc(n_samples, 0.0);
  for (std::size_t e = 0; e < n_events; ++e) {
    PulseParams p = map_position(cfg, labels[e], xs[e]);
    p.onset = onsets_ns[e];
    auto onset_idx =
        static_cast<std::uint64_t>(std::ceil(p.onset / cfg.sample_period));
    out.truth.push_back({onset_idx, labels[e], xs[e]});
    // The pulse tail is negligible after ~8 fall times.
    auto first = static_cast<std::size_t>(p.onset / cfg.sample_period);
    auto last = std::min(
        n_samples, first + static_cast<std::size_t>(8.0 * p.fall_tau /
                                                    cfg.sample_period));
    for (std::size_t i = first; i < last; ++i)
      acc[i] += pulse_shape(i * cfg.sample_period, p);
  }

  double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  double omega = 2.0 * std::numbers::pi * cfg.interference_freq;
  out.samples.resize(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    double v = acc[i];
    if (cfg.interference_amp > 0.0)
      v += cfg.interference_amp *
           std::sin(omega * (i * cfg.sample_period) + phase);
    if (cfg.noise_sigma > 0.0) v += cfg.noise_sigma * rng.gaussian();
    out.samples[i] = quantize(v, cfg.adc_min, cfg.adc_max);
  }
  return out;
}

Dataset make_dataset(const SynthConfig& cfg, std::size_t n_photon,
                     std::size_t n_dark) {
  cfg.validate();
  std::size_t n = n_photon + n_dark;
  Dataset ds;
  ds.events.resize(n);
  ds.position_x.resize(n);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    auto idx = static_cast<std::size_t>(i);
    // Interleave classes so any prefix of the dataset is roughly balanced;
    // the shorter class spills into the other's slots once exhausted.
    Label cls;
    if (idx % 2 == 0)
      cls = (idx / 2 < n_photon) ? Label::Photon : Label::Dark;
    else
      cls = (idx / 2 < n_dark) ? Label::Dark : Label::Photon;
    Rng rng(derive_seed(cfg.seed, idx));
    ds.events[idx] =
        synth_waveform(cfg, cls, rng, &ds.position_x[idx]);
    ds.events[idx].trigger_index = idx * cfg.window_samples + 8;
  }
  return ds;
}

}  // namespace photonids::synth
