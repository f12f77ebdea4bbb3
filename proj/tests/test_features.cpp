#include <cmath>
#include <vector>

#include "doctest.h"
#include "photonids/features.hpp"
#include "photonids/preprocess.hpp"
#include "photonids/rng.hpp"
#include "photonids/synth.hpp"

using namespace photonids;
using namespace photonids::features;

namespace {

ProcessedWaveform make_wave(std::vector<double> samples, double dt) {
  ProcessedWaveform w;
  w.samples = std::move(samples);
  w.sample_period = dt;
  return w;
}

// Bisection root finder on the closed-form pulse for the crossing oracle.
double crossing_time(const synth::PulseParams& p, double level, double t_lo,
                     double t_hi) {
  double f_lo = synth::pulse_shape(t_lo, p) - level;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (t_lo + t_hi);
    double f_mid = synth::pulse_shape(mid, p) - level;
    if ((f_lo <= 0.0) == (f_mid <= 0.0)) {
      t_lo = mid;
      f_lo = f_mid;
    } else {
      t_hi = mid;
    }
  }
  return 0.5 * (t_lo + t_hi);
}

}  // namespace

TEST_CASE("symmetric triangle has textbook features") {
  // Rise 0..100 over [0,10] ns, fall 100..0 over [10,30] ns, dt = 1 ns.
  std::vector<double> v(31);
  for (int i = 0; i <= 10; ++i) v[static_cast<std::size_t>(i)] = 10.0 * i;
  for (int i = 11; i <= 30; ++i)
    v[static_cast<std::size_t>(i)] = 100.0 - 5.0 * (i - 10);
  auto f = extract_features(make_wave(v, 1.0));
  CHECK(f.peak_amplitude == doctest::Approx(100.0));
  CHECK(f.rising_time == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(f.falling_time == doctest::Approx(16.0).epsilon(1e-12));
  CHECK(f.fwhm_time == doctest::Approx(15.0).epsilon(1e-12));
}

TEST_CASE("all-zero waveform raises NoPulse") {
  std::vector<double> v(100, 0.0);
  try {
    extract_features(make_wave(v, 1.0));
    FAIL("expected NoPulse");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::NoPulse);
  }
}

TEST_CASE("waveform that never falls back below 10% raises TruncatedPulse") {
  std::vector<double> v(100);
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = static_cast<double>(i);  // monotone ramp, no trailing edge
  try {
    extract_features(make_wave(v, 1.0));
    FAIL("expected TruncatedPulse");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::TruncatedPulse);
    CHECK(std::string(e.what()).find("trailing") != std::string::npos);
  }
}

TEST_CASE("features match root-finding on the closed-form pulse") {
  // The waveform is the analytic pulse sampled directly on the upsampled
  // grid, so the only extraction error is the linear crossing
  // interpolation: everything must land within one grid step.
  synth::SynthConfig scfg;
  Rng rng(5151);
  double grid = scfg.sample_period / 20.0;  // 0.025 ns
  for (int rep = 0; rep < 8; ++rep) {
    auto cls = rep % 2 ? Label::Photon : Label::Dark;
    double x = rng.uniform(0.05, 0.95);
    auto p = synth::map_position(scfg, cls, x);
    p.onset = 4.0;

    ProcessedWaveform w;
    w.sample_period = grid;
    w.samples.resize(3981);
    for (std::size_t i = 0; i < w.samples.size(); ++i)
      w.samples[i] = synth::pulse_shape(static_cast<double>(i) * grid, p);
    auto f = extract_features(w);

    double t_peak = synth::pulse_peak_time(p);
    double peak = synth::pulse_shape(t_peak, p);
    double t10r = crossing_time(p, 0.1 * peak, p.onset, t_peak);
    double t90r = crossing_time(p, 0.9 * peak, p.onset, t_peak);
    double t_end = p.onset + 30.0 * p.fall_tau;
    double t90f = crossing_time(p, 0.9 * peak, t_peak, t_end);
    double t10f = crossing_time(p, 0.1 * peak, t_peak, t_end);
    double t50r = crossing_time(p, 0.5 * peak, p.onset, t_peak);
    double t50f = crossing_time(p, 0.5 * peak, t_peak, t_end);

    CHECK(std::fabs(f.rising_time - (t90r - t10r)) <= grid);
    CHECK(std::fabs(f.falling_time - (t10f - t90f)) <= grid);
    CHECK(std::fabs(f.fwhm_time - (t50f - t50r)) <= grid);
    CHECK(f.peak_amplitude == doctest::Approx(peak).epsilon(1e-4));
  }
}

TEST_CASE("amplitude scaling leaves time features unchanged") {
  synth::SynthConfig scfg;
  scfg.noise_sigma = 0.0;
  scfg.interference_amp = 0.0;
  preprocess::PreprocessConfig pcfg;
  Rng rng(606);
  auto ev = synth::synth_waveform(scfg, Label::Photon, rng);
  auto w = preprocess::preprocess_event(ev, pcfg, scfg.sample_period);
  auto f1 = extract_features(w);
  double a = 3.7;
  for (auto& v : w.samples) v *= a;
  auto f2 = extract_features(w);
  CHECK(f2.peak_amplitude ==
        doctest::Approx(a * f1.peak_amplitude).epsilon(1e-12));
  CHECK(std::fabs(f2.rising_time - f1.rising_time) <= 1e-9);
  CHECK(std::fabs(f2.falling_time - f1.falling_time) <= 1e-9);
  CHECK(std::fabs(f2.fwhm_time - f1.fwhm_time) <= 1e-9);
}

TEST_CASE("time shift leaves features unchanged") {
  synth::SynthConfig scfg;
  scfg.noise_sigma = 0.0;
  scfg.interference_amp = 0.0;
  preprocess::PreprocessConfig pcfg;
  Rng rng(707);
  auto ev = synth::synth_waveform(scfg, Label::Dark, rng);
  auto w = preprocess::preprocess_event(ev, pcfg, scfg.sample_period);
  auto f1 = extract_features(w);
  // Shift by 40 upsampled grid steps (1 ns), padding with zeros.
  std::size_t k = 40;
  std::vector<double> shifted(w.samples.size(), 0.0);
  for (std::size_t i = 0; i + k < w.samples.size(); ++i)
    shifted[i + k] = w.samples[i];
  auto f2 = extract_features(make_wave(shifted, w.sample_period));
  double grid = w.sample_period;
  CHECK(std::fabs(f2.rising_time - f1.rising_time) <= grid);
  CHECK(std::fabs(f2.falling_time - f1.falling_time) <= grid);
  CHECK(std::fabs(f2.fwhm_time - f1.fwhm_time) <= grid);
  CHECK(f2.peak_amplitude == doctest::Approx(f1.peak_amplitude));
}

TEST_CASE("peak amplitude increases with position on noiseless pulses") {
  synth::SynthConfig scfg;
  scfg.noise_sigma = 0.0;
  scfg.interference_amp = 0.0;
  preprocess::PreprocessConfig pcfg;
  for (Label cls : {Label::Photon, Label::Dark}) {
    double prev = -1.0;
    for (int i = 0; i <= 10; ++i) {
      double x = i / 10.0;
      auto p = synth::map_position(scfg, cls, x);
      p.onset = 4.0;
      CapturedEvent ev;
      ev.samples.resize(200);
      for (int s = 0; s < 200; ++s)
        ev.samples[static_cast<std::size_t>(s)] = static_cast<std::int16_t>(
            std::nearbyint(synth::pulse_shape(s * 0.5, p)));
      auto w = preprocess::preprocess_event(ev, pcfg, 0.5);
      auto f = extract_features(w);
      CHECK(f.peak_amplitude > prev);
      prev = f.peak_amplitude;
    }
  }
}

TEST_CASE("argmax ties break to the earliest sample") {
  std::vector<double> v = {0, 1, 5, 5, 5, 1, 0};
  auto f = extract_features(make_wave(v, 1.0));
  // Peak value 5 at the earliest index (2); 50% crossings interpolate to
  // t = 1.375 and t = 4.625.
  CHECK(f.peak_amplitude == 5.0);
  CHECK(f.fwhm_time == doctest::Approx(3.25));
}
