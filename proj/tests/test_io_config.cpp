#include <cstdio>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "photonids/anchor.hpp"
#include "photonids/calibrate.hpp"
#include "photonids/config.hpp"
#include "photonids/io.hpp"
#include "photonids/nn/train.hpp"
#include "photonids/rng.hpp"
#include "photonids/synth.hpp"

using namespace photonids;

namespace {

std::string temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "photonids_test";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

}  // namespace

TEST_CASE("event file round-trips byte for byte") {
  synth::SynthConfig cfg;
  auto ds = synth::make_dataset(cfg, 20, 20);
  io::EventFileHeader hdr;
  auto path = temp_path("events.phid");
  io::write_event_file(path, hdr, ds.events);
  auto back = io::read_event_file(path);
  CHECK(back.header.sample_rate_hz == hdr.sample_rate_hz);
  CHECK(back.header.pre_samples == 8);
  CHECK(back.header.post_samples == 192);
  REQUIRE(back.events.size() == ds.events.size());
  for (std::size_t i = 0; i < ds.events.size(); ++i) {
    CHECK(back.events[i].trigger_index == ds.events[i].trigger_index);
    CHECK(back.events[i].label == ds.events[i].label);
    CHECK(back.events[i].samples == ds.events[i].samples);
  }
  // Second write of the loaded data is bit-identical.
  auto path2 = temp_path("events2.phid");
  io::write_event_file(path2, back.header, back.events);
  CHECK(io::read_text_file(path) == io::read_text_file(path2));
}

TEST_CASE("stream file round-trips") {
  synth::SynthConfig cfg;
  Rng rng(5);
  auto s = synth::synth_stream(cfg, 5, 100000.0, rng);
  auto path = temp_path("stream.phst");
  io::write_stream_file(path, 2000000000ull, s.samples);
  auto back = io::read_stream_file(path);
  CHECK(back.sample_rate_hz == 2000000000ull);
  CHECK(back.samples == s.samples);
}

TEST_CASE("corrupt magic rejected with an io error") {
  auto path = temp_path("bad.phid");
  io::write_text_file(path, "NOTAVALIDFILE");
  try {
    io::read_event_file(path);
    FAIL("expected io error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::Io);
  }
}

TEST_CASE("regressor checkpoint round-trips losslessly") {
  CnnModel m;
  m.init(17);
  m.target_mean = {1.5, -2.25, 0.125, 3.0e-7};
  m.target_std = {10.0, 0.5, 2.0, 123.456};
  // Perturb some running stats so they are not defaults.
  Rng rng(3);
  for (auto& v : m.bn1.running_mean.data) v = static_cast<float>(rng.gaussian());
  auto path = temp_path("regressor.phnn");
  io::save_regressor(path, m, R"({"note":"test"})");

  CnnModel back;
  std::string sidecar;
  io::load_regressor(path, back, &sidecar);
  CHECK(back.conv1.weight.data == m.conv1.weight.data);
  CHECK(back.conv2.weight.data == m.conv2.weight.data);
  CHECK(back.bn1.running_mean.data == m.bn1.running_mean.data);
  CHECK(back.bn2.running_var.data == m.bn2.running_var.data);
  CHECK(back.fc1.weight.data == m.fc1.weight.data);
  CHECK(back.fc2.bias.data == m.fc2.bias.data);
  CHECK(back.target_mean == m.target_mean);
  CHECK(back.target_std == m.target_std);
  CHECK(sidecar.find("note") != std::string::npos);

  // Identical inference after reload.
  ProcessedWaveform w;
  w.sample_period = 0.025;
  w.samples.resize(501);
  Rng wr(9);
  for (auto& v : w.samples) v = wr.gaussian() * 3.0;
  CHECK(nn::predict_positions(m, w) == nn::predict_positions(back, w));
}

TEST_CASE("classifier checkpoint round-trips losslessly") {
  FcnnModel m(8);
  m.init(23);
  m.input_mean = {1, 2, 3, 4, 5, 6, 7, 8.5};
  m.input_std = {1, 1, 2, 2, 3, 3, 4, 4.25};
  auto path = temp_path("classifier.phnn");
  io::save_classifier(path, m, "");
  auto back = io::load_classifier(path);
  CHECK(back.input_dim == 8);
  CHECK(back.fc1.weight.data == m.fc1.weight.data);
  CHECK(back.fc5.bias.data == m.fc5.bias.data);
  CHECK(back.input_mean == m.input_mean);
  CHECK(back.input_std == m.input_std);

  std::vector<double> z = {1000, 3, 20, 15, 100, -200, 50, 7};
  auto c1 = nn::classify(m, z);
  auto c2 = nn::classify(back, z);
  CHECK(c1.probabilities == c2.probabilities);
}

TEST_CASE("kind mismatch between checkpoints is rejected") {
  FcnnModel m(8);
  m.init(1);
  auto path = temp_path("wrongkind.phnn");
  io::save_classifier(path, m, "");
  CnnModel c;
  CHECK_THROWS_AS(io::load_regressor(path, c), Error);
}

TEST_CASE("anchor model JSON round-trip") {
  anchor::AnchorModel m;
  m.scale_factor = 1000.0;
  for (int k = 0; k < 4; ++k)
    m.feature[static_cast<std::size_t>(k)] = {100.0 + k, 0.25 * (k + 1),
                                              3.5 + k, 90.0, 120.0 + k};
  auto text = io::anchor_to_json(m);
  auto back = io::anchor_from_json(text);
  for (int k = 0; k < 4; ++k) {
    CHECK(back.feature[static_cast<std::size_t>(k)].mode ==
          m.feature[static_cast<std::size_t>(k)].mode);
    CHECK(back.feature[static_cast<std::size_t>(k)].ruler ==
          m.feature[static_cast<std::size_t>(k)].ruler);
    CHECK(back.feature[static_cast<std::size_t>(k)].bandwidth ==
          m.feature[static_cast<std::size_t>(k)].bandwidth);
  }
  CHECK(back.scale_factor == m.scale_factor);
}

TEST_CASE("calibrator JSON round-trip preserves evaluation exactly") {
  Rng rng(29);
  calibrate::CalibratorModel m;
  for (int k = 0; k < 4; ++k) {
    std::vector<double> raw(500), tgt(500);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      raw[i] = rng.uniform(-10, 10);
      tgt[i] = 2.0 * raw[i] + rng.gaussian() * 0.01;
    }
    m.channel[static_cast<std::size_t>(k)] =
        calibrate::fit_channel(raw, tgt, 20);
  }
  auto back = io::calibrator_from_json(io::calibrator_to_json(m));
  for (int rep = 0; rep < 100; ++rep) {
    double t = rng.uniform(-15, 15);
    for (int k = 0; k < 4; ++k)
      CHECK(back.channel[static_cast<std::size_t>(k)].eval(t) ==
            m.channel[static_cast<std::size_t>(k)].eval(t));
  }
}

TEST_CASE("config: defaults, round-trip, unknown keys") {
  config::ExperimentConfig cfg;
  CHECK(cfg.get_int("preprocess.savgol_window") == 11);
  CHECK(cfg.get_double("train.regressor.lr") == doctest::Approx(5e-4));
  CHECK(cfg.get("eval.configuration") == "calibrated_only");

  cfg.set("daq.threshold", "120");
  CHECK(cfg.resolve_threshold() == 120);
  cfg.set("daq.threshold", "auto");
  cfg.set("synth.noise_sigma", "8");
  CHECK(cfg.resolve_threshold() == 40);

  auto text = cfg.print();
  config::ExperimentConfig cfg2;
  cfg2.parse_text(text);
  CHECK(cfg2 == cfg);
  CHECK(cfg2.print() == text);

  CHECK_THROWS_AS(cfg.set("nonsense.key", "1"), Error);
  CHECK_THROWS_AS(cfg2.parse_text("daq.threshold: 5\n"), Error);
  config::ExperimentConfig cfg3;
  cfg3.parse_text("# comment line\n  \n daq.threshold = 99 # inline\n");
  CHECK(cfg3.get_int("daq.threshold") == 99);
}

TEST_CASE("config rejects malformed numbers") {
  config::ExperimentConfig cfg;
  cfg.set("synth.noise_sigma", "abc");
  CHECK_THROWS_AS(cfg.get_double("synth.noise_sigma"), Error);
  cfg.set("daq.pre_samples", "8.5");
  CHECK_THROWS_AS(cfg.get_int("daq.pre_samples"), Error);
}
