#include "photonids/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "photonids/io.hpp"

namespace photonids::pipeline {

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch())
      .count();
}

void report(const Progress& p, const std::string& msg) {
  if (p) p(msg);
}

}  // namespace

Settings resolve_settings(const config::ExperimentConfig& cfg) {
  Settings s;
  s.synth.sample_period = cfg.get_double("synth.sample_period");
  s.synth.window_samples = cfg.get_int("synth.window_samples");
  s.synth.noise_sigma = cfg.get_double("synth.noise_sigma");
  s.synth.interference_amp = cfg.get_double("synth.interference_amp");
  s.synth.interference_freq = cfg.get_double("synth.interference_freq");
  s.synth.base_amplitude = cfg.get_double("synth.base_amplitude");
  s.synth.photon_pos = {cfg.get_double("synth.photon_pos_alpha"),
                        cfg.get_double("synth.photon_pos_beta")};
  s.synth.dark_pos = {cfg.get_double("synth.dark_pos_alpha"),
                      cfg.get_double("synth.dark_pos_beta")};
  s.synth.seed = cfg.get_u64("synth.seed");
  s.daq.threshold = cfg.resolve_threshold();
  s.daq.pre_samples = cfg.get_int("daq.pre_samples");
  s.daq.post_samples = cfg.get_int("daq.post_samples");
  s.daq.inhibition_samples = cfg.get_int("daq.inhibition_samples");
  s.preprocess.savgol_window = cfg.get_int("preprocess.savgol_window");
  s.preprocess.savgol_order = cfg.get_int("preprocess.savgol_order");
  s.preprocess.upsample_factor = cfg.get_int("preprocess.upsample_factor");
  s.preprocess.pre_samples = s.daq.pre_samples;
  s.features.rise_lo = cfg.get_double("features.rise_lo");
  s.features.rise_hi = cfg.get_double("features.rise_hi");
  s.features.fwhm_frac = cfg.get_double("features.fwhm_frac");
  s.anchor_scale_factor = cfg.get_double("anchor.scale_factor");
  s.anchor_grid_points = cfg.get_int("anchor.grid_points");
  s.calibrate_bins = cfg.get_int("calibrate.bins");
  s.regressor_train.learning_rate = cfg.get_double("train.regressor.lr");
  s.regressor_train.batch_size = cfg.get_int("train.regressor.batch");
  s.regressor_train.epochs = cfg.get_int("train.regressor.epochs");
  s.regressor_train.seed = cfg.get_u64("train.regressor.seed");
  s.classifier_train.learning_rate = cfg.get_double("train.classifier.lr");
  s.classifier_train.batch_size = cfg.get_int("train.classifier.batch");
  s.classifier_train.epochs = cfg.get_int("train.classifier.max_epochs");
  s.classifier_train.seed = cfg.get_u64("train.classifier.seed");
  s.classifier_patience = cfg.get_int("train.classifier.patience");
  s.metrics_tau = cfg.get_double("metrics.tau");
  s.train_frac = cfg.get_double("eval.train_frac");
  s.val_frac = cfg.get_double("eval.val_frac");
  s.test_frac = cfg.get_double("eval.test_frac");
  s.n_train = cfg.get_int("eval.n_train");
  s.n_val = cfg.get_int("eval.n_val");
  s.n_test = cfg.get_int("eval.n_test");
  s.split_seed = cfg.get_u64("eval.split_seed");
  s.configuration = cfg.get("eval.configuration");
  return s;
}

void PipelineBundle::validate() const {
  anchor.validate();
  if (classifier.input_dim != 8)
    throw Error(ErrorCategory::InvalidArgument,
                "bundle classifier must consume the 8-wide hybrid vector");
  if (regressor.fc2.out != 4)
    throw Error(ErrorCategory::InvalidArgument,
                "bundle regressor must produce 4 positions");
  for (const auto& ch : calibrator.channel) ch.validate();
  if (provenance.empty())
    throw Error(ErrorCategory::InvalidArgument, "bundle provenance is empty");
}

void save_bundle(const std::string& dir, const PipelineBundle& bundle) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  io::save_anchor(dir + "/anchor.json", bundle.anchor);
  io::save_regressor(dir + "/regressor.phnn", bundle.regressor,
                     bundle.regressor_meta);
  io::save_calibrator(dir + "/calibrator.json", bundle.calibrator);
  io::save_classifier(dir + "/classifier.phnn", bundle.classifier,
                      bundle.classifier_meta);
  nlohmann::json j;
  j["format"] = "photonids-bundle";
  j["version"] = 1;
  j["sample_period_ns"] = bundle.sample_period_ns;
  j["preprocess"] = {{"savgol_window", bundle.preprocess.savgol_window},
                     {"savgol_order", bundle.preprocess.savgol_order},
                     {"upsample_factor", bundle.preprocess.upsample_factor},
                     {"pre_samples", bundle.preprocess.pre_samples}};
  j["features"] = {{"rise_lo", bundle.features.rise_lo},
                   {"rise_hi", bundle.features.rise_hi},
                   {"fwhm_frac", bundle.features.fwhm_frac}};
  j["provenance"] = bundle.provenance;
  io::write_text_file(dir + "/bundle.json", j.dump(2) + "\n");
}

PipelineBundle load_bundle(const std::string& dir) {
  PipelineBundle b;
  auto j = nlohmann::json::parse(io::read_text_file(dir + "/bundle.json"));
  if (j.at("format") != "photonids-bundle")
    throw Error(ErrorCategory::Io, "not a pipeline bundle");
  b.sample_period_ns = j.at("sample_period_ns").get<double>();
  b.preprocess.savgol_window = j.at("preprocess").at("savgol_window").get<int>();
  b.preprocess.savgol_order = j.at("preprocess").at("savgol_order").get<int>();
  b.preprocess.upsample_factor =
      j.at("preprocess").at("upsample_factor").get<int>();
  b.preprocess.pre_samples = j.at("preprocess").at("pre_samples").get<int>();
  b.features.rise_lo = j.at("features").at("rise_lo").get<double>();
  b.features.rise_hi = j.at("features").at("rise_hi").get<double>();
  b.features.fwhm_frac = j.at("features").at("fwhm_frac").get<double>();
  b.provenance =
      j.at("provenance").get<std::map<std::string, std::string>>();
  b.anchor = io::load_anchor(dir + "/anchor.json");
  io::load_regressor(dir + "/regressor.phnn", b.regressor);
  b.calibrator = io::load_calibrator(dir + "/calibrator.json");
  b.classifier = io::load_classifier(dir + "/classifier.phnn");
  b.validate();
  return b;
}

InferenceResult infer_event(PipelineBundle& bundle, const CapturedEvent& ev) {
  InferenceResult r;
  ProcessedWaveform w;
  try {
    w = preprocess::preprocess_event(ev, bundle.preprocess,
                                     bundle.sample_period_ns);
    r.scalar_features = features::extract_features(w, bundle.features);
  } catch (const Error& e) {
    r.rejected = true;
    r.error_category = error_category_name(e.category());
    r.error_message = e.what();
    return r;
  }
  r.raw_position = nn::predict_positions(bundle.regressor, w);
  r.calibrated_position =
      calibrate::apply_calibration(bundle.calibrator, r.raw_position);
  std::array<double, 8> z{};
  auto v = r.scalar_features.as_array();
  for (int k = 0; k < 4; ++k) {
    z[static_cast<std::size_t>(k)] = v[static_cast<std::size_t>(k)];
    z[static_cast<std::size_t>(k) + 4] =
        r.calibrated_position[static_cast<std::size_t>(k)];
  }
  auto c = nn::classify(bundle.classifier, z);
  r.label = c.label;
  r.probabilities = c.probabilities;
  return r;
}

SplitIndices stratified_split(const std::vector<Label>& labels,
                              const Settings& s) {
  std::array<std::vector<int>, 2> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == Label::Photon)
      by_class[1].push_back(static_cast<int>(i));
    else
      by_class[0].push_back(static_cast<int>(i));
  }
  Rng rng(derive_seed(s.split_seed, 0x517));
  SplitIndices out;
  bool explicit_counts = s.n_train > 0 || s.n_val > 0 || s.n_test > 0;
  for (auto& idx : by_class) {
    for (std::size_t i = idx.size(); i > 1; --i) {
      auto j =
          static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
      if (j >= i) j = i - 1;
      std::swap(idx[i - 1], idx[j]);
    }
    std::size_t n = idx.size();
    std::size_t n_train, n_val;
    if (explicit_counts) {
      // Explicit totals split evenly across the two classes.
      n_train = static_cast<std::size_t>(s.n_train) / 2;
      n_val = static_cast<std::size_t>(s.n_val) / 2;
      auto n_test = static_cast<std::size_t>(s.n_test) / 2;
      if (n_train + n_val + n_test > n)
        throw Error(ErrorCategory::InvalidArgument,
                    "explicit split counts exceed the per-class population");
    } else {
      n_train = static_cast<std::size_t>(
          std::floor(s.train_frac * static_cast<double>(n)));
      n_val = static_cast<std::size_t>(
          std::floor(s.val_frac * static_cast<double>(n)));
    }
    std::size_t i = 0;
    for (; i < n_train && i < n; ++i) out.train.push_back(idx[i]);
    for (; i < n_train + n_val && i < n; ++i) out.val.push_back(idx[i]);
    if (explicit_counts) {
      auto n_test = static_cast<std::size_t>(s.n_test) / 2;
      for (std::size_t k = 0; k < n_test && i < n; ++k, ++i)
        out.test.push_back(idx[i]);
    } else {
      for (; i < n; ++i) out.test.push_back(idx[i]);
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

const char* configuration_name(EvalConfiguration c) {
  switch (c) {
    case EvalConfiguration::BaseOnly: return "base_only";
    case EvalConfiguration::ActualOnly: return "actual_only";
    case EvalConfiguration::CnnPredOnly: return "cnn_pred_only";
    default: return "calibrated_only";
  }
}

EvalConfiguration configuration_from_name(const std::string& name) {
  if (name == "base_only") return EvalConfiguration::BaseOnly;
  if (name == "actual_only") return EvalConfiguration::ActualOnly;
  if (name == "cnn_pred_only") return EvalConfiguration::CnnPredOnly;
  if (name == "calibrated_only") return EvalConfiguration::CalibratedOnly;
  throw Error(ErrorCategory::Config, "unknown configuration: " + name);
}

bool configuration_standardizes(EvalConfiguration c) {
  return c == EvalConfiguration::ActualOnly ||
         c == EvalConfiguration::CalibratedOnly;
}

namespace {

struct PreparedData {
  nn::WaveBank bank;                     // processed waveforms (float rows)
  std::vector<ScalarFeatures> scalars;   // per event
  std::vector<int> labels01;             // 0 dark / 1 photon
};

int configuration_dim(EvalConfiguration c) {
  return c == EvalConfiguration::BaseOnly ? 4 : 8;
}

nn::FeatureMatrix build_features(EvalConfiguration c,
                                 const std::vector<int>& rows,
                                 const std::vector<ScalarFeatures>& scalars,
                                 const std::vector<PseudoPosition>& actual,
                                 const std::vector<PseudoPosition>& raw,
                                 const std::vector<PseudoPosition>& calibrated) {
  nn::FeatureMatrix m;
  m.resize(static_cast<int>(rows.size()), configuration_dim(c));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto i = static_cast<std::size_t>(rows[r]);
    auto v = scalars[i].as_array();
    double* dst = m.row(static_cast<int>(r));
    for (int k = 0; k < 4; ++k) dst[k] = v[static_cast<std::size_t>(k)];
    if (c == EvalConfiguration::BaseOnly) continue;
    const PseudoPosition* p = nullptr;
    switch (c) {
      case EvalConfiguration::ActualOnly: p = &actual[i]; break;
      case EvalConfiguration::CnnPredOnly: p = &raw[i]; break;
      default: p = &calibrated[i]; break;
    }
    for (int k = 0; k < 4; ++k) dst[4 + k] = (*p)[static_cast<std::size_t>(k)];
  }
  return m;
}

std::vector<int> select_labels(const std::vector<int>& rows,
                               const std::vector<int>& labels01) {
  std::vector<int> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out[i] = labels01[static_cast<std::size_t>(rows[i])];
  return out;
}

}  // namespace

ExperimentResult run_experiment(const Settings& s, Progress progress) {
  double t0 = now_seconds();
  ExperimentResult result;

  // 1) Dataset: balanced classes, split afterwards.
  std::size_t n_total;
  if (s.n_train > 0 || s.n_val > 0 || s.n_test > 0) {
    n_total = static_cast<std::size_t>(s.n_train + s.n_val + s.n_test);
  } else {
    throw Error(ErrorCategory::Config,
                "run_experiment needs explicit eval.n_train/n_val/n_test or "
                "a dataset; use evaluate with a dataset file for fractions");
  }
  report(progress, "synthesizing " + std::to_string(n_total) + " events");
  auto ds = synth::make_dataset(s.synth, n_total / 2 + n_total % 2, n_total / 2);
  result.dataset_hash = io::event_file_hash(ds.events);

  std::vector<Label> labels(ds.events.size());
  for (std::size_t i = 0; i < ds.events.size(); ++i)
    labels[i] = ds.events[i].label;
  auto split = stratified_split(labels, s);
  result.n_train = static_cast<int>(split.train.size());
  result.n_val = static_cast<int>(split.val.size());
  result.n_test = static_cast<int>(split.test.size());

  // 2) Preprocess + scalar features for every event.
  report(progress, "preprocessing " + std::to_string(ds.events.size()) +
                       " events");
  PreparedData prep;
  int up_len = (s.synth.window_samples - 1) * s.preprocess.upsample_factor + 1;
  prep.bank.resize(static_cast<int>(ds.events.size()), up_len);
  prep.scalars.resize(ds.events.size());
  prep.labels01.resize(ds.events.size());
  std::vector<char> ok(ds.events.size(), 0);
#pragma omp parallel for schedule(static)
  for (long long ii = 0; ii < static_cast<long long>(ds.events.size()); ++ii) {
    auto i = static_cast<std::size_t>(ii);
    try {
      auto w = preprocess::preprocess_event(ds.events[i], s.preprocess,
                                            s.synth.sample_period);
      prep.scalars[i] = features::extract_features(w, s.features);
      float* row = prep.bank.row(static_cast<int>(i));
      for (int l = 0; l < up_len; ++l)
        row[l] = static_cast<float>(w.samples[static_cast<std::size_t>(l)]);
      prep.labels01[i] = ds.events[i].label == Label::Photon ? 1 : 0;
      ok[i] = 1;
    } catch (const Error&) {
      ok[i] = 0;  // dropped below
    }
  }
  for (std::size_t i = 0; i < ok.size(); ++i)
    if (!ok[i])
      throw Error(ErrorCategory::Internal,
                  "synthetic event failed feature extraction; defaults are "
                  "expected to produce clean pulses");

  // 3) Anchor on the training split only.
  report(progress, "fitting the position anchor");
  std::vector<ScalarFeatures> train_scalars;
  train_scalars.reserve(split.train.size());
  for (int i : split.train)
    train_scalars.push_back(prep.scalars[static_cast<std::size_t>(i)]);
  auto anchor_model = anchor::fit_anchor(train_scalars, s.anchor_scale_factor,
                                         s.anchor_grid_points);
  std::vector<PseudoPosition> actual(ds.events.size());
  for (std::size_t i = 0; i < ds.events.size(); ++i)
    actual[i] = anchor::encode_position(prep.scalars[i], anchor_model);

  // 4) Regressor on the training split.
  report(progress, "training the position regressor (" +
                       std::to_string(s.regressor_train.epochs) + " epochs x " +
                       std::to_string(split.train.size()) + " waveforms)");
  double tr0 = now_seconds();
  CnnModel regressor;
  regressor.init(s.regressor_train.seed);
  {
    nn::WaveBank train_bank;
    train_bank.resize(static_cast<int>(split.train.size()), up_len);
    std::vector<PseudoPosition> train_targets(split.train.size());
    for (std::size_t r = 0; r < split.train.size(); ++r) {
      std::copy_n(prep.bank.row(split.train[r]), up_len,
                  train_bank.row(static_cast<int>(r)));
      train_targets[r] = actual[static_cast<std::size_t>(split.train[r])];
    }
    result.regressor_history =
        nn::train_regressor(regressor, train_bank, train_targets,
                            s.regressor_train);
  }
  result.seconds_regressor = now_seconds() - tr0;

  // 5) Raw positions everywhere, then the monotone calibrator on train+val.
  report(progress, "regressing and calibrating positions");
  auto raw = nn::predict_positions_batch(regressor, prep.bank);
  std::array<std::vector<double>, 4> cal_raw, cal_target;
  for (int k = 0; k < 4; ++k) {
    auto fill = [&](const std::vector<int>& rows) {
      for (int i : rows) {
        cal_raw[static_cast<std::size_t>(k)].push_back(
            raw[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
        cal_target[static_cast<std::size_t>(k)].push_back(
            actual[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
      }
    };
    fill(split.train);
    fill(split.val);
  }
  auto calibrator = calibrate::fit_calibrator(cal_raw, cal_target,
                                              s.calibrate_bins);
  std::vector<PseudoPosition> calibrated(ds.events.size());
  for (std::size_t i = 0; i < ds.events.size(); ++i)
    calibrated[i] = calibrate::apply_calibration(calibrator, raw[i]);

  // 6) Regression quality on the test split, raw vs calibrated.
  for (int k = 0; k < 4; ++k) {
    std::vector<double> pr, pc, tg;
    for (int i : split.test) {
      pr.push_back(raw[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
      pc.push_back(
          calibrated[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
      tg.push_back(
          actual[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
    }
    result.regression[static_cast<std::size_t>(k)].raw =
        metrics::regression_metrics(pr, tg, s.metrics_tau);
    result.regression[static_cast<std::size_t>(k)].calibrated =
        metrics::regression_metrics(pc, tg, s.metrics_tau);
  }

  // 7) Classifier configurations.
  std::vector<EvalConfiguration> configs;
  if (s.configuration == "all") {
    configs = {EvalConfiguration::BaseOnly, EvalConfiguration::ActualOnly,
               EvalConfiguration::CnnPredOnly,
               EvalConfiguration::CalibratedOnly};
  } else {
    configs = {configuration_from_name(s.configuration)};
    if (configs[0] != EvalConfiguration::CalibratedOnly)
      configs.push_back(EvalConfiguration::CalibratedOnly);
  }

  FcnnModel bundle_classifier{8};
  auto y_train = select_labels(split.train, prep.labels01);
  auto y_val = select_labels(split.val, prep.labels01);
  auto y_test = select_labels(split.test, prep.labels01);
  for (auto c : configs) {
    report(progress, std::string("training classifier configuration ") +
                         configuration_name(c));
    auto x_train = build_features(c, split.train, prep.scalars, actual, raw,
                                  calibrated);
    auto x_val =
        build_features(c, split.val, prep.scalars, actual, raw, calibrated);
    auto x_test =
        build_features(c, split.test, prep.scalars, actual, raw, calibrated);

    FcnnModel model(configuration_dim(c));
    model.init(s.classifier_train.seed);
    ConfigurationResult cr;
    cr.configuration = c;
    cr.history = nn::train_classifier(model, x_train, y_train, x_val, y_val,
                                      s.classifier_train, s.classifier_patience,
                                      configuration_standardizes(c));
    auto pred = nn::classify_batch(model, x_test);
    cr.report = metrics::classification_metrics(y_test, pred.labels);
    cr.roc_auc = metrics::roc_auc(pred.photon_scores, y_test);
    cr.silhouette = metrics::silhouette(pred.penultimate, 32, y_test);
    result.configurations.push_back(std::move(cr));
    if (c == EvalConfiguration::CalibratedOnly) bundle_classifier = model;
  }

  // 8) Assemble the bundle.
  result.bundle.anchor = anchor_model;
  result.bundle.regressor = regressor;
  result.bundle.calibrator = calibrator;
  result.bundle.classifier = bundle_classifier;
  result.bundle.preprocess = s.preprocess;
  result.bundle.features = s.features;
  result.bundle.sample_period_ns = s.synth.sample_period;
  {
    nlohmann::json rm;
    rm["learning_rate"] = s.regressor_train.learning_rate;
    rm["batch_size"] = s.regressor_train.batch_size;
    rm["epochs"] = result.regressor_history.epoch_loss.size();
    rm["seed"] = s.regressor_train.seed;
    rm["final_loss"] = result.regressor_history.epoch_loss.empty()
                           ? 0.0
                           : result.regressor_history.epoch_loss.back();
    rm["epoch_loss"] = result.regressor_history.epoch_loss;
    result.bundle.regressor_meta = rm.dump();
    for (const auto& cr : result.configurations) {
      if (cr.configuration != EvalConfiguration::CalibratedOnly) continue;
      nlohmann::json cm;
      cm["learning_rate"] = s.classifier_train.learning_rate;
      cm["batch_size"] = s.classifier_train.batch_size;
      cm["epochs_run"] = cr.history.epochs_run;
      cm["best_epoch"] = cr.history.best_epoch;
      cm["seed"] = s.classifier_train.seed;
      cm["final_train_loss"] =
          cr.history.train_loss.empty() ? 0.0 : cr.history.train_loss.back();
      cm["final_val_loss"] =
          cr.history.val_loss.empty() ? 0.0 : cr.history.val_loss.back();
      result.bundle.classifier_meta = cm.dump();
    }
  }
  result.bundle.provenance = {
      {"dataset_hash", std::to_string(result.dataset_hash)},
      {"synth_seed", std::to_string(s.synth.seed)},
      {"split_seed", std::to_string(s.split_seed)},
      {"regressor_seed", std::to_string(s.regressor_train.seed)},
      {"classifier_seed", std::to_string(s.classifier_train.seed)},
      {"n_train", std::to_string(result.n_train)},
      {"n_val", std::to_string(result.n_val)},
      {"n_test", std::to_string(result.n_test)},
      {"version", "0.1.0"},
  };

  result.seconds_total = now_seconds() - t0;
  return result;
}

std::string classification_report_text(const ConfigurationResult& r) {
  std::ostringstream os;
  char buf[160];
  os << "configuration: " << configuration_name(r.configuration) << "\n";
  std::snprintf(buf, sizeof(buf),
                "accuracy %.4f   roc_auc %.4f   silhouette %.3f   "
                "(epochs %d, best %d)\n",
                r.report.accuracy, r.roc_auc, r.silhouette,
                r.history.epochs_run, r.history.best_epoch);
  os << buf;
  os << "class        precision   recall       f1\n";
  const char* names[2] = {"dark count", "photon"};
  for (int c = 0; c < 2; ++c) {
    const auto& cs = r.report.per_class[static_cast<std::size_t>(c)];
    std::snprintf(buf, sizeof(buf), "%-12s %9.3f %8.3f %8.3f\n", names[c],
                  cs.precision, cs.recall, cs.f1);
    os << buf;
  }
  os << "confusion (rows actual dark/photon, cols predicted):\n";
  for (int a = 0; a < 2; ++a) {
    std::snprintf(buf, sizeof(buf), "  %8lld %8lld   (%.1f%% / %.1f%%)\n",
                  static_cast<long long>(r.report.confusion[a][0]),
                  static_cast<long long>(r.report.confusion[a][1]),
                  100.0 * r.report.confusion_rows[a][0],
                  100.0 * r.report.confusion_rows[a][1]);
    os << buf;
  }
  return os.str();
}

std::string classification_report_json(const ConfigurationResult& r) {
  nlohmann::json j;
  j["configuration"] = configuration_name(r.configuration);
  j["accuracy"] = r.report.accuracy;
  j["roc_auc"] = r.roc_auc;
  j["silhouette_penultimate"] = r.silhouette;
  j["epochs_run"] = r.history.epochs_run;
  j["best_epoch"] = r.history.best_epoch;
  const char* names[2] = {"dark", "photon"};
  for (int c = 0; c < 2; ++c) {
    const auto& cs = r.report.per_class[static_cast<std::size_t>(c)];
    j["per_class"][names[c]] = {{"precision", cs.precision},
                                {"recall", cs.recall},
                                {"f1", cs.f1}};
  }
  j["confusion"] = r.report.confusion;
  j["confusion_row_normalized"] = r.report.confusion_rows;
  return j.dump(2) + "\n";
}

std::string regression_report_text(
    const std::array<ChannelRegressionPair, 4>& reg, double tau) {
  std::ostringstream os;
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "%-6s %12s %12s %10s | %12s %12s %10s %10s  (tau=%g)\n",
                "chan", "raw MAE", "raw RMSE", "raw R2", "cal MAE", "cal RMSE",
                "cal R2", "cal tolacc", tau);
  os << buf;
  for (int k = 0; k < 4; ++k) {
    const auto& p = reg[static_cast<std::size_t>(k)];
    std::snprintf(
        buf, sizeof(buf),
        "%-6s %12.3f %12.3f %10.4f | %12.3f %12.3f %10.6f %10.4f\n",
        kFeatureNames[static_cast<std::size_t>(k)], p.raw.mae, p.raw.rmse,
        p.raw.r_squared.value_or(std::nan("")), p.calibrated.mae,
        p.calibrated.rmse, p.calibrated.r_squared.value_or(std::nan("")),
        p.calibrated.tolerance_accuracy);
    os << buf;
  }
  return os.str();
}

std::string regression_report_json(
    const std::array<ChannelRegressionPair, 4>& reg, double tau) {
  nlohmann::json j;
  j["tau"] = tau;
  for (int k = 0; k < 4; ++k) {
    const auto& p = reg[static_cast<std::size_t>(k)];
    auto enc = [](const metrics::RegressionStats& s) {
      nlohmann::json e = {{"mae", s.mae},
                          {"rmse", s.rmse},
                          {"tolerance_accuracy", s.tolerance_accuracy}};
      if (s.r_squared)
        e["r_squared"] = *s.r_squared;
      else
        e["r_squared"] = "undefined";
      return e;
    };
    j["channels"][kFeatureNames[static_cast<std::size_t>(k)]] = {
        {"raw", enc(p.raw)}, {"calibrated", enc(p.calibrated)}};
  }
  return j.dump(2) + "\n";
}

std::string snr_report_text(const metrics::SnrReport& r,
                            const std::string& regime_name) {
  std::ostringstream os;
  char buf[200];
  os << "regime: " << regime_name << "\n";
  std::snprintf(buf, sizeof(buf),
                "S %.6g /s   B %.6g /s   tpr %.4f   fpr %.4f\n", r.photon_rate,
                r.dark_rate, r.tpr, r.fpr);
  os << buf;
  std::snprintf(buf, sizeof(buf), "SNR  %.4f  (%.2f dB)\n", r.snr, r.snr_db);
  os << buf;
  if (r.infinite_gain) {
    os << "SNR' undefined: no dark counts pass the gate (infinite gain)\n";
  } else {
    std::snprintf(buf, sizeof(buf), "SNR' %.4f  (%.2f dB)   gain %.4f\n",
                  *r.snr_prime, *r.snr_prime_db, *r.gain);
    os << buf;
  }
  return os.str();
}

std::string snr_report_json(const metrics::SnrReport& r,
                            const std::string& regime_name) {
  nlohmann::json j;
  j["regime"] = regime_name;
  j["photon_rate"] = r.photon_rate;
  j["dark_rate"] = r.dark_rate;
  j["tpr"] = r.tpr;
  j["fpr"] = r.fpr;
  j["snr"] = r.snr;
  j["snr_db"] = r.snr_db;
  if (r.infinite_gain) {
    j["gain"] = "infinite";
    j["snr_prime"] = nullptr;
    j["snr_prime_db"] = nullptr;
  } else {
    j["gain"] = *r.gain;
    j["snr_prime"] = *r.snr_prime;
    j["snr_prime_db"] = *r.snr_prime_db;
  }
  return j.dump(2) + "\n";
}

std::string confusion_csv(const metrics::ClassificationReport& r) {
  std::ostringstream os;
  os << "actual,predicted_dark,predicted_photon\n";
  os << "dark," << r.confusion[0][0] << "," << r.confusion[0][1] << "\n";
  os << "photon," << r.confusion[1][0] << "," << r.confusion[1][1] << "\n";
  return os.str();
}

}  // namespace photonids::pipeline
