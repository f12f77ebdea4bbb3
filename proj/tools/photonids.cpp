// Command-line front end for the photon identification pipeline.
//
// Every configuration key doubles as a long option (--synth.noise_sigma 8),
// and a flat key=value file can be loaded with --config. Subcommands write
// their outputs to explicit paths; reports come out as JSON, aligned text
// and CSV.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "photonids/io.hpp"
#include "photonids/pipeline.hpp"

namespace ph = photonids;
namespace fs = std::filesystem;

namespace {

struct GlobalOpts {
  std::string config_file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> key_options;
};

ph::config::ExperimentConfig build_config(const GlobalOpts& g) {
  ph::config::ExperimentConfig cfg;
  if (!g.config_file.empty())
    cfg.parse_text(ph::io::read_text_file(g.config_file));
  for (const auto& [key, value] : g.key_options) cfg.set(key, value);
  for (const auto& kv : g.sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ph::Error(ph::ErrorCategory::Config,
                      "--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

void register_config_options(CLI::App* app, GlobalOpts& g) {
  app->add_option("--config", g.config_file,
                  "flat key = value configuration file");
  app->add_option("--set", g.sets, "override one key (key=value), repeatable");
  for (const auto& k : ph::config::ExperimentConfig::schema()) {
    app->add_option_function<std::string>(
        "--" + k.name,
        [&g, name = k.name](const std::string& v) { g.key_options[name] = v; },
        k.description);
  }
}

struct PreparedEvents {
  ph::io::EventFile file;
  std::vector<ph::ProcessedWaveform> waves;
  std::vector<ph::ScalarFeatures> scalars;
  std::vector<int> labels01;
};

PreparedEvents prepare_events(const std::string& path,
                              const ph::pipeline::Settings& s) {
  PreparedEvents p;
  p.file = ph::io::read_event_file(path);
  auto n = p.file.events.size();
  p.waves.resize(n);
  p.scalars.resize(n);
  p.labels01.resize(n);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    auto idx = static_cast<std::size_t>(i);
    p.waves[idx] = ph::preprocess::preprocess_event(
        p.file.events[idx], s.preprocess, p.file.header.sample_period_ns());
    p.scalars[idx] =
        ph::features::extract_features(p.waves[idx], s.features);
    p.labels01[idx] = p.file.events[idx].label == ph::Label::Photon ? 1 : 0;
  }
  return p;
}

ph::nn::WaveBank to_bank(const std::vector<ph::ProcessedWaveform>& waves) {
  ph::nn::WaveBank bank;
  if (waves.empty()) return bank;
  bank.resize(static_cast<int>(waves.size()),
              static_cast<int>(waves[0].samples.size()));
  for (std::size_t i = 0; i < waves.size(); ++i)
    for (std::size_t l = 0; l < waves[i].samples.size(); ++l)
      bank.row(static_cast<int>(i))[l] =
          static_cast<float>(waves[i].samples[l]);
  return bank;
}

std::string features_csv(const PreparedEvents& p) {
  std::ostringstream os;
  os << "event,label,peak_amplitude,rising_time,falling_time,fwhm_time\n";
  char buf[200];
  for (std::size_t i = 0; i < p.scalars.size(); ++i) {
    const auto& f = p.scalars[i];
    std::snprintf(buf, sizeof(buf), "%zu,%s,%.9g,%.9g,%.9g,%.9g\n", i,
                  ph::label_name(p.file.events[i].label), f.peak_amplitude,
                  f.rising_time, f.falling_time, f.fwhm_time);
    os << buf;
  }
  return os.str();
}

int run(int argc, char** argv) {
  CLI::App app{"SNSPD photon / dark count identification pipeline"};
  app.require_subcommand(0, 1);
  app.fallthrough();
  GlobalOpts g;
  register_config_options(&app, g);

  bool quiet = false;
  app.add_flag("--quiet", quiet, "suppress progress output");
  bool print_config = false;
  app.add_flag("--print-config", print_config,
               "print the resolved configuration and exit");

  // ---- synth-dataset -----------------------------------------------------
  auto* sd = app.add_subcommand(
      "synth-dataset", "generate a labeled synthetic event or stream file");
  std::string sd_out, sd_stream_out, sd_manifest;
  int sd_photon = 1000, sd_dark = 1000;
  std::uint64_t sd_events = 50;
  double sd_rate = 50000.0;
  sd->add_option("--out", sd_out, "event capture output (.phid)");
  sd->add_option("--n-photon", sd_photon, "photon events");
  sd->add_option("--n-dark", sd_dark, "dark events");
  sd->add_option("--stream-out", sd_stream_out,
                 "write a continuous stream (.phst) instead of events");
  sd->add_option("--manifest", sd_manifest,
                 "ground-truth CSV for the stream (onset, label, position)");
  sd->add_option("--n-events", sd_events, "events embedded in the stream");
  sd->add_option("--rate", sd_rate, "mean event rate for the stream [1/s]");

  // ---- acquire -----------------------------------------------------------
  auto* ac = app.add_subcommand(
      "acquire", "run the trigger state machine over a sample stream");
  std::string ac_in, ac_out;
  ac->add_option("--in", ac_in, "input stream (.phst)")->required();
  ac->add_option("--out", ac_out, "captured events (.phid)")->required();

  // ---- preprocess --------------------------------------------------------
  auto* pp = app.add_subcommand(
      "preprocess", "denoise/upsample events; dump waveforms or features");
  std::string pp_in, pp_waves_csv, pp_features_csv;
  pp->add_option("--in", pp_in, "input events (.phid)")->required();
  pp->add_option("--waveforms-csv", pp_waves_csv,
                 "write processed waveforms (one row per event)");
  pp->add_option("--features-csv", pp_features_csv,
                 "write the scalar feature table");

  // ---- fit-anchor --------------------------------------------------------
  auto* fa = app.add_subcommand(
      "fit-anchor", "fit the KDE position ruler on a training event file");
  std::string fa_in, fa_out;
  fa->add_option("--in", fa_in, "training events (.phid)")->required();
  fa->add_option("--out", fa_out, "anchor model (JSON)")->required();

  // ---- train-regressor ---------------------------------------------------
  auto* tr = app.add_subcommand("train-regressor",
                                "train the CNN position regressor");
  std::string tr_in, tr_anchor, tr_out;
  tr->add_option("--in", tr_in, "training events (.phid)")->required();
  tr->add_option("--anchor", tr_anchor, "anchor model (JSON)")->required();
  tr->add_option("--out", tr_out, "regressor checkpoint (.phnn)")->required();

  // ---- fit-calibrator ----------------------------------------------------
  auto* fc = app.add_subcommand(
      "fit-calibrator", "fit the monotone map from raw to anchored positions");
  std::string fc_in, fc_anchor, fc_regressor, fc_out;
  fc->add_option("--in", fc_in, "training/validation events (.phid)")
      ->required();
  fc->add_option("--anchor", fc_anchor, "anchor model")->required();
  fc->add_option("--regressor", fc_regressor, "regressor checkpoint")
      ->required();
  fc->add_option("--out", fc_out, "calibrator model (JSON)")->required();

  // ---- train-classifier --------------------------------------------------
  auto* tc = app.add_subcommand("train-classifier",
                                "train the hybrid-feature classifier");
  std::string tc_in, tc_val, tc_anchor, tc_regressor, tc_calibrator, tc_out;
  tc->add_option("--in", tc_in, "training events (.phid)")->required();
  tc->add_option("--val", tc_val, "validation events for early stopping")
      ->required();
  tc->add_option("--anchor", tc_anchor, "anchor model")->required();
  tc->add_option("--regressor", tc_regressor, "regressor checkpoint")
      ->required();
  tc->add_option("--calibrator", tc_calibrator, "calibrator model")
      ->required();
  tc->add_option("--out", tc_out, "classifier checkpoint (.phnn)")->required();

  // ---- evaluate ----------------------------------------------------------
  auto* ev = app.add_subcommand(
      "evaluate",
      "train and score classifier configurations on a synthetic dataset");
  std::string ev_outdir = "results", ev_bundle;
  ev->add_option("--out-dir", ev_outdir, "directory for reports");
  ev->add_option("--save-bundle", ev_bundle,
                 "also save the trained pipeline bundle here");

  // ---- infer -------------------------------------------------------------
  auto* in = app.add_subcommand("infer",
                                "classify an event file with a saved bundle");
  std::string in_bundle, in_events, in_out;
  in->add_option("--bundle", in_bundle, "pipeline bundle directory")
      ->required();
  in->add_option("--in", in_events, "events to classify (.phid)")->required();
  in->add_option("--out", in_out, "per-event results CSV")->required();

  // ---- snr-report --------------------------------------------------------
  auto* sr = app.add_subcommand(
      "snr-report", "stream-level SNR before/after classification gating");
  double sr_S = 4000.0, sr_B = 300.0, sr_tpr = 0.997, sr_fpr = 0.032;
  double sr_gain_opt = 0.0;
  std::string sr_regime = "custom", sr_preset, sr_json;
  sr->add_option("--photon-rate", sr_S, "photon rate S [1/s]");
  sr->add_option("--dark-rate", sr_B, "dark rate B [1/s]");
  sr->add_option("--tpr", sr_tpr, "true positive rate of the photon class");
  sr->add_option("--fpr", sr_fpr, "false positive rate of the photon class");
  sr->add_option("--gain", sr_gain_opt,
                 "set fpr = tpr/gain instead of --fpr");
  sr->add_option("--regime", sr_regime, "label for the report");
  sr->add_option("--preset", sr_preset,
                 "link20km (three ambient regimes) or erbium");
  sr->add_option("--json", sr_json, "also write the report(s) as JSON");

  CLI11_PARSE(app, argc, argv);

  auto cfg = build_config(g);
  if (print_config) {
    std::cout << cfg.print();
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return 2;
  }
  auto settings = ph::pipeline::resolve_settings(cfg);
  ph::pipeline::Progress progress;
  if (!quiet)
    progress = [](const std::string& m) { std::cerr << "[photonids] " << m << "\n"; };

  if (sd->parsed()) {
    if (!sd_stream_out.empty()) {
      ph::Rng rng(ph::derive_seed(settings.synth.seed, 0x57e));
      auto stream = ph::synth::synth_stream(settings.synth, sd_events, sd_rate,
                                            rng);
      auto rate_hz = static_cast<std::uint64_t>(
          std::llround(1e9 / settings.synth.sample_period));
      ph::io::write_stream_file(sd_stream_out, rate_hz, stream.samples);
      if (!sd_manifest.empty()) {
        std::ostringstream os;
        os << "onset_index,label,position_x\n";
        for (const auto& t : stream.truth)
          os << t.onset_index << "," << ph::label_name(t.label) << ","
             << t.position_x << "\n";
        ph::io::write_text_file(sd_manifest, os.str());
      }
      if (!quiet)
        std::cerr << "[photonids] wrote " << stream.samples.size()
                  << " samples, " << stream.truth.size() << " events\n";
      return 0;
    }
    if (sd_out.empty())
      throw ph::Error(ph::ErrorCategory::Config,
                      "synth-dataset needs --out or --stream-out");
    auto ds = ph::synth::make_dataset(settings.synth,
                                      static_cast<std::size_t>(sd_photon),
                                      static_cast<std::size_t>(sd_dark));
    ph::io::EventFileHeader hdr;
    hdr.sample_rate_hz = static_cast<std::uint64_t>(
        std::llround(1e9 / settings.synth.sample_period));
    hdr.pre_samples = static_cast<std::uint16_t>(settings.daq.pre_samples);
    hdr.post_samples = static_cast<std::uint16_t>(settings.daq.post_samples);
    ph::io::write_event_file(sd_out, hdr, ds.events);
    if (!quiet)
      std::cerr << "[photonids] wrote " << ds.events.size() << " events to "
                << sd_out << "\n";
    return 0;
  }

  if (ac->parsed()) {
    auto stream = ph::io::read_stream_file(ac_in);
    auto result = ph::daq::acquire(stream.samples, settings.daq);
    ph::io::EventFileHeader hdr;
    hdr.sample_rate_hz = stream.sample_rate_hz;
    hdr.pre_samples = static_cast<std::uint16_t>(settings.daq.pre_samples);
    hdr.post_samples = static_cast<std::uint16_t>(settings.daq.post_samples);
    ph::io::write_event_file(ac_out, hdr, result.events);
    if (!quiet)
      std::cerr << "[photonids] triggers " << result.event_count << ", stored "
                << result.events.size() << " events\n";
    return 0;
  }

  if (pp->parsed()) {
    auto p = prepare_events(pp_in, settings);
    if (!pp_waves_csv.empty()) {
      std::ostringstream os;
      for (const auto& w : p.waves) {
        for (std::size_t l = 0; l < w.samples.size(); ++l)
          os << (l ? "," : "") << w.samples[l];
        os << "\n";
      }
      ph::io::write_text_file(pp_waves_csv, os.str());
    }
    if (!pp_features_csv.empty())
      ph::io::write_text_file(pp_features_csv, features_csv(p));
    if (!quiet)
      std::cerr << "[photonids] preprocessed " << p.waves.size()
                << " events\n";
    return 0;
  }

  if (fa->parsed()) {
    auto p = prepare_events(fa_in, settings);
    auto model = ph::anchor::fit_anchor(p.scalars, settings.anchor_scale_factor,
                                        settings.anchor_grid_points);
    ph::io::save_anchor(fa_out, model);
    if (!quiet) std::cerr << "[photonids] anchor written to " << fa_out << "\n";
    return 0;
  }

  if (tr->parsed()) {
    auto p = prepare_events(tr_in, settings);
    auto anchor_model = ph::io::load_anchor(tr_anchor);
    std::vector<ph::PseudoPosition> targets(p.scalars.size());
    for (std::size_t i = 0; i < p.scalars.size(); ++i)
      targets[i] = ph::anchor::encode_position(p.scalars[i], anchor_model);
    ph::CnnModel model;
    model.init(settings.regressor_train.seed);
    auto bank = to_bank(p.waves);
    auto hist = ph::nn::train_regressor(model, bank, targets,
                                        settings.regressor_train);
    nlohmann::json meta;
    meta["epochs"] = hist.epoch_loss.size();
    meta["final_loss"] = hist.epoch_loss.back();
    meta["epoch_loss"] = hist.epoch_loss;
    meta["seed"] = settings.regressor_train.seed;
    meta["learning_rate"] = settings.regressor_train.learning_rate;
    meta["batch_size"] = settings.regressor_train.batch_size;
    ph::io::save_regressor(tr_out, model, meta.dump());
    if (!quiet)
      std::cerr << "[photonids] regressor written, final epoch loss "
                << hist.epoch_loss.back() << "\n";
    return 0;
  }

  if (fc->parsed()) {
    auto p = prepare_events(fc_in, settings);
    auto anchor_model = ph::io::load_anchor(fc_anchor);
    ph::CnnModel model;
    ph::io::load_regressor(fc_regressor, model);
    auto bank = to_bank(p.waves);
    auto raw = ph::nn::predict_positions_batch(model, bank);
    std::array<std::vector<double>, 4> craw, ctgt;
    for (std::size_t i = 0; i < p.scalars.size(); ++i) {
      auto target = ph::anchor::encode_position(p.scalars[i], anchor_model);
      for (int k = 0; k < 4; ++k) {
        craw[static_cast<std::size_t>(k)].push_back(
            raw[i][static_cast<std::size_t>(k)]);
        ctgt[static_cast<std::size_t>(k)].push_back(
            target[static_cast<std::size_t>(k)]);
      }
    }
    auto cal = ph::calibrate::fit_calibrator(craw, ctgt,
                                             settings.calibrate_bins);
    ph::io::save_calibrator(fc_out, cal);
    if (!quiet)
      std::cerr << "[photonids] calibrator written to " << fc_out << "\n";
    return 0;
  }

  if (tc->parsed()) {
    auto train = prepare_events(tc_in, settings);
    auto val = prepare_events(tc_val, settings);
    auto anchor_model = ph::io::load_anchor(tc_anchor);
    ph::CnnModel regressor;
    ph::io::load_regressor(tc_regressor, regressor);
    auto calibrator = ph::io::load_calibrator(tc_calibrator);

    auto hybrid = [&](const PreparedEvents& p) {
      ph::nn::FeatureMatrix m;
      m.resize(static_cast<int>(p.scalars.size()), 8);
      auto bank = to_bank(p.waves);
      auto raw = ph::nn::predict_positions_batch(regressor, bank);
      for (std::size_t i = 0; i < p.scalars.size(); ++i) {
        auto cal = ph::calibrate::apply_calibration(calibrator, raw[i]);
        auto v = p.scalars[i].as_array();
        for (int k = 0; k < 4; ++k) {
          m.row(static_cast<int>(i))[k] = v[static_cast<std::size_t>(k)];
          m.row(static_cast<int>(i))[4 + k] = cal[static_cast<std::size_t>(k)];
        }
      }
      return m;
    };
    auto x_train = hybrid(train);
    auto x_val = hybrid(val);
    ph::FcnnModel model(8);
    model.init(settings.classifier_train.seed);
    auto hist = ph::nn::train_classifier(
        model, x_train, train.labels01, x_val, val.labels01,
        settings.classifier_train, settings.classifier_patience,
        /*standardize=*/true);
    nlohmann::json meta;
    meta["epochs_run"] = hist.epochs_run;
    meta["best_epoch"] = hist.best_epoch;
    meta["train_loss"] = hist.train_loss;
    meta["val_loss"] = hist.val_loss;
    meta["seed"] = settings.classifier_train.seed;
    ph::io::save_classifier(tc_out, model, meta.dump());
    if (!quiet)
      std::cerr << "[photonids] classifier written, best epoch "
                << hist.best_epoch << "\n";
    return 0;
  }

  if (ev->parsed()) {
    auto result = ph::pipeline::run_experiment(settings, progress);
    fs::create_directories(ev_outdir);
    std::ostringstream text;
    nlohmann::json all;
    all["n_train"] = result.n_train;
    all["n_val"] = result.n_val;
    all["n_test"] = result.n_test;
    all["dataset_hash"] = result.dataset_hash;
    all["seconds_total"] = result.seconds_total;
    all["seconds_regressor"] = result.seconds_regressor;
    all["regressor_epoch_loss"] = result.regressor_history.epoch_loss;
    for (const auto& cr : result.configurations) {
      text << ph::pipeline::classification_report_text(cr) << "\n";
      all["configurations"][ph::pipeline::configuration_name(
          cr.configuration)] =
          nlohmann::json::parse(
              ph::pipeline::classification_report_json(cr));
      ph::io::write_text_file(
          std::string(ev_outdir) + "/confusion_" +
              ph::pipeline::configuration_name(cr.configuration) + ".csv",
          ph::pipeline::confusion_csv(cr.report));
    }
    text << ph::pipeline::regression_report_text(result.regression,
                                                 settings.metrics_tau);
    all["regression"] = nlohmann::json::parse(
        ph::pipeline::regression_report_json(result.regression,
                                             settings.metrics_tau));
    ph::io::write_text_file(ev_outdir + "/report.txt", text.str());
    ph::io::write_text_file(ev_outdir + "/report.json", all.dump(2) + "\n");
    if (!ev_bundle.empty())
      ph::pipeline::save_bundle(ev_bundle, result.bundle);
    std::cout << text.str();
    return 0;
  }

  if (in->parsed()) {
    auto bundle = ph::pipeline::load_bundle(in_bundle);
    auto events = ph::io::read_event_file(in_events);
    std::ostringstream os;
    os << "event,label,p_dark,p_photon,peak_amplitude,rising_time,"
          "falling_time,fwhm_time,cal_peak,cal_rise,cal_fall,cal_fwhm,"
          "status\n";
    char buf[400];
    for (std::size_t i = 0; i < events.events.size(); ++i) {
      auto r = ph::pipeline::infer_event(bundle, events.events[i]);
      if (r.rejected) {
        std::snprintf(buf, sizeof(buf), "%zu,rejected,,,,,,,,,,,%s\n", i,
                      r.error_category.c_str());
      } else {
        std::snprintf(buf, sizeof(buf),
                      "%zu,%s,%.6f,%.6f,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,"
                      "%.9g,ok\n",
                      i, ph::label_name(r.label), r.probabilities[0],
                      r.probabilities[1], r.scalar_features.peak_amplitude,
                      r.scalar_features.rising_time,
                      r.scalar_features.falling_time,
                      r.scalar_features.fwhm_time, r.calibrated_position[0],
                      r.calibrated_position[1], r.calibrated_position[2],
                      r.calibrated_position[3]);
      }
      os << buf;
    }
    ph::io::write_text_file(in_out, os.str());
    if (!quiet)
      std::cerr << "[photonids] classified " << events.events.size()
                << " events\n";
    return 0;
  }

  if (sr->parsed()) {
    struct Row {
      std::string name;
      double S, B, tpr, fpr;
    };
    std::vector<Row> rows;
    if (sr_preset == "link20km") {
      rows = {{"dark_lab", 4000, 300, sr_tpr, sr_fpr},
              {"dim_ambient", 4000, 3000, sr_tpr, sr_fpr},
              {"lights_on", 4000, 20000, sr_tpr, sr_fpr}};
    } else if (sr_preset == "erbium") {
      double g = sr_gain_opt > 0.0 ? sr_gain_opt : 30.0;
      rows = {{"erbium_emitter", 20, 2.5, sr_tpr, sr_tpr / g}};
    } else if (!sr_preset.empty()) {
      throw ph::Error(ph::ErrorCategory::Config,
                      "unknown preset: " + sr_preset);
    } else {
      double fpr = sr_gain_opt > 0.0 ? sr_tpr / sr_gain_opt : sr_fpr;
      rows = {{sr_regime, sr_S, sr_B, sr_tpr, fpr}};
    }
    nlohmann::json out = nlohmann::json::array();
    for (const auto& row : rows) {
      auto rep = ph::metrics::snr_gain(row.S, row.B, row.tpr, row.fpr);
      std::cout << ph::pipeline::snr_report_text(rep, row.name) << "\n";
      out.push_back(
          nlohmann::json::parse(ph::pipeline::snr_report_json(rep, row.name)));
    }
    if (!sr_json.empty())
      ph::io::write_text_file(sr_json, out.dump(2) + "\n");
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ph::Error& e) {
    nlohmann::json j;
    j["error"] = {{"category", ph::error_category_name(e.category())},
                  {"message", e.what()}};
    std::cerr << j.dump() << "\n";
    switch (e.category()) {
      case ph::ErrorCategory::Config: return 2;
      case ph::ErrorCategory::Io: return 3;
      default: return 4;
    }
  } catch (const std::exception& e) {
    nlohmann::json j;
    j["error"] = {{"category", "internal"}, {"message", e.what()}};
    std::cerr << j.dump() << "\n";
    return 1;
  }
}
