#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "photonids/anchor.hpp"
#include "photonids/calibrate.hpp"
#include "photonids/config.hpp"
#include "photonids/daq.hpp"
#include "photonids/features.hpp"
#include "photonids/metrics.hpp"
#include "photonids/nn/train.hpp"
#include "photonids/preprocess.hpp"
#include "photonids/synth.hpp"

namespace photonids::pipeline {

/// Typed view of the flat config.
struct Settings {
  synth::SynthConfig synth;
  daq::DaqConfig daq;
  preprocess::PreprocessConfig preprocess;
  features::FeatureConfig features;
  double anchor_scale_factor = 1000.0;
  int anchor_grid_points = 2048;
  int calibrate_bins = 50;
  nn::TrainConfig regressor_train;
  nn::TrainConfig classifier_train;
  int classifier_patience = 20;
  double metrics_tau = 50.0;
  double train_frac = 0.70, val_frac = 0.15, test_frac = 0.15;
  int n_train = 0, n_val = 0, n_test = 0;  // explicit counts override fracs
  std::uint64_t split_seed = 13;
  std::string configuration = "calibrated_only";
};

Settings resolve_settings(const config::ExperimentConfig& cfg);

/// Everything needed to classify one captured event.
struct PipelineBundle {
  anchor::AnchorModel anchor;
  CnnModel regressor;
  calibrate::CalibratorModel calibrator;
  FcnnModel classifier{8};
  preprocess::PreprocessConfig preprocess;
  features::FeatureConfig features;
  double sample_period_ns = 0.5;
  std::map<std::string, std::string> provenance;
  std::string regressor_meta;   // JSON sidecar payload for the checkpoint
  std::string classifier_meta;

  void validate() const;
};

void save_bundle(const std::string& dir, const PipelineBundle& bundle);
PipelineBundle load_bundle(const std::string& dir);

struct InferenceResult {
  bool rejected = false;
  std::string error_category;  // set when rejected
  std::string error_message;
  Label label = Label::Unknown;
  std::array<double, 2> probabilities{0.0, 0.0};
  ScalarFeatures scalar_features;
  PseudoPosition raw_position{};
  PseudoPosition calibrated_position{};
};

/// Full per-event inference: preprocess, extract scalars, regress raw
/// positions, calibrate, fuse [v, p_hat], classify. Feature-extraction
/// failures reject the event with the error attached instead of assigning
/// a class.
InferenceResult infer_event(PipelineBundle& bundle, const CapturedEvent& ev);

struct SplitIndices {
  std::vector<int> train, val, test;
};

/// Stratified-by-label shuffled split. Explicit counts take precedence;
/// otherwise the fractions apply per class.
SplitIndices stratified_split(const std::vector<Label>& labels,
                              const Settings& s);

enum class EvalConfiguration { BaseOnly, ActualOnly, CnnPredOnly, CalibratedOnly };

const char* configuration_name(EvalConfiguration c);
EvalConfiguration configuration_from_name(const std::string& name);

/// Whether a configuration's classifier standardizes its inputs. The two
/// anchored-position configurations train on standardized features; the
/// raw-scale configurations consume features as-is, which is what the
/// four-way comparison is designed to expose.
bool configuration_standardizes(EvalConfiguration c);

struct ConfigurationResult {
  EvalConfiguration configuration;
  metrics::ClassificationReport report;
  double roc_auc = 0.0;
  double silhouette = 0.0;  // on the 32-d penultimate activations
  nn::ClassifierHistory history;
};

struct ChannelRegressionPair {
  metrics::RegressionStats raw;         // network output vs anchored target
  metrics::RegressionStats calibrated;  // calibrated output vs target
};

struct ExperimentResult {
  std::vector<ConfigurationResult> configurations;
  std::array<ChannelRegressionPair, 4> regression;  // test split, per channel
  nn::RegressorHistory regressor_history;
  int n_train = 0, n_val = 0, n_test = 0;
  std::uint64_t dataset_hash = 0;
  double seconds_total = 0.0;
  double seconds_regressor = 0.0;
  PipelineBundle bundle;  // with the calibrated_only classifier
};

using Progress = std::function<void(const std::string&)>;

/// End-to-end experiment: synthesize, split, preprocess, anchor, train the
/// regressor, calibrate, then train/evaluate the requested classifier
/// configurations ("all" runs the four-way comparison).
ExperimentResult run_experiment(const Settings& s, Progress progress = {});

/// Report rendering shared by the CLI and the tests.
std::string classification_report_text(const ConfigurationResult& r);
std::string classification_report_json(const ConfigurationResult& r);
std::string regression_report_text(
    const std::array<ChannelRegressionPair, 4>& reg, double tau);
std::string regression_report_json(
    const std::array<ChannelRegressionPair, 4>& reg, double tau);
std::string snr_report_text(const metrics::SnrReport& r,
                            const std::string& regime_name);
std::string snr_report_json(const metrics::SnrReport& r,
                            const std::string& regime_name);
std::string confusion_csv(const metrics::ClassificationReport& r);

}  // namespace photonids::pipeline
