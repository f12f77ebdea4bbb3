#include "photonids/config.hpp"

#include <cmath>
#include <sstream>

namespace photonids::config {

namespace {

const std::vector<KeyInfo>& schema_impl() {
  static const std::vector<KeyInfo> s = {
      {"synth.sample_period", "0.5", "ADC sample period [ns]"},
      {"synth.window_samples", "200", "samples per captured event"},
      {"synth.noise_sigma", "6", "Gaussian noise sigma [ADC]"},
      {"synth.interference_amp", "4", "interference tone amplitude [ADC]"},
      {"synth.interference_freq", "0.35", "interference tone frequency [GHz]"},
      {"synth.base_amplitude", "24000", "pulse amplitude scale [ADC]"},
      {"synth.photon_pos_alpha", "2.0", "photon position Beta alpha"},
      {"synth.photon_pos_beta", "2.0", "photon position Beta beta"},
      {"synth.dark_pos_alpha", "2.0", "dark position Beta alpha"},
      {"synth.dark_pos_beta", "2.0", "dark position Beta beta"},
      {"synth.seed", "1593572468", "synthetic dataset seed"},
      {"daq.threshold", "auto", "trigger threshold [ADC]; auto = 5x noise"},
      {"daq.pre_samples", "8", "pre-trigger samples kept per event"},
      {"daq.post_samples", "192", "post-trigger samples kept per event"},
      {"daq.inhibition_samples", "192", "samples with comparison suspended"},
      {"preprocess.savgol_window", "11", "Savitzky-Golay window"},
      {"preprocess.savgol_order", "3", "Savitzky-Golay polynomial order"},
      {"preprocess.upsample_factor", "20", "spline upsampling factor"},
      {"features.rise_lo", "0.1", "lower edge fraction for rise/fall times"},
      {"features.rise_hi", "0.9", "upper edge fraction for rise/fall times"},
      {"features.fwhm_frac", "0.5", "FWHM threshold fraction"},
      {"anchor.scale_factor", "1000", "position ruler scale factor"},
      {"anchor.grid_points", "2048", "KDE mode search grid size"},
      {"calibrate.bins", "50", "quantile bins per calibration channel"},
      {"train.regressor.lr", "0.0005", "regressor learning rate"},
      {"train.regressor.batch", "64", "regressor batch size"},
      {"train.regressor.epochs", "50", "regressor epochs"},
      {"train.regressor.seed", "11", "regressor init/shuffle seed"},
      {"train.classifier.lr", "0.0001", "classifier learning rate"},
      {"train.classifier.batch", "32", "classifier batch size"},
      {"train.classifier.max_epochs", "300", "classifier epoch budget"},
      {"train.classifier.patience", "20", "early-stop patience [epochs]"},
      {"train.classifier.seed", "12", "classifier init/shuffle seed"},
      {"metrics.tau", "50", "tolerance accuracy threshold [position units]"},
      {"eval.train_frac", "0.70", "train fraction of the dataset"},
      {"eval.val_frac", "0.15", "validation fraction"},
      {"eval.test_frac", "0.15", "test fraction"},
      {"eval.n_train", "0", "explicit train count (overrides fractions)"},
      {"eval.n_val", "0", "explicit validation count"},
      {"eval.n_test", "0", "explicit test count"},
      {"eval.split_seed", "13", "stratified split seed"},
      {"eval.configuration", "calibrated_only",
       "base_only | actual_only | cnn_pred_only | calibrated_only | all"},
  };
  return s;
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
  for (const auto& k : schema_impl()) values_[k.name] = k.default_value;
}

const std::vector<KeyInfo>& ExperimentConfig::schema() { return schema_impl(); }

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end())
    throw Error(ErrorCategory::Config, "unknown config key: " + key);
  it->second = value;
}

const std::string& ExperimentConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end())
    throw Error(ErrorCategory::Config, "unknown config key: " + key);
  return it->second;
}

double ExperimentConfig::get_double(const std::string& key) const {
  const auto& v = get(key);
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw Error(ErrorCategory::Config,
                "config key " + key + " is not a number: '" + v + "'");
  }
}

int ExperimentConfig::get_int(const std::string& key) const {
  double d = get_double(key);
  if (d != std::floor(d))
    throw Error(ErrorCategory::Config, "config key " + key + " must be integral");
  return static_cast<int>(d);
}

std::uint64_t ExperimentConfig::get_u64(const std::string& key) const {
  const auto& v = get(key);
  try {
    std::size_t pos = 0;
    auto u = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return u;
  } catch (const std::exception&) {
    throw Error(ErrorCategory::Config,
                "config key " + key + " is not an unsigned integer: '" + v +
                    "'");
  }
}

int ExperimentConfig::resolve_threshold() const {
  const auto& v = get("daq.threshold");
  if (v == "auto") {
    double sigma = get_double("synth.noise_sigma");
    return static_cast<int>(std::lround(5.0 * sigma));
  }
  return get_int("daq.threshold");
}

void ExperimentConfig::parse_text(const std::string& text) {
  std::istringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCategory::Config,
                  "config line " + std::to_string(lineno) + ": missing '='");
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string()
                                    : s.substr(b, e - b + 1);
    };
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

std::string ExperimentConfig::print() const {
  std::ostringstream out;
  for (const auto& k : schema_impl())
    out << k.name << " = " << values_.at(k.name) << "\n";
  return out.str();
}

}  // namespace photonids::config
