#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "photonids/types.hpp"

namespace photonids::config {

struct KeyInfo {
  std::string name;
  std::string default_value;
  std::string description;
};

/// Flat dotted-key configuration covering every tunable in the pipeline.
/// Values are stored as strings and parsed on access; unknown keys are
/// rejected; parse(print()) round-trips exactly.
class ExperimentConfig {
 public:
  ExperimentConfig();

  static const std::vector<KeyInfo>& schema();

  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;

  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;

  /// daq.threshold supports "auto" (5 x synth.noise_sigma, rounded).
  int resolve_threshold() const;

  /// Parses "key = value" lines; '#' starts a comment.
  void parse_text(const std::string& text);

  /// Canonical print: every key in schema order.
  std::string print() const;

  bool operator==(const ExperimentConfig& other) const {
    return values_ == other.values_;
  }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace photonids::config
