#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "photonids/anchor.hpp"
#include "photonids/calibrate.hpp"
#include "photonids/nn/models.hpp"
#include "photonids/types.hpp"

namespace photonids::io {

// Event-capture file, little-endian:
//   magic "PHID", version u16, sample_rate_hz u64, pre_samples u16,
//   post_samples u16, event_count u32; per event: trigger_index u64,
//   label u8 (0 dark, 1 photon, 255 unknown), window i16 samples.
struct EventFileHeader {
  std::uint16_t version = 1;
  std::uint64_t sample_rate_hz = 2'000'000'000ull;  // 0.5 ns period
  std::uint16_t pre_samples = 8;
  std::uint16_t post_samples = 192;

  int window() const { return pre_samples + post_samples; }
  double sample_period_ns() const { return 1e9 / static_cast<double>(sample_rate_hz); }
};

void write_event_file(const std::string& path, const EventFileHeader& header,
                      const std::vector<CapturedEvent>& events);

struct EventFile {
  EventFileHeader header;
  std::vector<CapturedEvent> events;
};

EventFile read_event_file(const std::string& path);

// Raw sample stream, little-endian:
//   magic "PHST", version u16, sample_rate_hz u64, sample_count u64,
//   i16 samples.
void write_stream_file(const std::string& path, std::uint64_t sample_rate_hz,
                       const std::vector<std::int16_t>& samples);

struct StreamFile {
  std::uint64_t sample_rate_hz = 0;
  std::vector<std::int16_t> samples;
};

StreamFile read_stream_file(const std::string& path);

// Model checkpoints, little-endian:
//   magic "PHNN", version u16, model kind string, tensor descriptor table
//   (name, rank, dims), then all tensor payloads as f32 in table order.
// Scalar metadata (standardization constants, seeds, training history)
// lives in a JSON sidecar at <path>.json.
struct NamedTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<float> data;
};

void write_phnn(const std::string& path, const std::string& kind,
                const std::vector<NamedTensor>& tensors);

struct Checkpoint {
  std::string kind;
  std::vector<NamedTensor> tensors;
};

Checkpoint read_phnn(const std::string& path);

struct TrainMeta {
  std::string json_text;  // sidecar content, written verbatim
};

void save_regressor(const std::string& path, const CnnModel& model,
                    const std::string& sidecar_json);
void load_regressor(const std::string& path, CnnModel& model,
                    std::string* sidecar_json = nullptr);

void save_classifier(const std::string& path, const FcnnModel& model,
                     const std::string& sidecar_json);
/// Returns the loaded model (input dimension comes from the checkpoint).
FcnnModel load_classifier(const std::string& path,
                          std::string* sidecar_json = nullptr);

// JSON model exchange for the ruler and the calibrator.
std::string anchor_to_json(const anchor::AnchorModel& model);
anchor::AnchorModel anchor_from_json(const std::string& text);
void save_anchor(const std::string& path, const anchor::AnchorModel& model);
anchor::AnchorModel load_anchor(const std::string& path);

std::string calibrator_to_json(const calibrate::CalibratorModel& model);
calibrate::CalibratorModel calibrator_from_json(const std::string& text);
void save_calibrator(const std::string& path,
                     const calibrate::CalibratorModel& model);
calibrate::CalibratorModel load_calibrator(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// FNV-1a over arbitrary bytes; used for dataset provenance.
std::uint64_t fnv1a(const void* data, std::size_t size,
                    std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t event_file_hash(const std::vector<CapturedEvent>& events);

}  // namespace photonids::io
