#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "photonids/types.hpp"

namespace photonids::daq {

struct DaqConfig {
  int threshold = 30;  // ADC counts, strict > comparison
  int pre_samples = 8;
  int post_samples = 192;        // includes the trigger sample
  int inhibition_samples = 192;  // threshold comparison suspended

  int window() const { return pre_samples + post_samples; }
  void validate() const;
};

enum class Mode : std::uint8_t { Idle, Armed, Inhibition };

struct TriggerNote {
  std::uint64_t index = 0;
};

/// Per-stream trigger state machine. Idle until the first sample arrives
/// (arming happens at the stream boundary), then Armed/Inhibition as
/// samples stream through. The ring buffer keeps the last pre_samples
/// samples for event assembly.
class DaqState {
 public:
  explicit DaqState(const DaqConfig& cfg);

  /// Processes one sample. Indices must increase by exactly 1 between calls.
  /// Returns a trigger notification when Armed and sample > threshold.
  std::optional<TriggerNote> step(std::int16_t sample, std::uint64_t index);

  Mode mode() const { return mode_; }
  std::uint64_t event_count() const { return event_count_; }
  int inhibit_remaining() const { return inhibit_remaining_; }
  bool history_full() const { return history_count_ >= cfg_.pre_samples; }

  /// Last pre_samples samples in stream order (valid once history_full()).
  void copy_history(std::int16_t* dst) const;

 private:
  DaqConfig cfg_;
  Mode mode_ = Mode::Idle;
  std::vector<std::int16_t> ring_;
  int ring_pos_ = 0;
  int history_count_ = 0;
  int inhibit_remaining_ = 0;
  std::uint64_t event_count_ = 0;
  std::uint64_t next_index_ = 0;
  bool index_seen_ = false;
};

struct AcquireResult {
  std::vector<CapturedEvent> events;
  std::uint64_t event_count = 0;  // includes counted-but-not-stored triggers
};

/// Chunk-fed acquirer with memory proportional to the number of stored
/// events (400 bytes per event) regardless of stream length. Triggers
/// without full pre- or post-trigger context are counted but not stored.
class StreamAcquirer {
 public:
  explicit StreamAcquirer(const DaqConfig& cfg);

  void feed(std::span<const std::int16_t> chunk);

  /// Drops any event still waiting for post-trigger samples (it was already
  /// counted) and returns the result.
  AcquireResult finish();

  std::uint64_t event_count() const { return state_.event_count(); }
  std::size_t stored_bytes() const { return events_.size() * 400; }

 private:
  DaqConfig cfg_;
  DaqState state_;
  std::vector<CapturedEvent> events_;
  std::vector<std::int16_t> pending_;  // event being filled, empty if none
  std::vector<std::int16_t> history_;  // scratch, pre_samples wide
  bool pending_active_ = false;
  std::uint64_t pending_trigger_ = 0;
  std::uint64_t next_index_ = 0;
};

/// One-shot acquisition over an in-memory stream.
AcquireResult acquire(std::span<const std::int16_t> stream,
                      const DaqConfig& cfg);

}  // namespace photonids::daq
