#include "photonids/daq.hpp"

#include <algorithm>

namespace photonids::daq {

void DaqConfig::validate() const {
  if (pre_samples < 0 || post_samples <= 0)
    throw Error(ErrorCategory::InvalidArgument, "bad capture window");
  if (inhibition_samples < post_samples)
    throw Error(ErrorCategory::InvalidArgument,
                "inhibition_samples must cover the post-trigger window");
  if (threshold < -32768 || threshold > 32767)
    throw Error(ErrorCategory::InvalidArgument,
                "threshold outside the ADC range");
}

DaqState::DaqState(const DaqConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  ring_.assign(std::max(cfg_.pre_samples, 1), 0);
}

std::optional<TriggerNote> DaqState::step(std::int16_t sample,
                                          std::uint64_t index) {
  if (index_seen_ && index != next_index_)
    throw Error(ErrorCategory::InvalidArgument,
                "stream indices must increase by 1");
  index_seen_ = true;
  next_index_ = index + 1;

  if (mode_ == Mode::Idle) mode_ = Mode::Armed;  // armed at stream start

  std::optional<TriggerNote> note;
  if (mode_ == Mode::Armed) {
    if (sample > cfg_.threshold) {
      note = TriggerNote{index};
      ++event_count_;
      mode_ = Mode::Inhibition;
      inhibit_remaining_ = cfg_.inhibition_samples;
    }
  } else {  // Inhibition: comparison suspended
    if (--inhibit_remaining_ == 0) mode_ = Mode::Armed;
  }

  if (cfg_.pre_samples > 0) {
    ring_[ring_pos_] = sample;
    ring_pos_ = (ring_pos_ + 1) % cfg_.pre_samples;
    if (history_count_ < cfg_.pre_samples) ++history_count_;
  }
  return note;
}

void DaqState::copy_history(std::int16_t* dst) const {
  for (int i = 0; i < cfg_.pre_samples; ++i)
    dst[i] = ring_[(ring_pos_ + i) % cfg_.pre_samples];
}

StreamAcquirer::StreamAcquirer(const DaqConfig& cfg)
    : cfg_(cfg), state_(cfg) {
  pending_.reserve(cfg_.window());
  history_.resize(std::max(cfg_.pre_samples, 1));
}

void StreamAcquirer::feed(std::span<const std::int16_t> chunk) {
  for (std::int16_t s : chunk) {
    // The trigger comparison sees the pre-step ring state, so snapshot the
    // history before stepping whenever a trigger could fire.
    bool may_trigger = !pending_active_ && state_.mode() != Mode::Inhibition;
    bool had_history = state_.history_full();
    if (may_trigger && had_history) state_.copy_history(history_.data());

    auto note = state_.step(s, next_index_);
    if (pending_active_) {
      pending_.push_back(s);
      if (static_cast<int>(pending_.size()) == cfg_.window()) {
        CapturedEvent ev;
        ev.trigger_index = pending_trigger_;
        ev.samples = pending_;
        ev.label = Label::Unknown;
        events_.push_back(std::move(ev));
        pending_.clear();
        pending_active_ = false;
      }
    } else if (note) {
      if (had_history) {
        pending_.assign(history_.begin(),
                        history_.begin() + cfg_.pre_samples);
        pending_.push_back(s);
        pending_active_ = true;
        pending_trigger_ = note->index;
      }
      // else: counted by the state machine but not stored (no pre-context)
    }
    ++next_index_;
  }
}

AcquireResult StreamAcquirer::finish() {
  pending_.clear();
  pending_active_ = false;
  AcquireResult r;
  r.events = std::move(events_);
  r.event_count = state_.event_count();
  events_.clear();
  return r;
}

AcquireResult acquire(std::span<const std::int16_t> stream,
                      const DaqConfig& cfg) {
  StreamAcquirer acq(cfg);
  acq.feed(stream);
  return acq.finish();
}

}  // namespace photonids::daq
