#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "dmaprobe/channel_tracker.hpp"
#include "dmaprobe/event.hpp"
#include "dmaprobe/input_source.hpp"
#include "dmaprobe/memory_map.hpp"
#include "dmaprobe/stream_detector.hpp"

namespace dmaprobe {

/// What one event caused.
struct StepResult {
    std::optional<StreamConfiguration> config;
    std::optional<InjectionAction> injection;
};

/// The event-ingestion front door: classifies each access and routes MMIO
/// stores to the detector and RAM accesses to the tracker. Everything else is
/// plain memory and ignored.
///
/// Single-threaded; separate engines are independent.
class Engine {
public:
    Engine(MemoryMapProfile profile, std::unique_ptr<InputProvider> provider);
    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    /// Throws ContractError when seq does not increase or the width and value
    /// do not form a valid access. A Halt provider may throw InputExhausted.
    StepResult on_event(const MemoryAccessEvent& event);

    /// Ends the session: every live channel terminates with SessionEnd.
    /// Idempotent.
    void finish();

    bool finished() const { return finished_; }
    std::uint64_t last_seq() const { return last_seq_; }
    std::uint64_t event_count() const { return events_; }

    const MemoryMapProfile& profile() const { return *profile_; }
    const StreamDetector& detector() const { return detector_; }
    const ChannelTracker& tracker() const { return tracker_; }
    std::vector<DmaChannel> snapshot() const { return tracker_.snapshot(); }
    const std::vector<StreamConfiguration>& configurations() const { return configs_; }

private:
    // Heap-held so the detector and tracker can keep stable pointers.
    std::unique_ptr<MemoryMapProfile> profile_;
    std::unique_ptr<InputProvider> provider_;
    StreamDetector detector_;
    ChannelTracker tracker_;
    std::vector<StreamConfiguration> configs_;
    std::uint64_t last_seq_ = 0;
    std::uint64_t events_ = 0;
    bool any_event_ = false;
    bool finished_ = false;
};

}  // namespace dmaprobe
