#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "dmaprobe/event.hpp"
#include "dmaprobe/input_source.hpp"
#include "dmaprobe/memory_map.hpp"
#include "dmaprobe/stream_detector.hpp"

namespace dmaprobe {

enum class Direction : std::uint8_t { Undetermined, Input, Output };
enum class ChannelState : std::uint8_t { Candidate, Active, Terminated };
enum class TerminationReason : std::uint8_t { Reconfigured, FirmwareWrite, SessionEnd };

std::string_view to_string(Direction d);
std::string_view to_string(ChannelState s);
std::string_view to_string(TerminationReason r);

/// Incremental DMA buffer size inference for one destination buffer.
///
/// Each read opens a span of twice its width starting at the current
/// perceived end; a read whose address falls in that span extends the buffer
/// to cover it. Reads elsewhere leave the size untouched.
struct BufferTracker {
    Address base = 0;
    std::uint64_t perceived_size = 0;
    std::uint64_t injected_end = 0;  // offset one past the furthest injected byte

    /// Applies one read. Returns true if perceived_size grew.
    bool observe_read(Address addr, unsigned width);

    /// True if addr lies in [base, base + perceived_size).
    bool covers(Address addr) const {
        return addr >= base && std::uint64_t{addr} - base < perceived_size;
    }

    /// True if a store to [addr, addr+width) hits the buffer or its first byte.
    bool hit_by_write(Address addr, unsigned width) const;

    friend bool operator==(const BufferTracker&, const BufferTracker&) = default;
};

struct DmaChannel {
    std::uint64_t id = 0;  // 1-based creation order
    Address stream_key = 0;
    std::vector<PointerSlot> pointers;   // as configured, register order
    std::optional<PointerSlot> source;   // resolved with the direction
    std::vector<BufferTracker> buffers;  // one per destination pointer
    Direction direction = Direction::Undetermined;
    ChannelState state = ChannelState::Candidate;
    std::optional<TerminationReason> termination;
    std::uint64_t created_at = 0;
    std::optional<std::uint64_t> terminated_at;
    std::uint64_t injections = 0;
    std::uint64_t bytes_injected = 0;

    bool live() const { return state != ChannelState::Terminated; }
    std::uint64_t perceived_size() const;

    friend bool operator==(const DmaChannel&, const DmaChannel&) = default;
};

struct LifecycleEvent {
    enum class Kind : std::uint8_t { Created, Activated, Terminated };

    Kind kind = Kind::Created;
    std::uint64_t channel_id = 0;
    Address stream_key = 0;
    std::uint64_t seq = 0;
    Direction direction = Direction::Undetermined;     // Activated
    std::optional<TerminationReason> reason;           // Terminated

    friend bool operator==(const LifecycleEvent&, const LifecycleEvent&) = default;
};

struct InjectionAction {
    Address addr = 0;
    AccessBytes bytes;
    Address channel = 0;  // stream_key
    std::uint32_t offset = 0;

    friend bool operator==(const InjectionAction&, const InjectionAction&) = default;
};

struct TrackerCounters {
    std::uint64_t created = 0;
    std::uint64_t activated_input = 0;
    std::uint64_t activated_output = 0;
    std::uint64_t candidate_reconfigured = 0;
    std::uint64_t candidate_session_end = 0;
    std::uint64_t active_reconfigured = 0;
    std::uint64_t active_firmware_write = 0;
    std::uint64_t active_session_end = 0;
    std::uint64_t injections = 0;
    std::uint64_t reads_ignored = 0;
};

/// Owns channel lifecycles and the shadow RAM holding injected input.
///
/// Candidate channels get a direction from the first firmware access near one
/// of their RAM pointers: a read makes an input channel, a write an output
/// channel. Input channels run buffer size inference on every read and inject
/// provider bytes for reads inside the perceived buffer. A new configuration
/// on the same stream_key, or a firmware store into the buffer, ends the
/// channel.
class ChannelTracker {
public:
    /// `profile` and `provider` must outlive the tracker.
    ChannelTracker(const MemoryMapProfile& profile, InputProvider& provider)
        : profile_(&profile), provider_(&provider) {}

    /// Returns the lifecycle events produced, termination before creation.
    std::vector<LifecycleEvent> on_stream_config(const StreamConfiguration& cfg);

    /// Requires a RAM address; throws ContractError otherwise. Lifecycle
    /// events it causes are appended to history(). May throw InputExhausted.
    std::optional<InjectionAction> on_ram_access(const MemoryAccessEvent& event);

    /// Terminates every live channel with SessionEnd.
    std::vector<LifecycleEvent> end_session(std::uint64_t seq);

    /// Copy of every channel, past and present, in creation order.
    std::vector<DmaChannel> snapshot() const { return channels_; }

    const std::vector<LifecycleEvent>& history() const { return history_; }
    const ShadowRam& shadow() const { return shadow_; }
    const TrackerCounters& counters() const { return counters_; }
    std::size_t live_count() const;

private:
    void terminate(DmaChannel& ch, TerminationReason reason, std::uint64_t seq);
    void activate(DmaChannel& ch, Direction dir, std::size_t ram_index, std::uint64_t seq);
    std::optional<InjectionAction> serve_read(DmaChannel& ch, const MemoryAccessEvent& event);

    const MemoryMapProfile* profile_;
    InputProvider* provider_;
    ShadowRam shadow_;
    std::vector<DmaChannel> channels_;
    std::vector<std::size_t> live_;  // indices into channels_
    std::vector<LifecycleEvent> history_;
    TrackerCounters counters_;
};

/// True if a first access of `width` bytes at addr is near `ptr`, i.e. inside
/// [ptr, ptr + 2*width).
bool near_pointer(Address ptr, Address addr, unsigned width);

}  // namespace dmaprobe
