#include "dmaprobe/channel_tracker.hpp"

#include <algorithm>

#include "dmaprobe/hex.hpp"

namespace dmaprobe {

std::string_view to_string(Direction d) {
    switch (d) {
    case Direction::Undetermined: return "undetermined";
    case Direction::Input: return "input";
    case Direction::Output: return "output";
    }
    return "undetermined";
}

std::string_view to_string(ChannelState s) {
    switch (s) {
    case ChannelState::Candidate: return "candidate";
    case ChannelState::Active: return "active";
    case ChannelState::Terminated: return "terminated";
    }
    return "candidate";
}

std::string_view to_string(TerminationReason r) {
    switch (r) {
    case TerminationReason::Reconfigured: return "reconfigured";
    case TerminationReason::FirmwareWrite: return "firmware_write";
    case TerminationReason::SessionEnd: return "session_end";
    }
    return "session_end";
}

bool near_pointer(Address ptr, Address addr, unsigned width) {
    return addr >= ptr && std::uint64_t{addr} - ptr < 2ull * width;
}

bool BufferTracker::observe_read(Address addr, unsigned width) {
    const std::uint64_t span_base = std::uint64_t{base} + perceived_size;
    const std::uint64_t span_size = 2ull * width;
    if (addr < span_base || addr >= span_base + span_size)
        return false;
    perceived_size = (std::uint64_t{addr} - base) + width;
    return true;
}

bool BufferTracker::hit_by_write(Address addr, unsigned width) const {
    const std::uint64_t extent = std::max<std::uint64_t>({perceived_size, injected_end, 1});
    const std::uint64_t lo = base;
    const std::uint64_t hi = lo + extent;
    return addr < hi && std::uint64_t{addr} + width > lo;
}

std::uint64_t DmaChannel::perceived_size() const {
    std::uint64_t total = 0;
    for (const auto& b : buffers)
        total += b.perceived_size;
    return total;
}

std::size_t ChannelTracker::live_count() const { return live_.size(); }

std::vector<LifecycleEvent> ChannelTracker::on_stream_config(const StreamConfiguration& cfg) {
    const std::size_t mark = history_.size();
    for (std::size_t idx : std::vector<std::size_t>(live_)) {
        if (channels_[idx].stream_key == cfg.stream_key)
            terminate(channels_[idx], TerminationReason::Reconfigured, cfg.detected_at);
    }

    DmaChannel ch;
    ch.id = channels_.size() + 1;
    ch.stream_key = cfg.stream_key;
    ch.pointers = cfg.pointers;
    ch.created_at = cfg.detected_at;
    channels_.push_back(std::move(ch));
    live_.push_back(channels_.size() - 1);
    ++counters_.created;
    history_.push_back({LifecycleEvent::Kind::Created, channels_.back().id, cfg.stream_key,
                        cfg.detected_at, Direction::Undetermined, std::nullopt});

    return {history_.begin() + static_cast<std::ptrdiff_t>(mark), history_.end()};
}

std::optional<InjectionAction> ChannelTracker::on_ram_access(const MemoryAccessEvent& event) {
    if (profile_->classify(event.addr) != AddressClass::Ram)
        throw ContractError("on_ram_access: " + format_hex32(event.addr) + " is not RAM");
    if (!valid_width(event.width))
        throw ContractError("on_ram_access: width must be 1, 2 or 4");

    if (event.kind == AccessKind::Write) {
        for (std::size_t idx : std::vector<std::size_t>(live_)) {
            auto& ch = channels_[idx];
            if (ch.state != ChannelState::Active || ch.direction != Direction::Input)
                continue;
            bool hit = std::any_of(ch.buffers.begin(), ch.buffers.end(), [&](const BufferTracker& b) {
                return b.hit_by_write(event.addr, event.width);
            });
            if (hit)
                terminate(ch, TerminationReason::FirmwareWrite, event.seq);
        }
        // Newest candidate first.
        for (auto it = live_.rbegin(); it != live_.rend(); ++it) {
            auto& ch = channels_[*it];
            if (ch.state != ChannelState::Candidate)
                continue;
            for (std::size_t i = 0; i < ch.pointers.size(); ++i) {
                const auto& p = ch.pointers[i];
                if (p.cls == AddressClass::Ram && near_pointer(p.value, event.addr, event.width)) {
                    activate(ch, Direction::Output, i, event.seq);
                    break;
                }
            }
            if (ch.state != ChannelState::Candidate)
                break;
        }
        shadow_.firmware_write(event.addr, event.width, event.value);
        return std::nullopt;
    }

    // Size inference runs for every live input buffer on every read.
    bool any_input = false;
    for (std::size_t idx : live_) {
        auto& ch = channels_[idx];
        if (ch.state == ChannelState::Active && ch.direction == Direction::Input) {
            any_input = true;
            for (auto& b : ch.buffers)
                b.observe_read(event.addr, event.width);
        }
    }
    if (any_input) {
        for (auto it = live_.rbegin(); it != live_.rend(); ++it) {
            auto& ch = channels_[*it];
            if (ch.state == ChannelState::Active && ch.direction == Direction::Input) {
                if (auto action = serve_read(ch, event))
                    return action;
            }
        }
    }

    for (auto it = live_.rbegin(); it != live_.rend(); ++it) {
        auto& ch = channels_[*it];
        if (ch.state != ChannelState::Candidate)
            continue;
        for (std::size_t i = 0; i < ch.pointers.size(); ++i) {
            const auto& p = ch.pointers[i];
            if (p.cls == AddressClass::Ram && near_pointer(p.value, event.addr, event.width)) {
                activate(ch, Direction::Input, i, event.seq);
                for (auto& b : ch.buffers)
                    b.observe_read(event.addr, event.width);
                return serve_read(ch, event);
            }
        }
    }

    ++counters_.reads_ignored;
    return std::nullopt;
}

std::optional<InjectionAction> ChannelTracker::serve_read(DmaChannel& ch, const MemoryAccessEvent& event) {
    for (auto& b : ch.buffers) {
        if (!b.covers(event.addr))
            continue;
        ChannelRef ref{ch.stream_key, ch.id, b.base};
        InjectionAction action;
        action.addr = event.addr;
        action.channel = ch.stream_key;
        action.offset = event.addr - b.base;
        action.bytes = read_through(shadow_, *provider_, ref, event.addr, event.width);
        b.injected_end = std::max<std::uint64_t>(b.injected_end, std::uint64_t{action.offset} + event.width);
        ++ch.injections;
        ch.bytes_injected += event.width;
        ++counters_.injections;
        return action;
    }
    return std::nullopt;
}

void ChannelTracker::activate(DmaChannel& ch, Direction dir, std::size_t ram_index, std::uint64_t seq) {
    const PointerSlot& hit = ch.pointers[ram_index];
    ch.direction = dir;
    ch.state = ChannelState::Active;
    if (dir == Direction::Output) {
        ch.source = hit;
        ++counters_.activated_output;
    } else {
        // Source: the first non-RAM pointer, else (all RAM, memory-to-memory)
        // the first pointer other than the one just read.
        auto src = std::find_if(ch.pointers.begin(), ch.pointers.end(),
                                [](const PointerSlot& p) { return p.cls != AddressClass::Ram; });
        if (src == ch.pointers.end()) {
            src = std::find_if(ch.pointers.begin(), ch.pointers.end(),
                               [&](const PointerSlot& p) { return p.reg != hit.reg; });
        }
        ch.source = *src;
        for (const auto& p : ch.pointers) {
            if (p.cls == AddressClass::Ram && p.reg != src->reg)
                ch.buffers.push_back(BufferTracker{p.value, 0, 0});
        }
        ++counters_.activated_input;
    }
    history_.push_back({LifecycleEvent::Kind::Activated, ch.id, ch.stream_key, seq, dir, std::nullopt});
}

void ChannelTracker::terminate(DmaChannel& ch, TerminationReason reason, std::uint64_t seq) {
    const bool was_candidate = ch.state == ChannelState::Candidate;
    ch.state = ChannelState::Terminated;
    ch.termination = reason;
    ch.terminated_at = seq;
    switch (reason) {
    case TerminationReason::Reconfigured:
        ++(was_candidate ? counters_.candidate_reconfigured : counters_.active_reconfigured);
        break;
    case TerminationReason::FirmwareWrite:
        ++counters_.active_firmware_write;
        break;
    case TerminationReason::SessionEnd:
        ++(was_candidate ? counters_.candidate_session_end : counters_.active_session_end);
        break;
    }
    const std::size_t idx = static_cast<std::size_t>(ch.id - 1);
    live_.erase(std::remove(live_.begin(), live_.end(), idx), live_.end());
    history_.push_back({LifecycleEvent::Kind::Terminated, ch.id, ch.stream_key, seq, ch.direction, reason});
}

std::vector<LifecycleEvent> ChannelTracker::end_session(std::uint64_t seq) {
    const std::size_t mark = history_.size();
    for (std::size_t idx : std::vector<std::size_t>(live_))
        terminate(channels_[idx], TerminationReason::SessionEnd, seq);
    return {history_.begin() + static_cast<std::ptrdiff_t>(mark), history_.end()};
}

}  // namespace dmaprobe
