#include "dmaprobe/stream_detector.hpp"

#include <algorithm>

#include "dmaprobe/hex.hpp"

namespace dmaprobe {

namespace {
constexpr Address kWordMask = ~Address{3};
}

std::optional<StreamConfiguration> StreamDetector::observe_mmio_write(const MemoryAccessEvent& event) {
    if (event.kind != AccessKind::Write)
        throw ContractError("observe_mmio_write: event is not a write");
    if (profile_->classify(event.addr) != AddressClass::Mmio)
        throw ContractError("observe_mmio_write: " + format_hex32(event.addr) + " is not MMIO");
    if (!valid_width(event.width))
        throw ContractError("observe_mmio_write: width must be 1, 2 or 4");
    if (!value_fits(event.value, event.width))
        throw ContractError("observe_mmio_write: value wider than access width");

    ++counters_.writes;
    const bool aligned = (event.addr & 3) == 0;
    const bool wide = event.width == 4;
    const bool pointer = wide && aligned && profile_->is_pointer_like(event.value);

    // Replace every shadow word the store touches.
    const std::uint64_t first = event.addr & kWordMask;
    const std::uint64_t last = (std::uint64_t{event.addr} + event.width - 1) & kWordMask;
    for (std::uint64_t w = first; w <= last; w += 4) {
        auto word = static_cast<Address>(w);
        if (profile_->classify(word) != AddressClass::Mmio)
            continue;
        shadow_[word] = ShadowWord{event.value, event.seq, event.width, pointer && word == event.addr};
    }

    if (!wide) {
        ++counters_.rejected_width;
        return std::nullopt;
    }
    if (!aligned) {
        ++counters_.rejected_unaligned;
        return std::nullopt;
    }
    if (!pointer) {
        ++counters_.rejected_not_pointer;
        return std::nullopt;
    }

    const AddressRange& mmio = profile_->mmio();
    std::uint64_t low = event.addr;
    while (low >= std::uint64_t{mmio.start} + 4 && pointer_word(static_cast<Address>(low - 4)))
        low -= 4;
    std::uint64_t high = event.addr;
    while (high + 4 <= mmio.end && pointer_word(static_cast<Address>(high + 4)))
        high += 4;

    if (low == high) {
        ++counters_.no_neighbor;
        return std::nullopt;
    }

    StreamConfiguration cfg;
    cfg.stream_key = static_cast<Address>(low);
    cfg.detected_at = event.seq;
    for (std::uint64_t w = low; w <= high; w += 4) {
        const auto& entry = shadow_.at(static_cast<Address>(w));
        cfg.pointers.push_back({static_cast<Address>(w), entry.value, profile_->classify(entry.value)});
    }

    // A transfer that writes RAM needs a RAM pointer. Peripheral and Flash
    // pointers alone cannot describe an input buffer.
    bool has_ram = std::any_of(cfg.pointers.begin(), cfg.pointers.end(),
                               [](const PointerSlot& p) { return p.cls == AddressClass::Ram; });
    if (!has_ram) {
        ++counters_.suppressed_no_ram;
        return std::nullopt;
    }
    if (cfg.circular())
        ++counters_.emitted_circular;
    else
        ++counters_.emitted_pair;
    return cfg;
}

bool StreamDetector::pointer_word(Address word) const {
    auto it = shadow_.find(word);
    return it != shadow_.end() && it->second.pointer;
}

void StreamDetector::reset() { shadow_.clear(); }

const ShadowWord* StreamDetector::shadow_at(Address word) const {
    auto it = shadow_.find(word);
    return it == shadow_.end() ? nullptr : &it->second;
}

}  // namespace dmaprobe
