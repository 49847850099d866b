#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "dmaprobe/event.hpp"
#include "dmaprobe/memory_map.hpp"

namespace dmaprobe {

/// One pointer-holding MMIO register of a detected configuration.
struct PointerSlot {
    Address reg = 0;
    Address value = 0;
    AddressClass cls = AddressClass::Other;

    friend bool operator==(const PointerSlot&, const PointerSlot&) = default;
};

/// A run of >= 2 consecutive MMIO words holding pointer-like values, at least
/// one of which points into RAM. Three or more pointers is circular mode.
struct StreamConfiguration {
    Address stream_key = 0;  // lowest register of the run
    std::vector<PointerSlot> pointers;
    std::uint64_t detected_at = 0;

    bool circular() const { return pointers.size() >= 3; }
    friend bool operator==(const StreamConfiguration&, const StreamConfiguration&) = default;
};

/// How each observed MMIO write was disposed of. Every write increments
/// exactly one of the rejected_* / no_neighbor / suppressed / emitted fields.
struct DetectorCounters {
    std::uint64_t writes = 0;
    std::uint64_t rejected_width = 0;
    std::uint64_t rejected_unaligned = 0;
    std::uint64_t rejected_not_pointer = 0;
    std::uint64_t no_neighbor = 0;
    std::uint64_t suppressed_no_ram = 0;
    std::uint64_t emitted_pair = 0;
    std::uint64_t emitted_circular = 0;
};

/// Last write seen for a 4-byte-aligned MMIO word.
struct ShadowWord {
    std::uint32_t value = 0;
    std::uint64_t seq = 0;
    std::uint8_t width = 0;
    bool pointer = false;  // aligned 32-bit write of a pointer-like value
};

/// Watches MMIO stores for the stream-configuration pattern: pointer-like
/// values written with aligned 32-bit stores to adjacent registers.
///
/// Shadow entries live until overwritten. A write that completes or extends
/// a run emits the whole maximal run, so extending a pair to a triple emits
/// the triple under the same stream_key.
class StreamDetector {
public:
    /// `profile` must outlive the detector.
    explicit StreamDetector(const MemoryMapProfile& profile) : profile_(&profile) {}

    /// Requires a Write to an Mmio address; throws ContractError otherwise.
    std::optional<StreamConfiguration> observe_mmio_write(const MemoryAccessEvent& event);

    void reset();

    const ShadowWord* shadow_at(Address word) const;
    std::size_t shadow_size() const { return shadow_.size(); }
    const DetectorCounters& counters() const { return counters_; }

private:
    bool pointer_word(Address word) const;

    const MemoryMapProfile* profile_;
    std::unordered_map<Address, ShadowWord> shadow_;
    DetectorCounters counters_;
};

}  // namespace dmaprobe
