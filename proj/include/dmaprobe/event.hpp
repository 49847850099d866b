#pragma once

#include <cstdint>
#include <stdexcept>

#include "dmaprobe/memory_map.hpp"

namespace dmaprobe {

enum class AccessKind : std::uint8_t { Read, Write };

/// One firmware load or store as seen by the emulator's memory hook.
struct MemoryAccessEvent {
    std::uint64_t seq = 0;
    AccessKind kind = AccessKind::Read;
    Address addr = 0;
    std::uint8_t width = 4;  // bytes: 1, 2 or 4
    std::uint32_t value = 0;  // writes only; low `width` bytes significant

    friend bool operator==(const MemoryAccessEvent&, const MemoryAccessEvent&) = default;
};

/// A caller broke an operation's precondition.
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

constexpr bool valid_width(unsigned width) { return width == 1 || width == 2 || width == 4; }

constexpr bool value_fits(std::uint32_t value, unsigned width) {
    return width >= 4 || value < (std::uint32_t{1} << (8 * width));
}

}  // namespace dmaprobe
