#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "dmaprobe/memory_map.hpp"

namespace dmaprobe {

/// Raised by a Halt-mode stream provider once its bytes run out.
class InputExhausted : public std::runtime_error {
public:
    InputExhausted() : std::runtime_error("input stream exhausted") {}
};

/// Source of bytes the engine places into DMA input buffers.
class InputProvider {
public:
    virtual ~InputProvider() = default;
    virtual std::uint8_t next_byte(Address channel_key, std::uint32_t offset) = 0;
};

enum class Exhaustion : std::uint8_t { ZeroPad, Halt };

std::unique_ptr<InputProvider> zero_provider();

/// Serves `bytes` in request order regardless of channel or offset.
std::unique_ptr<InputProvider> stream_provider(std::vector<std::uint8_t> bytes, Exhaustion exhaustion);

/// Up to four bytes returned by a single load.
struct AccessBytes {
    std::array<std::uint8_t, 4> data{};
    std::uint8_t size = 0;

    std::span<const std::uint8_t> view() const { return {data.data(), size}; }
    friend bool operator==(const AccessBytes&, const AccessBytes&) = default;
};

/// Identifies one channel lifetime for shadow ownership.
struct ChannelRef {
    Address key = 0;
    std::uint64_t lifetime = 0;  // non-zero, unique per channel
    Address base = 0;            // buffer base the provider offset is relative to
};

/// Sparse byte store of injected DMA input. A byte is pulled from the provider
/// at most once per channel lifetime; firmware stores overwrite shadowed bytes.
class ShadowRam {
public:
    static constexpr std::uint64_t kFirmwareOwner = 0;

    std::optional<std::uint8_t> peek(Address addr) const;
    std::optional<std::uint64_t> owner(Address addr) const;
    void store(Address addr, std::uint8_t byte, std::uint64_t owner);

    /// Little-endian store of `width` bytes, only over addresses already shadowed.
    void firmware_write(Address addr, unsigned width, std::uint32_t value);

    std::size_t size() const { return cells_.size(); }
    void clear() { cells_.clear(); }

private:
    struct Cell {
        std::uint8_t byte;
        std::uint64_t owner;
    };
    std::unordered_map<Address, Cell> cells_;
};

/// For each byte of [addr, addr+width): return the shadowed byte if this
/// channel lifetime already produced it, otherwise pull it from `provider`
/// and shadow it. Propagates InputExhausted.
AccessBytes read_through(ShadowRam& shadow, InputProvider& provider, const ChannelRef& channel,
                         Address addr, unsigned width);

}  // namespace dmaprobe
