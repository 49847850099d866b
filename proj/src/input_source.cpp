#include "dmaprobe/input_source.hpp"

#include "dmaprobe/event.hpp"

namespace dmaprobe {

namespace {

class ZeroProvider final : public InputProvider {
public:
    std::uint8_t next_byte(Address, std::uint32_t) override { return 0; }
};

class StreamProvider final : public InputProvider {
public:
    StreamProvider(std::vector<std::uint8_t> bytes, Exhaustion exhaustion)
        : bytes_(std::move(bytes)), exhaustion_(exhaustion) {}

    std::uint8_t next_byte(Address, std::uint32_t) override {
        if (pos_ < bytes_.size())
            return bytes_[pos_++];
        if (exhaustion_ == Exhaustion::Halt)
            throw InputExhausted();
        return 0;
    }

private:
    std::vector<std::uint8_t> bytes_;
    std::size_t pos_ = 0;
    Exhaustion exhaustion_;
};

}  // namespace

std::unique_ptr<InputProvider> zero_provider() { return std::make_unique<ZeroProvider>(); }

std::unique_ptr<InputProvider> stream_provider(std::vector<std::uint8_t> bytes, Exhaustion exhaustion) {
    return std::make_unique<StreamProvider>(std::move(bytes), exhaustion);
}

std::optional<std::uint8_t> ShadowRam::peek(Address addr) const {
    auto it = cells_.find(addr);
    if (it == cells_.end())
        return std::nullopt;
    return it->second.byte;
}

std::optional<std::uint64_t> ShadowRam::owner(Address addr) const {
    auto it = cells_.find(addr);
    if (it == cells_.end())
        return std::nullopt;
    return it->second.owner;
}

void ShadowRam::store(Address addr, std::uint8_t byte, std::uint64_t owner) {
    cells_[addr] = Cell{byte, owner};
}

void ShadowRam::firmware_write(Address addr, unsigned width, std::uint32_t value) {
    for (unsigned i = 0; i < width; ++i) {
        auto it = cells_.find(addr + i);
        if (it != cells_.end())
            it->second = Cell{static_cast<std::uint8_t>(value >> (8 * i)), kFirmwareOwner};
    }
}

AccessBytes read_through(ShadowRam& shadow, InputProvider& provider, const ChannelRef& channel,
                         Address addr, unsigned width) {
    if (!valid_width(width))
        throw ContractError("read_through: width must be 1, 2 or 4");
    AccessBytes out;
    for (unsigned i = 0; i < width; ++i) {
        const Address a = addr + i;
        std::uint8_t byte;
        if (shadow.owner(a) == channel.lifetime) {
            byte = *shadow.peek(a);
        } else {
            byte = provider.next_byte(channel.key, a - channel.base);
            shadow.store(a, byte, channel.lifetime);
        }
        out.data[i] = byte;
        out.size = static_cast<std::uint8_t>(i + 1);
    }
    return out;
}

}  // namespace dmaprobe
