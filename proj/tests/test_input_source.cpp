#include <doctest.h>

#include <map>
#include <random>

#include "dmaprobe/event.hpp"
#include "dmaprobe/input_source.hpp"

using namespace dmaprobe;

namespace {
std::vector<std::uint8_t> bytes_of(const AccessBytes& b) { return {b.view().begin(), b.view().end()}; }
}  // namespace

TEST_CASE("zero provider") {
    auto z = zero_provider();
    CHECK(z->next_byte(0x40020060, 0) == 0x00);
    CHECK(z->next_byte(0x12345678, 4095) == 0x00);

    ShadowRam shadow;
    ChannelRef ch{0x40020060, 1, 0x20000100};
    auto lo = read_through(shadow, *z, ch, 0x20000100, 4);
    auto hi = read_through(shadow, *z, ch, 0x20000104, 4);
    CHECK(bytes_of(lo) == std::vector<std::uint8_t>{0, 0, 0, 0});
    CHECK(bytes_of(hi) == std::vector<std::uint8_t>{0, 0, 0, 0});
    CHECK(shadow.size() == 8);
}

TEST_CASE("stream provider serves bytes in request order") {
    auto s = stream_provider({0xDE, 0xAD}, Exhaustion::ZeroPad);
    CHECK(s->next_byte(1, 0) == 0xDE);
    CHECK(s->next_byte(1, 1) == 0xAD);

    auto pad = stream_provider({0xDE}, Exhaustion::ZeroPad);
    CHECK(pad->next_byte(1, 0) == 0xDE);
    CHECK(pad->next_byte(2, 7) == 0x00);
    CHECK(pad->next_byte(3, 0) == 0x00);

    auto halt = stream_provider({}, Exhaustion::Halt);
    CHECK_THROWS_AS(halt->next_byte(1, 0), InputExhausted);
}

TEST_CASE("read_through is idempotent per channel lifetime") {
    auto s = stream_provider({1, 2, 3, 4}, Exhaustion::Halt);
    ShadowRam shadow;
    ChannelRef ch{0x40020060, 1, 0x20000100};
    CHECK(bytes_of(read_through(shadow, *s, ch, 0x20000100, 4)) == std::vector<std::uint8_t>{1, 2, 3, 4});
    // A naive re-pull would hit the Halt exhaustion here.
    CHECK(bytes_of(read_through(shadow, *s, ch, 0x20000100, 4)) == std::vector<std::uint8_t>{1, 2, 3, 4});
}

TEST_CASE("overlapping reads share bytes at byte granularity") {
    auto s = stream_provider({1, 2, 3, 4, 5, 6}, Exhaustion::Halt);
    ShadowRam shadow;
    ChannelRef ch{0x40020060, 1, 0x20000100};
    CHECK(bytes_of(read_through(shadow, *s, ch, 0x20000100, 4)) == std::vector<std::uint8_t>{1, 2, 3, 4});
    CHECK(bytes_of(read_through(shadow, *s, ch, 0x20000102, 4)) == std::vector<std::uint8_t>{3, 4, 5, 6});
}

TEST_CASE("provider sees offsets relative to the buffer base") {
    struct Recorder : InputProvider {
        std::vector<std::pair<Address, std::uint32_t>> calls;
        std::uint8_t next_byte(Address key, std::uint32_t offset) override {
            calls.push_back({key, offset});
            return static_cast<std::uint8_t>(offset);
        }
    } rec;
    ShadowRam shadow;
    auto got = read_through(shadow, rec, {0x40020060, 1, 0x20000100}, 0x20000102, 2);
    CHECK(bytes_of(got) == std::vector<std::uint8_t>{2, 3});
    REQUIRE(rec.calls.size() == 2);
    CHECK(rec.calls[0] == std::pair<Address, std::uint32_t>{0x40020060, 2});
}

TEST_CASE("a new channel lifetime pulls fresh bytes") {
    auto s = stream_provider({1, 2, 3, 4}, Exhaustion::ZeroPad);
    ShadowRam shadow;
    read_through(shadow, *s, {0x40020060, 1, 0x20000100}, 0x20000100, 2);
    auto second = read_through(shadow, *s, {0x40020060, 2, 0x20000100}, 0x20000100, 2);
    CHECK(bytes_of(second) == std::vector<std::uint8_t>{3, 4});
}

TEST_CASE("firmware writes overwrite only shadowed bytes") {
    auto s = stream_provider({0xAA, 0xBB}, Exhaustion::ZeroPad);
    ShadowRam shadow;
    read_through(shadow, *s, {1, 1, 0x20000100}, 0x20000100, 2);
    shadow.firmware_write(0x20000101, 4, 0x44332211);
    CHECK(shadow.peek(0x20000100) == 0xAA);
    CHECK(shadow.peek(0x20000101) == 0x11);
    CHECK_FALSE(shadow.peek(0x20000102));
    CHECK(shadow.owner(0x20000101) == ShadowRam::kFirmwareOwner);
    CHECK(shadow.size() == 2);
}

TEST_CASE("bad width is a contract error") {
    ShadowRam shadow;
    auto z = zero_provider();
    CHECK_THROWS_AS(read_through(shadow, *z, {1, 1, 0}, 0, 3), ContractError);
}

TEST_CASE("random interleavings pull each byte at most once per lifetime") {
    struct Counting : InputProvider {
        std::map<std::uint32_t, int> pulls;
        std::uint8_t next_byte(Address, std::uint32_t offset) override {
            ++pulls[offset];
            return static_cast<std::uint8_t>(offset * 7 + 1);
        }
    };
    std::mt19937 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        Counting prov;
        ShadowRam shadow;
        std::map<Address, std::uint8_t> seen;
        ChannelRef ch{0x40020060, 1, 0x20000000};
        for (int i = 0; i < 100; ++i) {
            const unsigned widths[] = {1, 2, 4};
            unsigned w = widths[rng() % 3];
            Address a = 0x20000000 + static_cast<Address>(rng() % 32);
            auto got = read_through(shadow, prov, ch, a, w);
            REQUIRE(got.size == w);
            for (unsigned k = 0; k < w; ++k) {
                auto [it, fresh] = seen.emplace(a + k, got.data[k]);
                REQUIRE(it->second == got.data[k]);
            }
        }
        for (const auto& [off, n] : prov.pulls)
            REQUIRE(n == 1);
    }
}

TEST_CASE("zero-pad stream never fails and always fills the width") {
    auto s = stream_provider({9}, Exhaustion::ZeroPad);
    ShadowRam shadow;
    for (Address a = 0; a < 64; a += 4) {
        auto got = read_through(shadow, *s, {1, 1, 0x20000000}, 0x20000000 + a, 4);
        CHECK(got.size == 4);
    }
}
