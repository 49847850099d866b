#include <doctest.h>

#include <random>

#include "dmaprobe/channel_tracker.hpp"
#include "dmaprobe/engine.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace dmaprobe;

namespace {

const MemoryMapProfile& stm() { return builtin_profile("stm32f103"); }

StreamConfiguration pair(Address key, Address src, Address dst, std::uint64_t seq) {
    const auto& p = stm();
    return {key, {{key, src, p.classify(src)}, {key + 4, dst, p.classify(dst)}}, seq};
}

MemoryAccessEvent rd(std::uint64_t seq, Address addr, std::uint8_t width) {
    return {seq, AccessKind::Read, addr, width, 0};
}

MemoryAccessEvent wr(std::uint64_t seq, Address addr, std::uint8_t width, std::uint32_t value) {
    return {seq, AccessKind::Write, addr, width, value};
}

using Kind = LifecycleEvent::Kind;

}  // namespace

TEST_CASE("configurations create and reconfigure channels") {
    auto z = zero_provider();
    ChannelTracker t(stm(), *z);

    auto first = t.on_stream_config(pair(0x40020008, 0x40013804, 0x20000100, 2));
    REQUIRE(first.size() == 1);
    CHECK(first[0].kind == Kind::Created);
    CHECK(first[0].stream_key == 0x40020008);

    auto second = t.on_stream_config(pair(0x40020008, 0x40013804, 0x20000200, 4));
    REQUIRE(second.size() == 2);
    CHECK(second[0].kind == Kind::Terminated);
    CHECK(second[0].reason == TerminationReason::Reconfigured);
    CHECK(second[0].channel_id == 1);
    CHECK(second[1].kind == Kind::Created);
    CHECK(second[1].channel_id == 2);

    auto other = t.on_stream_config(pair(0x40020018, 0x40004404, 0x20000300, 6));
    REQUIRE(other.size() == 1);
    CHECK(other[0].kind == Kind::Created);
    CHECK(other[0].stream_key == 0x40020018);

    auto snap = t.snapshot();
    REQUIRE(snap.size() == 3);
    CHECK(snap[0].state == ChannelState::Terminated);
    CHECK(snap[0].terminated_at == 4);
    CHECK(snap[1].state == ChannelState::Candidate);
    CHECK(snap[2].state == ChannelState::Candidate);
    CHECK(t.live_count() == 2);
}

TEST_CASE("consecutive word reads grow the buffer and are injected") {
    auto z = zero_provider();
    ChannelTracker t(stm(), *z);
    t.on_stream_config(pair(0x40020008, 0x40013804, 0x20000100, 2));

    const std::vector<oracle::Read> reads = {{0x20000100, 4}, {0x20000104, 4}};
    const auto expected = oracle::perceived_sizes(0x20000100, reads);
    REQUIRE(expected == std::vector<std::uint64_t>{4, 8});

    auto a = t.on_ram_access(rd(3, 0x20000100, 4));
    REQUIRE(a);
    CHECK(t.snapshot()[0].perceived_size() == expected[0]);
    auto b = t.on_ram_access(rd(4, 0x20000104, 4));
    REQUIRE(b);
    CHECK(b->offset == 4);
    CHECK(b->channel == 0x40020008);
    CHECK(b->bytes.size == 4);

    const auto ch = t.snapshot()[0];
    CHECK(ch.perceived_size() == expected[1]);
    CHECK(ch.direction == Direction::Input);
    CHECK(ch.state == ChannelState::Active);
    REQUIRE(ch.source);
    CHECK(ch.source->value == 0x40013804);
    CHECK(ch.injections == 2);
    CHECK(ch.bytes_injected == 8);
}

TEST_CASE("byte-swapped first read binds and sizes the buffer") {
    auto z = zero_provider();
    ChannelTracker t(stm(), *z);
    t.on_stream_config(pair(0x40020008, 0x40013804, 0x20000100, 2));
    auto a = t.on_ram_access(rd(3, 0x20000101, 1));
    REQUIRE(a);
    CHECK(a->offset == 1);
    CHECK(t.snapshot()[0].perceived_size() == 2);
    CHECK(t.on_ram_access(rd(4, 0x20000100, 1)));
    CHECK(t.snapshot()[0].perceived_size() == 2);
}

TEST_CASE("read one byte past the span neither grows nor injects") {
    auto z = zero_provider();
    ChannelTracker t(stm(), *z);
    t.on_stream_config(pair(0x40020008, 0x40013804, 0x20000100, 2));
    t.on_ram_access(rd(3, 0x20000100, 4));
    t.on_ram_access(rd(4, 0x20000104, 4));
    REQUIRE(t.snapshot()[0].perceived_size() == 8);

    const auto expected = oracle::perceived_sizes(0x20000100, {{0x20000100, 4}, {0x20000104, 4}, {0x20000110, 4}});
    CHECK(expected.back() == 8);
    CHECK_FALSE(t.on_ram_access(rd(5, 0x20000110, 4)));
    CHECK(t.snapshot()[0].perceived_size() == 8);
}

TEST_CASE("firmware store into the buffer terminates the channel") {
    auto s = stream_provider({1, 2, 3, 4, 5, 6, 7, 8}, Exhaustion::ZeroPad);
    ChannelTracker t(stm(), *s);
    t.on_stream_config(pair(0x40020008, 0x40013804, 0x20000100, 2));
    t.on_ram_access(rd(3, 0x20000100, 4));
    t.on_ram_access(rd(4, 0x20000104, 4));

    CHECK_FALSE(t.on_ram_access(wr(5, 0x20000104, 4, 0xAABBCCDD)));
    auto ch = t.snapshot()[0];
    CHECK(ch.state == ChannelState::Terminated);
    CHECK(ch.termination == TerminationReason::FirmwareWrite);
    CHECK(ch.terminated_at == 5);

    CHECK_FALSE(t.on_ram_access(rd(6, 0x20000100, 4)));
    // Injected bytes outside the store survive; the store itself is visible.
    CHECK(t.shadow().peek(0x20000100) == 1);
    CHECK(t.shadow().peek(0x20000103) == 4);
    CHECK(t.shadow().peek(0x20000104) == 0xDD);
    CHECK(t.shadow().peek(0x20000107) == 0xAA);
}

TEST_CASE("store just before the buffer does not terminate") {
    auto z = zero_provider();
    ChannelTracker t(stm(), *z);
    t.on_stream_config(pair(0x40020008, 0x40013804, 0x20000100, 2));
    t.on_ram_access(rd(3, 0x20000100, 4));
    t.on_ram_access(wr(4, 0x200000FC, 4, 0));
    t.on_ram_access(wr(5, 0x20000104, 4, 0));  // beyond perceived end
    CHECK(t.snapshot()[0].state == ChannelState::Active);
}

TEST_CASE("first store near a RAM pointer makes an output channel") {
    auto z = zero_provider();
    ChannelTracker t(stm(), *z);
    t.on_stream_config(pair(0x40020008, 0x40013804, 0x20000100, 2));
    t.on_ram_access(wr(3, 0x20000100, 1, 0x41));
    CHECK_FALSE(t.on_ram_access(rd(4, 0x20000100, 1)));
    const auto ch = t.snapshot()[0];
    CHECK(ch.direction == Direction::Output);
    CHECK(ch.state == ChannelState::Active);
    CHECK(ch.buffers.empty());
    CHECK(ch.injections == 0);
}

TEST_CASE("memory-to-memory: the pointer read first is the destination") {
    auto z = zero_provider();
    ChannelTracker t(stm(), *z);
    t.on_stream_config(pair(0x40020008, 0x20000800, 0x20000100, 2));
    REQUIRE(t.on_ram_access(rd(3, 0x20000800, 4)));
    const auto ch = t.snapshot()[0];
    REQUIRE(ch.source);
    CHECK(ch.source->value == 0x20000100);
    REQUIRE(ch.buffers.size() == 1);
    CHECK(ch.buffers[0].base == 0x20000800);
}

TEST_CASE("circular configuration tracks one buffer per destination") {
    auto z = zero_provider();
    ChannelTracker t(stm(), *z);
    const auto& p = stm();
    StreamConfiguration cfg{0x40020008,
                            {{0x40020008, 0x4001244C, p.classify(0x4001244C)},
                             {0x4002000C, 0x20000100, AddressClass::Ram},
                             {0x40020010, 0x20000200, AddressClass::Ram}},
                            3};
    t.on_stream_config(cfg);
    t.on_ram_access(rd(4, 0x20000100, 2));
    t.on_ram_access(rd(5, 0x20000200, 2));
    const auto ch = t.snapshot()[0];
    REQUIRE(ch.buffers.size() == 2);
    CHECK(ch.buffers[0].perceived_size == 2);
    CHECK(ch.buffers[1].perceived_size == 2);
    CHECK(ch.perceived_size() == 4);
    CHECK(ch.injections == 2);
}

TEST_CASE("unused candidates end at session end") {
    auto z = zero_provider();
    ChannelTracker t(stm(), *z);
    CHECK(t.snapshot().empty());
    t.on_stream_config(pair(0x40020008, 0x40013804, 0x20000100, 2));
    CHECK(t.snapshot().size() == 1);
    CHECK(t.snapshot()[0].state == ChannelState::Candidate);
    auto ev = t.end_session(9);
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].reason == TerminationReason::SessionEnd);
    CHECK(t.counters().candidate_session_end == 1);
    CHECK(t.live_count() == 0);
}

TEST_CASE("non-RAM access is a contract error") {
    auto z = zero_provider();
    ChannelTracker t(stm(), *z);
    CHECK_THROWS_AS(t.on_ram_access(rd(1, 0x08000000, 4)), ContractError);
}

TEST_CASE("near_pointer uses the doubled-width window") {
    CHECK(near_pointer(0x100, 0x100, 1));
    CHECK(near_pointer(0x100, 0x101, 1));
    CHECK_FALSE(near_pointer(0x100, 0x102, 1));
    CHECK(near_pointer(0x100, 0x107, 4));
    CHECK_FALSE(near_pointer(0x100, 0x108, 4));
    CHECK_FALSE(near_pointer(0x100, 0xFF, 4));
}

TEST_CASE("buffer tracker matches the size-inference oracle on random reads") {
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 2000; ++trial) {
        auto seq = gen::random_read_sequence(rng, 0x20000000, 0x20005000);
        const auto expected = oracle::perceived_sizes(seq.base, seq.reads);
        BufferTracker b{seq.base, 0, 0};
        std::uint64_t last = 0;
        for (std::size_t i = 0; i < seq.reads.size(); ++i) {
            const bool grew = b.observe_read(seq.reads[i].addr, seq.reads[i].width);
            REQUIRE(b.perceived_size == expected[i]);
            REQUIRE(b.perceived_size >= last);
            if (!grew)
                REQUIRE(b.perceived_size == last);
            last = b.perceived_size;
        }
    }
}

TEST_CASE("tracker channel matches the oracle when driven through reads") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 500; ++trial) {
        auto seq = gen::random_read_sequence(rng, 0x20000010, 0x20005000);
        // Bind with a read at the base, then replay the sequence.
        std::vector<oracle::Read> reads = {{seq.base, 1}};
        reads.insert(reads.end(), seq.reads.begin(), seq.reads.end());
        const auto expected = oracle::perceived_sizes(seq.base, reads);

        auto z = zero_provider();
        ChannelTracker t(stm(), *z);
        t.on_stream_config(pair(0x40020008, 0x40013804, seq.base, 1));
        std::uint64_t s = 2;
        for (std::size_t i = 0; i < reads.size(); ++i) {
            if (stm().classify(reads[i].addr) != AddressClass::Ram)
                continue;
            auto inj = t.on_ram_access(rd(s++, reads[i].addr, static_cast<std::uint8_t>(reads[i].width)));
            const auto ch = t.snapshot()[0];
            REQUIRE(ch.perceived_size() == expected[i]);
            const bool inside = reads[i].addr >= seq.base && reads[i].addr - seq.base < expected[i];
            REQUIRE(inj.has_value() == inside);
        }
    }
}

TEST_CASE("lifecycle invariants hold over random interleavings") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const auto trace = gen::random_lifecycle_trace(rng, 300);
        const auto failure = gen::check_lifecycle_invariants(trace);
        INFO("trial " << trial);
        REQUIRE(failure.empty());
    }
}

TEST_CASE("flash destinations never become input channels") {
    std::mt19937_64 rng(11);
    const auto& p = stm();
    for (int trial = 0; trial < 500; ++trial) {
        Engine e(p, nullptr);
        std::uint64_t seq = 0;
        const Address flash = 0x08000000 + static_cast<Address>(rng() % 0x1F000) * 4;
        const Address src = rng() % 2 ? 0x40013804 : 0x08001000;
        e.on_event(wr(++seq, 0x40020008, 4, src));
        auto r = e.on_event(wr(++seq, 0x4002000C, 4, flash));
        CHECK_FALSE(r.config);
        for (int i = 0; i < 8; ++i)
            e.on_event(rd(++seq, 0x20000000 + static_cast<Address>(rng() % 64), 4));
        e.finish();
        for (const auto& ch : e.snapshot()) {
            if (ch.direction != Direction::Input)
                continue;
            for (const auto& b : ch.buffers)
                REQUIRE(p.classify(b.base) == AddressClass::Ram);
        }
    }
}
