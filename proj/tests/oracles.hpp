#pragma once

// Test-only reference models. They re-derive expected behaviour by brute force
// and share no code with the engine beyond the plain data types.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "dmaprobe/event.hpp"
#include "dmaprobe/memory_map.hpp"
#include "dmaprobe/stream_detector.hpp"

namespace oracle {

using dmaprobe::Address;

struct Read {
    Address addr;
    unsigned width;
};

/// Buffer size inference re-executed literally for every read, with span
/// membership decided by enumerating each byte address of the span.
inline std::vector<std::uint64_t> perceived_sizes(Address base, const std::vector<Read>& reads) {
    std::vector<std::uint64_t> out;
    std::int64_t perceived = 0;
    for (const auto& read : reads) {
        const std::int64_t span_size = 2 * static_cast<std::int64_t>(read.width);
        const std::int64_t span_base = static_cast<std::int64_t>(base) + perceived;
        bool falls_in = false;
        for (std::int64_t a = span_base; a < span_base + span_size; ++a) {
            if (a == static_cast<std::int64_t>(read.addr)) {
                falls_in = true;
                break;
            }
        }
        if (falls_in)
            perceived = (static_cast<std::int64_t>(read.addr) - static_cast<std::int64_t>(base)) + read.width;
        out.push_back(static_cast<std::uint64_t>(perceived));
    }
    return out;
}

/// Byte-granular model of MMIO stores. A word holds a pointer iff all four of
/// its bytes were last written by one aligned 32-bit store of a pointer-like
/// value to that very word.
class ShadowScanner {
public:
    explicit ShadowScanner(const dmaprobe::MemoryMapProfile& profile) : profile_(profile) {}

    /// Applies the store and returns the pointer group the detector must emit
    /// for it, if any.
    std::optional<std::vector<dmaprobe::PointerSlot>> observe(const dmaprobe::MemoryAccessEvent& ev) {
        history_.push_back(ev);
        const std::size_t idx = history_.size() - 1;
        for (unsigned i = 0; i < ev.width; ++i) {
            Address byte = ev.addr + i;
            if (profile_.classify(byte & ~Address{3}) == dmaprobe::AddressClass::Mmio)
                last_writer_[byte] = idx;
        }
        const bool qualifies = ev.width == 4 && ev.addr % 4 == 0 && profile_.is_pointer_like(ev.value);
        if (!qualifies)
            return std::nullopt;

        // Collect every pointer word, then split into maximal runs.
        std::vector<Address> words;
        for (const auto& [byte, writer] : last_writer_) {
            if (byte % 4 != 0)
                continue;
            if (is_pointer_word(byte))
                words.push_back(byte);
        }
        std::vector<std::vector<Address>> runs;
        for (Address w : words) {
            if (!runs.empty() && runs.back().back() + 4 == w)
                runs.back().push_back(w);
            else
                runs.push_back({w});
        }
        for (const auto& run : runs) {
            bool contains = false;
            for (Address w : run)
                contains |= (w == ev.addr);
            if (!contains)
                continue;
            if (run.size() < 2)
                return std::nullopt;
            std::vector<dmaprobe::PointerSlot> slots;
            bool has_ram = false;
            for (Address w : run) {
                const auto& src = history_[last_writer_.at(w)];
                auto cls = profile_.classify(src.value);
                has_ram |= cls == dmaprobe::AddressClass::Ram;
                slots.push_back({w, src.value, cls});
            }
            if (!has_ram)
                return std::nullopt;
            return slots;
        }
        return std::nullopt;
    }

    void reset() {
        last_writer_.clear();
        history_.clear();
    }

private:
    bool is_pointer_word(Address w) const {
        std::optional<std::size_t> writer;
        for (unsigned i = 0; i < 4; ++i) {
            auto it = last_writer_.find(w + i);
            if (it == last_writer_.end())
                return false;
            if (writer && *writer != it->second)
                return false;
            writer = it->second;
        }
        const auto& ev = history_[*writer];
        return ev.addr == w && ev.width == 4 && profile_.is_pointer_like(ev.value);
    }

    const dmaprobe::MemoryMapProfile& profile_;
    std::map<Address, std::size_t> last_writer_;
    std::vector<dmaprobe::MemoryAccessEvent> history_;
};

}  // namespace oracle
