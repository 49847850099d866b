#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "dmaprobe/event.hpp"

namespace dmaprobe {

/// Malformed trace input. `line` is 1-based.
class TraceError : public std::runtime_error {
public:
    TraceError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// One JSONL record:
///   {"seq":1,"op":"w","addr":"0x40020060","width":4,"value":"0x40013804"}
///   {"seq":2,"op":"r","addr":"0x20000100","width":1}
/// Throws TraceError (with `line`) on any schema violation.
MemoryAccessEvent parse_trace_record(std::string_view text, std::size_t line);

/// Serializes with fixed key order and lowercase 0x-prefixed hex.
std::string format_trace_record(const MemoryAccessEvent& event);

/// Streams records from JSONL, skipping blank lines and enforcing strictly
/// increasing seq.
class TraceReader {
public:
    explicit TraceReader(std::istream& in) : in_(&in) {}

    std::optional<MemoryAccessEvent> next();
    std::size_t line() const { return line_; }

private:
    std::istream* in_;
    std::string buf_;
    std::size_t line_ = 0;
    std::optional<std::uint64_t> prev_seq_;
};

}  // namespace dmaprobe
