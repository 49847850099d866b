#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace dmaprobe {

/// "0x" followed by eight lowercase hex digits.
std::string format_hex32(std::uint32_t value);

/// Accepts "0x"/"0X" followed by 1..16 hex digits. No sign, no whitespace.
std::optional<std::uint64_t> parse_hex(std::string_view text);

}  // namespace dmaprobe
