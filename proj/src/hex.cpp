#include "dmaprobe/hex.hpp"

#include <charconv>
#include <cstdio>

namespace dmaprobe {

std::string format_hex32(std::uint32_t value) {
    char buf[11];
    std::snprintf(buf, sizeof buf, "0x%08x", value);
    return buf;
}

std::optional<std::uint64_t> parse_hex(std::string_view text) {
    if (text.size() < 3 || text[0] != '0' || (text[1] != 'x' && text[1] != 'X'))
        return std::nullopt;
    auto digits = text.substr(2);
    if (digits.size() > 16)
        return std::nullopt;
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value, 16);
    if (ec != std::errc{} || ptr != digits.data() + digits.size())
        return std::nullopt;
    return value;
}

}  // namespace dmaprobe
