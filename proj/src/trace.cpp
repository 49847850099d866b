#include "dmaprobe/trace.hpp"

#include <charconv>

#include <json.hpp>

#include "dmaprobe/hex.hpp"

namespace dmaprobe {

namespace {

std::uint32_t hex_field(const nlohmann::json& obj, const char* key, std::size_t line) {
    const auto& v = obj.at(key);
    if (!v.is_string())
        throw TraceError(line, std::string("'") + key + "' must be a hex string");
    auto parsed = parse_hex(v.get_ref<const std::string&>());
    if (!parsed)
        throw TraceError(line, std::string("'") + key + "' is not 0x-prefixed hex");
    if (*parsed > 0xFFFFFFFFull)
        throw TraceError(line, std::string("'") + key + "' exceeds 32 bits");
    return static_cast<std::uint32_t>(*parsed);
}

bool consume(std::string_view& text, std::string_view prefix) {
    if (text.substr(0, prefix.size()) != prefix)
        return false;
    text.remove_prefix(prefix.size());
    return true;
}

bool consume_hex8(std::string_view& text, std::uint32_t& out) {
    if (text.size() < 8)
        return false;
    for (char c : text.substr(0, 8)) {
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f')))
            return false;
    }
    std::from_chars(text.data(), text.data() + 8, out, 16);
    text.remove_prefix(8);
    return true;
}

// Exact match on the layout format_trace_record produces. Anything else,
// valid or not, goes through the general parser.
std::optional<MemoryAccessEvent> parse_canonical(std::string_view text) {
    MemoryAccessEvent ev;
    if (!consume(text, R"({"seq":)"))
        return std::nullopt;
    const char* end = text.data() + text.size();
    auto [p, ec] = std::from_chars(text.data(), end, ev.seq);
    const std::size_t digits = static_cast<std::size_t>(p - text.data());
    if (ec != std::errc{} || digits == 0 || (digits > 1 && text[0] == '0'))
        return std::nullopt;
    text.remove_prefix(digits);

    if (consume(text, R"(,"op":"r","addr":"0x)"))
        ev.kind = AccessKind::Read;
    else if (consume(text, R"(,"op":"w","addr":"0x)"))
        ev.kind = AccessKind::Write;
    else
        return std::nullopt;
    if (!consume_hex8(text, ev.addr) || !consume(text, R"(","width":)") || text.empty())
        return std::nullopt;
    ev.width = static_cast<std::uint8_t>(text[0] - '0');
    text.remove_prefix(1);
    if (!valid_width(ev.width))
        return std::nullopt;

    if (ev.kind == AccessKind::Write) {
        if (!consume(text, R"(,"value":"0x)") || !consume_hex8(text, ev.value) || !consume(text, R"("})"))
            return std::nullopt;
        if (!value_fits(ev.value, ev.width))
            return std::nullopt;
    } else if (!consume(text, "}")) {
        return std::nullopt;
    }
    if (!text.empty())
        return std::nullopt;
    return ev;
}

}  // namespace

MemoryAccessEvent parse_trace_record(std::string_view text, std::size_t line) {
    if (auto ev = parse_canonical(text))
        return *ev;
    nlohmann::json obj;
    try {
        obj = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw TraceError(line, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object())
        throw TraceError(line, "record must be a JSON object");
    for (const auto& [key, _] : obj.items()) {
        if (key != "seq" && key != "op" && key != "addr" && key != "width" && key != "value")
            throw TraceError(line, "unknown field '" + key + "'");
    }
    for (const char* key : {"seq", "op", "addr", "width"}) {
        if (!obj.contains(key))
            throw TraceError(line, std::string("missing field '") + key + "'");
    }

    MemoryAccessEvent ev;
    const auto& seq = obj["seq"];
    if (!seq.is_number_unsigned())
        throw TraceError(line, "'seq' must be a non-negative integer");
    ev.seq = seq.get<std::uint64_t>();

    const auto& op = obj["op"];
    if (op == "r")
        ev.kind = AccessKind::Read;
    else if (op == "w")
        ev.kind = AccessKind::Write;
    else
        throw TraceError(line, "'op' must be \"r\" or \"w\"");

    ev.addr = hex_field(obj, "addr", line);

    const auto& width = obj["width"];
    if (!width.is_number_unsigned() || width.get<std::uint64_t>() > 4 || !valid_width(width.get<unsigned>()))
        throw TraceError(line, "'width' must be 1, 2 or 4");
    ev.width = static_cast<std::uint8_t>(width.get<unsigned>());

    if (ev.kind == AccessKind::Write) {
        if (!obj.contains("value"))
            throw TraceError(line, "write record needs 'value'");
        ev.value = hex_field(obj, "value", line);
        if (!value_fits(ev.value, ev.width))
            throw TraceError(line, "'value' does not fit in " + std::to_string(ev.width) + " byte(s)");
    } else if (obj.contains("value")) {
        throw TraceError(line, "read record must not carry 'value'");
    }
    return ev;
}

std::string format_trace_record(const MemoryAccessEvent& event) {
    std::string out = "{\"seq\":" + std::to_string(event.seq) + ",\"op\":\"";
    out += event.kind == AccessKind::Read ? "r" : "w";
    out += "\",\"addr\":\"" + format_hex32(event.addr) + "\",\"width\":" + std::to_string(event.width);
    if (event.kind == AccessKind::Write)
        out += ",\"value\":\"" + format_hex32(event.value) + "\"";
    out += "}";
    return out;
}

std::optional<MemoryAccessEvent> TraceReader::next() {
    while (std::getline(*in_, buf_)) {
        ++line_;
        std::string_view view(buf_);
        if (!view.empty() && view.back() == '\r')
            view.remove_suffix(1);
        if (view.find_first_not_of(" \t") == std::string_view::npos)
            continue;
        auto ev = parse_trace_record(view, line_);
        if (prev_seq_ && ev.seq <= *prev_seq_)
            throw TraceError(line_, "seq " + std::to_string(ev.seq) + " does not increase");
        prev_seq_ = ev.seq;
        return ev;
    }
    return std::nullopt;
}

}  // namespace dmaprobe
