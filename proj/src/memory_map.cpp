#include "dmaprobe/memory_map.hpp"

#include <algorithm>
#include <optional>
#include <fstream>
#include <sstream>

#include "dmaprobe/hex.hpp"

namespace dmaprobe {

std::string_view to_string(AddressClass cls) {
    switch (cls) {
    case AddressClass::Mmio: return "mmio";
    case AddressClass::Ram: return "ram";
    case AddressClass::Flash: return "flash";
    case AddressClass::Other: return "other";
    }
    return "other";
}

std::string format_range(const AddressRange& r) {
    return format_hex32(r.start) + "-" + format_hex32(r.end);
}

ProfileError::ProfileError(std::size_t line, std::string field, const std::string& what)
    : std::runtime_error(line ? "line " + std::to_string(line) + ": " + field + ": " + what
                              : field + ": " + what),
      line_(line), field_(std::move(field)) {}

MemoryMapProfile::MemoryMapProfile(std::string name, AddressRange mmio,
                                   std::vector<AddressRange> ram, std::vector<AddressRange> flash)
    : name_(std::move(name)), mmio_(mmio), ram_(std::move(ram)), flash_(std::move(flash)) {
    if (name_.empty())
        throw ProfileError(0, "name", "profile name is empty");

    struct Labeled {
        std::string_view field;
        AddressRange range;
        AddressClass cls;
    };
    std::vector<Labeled> all;
    all.push_back({"mmio", mmio_, AddressClass::Mmio});
    for (const auto& r : ram_)
        all.push_back({"ram", r, AddressClass::Ram});
    for (const auto& r : flash_)
        all.push_back({"flash", r, AddressClass::Flash});

    for (const auto& l : all) {
        if (l.range.start > l.range.end)
            throw ProfileError(0, std::string(l.field),
                               "range " + format_range(l.range) + " has start > end");
    }
    for (std::size_t i = 0; i < all.size(); ++i) {
        for (std::size_t j = i + 1; j < all.size(); ++j) {
            if (all[i].range.overlaps(all[j].range)) {
                throw ProfileError(0, std::string(all[j].field),
                                   "overlap between " + std::string(all[i].field) + " " +
                                       format_range(all[i].range) + " and " +
                                       std::string(all[j].field) + " " +
                                       format_range(all[j].range));
            }
        }
    }

    sorted_.reserve(all.size());
    for (const auto& l : all)
        sorted_.push_back({l.range, l.cls});
    std::sort(sorted_.begin(), sorted_.end(),
              [](const Region& a, const Region& b) { return a.range.start < b.range.start; });
}

AddressClass MemoryMapProfile::classify(Address value) const {
    // First region whose start is beyond value, then step back one.
    auto it = std::upper_bound(sorted_.begin(), sorted_.end(), value,
                               [](Address v, const Region& r) { return v < r.range.start; });
    if (it == sorted_.begin())
        return AddressClass::Other;
    --it;
    return it->range.contains(value) ? it->cls : AddressClass::Other;
}

// ---------------------------------------------------------------------------
// Profile text format

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::string_view strip_comment(std::string_view s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"')
            quoted = !quoted;
        else if (s[i] == '#' && !quoted)
            return s.substr(0, i);
    }
    return s;
}

std::string unquote(std::string_view v, std::size_t line, const std::string& field) {
    v = trim(v);
    if (v.size() < 2 || v.front() != '"' || v.back() != '"')
        throw ProfileError(line, field, "expected a quoted string");
    auto inner = v.substr(1, v.size() - 2);
    if (inner.find('"') != std::string_view::npos)
        throw ProfileError(line, field, "stray quote in string");
    return std::string(inner);
}

Address parse_address(std::string_view text, std::size_t line, const std::string& field) {
    text = trim(text);
    auto v = parse_hex(text);
    if (!v)
        throw ProfileError(line, field, "bad hex address '" + std::string(text) + "' (0x prefix required)");
    if (*v > 0xFFFFFFFFull)
        throw ProfileError(line, field, "address '" + std::string(text) +
                                            "' exceeds 32 bits; only 32-bit targets are supported");
    return static_cast<Address>(*v);
}

AddressRange parse_range(std::string_view value, std::size_t line, const std::string& field) {
    auto s = unquote(value, line, field);
    auto dash = s.find('-');
    if (dash == std::string::npos)
        throw ProfileError(line, field, "range must look like \"0xSTART-0xEND\"");
    AddressRange r{parse_address(std::string_view(s).substr(0, dash), line, field),
                   parse_address(std::string_view(s).substr(dash + 1), line, field)};
    if (r.start > r.end)
        throw ProfileError(line, field, "range " + format_range(r) + " has start > end");
    return r;
}

std::vector<AddressRange> parse_range_list(std::string_view value, std::size_t line,
                                           const std::string& field) {
    value = trim(value);
    if (value.size() < 2 || value.front() != '[' || value.back() != ']')
        throw ProfileError(line, field, "expected a [..] list of ranges");
    auto body = trim(value.substr(1, value.size() - 2));
    std::vector<AddressRange> out;
    while (!body.empty()) {
        auto comma = body.find(',');
        auto item = trim(body.substr(0, comma));
        if (item.empty())
            throw ProfileError(line, field, "empty list element");
        out.push_back(parse_range(item, line, field));
        if (comma == std::string_view::npos)
            break;
        body = trim(body.substr(comma + 1));
        if (body.empty())  // trailing comma
            break;
    }
    return out;
}

bool valid_identifier(std::string_view s) {
    if (s.empty())
        return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
               c == '-' || c == '_' || c == '.';
    });
}

}  // namespace

MemoryMapProfile load_profile(std::string_view text) {
    std::optional<std::string> name;
    std::optional<AddressRange> mmio;
    std::optional<std::vector<AddressRange>> ram;
    std::optional<std::vector<AddressRange>> flash;

    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        auto line = trim(strip_comment(raw));
        if (line.empty())
            continue;
        auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ProfileError(lineno, "", "expected 'key = value'");
        std::string key(trim(line.substr(0, eq)));
        std::string value(trim(line.substr(eq + 1)));
        std::size_t start_line = lineno;

        // Lists may continue over several lines until the closing bracket.
        if (!value.empty() && value.front() == '[') {
            while (value.find(']') == std::string::npos) {
                if (!std::getline(in, raw))
                    throw ProfileError(start_line, key, "unterminated list");
                ++lineno;
                value += " ";
                value += trim(strip_comment(raw));
            }
        }

        auto duplicate = [&](bool present) {
            if (present)
                throw ProfileError(start_line, key, "duplicate key");
        };
        if (key == "name") {
            duplicate(name.has_value());
            name = unquote(value, start_line, key);
            if (!valid_identifier(*name))
                throw ProfileError(start_line, key, "name must be an identifier");
        } else if (key == "mmio") {
            duplicate(mmio.has_value());
            mmio = parse_range(value, start_line, key);
        } else if (key == "ram") {
            duplicate(ram.has_value());
            ram = parse_range_list(value, start_line, key);
        } else if (key == "flash") {
            duplicate(flash.has_value());
            flash = parse_range_list(value, start_line, key);
        } else {
            throw ProfileError(start_line, key, "unknown key");
        }
    }
    if (!name)
        throw ProfileError(0, "name", "missing required key");
    if (!mmio)
        throw ProfileError(0, "mmio", "missing required key");
    return MemoryMapProfile(*name, *mmio, ram.value_or(std::vector<AddressRange>{}),
                            flash.value_or(std::vector<AddressRange>{}));
}

std::string to_config_text(const MemoryMapProfile& profile) {
    auto list = [](const std::vector<AddressRange>& ranges) {
        std::string out = "[";
        for (std::size_t i = 0; i < ranges.size(); ++i) {
            if (i)
                out += ", ";
            out += "\"" + format_range(ranges[i]) + "\"";
        }
        return out + "]";
    };
    std::string out;
    out += "name = \"" + profile.name() + "\"\n";
    out += "mmio = \"" + format_range(profile.mmio()) + "\"\n";
    out += "ram = " + list(profile.ram()) + "\n";
    out += "flash = " + list(profile.flash()) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Built-in profiles

const std::vector<MemoryMapProfile>& builtin_profiles() {
    static const std::vector<MemoryMapProfile> profiles = {
        MemoryMapProfile("stm32f103", {0x40000000, 0x5FFFFFFF}, {{0x20000000, 0x20004FFF}},
                         {{0x08000000, 0x0801FFFF}}),
        // PIC32MZ2048EF. DMA pointers are physical addresses, so physical RAM
        // starting at 0 is listed next to the KSEG0/KSEG1 aliases.
        MemoryMapProfile("pic32", {0xBF800000, 0xBF8FFFFF},
                         {{0x00000000, 0x0007FFFF},
                          {0x80000000, 0x8007FFFF},
                          {0xA0000000, 0xA007FFFF}},
                         {{0x1D000000, 0x1D1FFFFF},
                          {0x1FC00000, 0x1FC13FFF},
                          {0x9D000000, 0x9D1FFFFF},
                          {0x9FC00000, 0x9FC13FFF},
                          {0xBD000000, 0xBD1FFFFF},
                          {0xBFC00000, 0xBFC13FFF}}),
        // Whole 512MB Code and SRAM regions of the ARMv7-M map. The SRAM
        // bit-band alias (0x22000000-0x23ffffff) is left unclassified.
        MemoryMapProfile("generic-armv7m-512mb", {0x40000000, 0x5FFFFFFF},
                         {{0x20000000, 0x21FFFFFF}, {0x24000000, 0x3FFFFFFF}},
                         {{0x00000000, 0x1FFFFFFF}}),
        MemoryMapProfile("gd32vf103-riscv", {0x40000000, 0x5003FFFF},
                         {{0x20000000, 0x20017FFF}}, {{0x08000000, 0x0801FFFF}}),
    };
    return profiles;
}

const MemoryMapProfile& builtin_profile(std::string_view name) {
    for (const auto& p : builtin_profiles()) {
        if (p.name() == name)
            return p;
    }
    throw ProfileError(0, "name", "unknown profile '" + std::string(name) + "'");
}

MemoryMapProfile resolve_profile(std::string_view name_or_path) {
    for (const auto& p : builtin_profiles()) {
        if (p.name() == name_or_path)
            return p;
    }
    std::ifstream in{std::string(name_or_path)};
    if (!in)
        throw ProfileError(0, "name", "unknown profile '" + std::string(name_or_path) + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return load_profile(buf.str());
}

}  // namespace dmaprobe
