#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dmaprobe {

using Address = std::uint32_t;

enum class AddressClass : std::uint8_t { Mmio, Ram, Flash, Other };

std::string_view to_string(AddressClass cls);

/// Closed interval [start, end] of byte addresses.
struct AddressRange {
    Address start = 0;
    Address end = 0;

    bool contains(Address a) const { return a >= start && a <= end; }
    bool overlaps(const AddressRange& other) const {
        return start <= other.end && other.start <= end;
    }
    friend bool operator==(const AddressRange&, const AddressRange&) = default;
};

std::string format_range(const AddressRange& r);

/// Raised for malformed profile text or a profile violating its invariants.
/// `line` is 1-based; 0 when the error is not tied to a line.
class ProfileError : public std::runtime_error {
public:
    ProfileError(std::size_t line, std::string field, const std::string& what);

    std::size_t line() const { return line_; }
    const std::string& field() const { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

/// MCU address-space layout: one MMIO window plus any number of RAM and Flash
/// windows. Immutable once constructed; construction rejects overlaps.
class MemoryMapProfile {
public:
    MemoryMapProfile(std::string name, AddressRange mmio, std::vector<AddressRange> ram,
                     std::vector<AddressRange> flash);

    const std::string& name() const { return name_; }
    const AddressRange& mmio() const { return mmio_; }
    const std::vector<AddressRange>& ram() const { return ram_; }
    const std::vector<AddressRange>& flash() const { return flash_; }

    AddressClass classify(Address value) const;
    bool is_pointer_like(Address value) const { return classify(value) != AddressClass::Other; }

    friend bool operator==(const MemoryMapProfile& a, const MemoryMapProfile& b) {
        return a.name_ == b.name_ && a.mmio_ == b.mmio_ && a.ram_ == b.ram_ && a.flash_ == b.flash_;
    }

private:
    struct Region {
        AddressRange range;
        AddressClass cls;
    };

    std::string name_;
    AddressRange mmio_;
    std::vector<AddressRange> ram_;
    std::vector<AddressRange> flash_;
    std::vector<Region> sorted_;  // by range.start, disjoint
};

inline AddressClass classify(const MemoryMapProfile& profile, Address value) {
    return profile.classify(value);
}

inline bool is_pointer_like(const MemoryMapProfile& profile, Address value) {
    return profile.is_pointer_like(value);
}

/// Parses the key/value profile format:
///
///   name  = "stm32f103"
///   mmio  = "0x40000000-0x5fffffff"
///   ram   = ["0x20000000-0x20004fff"]
///   flash = ["0x08000000-0x0801ffff"]
///
/// `#` starts a comment. Every address needs a `0x` prefix and must fit in
/// 32 bits.
MemoryMapProfile load_profile(std::string_view text);

/// Inverse of load_profile.
std::string to_config_text(const MemoryMapProfile& profile);

/// Built-ins: stm32f103, pic32, generic-armv7m-512mb, gd32vf103-riscv.
const MemoryMapProfile& builtin_profile(std::string_view name);
const std::vector<MemoryMapProfile>& builtin_profiles();

/// Built-in name, else a path to a profile file.
MemoryMapProfile resolve_profile(std::string_view name_or_path);

inline constexpr std::string_view kDefaultProfile = "generic-armv7m-512mb";

}  // namespace dmaprobe
