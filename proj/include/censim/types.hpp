#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace censim {

using Bytes = std::vector<std::uint8_t>;

Bytes to_bytes(std::string_view text);
std::string to_string(const Bytes& bytes);
std::string hex(const Bytes& bytes);

// 64-bit FNV-1a, rendered as 16 hex digits. Used for evidence and body digests.
std::uint64_t fnv1a(const Bytes& bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string digest_hex(std::uint64_t value);

// String identifier that does not silently convert into another id kind.
template <typename Tag>
struct Id {
    std::string value;

    Id() = default;
    explicit Id(std::string v) : value(std::move(v)) {}
    explicit Id(const char* v) : value(v) {}

    bool empty() const { return value.empty(); }
    auto operator<=>(const Id&) const = default;
};

using HostId = Id<struct HostTag>;
using RouterId = Id<struct RouterTag>;

class Ipv4 {
public:
    constexpr Ipv4() = default;
    constexpr explicit Ipv4(std::uint32_t value) : value_(value) {}
    constexpr Ipv4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
        : value_((std::uint32_t(a) << 24) | (std::uint32_t(b) << 16) | (std::uint32_t(c) << 8) | d) {}

    static std::optional<Ipv4> parse(std::string_view text);

    constexpr std::uint32_t value() const { return value_; }
    std::string str() const;

    auto operator<=>(const Ipv4&) const = default;

private:
    std::uint32_t value_ = 0;
};

class Ipv4Cidr {
public:
    Ipv4Cidr() = default;
    Ipv4Cidr(Ipv4 network, int prefix);

    static std::optional<Ipv4Cidr> parse(std::string_view text);

    Ipv4 network() const { return network_; }
    int prefix() const { return prefix_; }
    bool contains(Ipv4 addr) const;
    std::string str() const;

    bool operator==(const Ipv4Cidr&) const = default;

private:
    std::uint32_t mask() const;

    Ipv4 network_;
    int prefix_ = 32;
};

// Domain-name helpers. Comparison is ASCII case-insensitive and ignores a
// single trailing dot.
std::string normalize_domain(std::string_view name);
bool domain_equals(std::string_view a, std::string_view b);
// True when `name` equals `suffix` or ends with "." + suffix.
bool domain_has_suffix(std::string_view name, std::string_view suffix);

} // namespace censim

template <typename Tag>
struct std::hash<censim::Id<Tag>> {
    std::size_t operator()(const censim::Id<Tag>& id) const noexcept { return std::hash<std::string>{}(id.value); }
};
