#include "censim/types.hpp"

#include "censim/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>

namespace censim {

std::string_view to_string(Errc code) {
    switch (code) {
    case Errc::MalformedSpec: return "MALFORMED_SPEC";
    case Errc::UnknownHost: return "UNKNOWN_HOST";
    case Errc::InvalidPacket: return "INVALID_PACKET";
    case Errc::MalformedDns: return "MALFORMED_DNS";
    case Errc::MalformedHttp: return "MALFORMED_HTTP";
    case Errc::NotClientHello: return "NOT_CLIENT_HELLO";
    case Errc::MalformedTls: return "MALFORMED_TLS";
    case Errc::EmptyInput: return "EMPTY_INPUT";
    case Errc::MissingBaseline: return "MISSING_BASELINE";
    case Errc::ParseError: return "PARSE_ERROR";
    case Errc::ValidationError: return "VALIDATION_ERROR";
    case Errc::EmptyReport: return "EMPTY_REPORT";
    case Errc::ProbeError: return "PROBE_ERROR";
    }
    return "UNKNOWN";
}

Bytes to_bytes(std::string_view text) { return Bytes(text.begin(), text.end()); }

std::string to_string(const Bytes& bytes) { return std::string(bytes.begin(), bytes.end()); }

std::string hex(const Bytes& bytes) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

std::uint64_t fnv1a(const Bytes& bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (auto b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string digest_hex(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::optional<Ipv4> Ipv4::parse(std::string_view text) {
    std::uint32_t value = 0;
    for (int octet = 0; octet < 4; ++octet) {
        if (octet > 0) {
            if (text.empty() || text.front() != '.')
                return std::nullopt;
            text.remove_prefix(1);
        }
        unsigned part = 0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), part);
        auto used = static_cast<std::size_t>(ptr - text.data());
        if (ec != std::errc{} || used == 0 || used > 3 || part > 255)
            return std::nullopt;
        text.remove_prefix(used);
        value = (value << 8) | part;
    }
    if (!text.empty())
        return std::nullopt;
    return Ipv4(value);
}

std::string Ipv4::str() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", value_ >> 24, (value_ >> 16) & 0xff, (value_ >> 8) & 0xff,
                  value_ & 0xff);
    return buf;
}

Ipv4Cidr::Ipv4Cidr(Ipv4 network, int prefix) : prefix_(prefix) {
    if (prefix < 0 || prefix > 32)
        throw Error(Errc::ValidationError, "CIDR prefix out of range: " + std::to_string(prefix));
    network_ = Ipv4(network.value() & mask());
}

std::uint32_t Ipv4Cidr::mask() const { return prefix_ == 0 ? 0 : ~std::uint32_t(0) << (32 - prefix_); }

std::optional<Ipv4Cidr> Ipv4Cidr::parse(std::string_view text) {
    auto slash = text.find('/');
    if (slash == std::string_view::npos)
        return std::nullopt;
    auto addr = Ipv4::parse(text.substr(0, slash));
    auto rest = text.substr(slash + 1);
    int prefix = -1;
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), prefix);
    if (!addr || ec != std::errc{} || ptr != rest.data() + rest.size() || prefix < 0 || prefix > 32)
        return std::nullopt;
    return Ipv4Cidr(*addr, prefix);
}

bool Ipv4Cidr::contains(Ipv4 addr) const { return (addr.value() & mask()) == network_.value(); }

std::string Ipv4Cidr::str() const { return network_.str() + "/" + std::to_string(prefix_); }

std::string normalize_domain(std::string_view name) {
    if (!name.empty() && name.back() == '.')
        name.remove_suffix(1);
    std::string out(name);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

bool domain_equals(std::string_view a, std::string_view b) { return normalize_domain(a) == normalize_domain(b); }

bool domain_has_suffix(std::string_view name, std::string_view suffix) {
    auto n = normalize_domain(name);
    auto s = normalize_domain(suffix);
    if (s.empty())
        return false;
    if (n == s)
        return true;
    return n.size() > s.size() && n.ends_with(s) && n[n.size() - s.size() - 1] == '.';
}

} // namespace censim
