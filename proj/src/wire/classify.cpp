#include "censim/error.hpp"
#include "censim/wire.hpp"

#include <algorithm>
#include <cctype>

namespace censim::wire {

namespace {

// Method token compared case-insensitively: a mangled "gEt" is still HTTP on
// the wire, it just dodges rule engines that expect the canonical spelling.
bool starts_with_method(std::span<const std::uint8_t> payload) {
    for (auto method : canonical_methods()) {
        if (payload.size() <= method.size() || payload[method.size()] != ' ')
            continue;
        bool match = std::equal(method.begin(), method.end(), payload.begin(), [](char m, std::uint8_t b) {
            return std::toupper(b) == static_cast<unsigned char>(m);
        });
        if (match)
            return true;
    }
    return false;
}

bool is_dns_query(std::span<const std::uint8_t> payload) {
    try {
        return !decode_dns(payload).is_response;
    } catch (const Error&) {
        return false;
    }
}

bool is_client_hello(std::span<const std::uint8_t> payload) {
    try {
        parse_client_hello(payload);
        return true;
    } catch (const Error&) {
        return false;
    }
}

} // namespace

std::string_view to_string(ProtocolClass cls) {
    switch (cls) {
    case ProtocolClass::DnsUdp: return "DNS_UDP";
    case ProtocolClass::Http: return "HTTP";
    case ProtocolClass::Tls: return "TLS";
    case ProtocolClass::Other: return "OTHER";
    }
    return "OTHER";
}

std::optional<ProtocolClass> protocol_class_from_string(std::string_view text) {
    for (auto cls : {ProtocolClass::DnsUdp, ProtocolClass::Http, ProtocolClass::Tls, ProtocolClass::Other})
        if (to_string(cls) == text)
            return cls;
    return std::nullopt;
}

ProtocolClass classify_protocol(Transport proto, std::uint16_t dst_port, std::span<const std::uint8_t> payload) {
    if (proto == Transport::Udp && dst_port == kDnsPort && is_dns_query(payload))
        return ProtocolClass::DnsUdp;
    if (proto == Transport::Tcp && dst_port == kHttpPort && starts_with_method(payload))
        return ProtocolClass::Http;
    if (proto == Transport::Tcp && dst_port == kTlsPort && is_client_hello(payload))
        return ProtocolClass::Tls;
    return ProtocolClass::Other;
}

} // namespace censim::wire
