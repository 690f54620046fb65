#pragma once

// Byte-exact codecs for the protocol surface the middlebox and the probes
// look at: DNS (A records only), HTTP/1.1 heads, and TLS ClientHello.

#include "censim/packet.hpp"
#include "censim/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace censim::wire {

// --- DNS -------------------------------------------------------------------

inline constexpr std::uint16_t kDnsTypeA = 1;
inline constexpr std::uint16_t kDnsClassIn = 1;
inline constexpr std::uint8_t kRcodeNoError = 0;
inline constexpr std::uint8_t kRcodeNxDomain = 3;

struct DnsAnswer {
    std::string name;
    Ipv4 address;
    std::uint32_t ttl_seconds = 0;

    bool operator==(const DnsAnswer&) const = default;
};

struct DnsMessage {
    std::uint16_t id = 0;
    bool is_response = false;
    std::uint8_t rcode = kRcodeNoError;
    std::string qname;
    std::uint16_t qtype = kDnsTypeA;
    std::vector<DnsAnswer> answers;

    bool operator==(const DnsMessage&) const = default;
};

// Throws MalformedDns when a label is empty, longer than 63 bytes, non-ASCII,
// or the whole name exceeds 253 bytes.
void validate_qname(std::string_view qname);

Bytes encode_dns_query(std::uint16_t id, std::string_view qname);
// Names are written uncompressed.
Bytes encode_dns(const DnsMessage& msg);
// Accepts compression pointers; non-A answer records are skipped.
DnsMessage decode_dns(std::span<const std::uint8_t> bytes);

// --- HTTP ------------------------------------------------------------------

using HeaderList = std::vector<std::pair<std::string, std::string>>;

struct HttpRequest {
    std::string method;
    std::string path;
    std::string version;
    HeaderList headers; // names kept byte-exact

    // Value of the first header whose name matches "Host" case-insensitively.
    std::optional<std::string> host() const;

    bool operator==(const HttpRequest&) const = default;
};

struct HttpResponse {
    int status_code = 200;
    std::string reason;
    HeaderList headers;
    Bytes body;

    std::optional<std::string> header(std::string_view name) const;

    bool operator==(const HttpResponse&) const = default;
};

// Methods the HTTP grammar recognises, in canonical (upper) case.
std::span<const std::string_view> canonical_methods();
bool is_canonical_method(std::string_view token);

// Parses a request head through CRLFCRLF; anything after it is ignored.
HttpRequest parse_http_request(std::span<const std::uint8_t> bytes);
Bytes serialize_http_request(const HttpRequest& req);

// Content-Length is always emitted (replacing any caller-supplied one).
Bytes render_http_response(const HttpResponse& resp);
HttpResponse parse_http_response(std::span<const std::uint8_t> bytes);

// --- TLS -------------------------------------------------------------------

inline constexpr std::uint8_t kTlsHandshake = 22;
inline constexpr std::uint8_t kTlsApplicationData = 23;
inline constexpr std::uint8_t kHandshakeClientHello = 1;
inline constexpr std::uint8_t kHandshakeServerHello = 2;

struct ClientHello {
    std::uint16_t record_version = 0x0301;
    std::optional<std::string> sni;
    Bytes raw;
};

struct ClientHelloOptions {
    std::uint16_t record_version = 0x0301;
    std::optional<std::string> sni;
    std::array<std::uint8_t, 32> random{};
};

Bytes build_client_hello(const ClientHelloOptions& options);

// NotClientHello when the record is not a handshake or the handshake is not
// type 1; MalformedTls for truncation and inner length mismatches.
ClientHello parse_client_hello(std::span<const std::uint8_t> bytes);

// Minimal ServerHello record an origin answers a ClientHello with.
Bytes build_server_hello(const std::array<std::uint8_t, 32>& random);
// True when the bytes start with a handshake record carrying a server-side
// handshake message (anything other than ClientHello).
bool is_server_handshake(std::span<const std::uint8_t> bytes);

// --- Classification --------------------------------------------------------

enum class ProtocolClass : std::uint8_t { DnsUdp, Http, Tls, Other };

std::string_view to_string(ProtocolClass cls);
std::optional<ProtocolClass> protocol_class_from_string(std::string_view text);

inline constexpr std::uint16_t kDnsPort = 53;
inline constexpr std::uint16_t kHttpPort = 80;
inline constexpr std::uint16_t kTlsPort = 443;

// Port and payload grammar must both agree. Total function.
ProtocolClass classify_protocol(Transport proto, std::uint16_t dst_port, std::span<const std::uint8_t> payload);

} // namespace censim::wire
