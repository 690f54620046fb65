#pragma once

// The DPI middlebox. Layers are evaluated in a fixed order for every packet
// that crosses the chokepoint:
//
//   1. protocol whitelist (drop anything that is not DNS/HTTP/TLS)
//   2. DNS poisoning
//   3. HTTP host/path rules
//   4. TLS SNI blacklist
//
// The first layer that matches decides the action. Names listed in
// dns_whitelist pass layers 2-4 untouched.

#include "censim/packet.hpp"
#include "censim/types.hpp"
#include "censim/wire.hpp"

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace censim::censor {

using wire::ProtocolClass;

inline const Ipv4 kPrimaryPoisonAddress{10, 10, 34, 34};
inline const Ipv4Cidr kDefaultPoisonPool{Ipv4{10, 10, 34, 0}, 24};
inline constexpr std::uint32_t kDefaultPoisonTtl = 10;

struct DomainPattern {
    std::string domain;
    bool exact = false; // otherwise also matches any subdomain
    std::optional<Ipv4> poison_override;

    bool matches(std::string_view name) const;
};

enum class HttpMatchOn { Host, Path, Both };
enum class HttpAction { BlockPage, Reset };

std::string_view to_string(HttpMatchOn on);
std::string_view to_string(HttpAction action);

struct HttpRule {
    std::string pattern;
    HttpMatchOn match_on = HttpMatchOn::Host;
    bool case_sensitive = true;
    HttpAction action = HttpAction::BlockPage;
};

struct CensorPolicy {
    std::vector<DomainPattern> dns_blacklist;
    std::set<std::string> dns_whitelist; // normalized, exact names
    Ipv4Cidr poison_pool = kDefaultPoisonPool;
    Ipv4 poison_primary = kPrimaryPoisonAddress;
    std::uint32_t poison_ttl_seconds = kDefaultPoisonTtl;
    std::vector<HttpRule> http_rules;
    std::vector<DomainPattern> sni_blacklist;
    bool whitelist_mode = false;
    std::set<ProtocolClass> allowed_classes{ProtocolClass::DnsUdp, ProtocolClass::Http, ProtocolClass::Tls};

    // Forwards everything untouched.
    static CensorPolicy pass_all();

    bool is_exempt(std::string_view name) const;

    // Throws ValidationError naming the broken invariant.
    void validate() const;
};

struct CensorAction {
    enum class Kind { Pass, InjectDns, InjectBlockPage, InjectRst, Drop };

    Kind kind = Kind::Pass;
    Ipv4 address;                  // InjectDns only
    std::uint32_t ttl_seconds = 0; // InjectDns only

    static CensorAction pass() { return {}; }
    static CensorAction drop() { return {Kind::Drop, {}, 0}; }

    bool operator==(const CensorAction&) const = default;
};

std::string_view to_string(CensorAction::Kind kind);

// What the middlebox remembers about one 5-tuple. Owned by the flow.
struct FlowState {
    std::optional<ProtocolClass> protocol; // set by the first data-bearing packet
    bool blocked = false;                  // a Drop was issued; everything after is dropped
    bool inspected = false;                // first data segment already went through layers 2-4

    bool operator==(const FlowState&) const = default;
};

struct PoisonDecision {
    Ipv4 address;
    std::uint32_t ttl_seconds = 0;

    bool operator==(const PoisonDecision&) const = default;
};

enum class WhitelistVerdict { Allow, Drop };

CensorAction apply_policy(const Packet& pkt, FlowState& flow, const CensorPolicy& policy);

std::optional<PoisonDecision> match_dns(std::string_view qname, const CensorPolicy& policy);
std::optional<HttpAction> match_http(const wire::HttpRequest& req, const CensorPolicy& policy);
bool match_sni(const wire::ClientHello& hello, const CensorPolicy& policy);
WhitelistVerdict whitelist_check(ProtocolClass cls, const CensorPolicy& policy);

// 403 page pointing at the block-page host. Byte-stable.
wire::HttpResponse render_blockpage();

// Packets the middlebox sends toward the client for a given action on `trigger`,
// spoofing the destination's identity. Empty for Pass and Drop.
std::vector<Packet> synthesize_injection(const Packet& trigger, const CensorAction& action);

} // namespace censim::censor
