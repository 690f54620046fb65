#include "censim/censor.hpp"

#include "censim/error.hpp"

#include <algorithm>
#include <cctype>

namespace censim::censor {

namespace {

constexpr std::string_view kBlockPageBody =
    "<html><head><meta http-equiv=\"Content-Type\" content=\"text/html; charset=utf-8\">"
    "<title>403 Forbidden</title></head><body>"
    "<iframe src=\"http://10.10.34.34/?type=Invalid Site&policy=MainPolicy\" "
    "style=\"width: 100%; height: 100%\" scrolling=\"no\" marginwidth=\"0\" marginheight=\"0\" "
    "frameborder=\"0\" vspace=\"0\" hspace=\"0\"></iframe></body></html>\r\n";

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string strip_port(std::string_view host) {
    auto colon = host.rfind(':');
    return std::string(colon == std::string_view::npos ? host : host.substr(0, colon));
}

// Host header as the rule engine sees it. Case-sensitive rules only recognise
// the canonical "Host" spelling.
std::optional<std::string> rule_host(const wire::HttpRequest& req, bool case_sensitive) {
    if (!case_sensitive)
        return req.host();
    for (const auto& [name, value] : req.headers)
        if (name == "Host")
            return value;
    return std::nullopt;
}

bool contains(std::string_view haystack, std::string_view needle, bool case_sensitive) {
    if (case_sensitive)
        return haystack.find(needle) != std::string_view::npos;
    return lower(haystack).find(lower(needle)) != std::string::npos;
}

bool rule_matches(const HttpRule& rule, const wire::HttpRequest& req) {
    bool on_host = rule.match_on != HttpMatchOn::Path;
    bool on_path = rule.match_on != HttpMatchOn::Host;
    if (on_host) {
        auto host = rule_host(req, rule.case_sensitive);
        if (host && contains(*host, rule.pattern, rule.case_sensitive))
            return true;
    }
    return on_path && contains(req.path, rule.pattern, rule.case_sensitive);
}

template <typename F>
auto or_nullopt(F&& parse) -> std::optional<decltype(parse())> {
    try {
        return parse();
    } catch (const Error&) {
        return std::nullopt;
    }
}

} // namespace

std::string_view to_string(HttpMatchOn on) {
    switch (on) {
    case HttpMatchOn::Host: return "host";
    case HttpMatchOn::Path: return "path";
    case HttpMatchOn::Both: return "both";
    }
    return "host";
}

std::string_view to_string(HttpAction action) { return action == HttpAction::BlockPage ? "BLOCKPAGE" : "RST"; }

std::string_view to_string(CensorAction::Kind kind) {
    switch (kind) {
    case CensorAction::Kind::Pass: return "PASS";
    case CensorAction::Kind::InjectDns: return "INJECT_DNS";
    case CensorAction::Kind::InjectBlockPage: return "INJECT_BLOCKPAGE";
    case CensorAction::Kind::InjectRst: return "INJECT_RST";
    case CensorAction::Kind::Drop: return "DROP";
    }
    return "PASS";
}

bool DomainPattern::matches(std::string_view name) const {
    return exact ? domain_equals(name, domain) : domain_has_suffix(name, domain);
}

CensorPolicy CensorPolicy::pass_all() { return CensorPolicy{}; }

bool CensorPolicy::is_exempt(std::string_view name) const {
    return dns_whitelist.contains(normalize_domain(strip_port(name)));
}

void CensorPolicy::validate() const {
    auto fail = [](const std::string& why) { throw Error(Errc::ValidationError, why); };
    if (!poison_pool.contains(poison_primary))
        fail("poison pool " + poison_pool.str() + " does not contain primary address " + poison_primary.str());
    for (const auto& p : dns_blacklist) {
        if (p.domain.empty())
            fail("empty dns_blacklist pattern");
        if (dns_whitelist.contains(normalize_domain(p.domain)))
            fail("domain in both dns_whitelist and dns_blacklist: " + p.domain);
        if (p.poison_override && !poison_pool.contains(*p.poison_override))
            fail("poison override " + p.poison_override->str() + " outside poison pool for " + p.domain);
    }
    for (const auto& p : sni_blacklist)
        if (p.domain.empty())
            fail("empty sni_blacklist pattern");
    for (const auto& r : http_rules)
        if (r.pattern.empty())
            fail("empty http rule pattern");
    for (const auto& w : dns_whitelist)
        if (w != normalize_domain(w) || w.empty())
            fail("dns_whitelist entry not normalized: " + w);
}

std::optional<PoisonDecision> match_dns(std::string_view qname, const CensorPolicy& policy) {
    if (policy.is_exempt(qname))
        return std::nullopt;
    for (const auto& pattern : policy.dns_blacklist)
        if (pattern.matches(qname))
            return PoisonDecision{pattern.poison_override.value_or(policy.poison_primary), policy.poison_ttl_seconds};
    return std::nullopt;
}

std::optional<HttpAction> match_http(const wire::HttpRequest& req, const CensorPolicy& policy) {
    if (!wire::is_canonical_method(req.method))
        return std::nullopt;
    if (auto host = req.host(); host && policy.is_exempt(*host))
        return std::nullopt;
    for (const auto& rule : policy.http_rules)
        if (rule_matches(rule, req))
            return rule.action;
    return std::nullopt;
}

bool match_sni(const wire::ClientHello& hello, const CensorPolicy& policy) {
    if (!hello.sni || policy.is_exempt(*hello.sni))
        return false;
    return std::any_of(policy.sni_blacklist.begin(), policy.sni_blacklist.end(),
                       [&](const DomainPattern& p) { return p.matches(*hello.sni); });
}

WhitelistVerdict whitelist_check(ProtocolClass cls, const CensorPolicy& policy) {
    if (!policy.whitelist_mode || policy.allowed_classes.contains(cls))
        return WhitelistVerdict::Allow;
    return WhitelistVerdict::Drop;
}

CensorAction apply_policy(const Packet& pkt, FlowState& flow, const CensorPolicy& policy) {
    using Kind = CensorAction::Kind;
    if (flow.blocked)
        return CensorAction::drop();

    if (pkt.is_tcp() && pkt.payload.empty()) {
        // Control segments carry nothing to classify. An opening SYN is let
        // through only toward ports a whitelisted TCP protocol lives on; the
        // flow is judged again on its first data segment.
        bool opening = pkt.has_flag(TcpFlags::Syn) && !pkt.has_flag(TcpFlags::Ack) && !flow.protocol;
        if (opening && policy.whitelist_mode) {
            bool provisional =
                (pkt.dst_port == wire::kHttpPort && policy.allowed_classes.contains(ProtocolClass::Http)) ||
                (pkt.dst_port == wire::kTlsPort && policy.allowed_classes.contains(ProtocolClass::Tls));
            if (!provisional) {
                flow.blocked = true;
                return CensorAction::drop();
            }
        }
        return CensorAction::pass();
    }

    if (!flow.protocol)
        flow.protocol = wire::classify_protocol(pkt.proto, pkt.dst_port, pkt.payload);
    if (whitelist_check(*flow.protocol, policy) == WhitelistVerdict::Drop) {
        flow.blocked = true;
        return CensorAction::drop();
    }

    if (pkt.is_tcp()) {
        if (flow.inspected)
            return CensorAction::pass();
        flow.inspected = true;
    }

    switch (*flow.protocol) {
    case ProtocolClass::DnsUdp: {
        auto msg = or_nullopt([&] { return wire::decode_dns(pkt.payload); });
        if (!msg || msg->is_response)
            return CensorAction::pass();
        if (auto poison = match_dns(msg->qname, policy))
            return {Kind::InjectDns, poison->address, poison->ttl_seconds};
        return CensorAction::pass();
    }
    case ProtocolClass::Http: {
        auto req = or_nullopt([&] { return wire::parse_http_request(pkt.payload); });
        if (!req)
            return CensorAction::pass();
        if (auto action = match_http(*req, policy))
            return {*action == HttpAction::BlockPage ? Kind::InjectBlockPage : Kind::InjectRst, {}, 0};
        return CensorAction::pass();
    }
    case ProtocolClass::Tls: {
        auto hello = or_nullopt([&] { return wire::parse_client_hello(pkt.payload); });
        if (hello && match_sni(*hello, policy))
            return {Kind::InjectRst, {}, 0};
        return CensorAction::pass();
    }
    case ProtocolClass::Other:
        return CensorAction::pass();
    }
    return CensorAction::pass();
}

wire::HttpResponse render_blockpage() {
    wire::HttpResponse resp;
    resp.status_code = 403;
    resp.reason = "Forbidden";
    resp.headers = {{"Content-Type", "text/html; charset=utf-8"}, {"Connection", "close"}};
    resp.body = to_bytes(kBlockPageBody);
    return resp;
}

std::vector<Packet> synthesize_injection(const Packet& trigger, const CensorAction& action) {
    using Kind = CensorAction::Kind;
    switch (action.kind) {
    case Kind::InjectDns: {
        auto query = wire::decode_dns(trigger.payload);
        wire::DnsMessage answer;
        answer.id = query.id;
        answer.is_response = true;
        answer.qname = query.qname;
        answer.qtype = query.qtype;
        answer.answers.push_back({query.qname, action.address, action.ttl_seconds});
        return {trigger.reply(wire::encode_dns(answer))};
    }
    case Kind::InjectBlockPage:
        return {trigger.reply(TcpFlags(TcpFlags::Psh | TcpFlags::Ack), wire::render_http_response(render_blockpage())),
                trigger.reply(TcpFlags(TcpFlags::Fin | TcpFlags::Ack))};
    case Kind::InjectRst:
        return {trigger.reply(TcpFlags(TcpFlags::Rst | TcpFlags::Ack))};
    case Kind::Pass:
    case Kind::Drop:
        return {};
    }
    return {};
}

} // namespace censim::censor
