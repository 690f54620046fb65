#include "censim/netsim.hpp"

#include "censim/error.hpp"

#include <algorithm>
#include <set>

namespace censim::netsim {

namespace {

[[noreturn]] void malformed(const std::string& why) { throw Error(Errc::MalformedSpec, why); }

std::array<std::uint8_t, 32> derive_random(const Bytes& seed_bytes) {
    std::array<std::uint8_t, 32> out{};
    std::uint64_t h = fnv1a(seed_bytes);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (i % 8 == 0)
            h = fnv1a(Bytes{static_cast<std::uint8_t>(i)}, h);
        out[i] = static_cast<std::uint8_t>(h >> ((i % 8) * 8));
    }
    return out;
}

} // namespace

std::string_view to_string(HostRole role) {
    switch (role) {
    case HostRole::Vantage: return "vantage";
    case HostRole::Resolver: return "resolver";
    case HostRole::Origin: return "origin";
    case HostRole::Baseline: return "baseline";
    }
    return "origin";
}

std::optional<HostRole> host_role_from_string(std::string_view text) {
    for (auto role : {HostRole::Vantage, HostRole::Resolver, HostRole::Origin, HostRole::Baseline})
        if (to_string(role) == text)
            return role;
    return std::nullopt;
}

std::string_view to_string(DeliveryOutcome::Kind kind) {
    switch (kind) {
    case DeliveryOutcome::Kind::Delivered: return "DELIVERED";
    case DeliveryOutcome::Kind::TimeExceeded: return "TIME_EXCEEDED";
    case DeliveryOutcome::Kind::InjectedResponse: return "INJECTED_RESPONSE";
    case DeliveryOutcome::Kind::SilentlyDropped: return "SILENTLY_DROPPED";
    }
    return "DELIVERED";
}

std::string_view to_string(ConnectionResult result) {
    switch (result) {
    case ConnectionResult::Established: return "ESTABLISHED";
    case ConnectionResult::ResetAtSyn: return "RESET_AT_SYN";
    case ConnectionResult::SilentTimeout: return "SILENT_TIMEOUT";
    }
    return "SILENT_TIMEOUT";
}

// --- Topology ----------------------------------------------------------------

Topology build_topology(const TopologySpec& spec) {
    if (spec.chokepoint.empty())
        malformed("no chokepoint router named");
    if (spec.vantages.empty())
        malformed("at least one vantage path is required");

    Topology topo;
    topo.chokepoint_ = spec.chokepoint;
    for (const auto& v : spec.vantages) {
        if (v.id.empty())
            malformed("vantage with empty id");
        if (topo.roles_.contains(v.id))
            malformed("duplicate host id " + v.id.value);
        std::set<RouterId> seen;
        int index = 0;
        for (std::size_t i = 0; i < v.path.size(); ++i) {
            if (v.path[i].empty())
                malformed("empty router id on path of " + v.id.value);
            if (!seen.insert(v.path[i]).second)
                malformed("router " + v.path[i].value + " repeated on path of " + v.id.value);
            if (v.path[i] == spec.chokepoint)
                index = static_cast<int>(i) + 1;
        }
        if (index == 0)
            malformed("path of " + v.id.value + " does not cross chokepoint " + spec.chokepoint.value);
        topo.roles_[v.id] = HostRole::Vantage;
        topo.paths_[v.id] = v.path;
        topo.chokepoint_index_[v.id] = index;
    }
    for (const auto& h : spec.hosts) {
        if (h.id.empty())
            malformed("host with empty id");
        if (h.role == HostRole::Vantage)
            malformed("vantage " + h.id.value + " must be declared with a path");
        if (!topo.roles_.emplace(h.id, h.role).second)
            malformed("duplicate host id " + h.id.value);
    }
    return topo;
}

std::vector<HostId> Topology::vantages() const {
    std::vector<HostId> out;
    for (const auto& [id, _] : paths_)
        out.push_back(id);
    return out;
}

std::optional<HostRole> Topology::role(const HostId& host) const {
    auto it = roles_.find(host);
    if (it == roles_.end())
        return std::nullopt;
    return it->second;
}

std::optional<HostId> Topology::first_host(HostRole role) const {
    for (const auto& [id, r] : roles_)
        if (r == role)
            return id;
    return std::nullopt;
}

const std::vector<RouterId>& Topology::path(const HostId& sender) const {
    static const std::vector<RouterId> outside;
    if (auto it = paths_.find(sender); it != paths_.end())
        return it->second;
    if (role(sender) == HostRole::Baseline)
        return outside;
    throw Error(Errc::UnknownHost, "no path for sender " + sender.value);
}

int Topology::chokepoint_index(const HostId& vantage) const {
    auto it = chokepoint_index_.find(vantage);
    if (it == chokepoint_index_.end())
        throw Error(Errc::UnknownHost, "not a vantage: " + vantage.value);
    return it->second;
}

Topology Topology::without_middlebox() const {
    Topology copy = *this;
    copy.middlebox_attached_ = false;
    return copy;
}

// --- Forwarding --------------------------------------------------------------

DeliveryOutcome forward(const Packet& pkt, const Topology& topo, const censor::CensorPolicy& policy,
                        censor::FlowState& flow) {
    pkt.validate();
    if (!topo.has_host(pkt.dst))
        throw Error(Errc::UnknownHost, "unknown destination " + pkt.dst.value);
    const auto& path = topo.path(pkt.src);

    using Kind = DeliveryOutcome::Kind;
    int ttl = pkt.ttl;
    for (std::size_t i = 0; i < path.size(); ++i) {
        const auto& router = path[i];
        int hop = static_cast<int>(i) + 1;
        if (topo.middlebox_attached() && router == topo.chokepoint()) {
            auto action = censor::apply_policy(pkt, flow, policy);
            if (action.kind == censor::CensorAction::Kind::Drop)
                return {Kind::SilentlyDropped, router, hop, {}};
            if (action.kind != censor::CensorAction::Kind::Pass)
                return {Kind::InjectedResponse, router, hop, censor::synthesize_injection(pkt, action)};
        }
        if (--ttl == 0)
            return {Kind::TimeExceeded, router, hop, {}};
    }
    return {Kind::Delivered, {}, 0, {}};
}

// --- Services ----------------------------------------------------------------

Services::Services(std::map<std::string, Ipv4> zone, std::uint32_t zone_ttl) : zone_ttl_(zone_ttl) {
    for (auto& [name, addr] : zone)
        zone_.emplace(normalize_domain(name), addr);
}

std::optional<Ipv4> Services::lookup(std::string_view domain) const {
    auto it = zone_.find(normalize_domain(domain));
    if (it == zone_.end())
        return std::nullopt;
    return it->second;
}

wire::HttpResponse Services::origin_page(std::string_view host, std::string_view path) {
    wire::HttpResponse resp;
    resp.status_code = 200;
    resp.reason = "OK";
    resp.headers = {{"Content-Type", "text/html"}, {"Server", "origin"}};
    auto name = normalize_domain(host);
    resp.body = to_bytes("<html><head><title>" + name + "</title></head><body><h1>" + name + "</h1><p>" +
                         std::string(path) + "</p></body></html>\n");
    return resp;
}

std::vector<Packet> Services::respond(const Packet& pkt, HostRole role) const {
    switch (role) {
    case HostRole::Vantage:
        return {};
    case HostRole::Resolver:
        if (!pkt.is_tcp() && pkt.dst_port == wire::kDnsPort)
            return resolve(pkt);
        return serve(pkt);
    case HostRole::Origin:
    case HostRole::Baseline:
        return serve(pkt);
    }
    return {};
}

std::vector<Packet> Services::resolve(const Packet& pkt) const {
    wire::DnsMessage query;
    try {
        query = wire::decode_dns(pkt.payload);
    } catch (const Error&) {
        return {};
    }
    if (query.is_response)
        return {};
    wire::DnsMessage answer;
    answer.id = query.id;
    answer.is_response = true;
    answer.qname = query.qname;
    answer.qtype = query.qtype;
    auto addr = lookup(query.qname);
    if (query.qtype == wire::kDnsTypeA && addr)
        answer.answers.push_back({query.qname, *addr, zone_ttl_});
    else if (!addr)
        answer.rcode = wire::kRcodeNxDomain;
    return {pkt.reply(wire::encode_dns(answer))};
}

std::vector<Packet> Services::serve(const Packet& pkt) const {
    if (!pkt.is_tcp())
        return {pkt.reply(pkt.payload)};

    if (pkt.payload.empty()) {
        if (pkt.has_flag(TcpFlags::Rst))
            return {};
        if (pkt.has_flag(TcpFlags::Syn))
            return {pkt.reply(TcpFlags(TcpFlags::Syn | TcpFlags::Ack))};
        if (pkt.has_flag(TcpFlags::Fin))
            return {pkt.reply(TcpFlags(TcpFlags::Fin | TcpFlags::Ack))};
        return {};
    }

    try {
        auto req = wire::parse_http_request(pkt.payload);
        auto host = req.host().value_or("");
        wire::HttpResponse resp;
        if (lookup(host)) {
            resp = origin_page(host, req.path);
        } else {
            resp.status_code = 404;
            resp.reason = "Not Found";
            resp.headers = {{"Server", "origin"}};
        }
        return {pkt.reply(wire::render_http_response(resp))};
    } catch (const Error&) {
    }
    try {
        wire::parse_client_hello(pkt.payload);
        return {pkt.reply(wire::build_server_hello(derive_random(pkt.payload)))};
    } catch (const Error&) {
    }
    return {pkt.reply(pkt.payload)};
}

// --- World -------------------------------------------------------------------

World::World(Topology topology, censor::CensorPolicy policy, Services services)
    : topology_(std::move(topology)), policy_(std::move(policy)), services_(std::move(services)) {
    policy_.validate();
}

DeliveryOutcome World::send(const Packet& pkt, censor::FlowState& flow) const {
    auto outcome = forward(pkt, topology_, policy_, flow);
    if (outcome.kind == DeliveryOutcome::Kind::Delivered)
        outcome.response_packets = services_.respond(pkt, *topology_.role(pkt.dst));
    return outcome;
}

World World::with_policy(censor::CensorPolicy policy) const { return World(topology_, std::move(policy), services_); }

// --- TCP-lite ----------------------------------------------------------------

Handshake tcp_handshake(const HostId& client, const HostId& server, std::uint16_t src_port, std::uint16_t dst_port,
                        const World& world, censor::FlowState& flow) {
    Handshake hs;
    auto syn = Packet::tcp(client, server, src_port, dst_port, TcpFlags(TcpFlags::Syn));
    hs.sent.push_back(syn);
    auto outcome = world.send(syn, flow);
    hs.received = outcome.response_packets;

    auto synack = std::find_if(hs.received.begin(), hs.received.end(), [](const Packet& p) {
        return p.has_flag(TcpFlags::Syn) && p.has_flag(TcpFlags::Ack);
    });
    if (synack != hs.received.end()) {
        auto ack = Packet::tcp(client, server, src_port, dst_port, TcpFlags(TcpFlags::Ack));
        hs.sent.push_back(ack);
        world.send(ack, flow);
        hs.result = ConnectionResult::Established;
    } else if (std::any_of(hs.received.begin(), hs.received.end(),
                           [](const Packet& p) { return p.has_flag(TcpFlags::Rst); })) {
        hs.result = ConnectionResult::ResetAtSyn;
    } else {
        hs.result = ConnectionResult::SilentTimeout;
    }
    return hs;
}

ConnectionResult tcp_handshake(const HostId& client, const HostId& server, std::uint16_t dst_port,
                               const World& world) {
    censor::FlowState flow;
    return tcp_handshake(client, server, 49152, dst_port, world, flow).result;
}

} // namespace censim::netsim
