#include "censim/probe.hpp"

#include "censim/error.hpp"

#include <algorithm>
#include <cctype>
#include <random>

namespace censim::probe {

namespace {

using netsim::ConnectionResult;
using netsim::DeliveryOutcome;

const char* const kVerdictNames[] = {"OK",       "DNS_POISONED", "HTTP_BLOCKPAGE", "TCP_RST",
                                     "TLS_RST_AFTER_CLIENTHELLO", "SILENT_DROP", "TIMEOUT"};

// Every probe draws ports, ids and random bytes from its own stream so runs
// are reproducible no matter how probes are scheduled.
std::mt19937_64 probe_rng(std::uint64_t seed, std::string_view tag) {
    std::uint64_t h = fnv1a(to_bytes(tag), 0xcbf29ce484222325ULL ^ (seed * 0x9e3779b97f4a7c15ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
    return std::mt19937_64(seq);
}

std::uint16_t ephemeral_port(std::mt19937_64& rng) { return static_cast<std::uint16_t>(32768 + rng() % 28232); }

template <std::size_t N>
std::array<std::uint8_t, N> random_bytes(std::mt19937_64& rng) {
    std::array<std::uint8_t, N> out{};
    for (auto& b : out)
        b = static_cast<std::uint8_t>(rng());
    return out;
}

void record(Evidence& ev, Direction dir, const Packet& pkt) { ev.events.push_back({dir, pkt}); }

void record_all(Evidence& ev, Direction dir, const std::vector<Packet>& pkts) {
    for (const auto& p : pkts)
        record(ev, dir, p);
}

void record_handshake(Evidence& ev, const netsim::Handshake& hs) {
    if (hs.sent.empty())
        return;
    record(ev, Direction::Sent, hs.sent.front());
    record_all(ev, Direction::Received, hs.received);
    for (std::size_t i = 1; i < hs.sent.size(); ++i)
        record(ev, Direction::Sent, hs.sent[i]);
}

std::string alternate_case(std::string_view s) {
    std::string out(s);
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto c = static_cast<unsigned char>(out[i]);
        out[i] = static_cast<char>(i % 2 == 0 ? std::tolower(c) : std::toupper(c));
    }
    return out;
}

bool any_reset(const std::vector<Packet>& pkts) {
    return std::any_of(pkts.begin(), pkts.end(), [](const Packet& p) { return p.has_flag(TcpFlags::Rst); });
}

bool contains(const Bytes& haystack, std::string_view needle) {
    return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

TraceOutcome to_trace_outcome(DeliveryOutcome::Kind kind) {
    switch (kind) {
    case DeliveryOutcome::Kind::TimeExceeded: return TraceOutcome::TimeExceeded;
    case DeliveryOutcome::Kind::InjectedResponse: return TraceOutcome::Injected;
    case DeliveryOutcome::Kind::SilentlyDropped: return TraceOutcome::Dropped;
    case DeliveryOutcome::Kind::Delivered: return TraceOutcome::Delivered;
    }
    return TraceOutcome::Delivered;
}

} // namespace

// --- Names -------------------------------------------------------------------

std::string_view to_string(VerdictKind kind) { return kVerdictNames[static_cast<int>(kind)]; }

std::optional<VerdictKind> verdict_from_string(std::string_view text) {
    for (int i = 0; i < 7; ++i)
        if (text == kVerdictNames[i])
            return static_cast<VerdictKind>(i);
    return std::nullopt;
}

std::string_view to_string(HttpMutation m) {
    switch (m) {
    case HttpMutation::None: return "none";
    case HttpMutation::MethodCase: return "method_case";
    case HttpMutation::HeaderCase: return "header_case";
    }
    return "none";
}

std::optional<HttpMutation> http_mutation_from_string(std::string_view text) {
    for (auto m : {HttpMutation::None, HttpMutation::MethodCase, HttpMutation::HeaderCase})
        if (to_string(m) == text)
            return m;
    return std::nullopt;
}

std::string_view to_string(PayloadKind kind) {
    switch (kind) {
    case PayloadKind::Dns: return "dns";
    case PayloadKind::Http: return "http";
    case PayloadKind::Tls: return "tls";
    case PayloadKind::OpenVpn: return "openvpn";
    case PayloadKind::Ssh: return "ssh";
    case PayloadKind::Mqtt: return "mqtt";
    case PayloadKind::Random: return "random";
    case PayloadKind::Empty: return "empty";
    }
    return "empty";
}

std::optional<PayloadKind> payload_kind_from_string(std::string_view text) {
    for (auto k : {PayloadKind::Dns, PayloadKind::Http, PayloadKind::Tls, PayloadKind::OpenVpn, PayloadKind::Ssh,
                   PayloadKind::Mqtt, PayloadKind::Random, PayloadKind::Empty})
        if (to_string(k) == text)
            return k;
    return std::nullopt;
}

std::string_view to_string(Layer layer) {
    switch (layer) {
    case Layer::Dns: return "dns";
    case Layer::Http: return "http";
    case Layer::Tls: return "tls";
    }
    return "dns";
}

std::optional<Layer> layer_from_string(std::string_view text) {
    for (auto l : {Layer::Dns, Layer::Http, Layer::Tls})
        if (to_string(l) == text)
            return l;
    return std::nullopt;
}

std::string_view to_string(TraceOutcome outcome) {
    switch (outcome) {
    case TraceOutcome::TimeExceeded: return "TIME_EXCEEDED";
    case TraceOutcome::Injected: return "INJECTED";
    case TraceOutcome::Dropped: return "DROPPED";
    case TraceOutcome::Delivered: return "DELIVERED";
    }
    return "DELIVERED";
}

std::optional<TraceOutcome> trace_outcome_from_string(std::string_view text) {
    for (auto o : {TraceOutcome::TimeExceeded, TraceOutcome::Injected, TraceOutcome::Dropped, TraceOutcome::Delivered})
        if (to_string(o) == text)
            return o;
    return std::nullopt;
}

// --- Evidence / baseline -----------------------------------------------------

std::size_t Evidence::received_count() const {
    return static_cast<std::size_t>(std::count_if(events.begin(), events.end(),
                                                  [](const CaptureEvent& e) { return e.direction == Direction::Received; }));
}

std::string Evidence::digest() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& e : events) {
        h = fnv1a(Bytes{static_cast<std::uint8_t>(e.direction == Direction::Sent ? 'S' : 'R')}, h);
        h = fnv1a(serialize(e.packet), h);
    }
    return digest_hex(h);
}

void Baseline::set(std::string domain, BaselineEntry entry) {
    entries_[normalize_domain(domain)] = std::move(entry);
}

const BaselineEntry* Baseline::find(std::string_view domain) const {
    auto it = entries_.find(normalize_domain(domain));
    return it == entries_.end() ? nullptr : &it->second;
}

bool ProbeConfig::is_bogon(Ipv4 addr) const {
    return std::any_of(bogons.begin(), bogons.end(), [&](const Ipv4Cidr& c) { return c.contains(addr); });
}

// --- Classification ----------------------------------------------------------

namespace {

VerdictKind classify_dns(const DnsObservation& obs, const BaselineEntry& base, const ProbeConfig& config) {
    if (!obs.any_response)
        return VerdictKind::SilentDrop;
    // Bogon membership decides first; a plain mismatch with the baseline second.
    if (std::any_of(obs.answers.begin(), obs.answers.end(), [&](Ipv4 a) { return config.is_bogon(a); }))
        return VerdictKind::DnsPoisoned;
    if (obs.answers.empty() != base.addresses.empty())
        return VerdictKind::DnsPoisoned;
    for (auto a : obs.answers)
        if (std::find(base.addresses.begin(), base.addresses.end(), a) == base.addresses.end())
            return VerdictKind::DnsPoisoned;
    return VerdictKind::Ok;
}

VerdictKind classify_http(const HttpObservation& obs, const BaselineEntry& base, const ProbeConfig& config) {
    if (obs.handshake == ConnectionResult::SilentTimeout)
        return VerdictKind::SilentDrop;
    if (obs.handshake == ConnectionResult::ResetAtSyn)
        return VerdictKind::TcpRst;
    if (!obs.any_response)
        return VerdictKind::SilentDrop;
    if (obs.response) {
        const auto& resp = *obs.response;
        bool marked = std::any_of(config.blockpage_markers.begin(), config.blockpage_markers.end(),
                                  [&](const std::string& m) { return contains(resp.body, m); });
        if (resp.status_code == 403 && marked)
            return VerdictKind::HttpBlockPage;
        HttpFingerprint seen{resp.status_code, fnv1a(resp.body)};
        auto expected = base.http.find(obs.path);
        if (expected != base.http.end() && seen == expected->second)
            return VerdictKind::Ok;
        // Any other response that differs from the baseline is forged.
        return VerdictKind::HttpBlockPage;
    }
    if (obs.reset)
        return VerdictKind::TcpRst;
    return VerdictKind::Timeout;
}

VerdictKind classify_tls(const TlsObservation& obs) {
    if (obs.handshake == ConnectionResult::SilentTimeout)
        return VerdictKind::SilentDrop;
    if (obs.handshake == ConnectionResult::ResetAtSyn)
        return VerdictKind::TcpRst;
    if (obs.reset_before_server_bytes)
        return VerdictKind::TlsRstAfterClientHello;
    if (obs.server_handshake)
        return VerdictKind::Ok;
    if (!obs.any_response)
        return VerdictKind::SilentDrop;
    return VerdictKind::Timeout;
}

} // namespace

VerdictKind classify(const Observation& observed, const BaselineEntry* baseline, const ProbeConfig& config) {
    if (!baseline)
        throw Error(Errc::MissingBaseline, "no baseline entry for the probed domain");
    return std::visit(
        [&](const auto& obs) {
            using T = std::decay_t<decltype(obs)>;
            if constexpr (std::is_same_v<T, DnsObservation>)
                return classify_dns(obs, *baseline, config);
            else if constexpr (std::is_same_v<T, HttpObservation>)
                return classify_http(obs, *baseline, config);
            else
                return classify_tls(obs);
        },
        observed);
}

// --- Probes ------------------------------------------------------------------

namespace {

struct DnsExchange {
    DnsObservation observation;
    std::optional<wire::DnsMessage> response;
    Evidence evidence;
};

DnsExchange run_dns(const std::string& domain, const Endpoints& at, const netsim::World& world, std::uint64_t seed) {
    auto rng = probe_rng(seed, "dns|" + at.vantage.value + "|" + domain);
    auto id = static_cast<std::uint16_t>(rng());
    auto query = Packet::udp(at.vantage, at.resolver, ephemeral_port(rng), wire::kDnsPort,
                             wire::encode_dns_query(id, domain));
    censor::FlowState flow;
    auto out = world.send(query, flow);

    DnsExchange ex;
    record(ex.evidence, Direction::Sent, query);
    record_all(ex.evidence, Direction::Received, out.response_packets);
    ex.observation.any_response = !out.response_packets.empty();
    for (const auto& p : out.response_packets) {
        try {
            auto msg = wire::decode_dns(p.payload);
            if (!msg.is_response || msg.id != id)
                continue;
            ex.observation.rcode = msg.rcode;
            for (const auto& a : msg.answers) {
                ex.observation.answers.push_back(a.address);
                ex.evidence.dns_answers.push_back(a.address);
                if (!ex.evidence.dns_ttl)
                    ex.evidence.dns_ttl = a.ttl_seconds;
            }
            ex.response = std::move(msg);
            break;
        } catch (const Error&) {
        }
    }
    return ex;
}

struct HttpExchange {
    HttpObservation observation;
    Evidence evidence;
};

HttpExchange run_http(const std::string& domain, const std::string& path, const Endpoints& at,
                      const netsim::World& world, HttpMutation mutation, std::uint64_t seed) {
    auto rng = probe_rng(seed, "http|" + at.vantage.value + "|" + domain + "|" + std::string(to_string(mutation)));
    auto sport = ephemeral_port(rng);
    censor::FlowState flow;
    HttpExchange ex;
    ex.observation.path = path;
    auto hs = netsim::tcp_handshake(at.vantage, at.origin, sport, wire::kHttpPort, world, flow);
    record_handshake(ex.evidence, hs);
    ex.observation.handshake = hs.result;
    if (hs.result != ConnectionResult::Established)
        return ex;

    auto request = Packet::tcp(at.vantage, at.origin, sport, wire::kHttpPort, TcpFlags(TcpFlags::Psh | TcpFlags::Ack),
                               wire::serialize_http_request(build_http_request(domain, path, mutation)));
    auto out = world.send(request, flow);
    record(ex.evidence, Direction::Sent, request);
    record_all(ex.evidence, Direction::Received, out.response_packets);
    ex.observation.any_response = !out.response_packets.empty();
    ex.observation.reset = any_reset(out.response_packets);
    for (const auto& p : out.response_packets) {
        if (p.payload.empty())
            continue;
        try {
            ex.observation.response = wire::parse_http_response(p.payload);
            ex.evidence.http_status = ex.observation.response->status_code;
            break;
        } catch (const Error&) {
        }
    }
    return ex;
}

struct TlsExchange {
    TlsObservation observation;
    Evidence evidence;
};

TlsExchange run_tls(const std::string& domain, const Endpoints& at, const netsim::World& world, bool send_sni,
                    std::uint64_t seed) {
    auto rng = probe_rng(seed, "tls|" + at.vantage.value + "|" + domain + (send_sni ? "" : "|nosni"));
    auto sport = ephemeral_port(rng);
    censor::FlowState flow;
    TlsExchange ex;
    auto hs = netsim::tcp_handshake(at.vantage, at.origin, sport, wire::kTlsPort, world, flow);
    record_handshake(ex.evidence, hs);
    ex.observation.handshake = hs.result;
    if (hs.result != ConnectionResult::Established)
        return ex;

    wire::ClientHelloOptions opts;
    if (send_sni) {
        opts.sni = domain;
        ex.evidence.sni = domain;
    }
    opts.random = random_bytes<32>(rng);
    auto hello = Packet::tcp(at.vantage, at.origin, sport, wire::kTlsPort, TcpFlags(TcpFlags::Psh | TcpFlags::Ack),
                             wire::build_client_hello(opts));
    auto out = world.send(hello, flow);
    record(ex.evidence, Direction::Sent, hello);
    record_all(ex.evidence, Direction::Received, out.response_packets);

    auto& obs = ex.observation;
    obs.any_response = !out.response_packets.empty();
    bool server_bytes = false;
    for (const auto& p : out.response_packets) {
        if (wire::is_server_handshake(p.payload))
            server_bytes = true;
        if (p.has_flag(TcpFlags::Rst) && !server_bytes)
            obs.reset_before_server_bytes = true;
    }
    obs.server_handshake = server_bytes;
    return ex;
}

const BaselineEntry& require_baseline(const Baseline& baseline, const std::string& domain) {
    const auto* entry = baseline.find(domain);
    if (!entry)
        throw Error(Errc::MissingBaseline, "no baseline entry for " + domain);
    return *entry;
}

} // namespace

wire::HttpRequest build_http_request(const std::string& domain, const std::string& path, HttpMutation mutation) {
    wire::HttpRequest req;
    req.method = mutation == HttpMutation::MethodCase ? "gEt" : "GET";
    req.path = path;
    req.version = "HTTP/1.1";
    if (mutation == HttpMutation::HeaderCase)
        req.headers.emplace_back(alternate_case("Host"), alternate_case(domain));
    else
        req.headers.emplace_back("Host", domain);
    req.headers.emplace_back("User-Agent", "censim-probe/1.0");
    req.headers.emplace_back("Accept", "*/*");
    req.headers.emplace_back("Connection", "close");
    return req;
}

BaselineEntry measure_baseline_entry(const netsim::World& world, const Endpoints& at, const std::string& domain,
                                     const ProbeConfig& config) {
    if (world.topology().role(at.vantage) != netsim::HostRole::Baseline)
        throw Error(Errc::ValidationError, at.vantage.value + " is not a baseline host");
    BaselineEntry entry;
    auto dns = run_dns(domain, at, world, config.seed);
    entry.addresses = dns.observation.answers;
    for (auto a : entry.addresses)
        if (config.is_bogon(a))
            throw Error(Errc::ValidationError,
                        "uncensored resolution of " + domain + " returned bogon address " + a.str());
    for (const auto& path : config.http_paths) {
        auto http = run_http(domain, path, at, world, HttpMutation::None, config.seed);
        if (const auto& resp = http.observation.response)
            entry.http[path] = HttpFingerprint{resp->status_code, fnv1a(resp->body)};
    }
    entry.tls_ok = run_tls(domain, at, world, true, config.seed).observation.server_handshake;
    return entry;
}

Baseline measure_baseline(const netsim::World& world, const HostId& baseline_host, const HostId& resolver,
                          const HostId& origin, const std::vector<std::string>& domains, const ProbeConfig& config) {
    Endpoints at{baseline_host, resolver, origin};
    Baseline baseline;
    for (const auto& domain : domains)
        baseline.set(domain, measure_baseline_entry(world, at, domain, config));
    return baseline;
}

DnsProbeResult dns_probe(const std::string& domain, const Endpoints& at, const netsim::World& world,
                         const Baseline& baseline, const ProbeConfig& config) {
    const auto& base = require_baseline(baseline, domain);
    auto ex = run_dns(domain, at, world, config.seed);
    DnsProbeResult result;
    result.verdict.kind = classify(ex.observation, &base, config);
    result.verdict.evidence = std::move(ex.evidence);
    result.response = std::move(ex.response);
    return result;
}

Verdict http_probe(const std::string& domain, const std::string& path, const Endpoints& at,
                   const netsim::World& world, const Baseline& baseline, const ProbeConfig& config,
                   HttpMutation mutation) {
    const auto& base = require_baseline(baseline, domain);
    auto ex = run_http(domain, path, at, world, mutation, config.seed);
    return {classify(ex.observation, &base, config), std::move(ex.evidence)};
}

Verdict tls_probe(const std::string& domain, const Endpoints& at, const netsim::World& world,
                  const Baseline& baseline, const ProbeConfig& config, bool send_sni) {
    const auto& base = require_baseline(baseline, domain);
    auto ex = run_tls(domain, at, world, send_sni, config.seed);
    return {classify(ex.observation, &base, config), std::move(ex.evidence)};
}

// --- Protocol matrix ---------------------------------------------------------

std::string MatrixTarget::label() const {
    return std::string(to_string(proto)) + "/" + std::to_string(port) + ":" + std::string(to_string(payload));
}

Bytes build_payload(PayloadKind kind, std::uint64_t seed) {
    auto rng = probe_rng(seed, "payload|" + std::string(to_string(kind)));
    switch (kind) {
    case PayloadKind::Dns:
        return wire::encode_dns_query(static_cast<std::uint16_t>(rng()), "example.com");
    case PayloadKind::Http:
        return to_bytes("GET / HTTP/1.1\r\nHost: example.com\r\nConnection: close\r\n\r\n");
    case PayloadKind::Tls: {
        wire::ClientHelloOptions opts;
        opts.sni = "example.com";
        opts.random = random_bytes<32>(rng);
        return wire::build_client_hello(opts);
    }
    case PayloadKind::OpenVpn: {
        // P_CONTROL_HARD_RESET_CLIENT_V2, key id 0, session id, empty ack array, packet id 0.
        Bytes out{0x38};
        for (auto b : random_bytes<8>(rng))
            out.push_back(b);
        out.insert(out.end(), {0x00, 0x00, 0x00, 0x00, 0x00});
        return out;
    }
    case PayloadKind::Ssh:
        return to_bytes("SSH-2.0-OpenSSH_9.6\r\n");
    case PayloadKind::Mqtt:
        // CONNECT, protocol level 4, clean session, keepalive 60, client id "censim".
        return Bytes{0x10, 0x12, 0x00, 0x04, 'M', 'Q', 'T', 'T', 0x04, 0x02, 0x00, 0x3c,
                     0x00, 0x06, 'c',  'e',  'n', 's', 'i', 'm'};
    case PayloadKind::Random: {
        auto bytes = random_bytes<32>(rng);
        return Bytes(bytes.begin(), bytes.end());
    }
    case PayloadKind::Empty:
        return {};
    }
    return {};
}

std::vector<MatrixRow> protocol_matrix(const Endpoints& at, const netsim::World& world,
                                       const std::vector<MatrixTarget>& targets, const ProbeConfig& config) {
    if (targets.empty())
        throw Error(Errc::EmptyInput, "protocol matrix needs at least one target");
    std::vector<MatrixRow> rows;
    for (const auto& target : targets) {
        auto rng = probe_rng(config.seed, "matrix|" + at.vantage.value + "|" + target.label());
        auto sport = ephemeral_port(rng);
        auto payload = build_payload(target.payload, config.seed);
        const auto& dst = (target.proto == Transport::Udp && target.port == wire::kDnsPort) ? at.resolver : at.origin;
        MatrixRow row{target, {}};
        auto& ev = row.verdict.evidence;
        censor::FlowState flow;

        if (target.proto == Transport::Udp) {
            auto pkt = Packet::udp(at.vantage, dst, sport, target.port, payload);
            auto out = world.send(pkt, flow);
            record(ev, Direction::Sent, pkt);
            record_all(ev, Direction::Received, out.response_packets);
            row.verdict.kind = out.response_packets.empty() ? VerdictKind::SilentDrop : VerdictKind::Ok;
            rows.push_back(std::move(row));
            continue;
        }

        auto hs = netsim::tcp_handshake(at.vantage, dst, sport, target.port, world, flow);
        record_handshake(ev, hs);
        if (hs.result == ConnectionResult::SilentTimeout) {
            row.verdict.kind = VerdictKind::SilentDrop;
        } else if (hs.result == ConnectionResult::ResetAtSyn) {
            row.verdict.kind = VerdictKind::TcpRst;
        } else if (payload.empty()) {
            row.verdict.kind = VerdictKind::Ok;
        } else {
            auto data = Packet::tcp(at.vantage, dst, sport, target.port, TcpFlags(TcpFlags::Psh | TcpFlags::Ack), payload);
            auto out = world.send(data, flow);
            record(ev, Direction::Sent, data);
            record_all(ev, Direction::Received, out.response_packets);
            if (out.response_packets.empty())
                row.verdict.kind = VerdictKind::SilentDrop;
            else if (any_reset(out.response_packets))
                row.verdict.kind = VerdictKind::TcpRst;
            else
                row.verdict.kind = VerdictKind::Ok;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

// --- Tracing -----------------------------------------------------------------

namespace {

DeliveryOutcome trace_once(Layer layer, const std::string& target, const Endpoints& at, const netsim::World& world,
                           int ttl, std::uint64_t seed) {
    auto rng = probe_rng(seed, "trace|" + std::string(to_string(layer)) + "|" + at.vantage.value + "|" + target +
                                   "|" + std::to_string(ttl));
    auto sport = ephemeral_port(rng);
    censor::FlowState flow;
    if (layer == Layer::Dns) {
        auto query = Packet::udp(at.vantage, at.resolver, sport, wire::kDnsPort,
                                 wire::encode_dns_query(static_cast<std::uint16_t>(rng()), target), ttl);
        return world.send(query, flow);
    }

    std::uint16_t port = layer == Layer::Http ? wire::kHttpPort : wire::kTlsPort;
    auto hs = netsim::tcp_handshake(at.vantage, at.origin, sport, port, world, flow);
    if (hs.result != ConnectionResult::Established) {
        // Interference already hits the SYN; localize that instead.
        censor::FlowState fresh;
        return world.send(Packet::tcp(at.vantage, at.origin, sport, port, TcpFlags(TcpFlags::Syn), {}, ttl), fresh);
    }
    Bytes payload;
    if (layer == Layer::Http) {
        payload = wire::serialize_http_request(build_http_request(target, "/", HttpMutation::None));
    } else {
        wire::ClientHelloOptions opts;
        opts.sni = target;
        opts.random = random_bytes<32>(rng);
        payload = wire::build_client_hello(opts);
    }
    return world.send(
        Packet::tcp(at.vantage, at.origin, sport, port, TcpFlags(TcpFlags::Psh | TcpFlags::Ack), payload, ttl), flow);
}

} // namespace

TraceResult ttl_trace(Layer layer, const std::string& target, const Endpoints& at, const netsim::World& world,
                      int max_ttl, const ProbeConfig& config) {
    if (max_ttl < 1 || max_ttl > 255)
        throw Error(Errc::ProbeError, "max_ttl must be in 1..255");
    TraceResult result;
    result.vantage = at.vantage;
    result.layer = layer;
    result.target = target;
    const auto& path = world.topology().path(at.vantage);
    for (int ttl = 1; ttl <= max_ttl; ++ttl) {
        auto out = trace_once(layer, target, at, world, ttl, config.seed);
        TraceStep step{ttl, to_trace_outcome(out.kind), std::nullopt};
        if (out.kind == DeliveryOutcome::Kind::TimeExceeded)
            step.router = out.router;
        result.steps.push_back(step);
        if (is_interference(step.outcome)) {
            result.first_interfering_ttl = ttl;
            if (static_cast<std::size_t>(ttl) <= path.size())
                result.chokepoint_router = path[static_cast<std::size_t>(ttl) - 1];
            break;
        }
        if (step.outcome == TraceOutcome::Delivered)
            break;
    }
    return result;
}

Consensus consensus_chokepoint(const std::vector<TraceResult>& traces) {
    if (traces.empty())
        throw Error(Errc::EmptyInput, "consensus needs at least one trace");
    Consensus c;
    for (const auto& t : traces) {
        if (!t.chokepoint_router)
            throw Error(Errc::ProbeError, "trace from " + t.vantage.value + " localized no chokepoint");
        c.routers.push_back(*t.chokepoint_router);
    }
    bool same = std::all_of(c.routers.begin(), c.routers.end(), [&](const RouterId& r) { return r == c.routers[0]; });
    if (same) {
        c.kind = Consensus::Kind::Unanimous;
        c.routers.resize(1);
    } else {
        c.kind = Consensus::Kind::Divergent;
    }
    return c;
}

} // namespace censim::probe
