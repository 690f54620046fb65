#pragma once

// Active measurement client: per-layer probes, comparison against an
// uncensored baseline, TTL-limited localization and cross-vantage consensus.

#include "censim/netsim.hpp"
#include "censim/wire.hpp"

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace censim::probe {

enum class VerdictKind {
    Ok,
    DnsPoisoned,
    HttpBlockPage,
    TcpRst,
    TlsRstAfterClientHello,
    SilentDrop,
    Timeout,
};

std::string_view to_string(VerdictKind kind);
std::optional<VerdictKind> verdict_from_string(std::string_view text);

enum class Direction { Sent, Received };

struct CaptureEvent {
    Direction direction = Direction::Sent;
    Packet packet;

    bool operator==(const CaptureEvent&) const = default;
};

// Everything a probe saw, in order, plus the metadata it logged.
struct Evidence {
    std::vector<CaptureEvent> events;
    std::vector<Ipv4> dns_answers;
    std::optional<std::uint32_t> dns_ttl;
    std::optional<int> http_status;
    std::optional<std::string> sni;

    std::size_t received_count() const;
    std::string digest() const;

    bool operator==(const Evidence&) const = default;
};

struct Verdict {
    VerdictKind kind = VerdictKind::Ok;
    Evidence evidence;
};

// --- Baseline ----------------------------------------------------------------

struct HttpFingerprint {
    int status_code = 0;
    std::uint64_t body_hash = 0;

    bool operator==(const HttpFingerprint&) const = default;
};

struct BaselineEntry {
    std::vector<Ipv4> addresses;
    std::map<std::string, HttpFingerprint> http; // by request path
    bool tls_ok = false;
};

class Baseline {
public:
    void set(std::string domain, BaselineEntry entry);
    const BaselineEntry* find(std::string_view domain) const;
    const std::map<std::string, BaselineEntry>& entries() const { return entries_; }

private:
    std::map<std::string, BaselineEntry> entries_;
};

// --- Probe configuration -----------------------------------------------------

struct ProbeConfig {
    // Addresses that are never legitimate answers.
    std::vector<Ipv4Cidr> bogons{censor::kDefaultPoisonPool};
    // A 403 whose body mentions one of these is a block page.
    std::vector<std::string> blockpage_markers{"10.10.34.34"};
    std::vector<std::string> http_paths{"/"}; // paths the baseline fetches
    std::uint64_t seed = 0;

    bool is_bogon(Ipv4 addr) const;
};

// Who sends and where to. `vantage` may also be a baseline host.
struct Endpoints {
    HostId vantage;
    HostId resolver;
    HostId origin;
};

// One domain's baseline as seen from `at.vantage`, which must sit outside the
// censored network.
BaselineEntry measure_baseline_entry(const netsim::World& world, const Endpoints& at, const std::string& domain,
                                     const ProbeConfig& config);

// Measures every domain from an uncensored vantage. Throws ValidationError
// if an uncensored answer lands in a bogon range.
Baseline measure_baseline(const netsim::World& world, const HostId& baseline_host, const HostId& resolver,
                          const HostId& origin, const std::vector<std::string>& domains, const ProbeConfig& config);

// --- Observations and classification ------------------------------------------

struct DnsObservation {
    bool any_response = false;
    std::uint8_t rcode = 0;
    std::vector<Ipv4> answers;

    bool operator==(const DnsObservation&) const = default;
};

struct HttpObservation {
    std::string path;
    netsim::ConnectionResult handshake = netsim::ConnectionResult::Established;
    bool any_response = false;  // to the request segment
    bool reset = false;         // RST seen after the request
    std::optional<wire::HttpResponse> response;

    bool operator==(const HttpObservation&) const = default;
};

struct TlsObservation {
    netsim::ConnectionResult handshake = netsim::ConnectionResult::Established;
    bool any_response = false;
    bool reset_before_server_bytes = false;
    bool server_handshake = false;

    bool operator==(const TlsObservation&) const = default;
};

using Observation = std::variant<DnsObservation, HttpObservation, TlsObservation>;

// Pure. Throws MissingBaseline when `baseline` is null.
VerdictKind classify(const Observation& observed, const BaselineEntry* baseline, const ProbeConfig& config);

// --- Probes ------------------------------------------------------------------

enum class HttpMutation { None, MethodCase, HeaderCase };

std::string_view to_string(HttpMutation m);
std::optional<HttpMutation> http_mutation_from_string(std::string_view text);

struct DnsProbeResult {
    Verdict verdict;
    std::optional<wire::DnsMessage> response;
};

DnsProbeResult dns_probe(const std::string& domain, const Endpoints& at, const netsim::World& world,
                         const Baseline& baseline, const ProbeConfig& config);

Verdict http_probe(const std::string& domain, const std::string& path, const Endpoints& at,
                   const netsim::World& world, const Baseline& baseline, const ProbeConfig& config,
                   HttpMutation mutation = HttpMutation::None);

// send_sni = false omits the server_name extension.
Verdict tls_probe(const std::string& domain, const Endpoints& at, const netsim::World& world,
                  const Baseline& baseline, const ProbeConfig& config, bool send_sni = true);

// Request bytes http_probe puts on the wire for a mutation.
wire::HttpRequest build_http_request(const std::string& domain, const std::string& path, HttpMutation mutation);

// --- Protocol matrix ---------------------------------------------------------

enum class PayloadKind { Dns, Http, Tls, OpenVpn, Ssh, Mqtt, Random, Empty };

std::string_view to_string(PayloadKind kind);
std::optional<PayloadKind> payload_kind_from_string(std::string_view text);

struct MatrixTarget {
    Transport proto = Transport::Tcp;
    std::uint16_t port = 0;
    PayloadKind payload = PayloadKind::Empty;

    std::string label() const; // e.g. "udp/53:dns"
    bool operator==(const MatrixTarget&) const = default;
};

Bytes build_payload(PayloadKind kind, std::uint64_t seed);

struct MatrixRow {
    MatrixTarget target;
    Verdict verdict;
};

std::vector<MatrixRow> protocol_matrix(const Endpoints& at, const netsim::World& world,
                                       const std::vector<MatrixTarget>& targets, const ProbeConfig& config);

// --- Tracing -----------------------------------------------------------------

enum class Layer { Dns, Http, Tls };

std::string_view to_string(Layer layer);
std::optional<Layer> layer_from_string(std::string_view text);

enum class TraceOutcome { TimeExceeded, Injected, Dropped, Delivered };

std::string_view to_string(TraceOutcome outcome);
std::optional<TraceOutcome> trace_outcome_from_string(std::string_view text);
inline bool is_interference(TraceOutcome o) { return o == TraceOutcome::Injected || o == TraceOutcome::Dropped; }

struct TraceStep {
    int ttl = 0;
    TraceOutcome outcome = TraceOutcome::TimeExceeded;
    std::optional<RouterId> router; // reporting router for TimeExceeded

    bool operator==(const TraceStep&) const = default;
};

struct TraceResult {
    HostId vantage;
    Layer layer = Layer::Dns;
    std::string target;
    std::optional<int> first_interfering_ttl;
    std::vector<TraceStep> steps;
    std::optional<RouterId> chokepoint_router;

    bool operator==(const TraceResult&) const = default;
};

// TCP layers open the connection at full ttl and send only the request
// segment with the limited ttl. Stops at the first interference or delivery.
TraceResult ttl_trace(Layer layer, const std::string& target, const Endpoints& at, const netsim::World& world,
                      int max_ttl, const ProbeConfig& config);

struct Consensus {
    enum class Kind { Unanimous, Divergent };

    Kind kind = Kind::Unanimous;
    std::vector<RouterId> routers; // one entry when unanimous, one per trace otherwise

    bool operator==(const Consensus&) const = default;
};

// Throws EmptyInput for no traces, ProbeError if a trace has no router.
Consensus consensus_chokepoint(const std::vector<TraceResult>& traces);

} // namespace censim::probe
