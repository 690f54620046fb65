#include "support/oracles.hpp"

namespace censim::testing {

using netsim::DeliveryOutcome;
using Kind = censor::CensorAction::Kind;

HopExpectation expected_hop(int ttl, int path_len, int chokepoint, Kind action) {
    for (int hop = 1; hop <= path_len; ++hop) {
        if (hop == chokepoint && action != Kind::Pass)
            return {action == Kind::Drop ? DeliveryOutcome::Kind::SilentlyDropped
                                         : DeliveryOutcome::Kind::InjectedResponse,
                    hop};
        if (--ttl == 0)
            return {DeliveryOutcome::Kind::TimeExceeded, hop};
    }
    return {DeliveryOutcome::Kind::Delivered, 0};
}

namespace {

constexpr std::uint16_t kOraclePort = 40000;

Bytes trigger_payload(probe::Layer layer, const std::string& target, probe::HttpMutation mutation,
                      const std::string& path) {
    switch (layer) {
    case probe::Layer::Dns: return wire::encode_dns_query(0x4242, target);
    case probe::Layer::Http:
        return wire::serialize_http_request(probe::build_http_request(target, path, mutation));
    case probe::Layer::Tls: {
        wire::ClientHelloOptions opts;
        opts.sni = target;
        return wire::build_client_hello(opts);
    }
    }
    return {};
}

std::uint16_t layer_port(probe::Layer layer) {
    switch (layer) {
    case probe::Layer::Dns: return wire::kDnsPort;
    case probe::Layer::Http: return wire::kHttpPort;
    case probe::Layer::Tls: return wire::kTlsPort;
    }
    return 0;
}

} // namespace

std::optional<int> brute_force_first_interference(probe::Layer layer, const std::string& target,
                                                  const probe::Endpoints& at, const netsim::World& world,
                                                  int max_ttl) {
    const auto& topo = world.topology();
    const auto& policy = world.policy();
    auto payload = trigger_payload(layer, target, probe::HttpMutation::None, "/");
    for (int ttl = 1; ttl <= max_ttl; ++ttl) {
        censor::FlowState flow;
        DeliveryOutcome out;
        if (layer == probe::Layer::Dns) {
            out = netsim::forward(Packet::udp(at.vantage, at.resolver, kOraclePort, wire::kDnsPort, payload, ttl),
                                  topo, policy, flow);
        } else {
            auto port = layer_port(layer);
            // Connection set up at full ttl, as a trace does.
            auto syn = Packet::tcp(at.vantage, at.origin, kOraclePort, port, TcpFlags(TcpFlags::Syn));
            auto syn_out = netsim::forward(syn, topo, policy, flow);
            if (syn_out.kind != DeliveryOutcome::Kind::Delivered) {
                censor::FlowState fresh;
                syn.ttl = ttl;
                out = netsim::forward(syn, topo, policy, fresh);
            } else {
                netsim::forward(Packet::tcp(at.vantage, at.origin, kOraclePort, port, TcpFlags(TcpFlags::Ack)), topo,
                                policy, flow);
                out = netsim::forward(Packet::tcp(at.vantage, at.origin, kOraclePort, port,
                                                  TcpFlags(TcpFlags::Psh | TcpFlags::Ack), payload, ttl),
                                      topo, policy, flow);
            }
        }
        if (out.kind == DeliveryOutcome::Kind::InjectedResponse || out.kind == DeliveryOutcome::Kind::SilentlyDropped)
            return ttl;
    }
    return std::nullopt;
}

probe::VerdictKind predict_verdict(const netsim::World& world, const probe::Endpoints& at, const std::string& domain,
                                   probe::Layer layer, probe::HttpMutation mutation, const std::string& http_path) {
    const auto& policy = world.policy();
    auto payload = trigger_payload(layer, domain, mutation, http_path);
    censor::FlowState flow;
    censor::CensorAction action;
    if (layer == probe::Layer::Dns) {
        action = censor::apply_policy(Packet::udp(at.vantage, at.resolver, kOraclePort, wire::kDnsPort, payload),
                                      flow, policy);
    } else {
        auto port = layer_port(layer);
        auto syn = censor::apply_policy(Packet::tcp(at.vantage, at.origin, kOraclePort, port, TcpFlags(TcpFlags::Syn)),
                                        flow, policy);
        action = syn.kind != Kind::Pass
                     ? syn
                     : censor::apply_policy(Packet::tcp(at.vantage, at.origin, kOraclePort, port,
                                                        TcpFlags(TcpFlags::Psh | TcpFlags::Ack), payload),
                                            flow, policy);
    }
    switch (action.kind) {
    case Kind::Pass: return probe::VerdictKind::Ok;
    case Kind::InjectDns: return probe::VerdictKind::DnsPoisoned;
    case Kind::InjectBlockPage: return probe::VerdictKind::HttpBlockPage;
    case Kind::InjectRst:
        return layer == probe::Layer::Tls ? probe::VerdictKind::TlsRstAfterClientHello : probe::VerdictKind::TcpRst;
    case Kind::Drop: return probe::VerdictKind::SilentDrop;
    }
    return probe::VerdictKind::Ok;
}

} // namespace censim::testing
