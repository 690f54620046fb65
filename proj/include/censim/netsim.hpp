#pragma once

// Message-level network substrate. Vantage points reach the outside world
// through an ordered chain of routers; one router on every chain hosts the
// censor. No loss, no reordering, no latency.

#include "censim/censor.hpp"
#include "censim/packet.hpp"
#include "censim/types.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace censim::netsim {

enum class HostRole { Vantage, Resolver, Origin, Baseline };

std::string_view to_string(HostRole role);
std::optional<HostRole> host_role_from_string(std::string_view text);

struct VantageSpec {
    HostId id;
    std::vector<RouterId> path;
};

struct HostSpec {
    HostId id;
    HostRole role = HostRole::Origin;
};

struct TopologySpec {
    std::vector<VantageSpec> vantages;
    std::vector<HostSpec> hosts; // non-vantage hosts
    RouterId chokepoint;
};

// Validated, immutable topology.
class Topology {
public:
    const RouterId& chokepoint() const { return chokepoint_; }
    bool middlebox_attached() const { return middlebox_attached_; }

    std::vector<HostId> vantages() const;
    bool is_vantage(const HostId& host) const { return paths_.contains(host); }
    bool has_host(const HostId& host) const { return roles_.contains(host); }
    std::optional<HostRole> role(const HostId& host) const;
    std::optional<HostId> first_host(HostRole role) const;

    // Router chain a host's traffic crosses. Empty for baseline hosts, which
    // sit outside the censored network. Throws UnknownHost otherwise.
    const std::vector<RouterId>& path(const HostId& sender) const;
    // 1-based index of the chokepoint on a vantage's path.
    int chokepoint_index(const HostId& vantage) const;

    // Same routers, censor detached: forward() never consults the policy.
    Topology without_middlebox() const;

private:
    friend Topology build_topology(const TopologySpec& spec);

    std::map<HostId, std::vector<RouterId>> paths_;
    std::map<HostId, int> chokepoint_index_;
    std::map<HostId, HostRole> roles_;
    RouterId chokepoint_;
    bool middlebox_attached_ = true;
};

// Throws MalformedSpec when a path omits the chokepoint, repeats a router,
// or host ids collide.
Topology build_topology(const TopologySpec& spec);

struct DeliveryOutcome {
    enum class Kind { Delivered, TimeExceeded, InjectedResponse, SilentlyDropped };

    Kind kind = Kind::Delivered;
    RouterId router;                    // TimeExceeded: router where ttl hit 0; Injected/Dropped: chokepoint
    int hop_index = 0;                  // 1-based; 0 when delivered
    std::vector<Packet> response_packets;

    bool operator==(const DeliveryOutcome&) const = default;
};

std::string_view to_string(DeliveryOutcome::Kind kind);

// Walks the sender's hop list. At the chokepoint the censor inspects the
// packet before the router decrements ttl, so a probe expiring there is still
// seen. Delivered packets carry no responses here; endpoints are modelled by
// World.
DeliveryOutcome forward(const Packet& pkt, const Topology& topo, const censor::CensorPolicy& policy,
                        censor::FlowState& flow);

// Deterministic stand-ins for the outside world: a recursive resolver and a
// catch-all origin that listens on every port.
class Services {
public:
    static constexpr std::uint32_t kZoneTtl = 300;

    Services() = default;
    explicit Services(std::map<std::string, Ipv4> zone, std::uint32_t zone_ttl = kZoneTtl);

    std::optional<Ipv4> lookup(std::string_view domain) const;
    const std::map<std::string, Ipv4>& zone() const { return zone_; }

    std::vector<Packet> respond(const Packet& pkt, HostRole role) const;

    // Page the origin serves for a known domain.
    static wire::HttpResponse origin_page(std::string_view host, std::string_view path);

private:
    std::vector<Packet> resolve(const Packet& pkt) const;
    std::vector<Packet> serve(const Packet& pkt) const;

    std::map<std::string, Ipv4> zone_; // normalized names
    std::uint32_t zone_ttl_ = kZoneTtl;
};

// Topology, policy and endpoints. Immutable once built; safe to share
// read-only between concurrently running probes.
class World {
public:
    World(Topology topology, censor::CensorPolicy policy, Services services);

    const Topology& topology() const { return topology_; }
    const censor::CensorPolicy& policy() const { return policy_; }
    const Services& services() const { return services_; }

    // forward() plus, when delivered, the destination's replies.
    DeliveryOutcome send(const Packet& pkt, censor::FlowState& flow) const;

    World with_policy(censor::CensorPolicy policy) const;

private:
    Topology topology_;
    censor::CensorPolicy policy_;
    Services services_;
};

enum class ConnectionResult { Established, ResetAtSyn, SilentTimeout };

std::string_view to_string(ConnectionResult result);

struct Handshake {
    ConnectionResult result = ConnectionResult::SilentTimeout;
    std::vector<Packet> sent;
    std::vector<Packet> received;
};

// SYN -> SYN/ACK -> ACK through World::send on the caller's flow state.
Handshake tcp_handshake(const HostId& client, const HostId& server, std::uint16_t src_port, std::uint16_t dst_port,
                        const World& world, censor::FlowState& flow);

ConnectionResult tcp_handshake(const HostId& client, const HostId& server, std::uint16_t dst_port,
                               const World& world);

} // namespace censim::netsim
