#include <doctest.h>

#include "censim/error.hpp"
#include "censim/netsim.hpp"
#include "censim/probe.hpp"
#include "support/fixtures.hpp"

using namespace censim;
using namespace censim::netsim;
using censim::testing::chain_topology;
using censim::testing::chain_world;
using censim::testing::sample_policy;
using OK = DeliveryOutcome::Kind;

namespace {

TopologySpec two_isps() {
    TopologySpec spec;
    spec.chokepoint = RouterId("GW");
    spec.vantages = {{HostId("isp1"), {RouterId("r1"), RouterId("r2"), RouterId("GW"), RouterId("r4")}},
                     {HostId("isp2"), {RouterId("r5"), RouterId("GW"), RouterId("r4")}}};
    spec.hosts = {{HostId("resolver"), HostRole::Resolver}, {HostId("origin"), HostRole::Origin}};
    return spec;
}

Errc spec_error(const TopologySpec& spec) {
    try {
        build_topology(spec);
    } catch (const Error& e) {
        return e.code();
    }
    return Errc::ProbeError;
}

} // namespace

TEST_CASE("build_topology") {
    auto topo = build_topology(two_isps());
    CHECK(topo.chokepoint_index(HostId("isp1")) == 3);
    CHECK(topo.chokepoint_index(HostId("isp2")) == 2);
    CHECK(topo.role(HostId("resolver")) == HostRole::Resolver);
    CHECK(topo.role(HostId("isp1")) == HostRole::Vantage);
    CHECK(topo.vantages().size() == 2);

    TopologySpec single;
    single.chokepoint = RouterId("GW");
    single.vantages = {{HostId("v"), {RouterId("GW")}}};
    CHECK(build_topology(single).chokepoint_index(HostId("v")) == 1);
}

TEST_CASE("build_topology errors") {
    auto spec = two_isps();
    SUBCASE("path without chokepoint") { spec.vantages[1].path = {RouterId("r5"), RouterId("r4")}; }
    SUBCASE("repeated router") { spec.vantages[0].path.push_back(RouterId("r1")); }
    SUBCASE("duplicate host") { spec.hosts.push_back({HostId("isp1"), HostRole::Origin}); }
    SUBCASE("no vantages") { spec.vantages.clear(); }
    SUBCASE("no chokepoint") { spec.chokepoint = RouterId(); }
    SUBCASE("host declared as vantage") { spec.hosts.push_back({HostId("x"), HostRole::Vantage}); }
    CHECK(spec_error(spec) == Errc::MalformedSpec);
}

TEST_CASE("forward") {
    auto topo = build_topology(chain_topology({3}, 1));
    auto policy = sample_policy();
    auto query = [](std::string_view name, int ttl) {
        return Packet::udp(HostId("v1"), HostId("resolver"), 40000, 53, wire::encode_dns_query(1, name), ttl);
    };

    SUBCASE("ttl expires before the chokepoint") {
        censor::FlowState flow;
        auto out = forward(query("a.blocked.test", 2), topo, policy, flow);
        CHECK(out.kind == OK::TimeExceeded);
        CHECK(out.hop_index == 2);
        CHECK(out.router == RouterId("v1-r2"));
        CHECK(flow == censor::FlowState{}); // censor never consulted
    }
    SUBCASE("censor sees the packet before it expires at the chokepoint") {
        censor::FlowState flow;
        auto out = forward(query("a.blocked.test", 3), topo, policy, flow);
        CHECK(out.kind == OK::InjectedResponse);
        CHECK(out.hop_index == 3);
        CHECK(out.router == RouterId("GW"));
    }
    SUBCASE("poisoned answer") {
        censor::FlowState flow;
        auto out = forward(query("a.blocked.test", 64), topo, policy, flow);
        REQUIRE(out.kind == OK::InjectedResponse);
        REQUIRE(out.response_packets.size() == 1);
        auto msg = wire::decode_dns(out.response_packets[0].payload);
        CHECK(msg.answers.at(0).address == Ipv4(10, 10, 34, 34));
    }
    SUBCASE("delivery needs ttl beyond the last router") {
        censor::FlowState a, b;
        CHECK(forward(query("open.test", 4), topo, policy, a).kind == OK::TimeExceeded);
        CHECK(forward(query("open.test", 5), topo, policy, b).kind == OK::Delivered);
    }
    SUBCASE("openvpn dropped silently") {
        censor::FlowState flow;
        auto out = forward(Packet::udp(HostId("v1"), HostId("origin"), 40000, 1194,
                                       probe::build_payload(probe::PayloadKind::OpenVpn, 1)),
                           topo, policy, flow);
        CHECK(out.kind == OK::SilentlyDropped);
        CHECK(out.response_packets.empty());
    }
    SUBCASE("unknown sender") {
        censor::FlowState flow;
        auto pkt = query("open.test", 64);
        pkt.src = HostId("nobody");
        CHECK_THROWS_AS(forward(pkt, topo, policy, flow), Error);
    }
    SUBCASE("detached middlebox") {
        auto bare = topo.without_middlebox();
        CHECK_FALSE(bare.middlebox_attached());
        censor::FlowState flow;
        CHECK(forward(query("a.blocked.test", 64), bare, policy, flow).kind == OK::Delivered);
    }
}

TEST_CASE("tcp_handshake") {
    auto world = chain_world({3, 2}, sample_policy());
    CHECK(tcp_handshake(HostId("v1"), HostId("origin"), 443, world) == ConnectionResult::Established);
    CHECK(tcp_handshake(HostId("v1"), HostId("origin"), 80, world) == ConnectionResult::Established);
    CHECK(tcp_handshake(HostId("v2"), HostId("origin"), 22, world) == ConnectionResult::SilentTimeout);

    censor::FlowState flow;
    auto hs = tcp_handshake(HostId("v1"), HostId("origin"), 41000, 443, world, flow);
    REQUIRE(hs.sent.size() == 2);
    REQUIRE(hs.received.size() == 1);
    CHECK(hs.received[0].has_flag(TcpFlags::Syn));
    CHECK(hs.received[0].has_flag(TcpFlags::Ack));
}

TEST_CASE("services") {
    Services svc({{"known.test", Ipv4(1, 2, 3, 4)}});
    CHECK(svc.lookup("KNOWN.test") == Ipv4(1, 2, 3, 4));
    CHECK_FALSE(svc.lookup("other.test"));

    auto q = Packet::udp(HostId("v"), HostId("resolver"), 40000, 53, wire::encode_dns_query(9, "known.test"));
    auto replies = svc.respond(q, HostRole::Resolver);
    REQUIRE(replies.size() == 1);
    auto msg = wire::decode_dns(replies[0].payload);
    CHECK(msg.id == 9);
    CHECK(msg.answers.at(0).ttl_seconds == Services::kZoneTtl);

    auto nx = svc.respond(
        Packet::udp(HostId("v"), HostId("resolver"), 40000, 53, wire::encode_dns_query(9, "other.test")),
        HostRole::Resolver);
    CHECK(wire::decode_dns(nx.at(0).payload).rcode == wire::kRcodeNxDomain);

    CHECK(Services::origin_page("Known.Test", "/") == Services::origin_page("known.test", "/"));
    CHECK(Services::origin_page("known.test", "/") != Services::origin_page("known.test", "/a"));
}

TEST_CASE("world rejects an invalid policy") {
    auto policy = sample_policy();
    policy.dns_whitelist.insert("blocked.test");
    CHECK_THROWS_AS(chain_world({2}, policy), Error);
}
