#include <doctest.h>

#include "censim/error.hpp"
#include "censim/probe.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace censim;
using namespace censim::probe;
using censim::testing::chain_world;
using censim::testing::endpoints;

namespace {

censor::CensorPolicy gateway_policy() {
    censor::CensorPolicy p;
    p.dns_blacklist = {{"twitter.com", false, std::nullopt}};
    p.dns_whitelist = {"google.com"};
    p.http_rules = {{"bbc", censor::HttpMatchOn::Host, true, censor::HttpAction::BlockPage},
                    {"rst-me", censor::HttpMatchOn::Host, true, censor::HttpAction::Reset}};
    p.sni_blacklist = {{"instagram.com", false, std::nullopt}};
    p.whitelist_mode = true;
    return p;
}

const std::vector<std::string> kDomains{"twitter.com", "google.com", "bbc.com", "rst-me.test", "instagram.com"};

struct Fixture {
    netsim::World world = chain_world({3, 2}, gateway_policy());
    ProbeConfig config;
    Baseline baseline = measure_baseline(world, HostId("baseline"), HostId("resolver"), HostId("origin"), kDomains,
                                         config);
    Endpoints at = endpoints("v1");
};

} // namespace

TEST_CASE_FIXTURE(Fixture, "dns_probe") {
    auto poisoned = dns_probe("twitter.com", at, world, baseline, config);
    CHECK(poisoned.verdict.kind == VerdictKind::DnsPoisoned);
    CHECK(poisoned.verdict.evidence.dns_answers == std::vector{Ipv4(10, 10, 34, 34)});
    CHECK(poisoned.verdict.evidence.dns_ttl == 10u);
    REQUIRE(poisoned.response);

    CHECK(dns_probe("google.com", at, world, baseline, config).verdict.kind == VerdictKind::Ok);
    CHECK_THROWS_AS(dns_probe("unmeasured.test", at, world, baseline, config), Error);

    auto open = world.with_policy(censor::CensorPolicy::pass_all());
    CHECK(dns_probe("twitter.com", at, open, baseline, config).verdict.kind == VerdictKind::Ok);
}

TEST_CASE_FIXTURE(Fixture, "http_probe") {
    auto page = http_probe("bbc.com", "/", at, world, baseline, config);
    CHECK(page.kind == VerdictKind::HttpBlockPage);
    CHECK(page.evidence.http_status == 403);

    auto rst = http_probe("rst-me.test", "/", at, world, baseline, config);
    CHECK(rst.kind == VerdictKind::TcpRst);
    CHECK_FALSE(rst.evidence.http_status);

    CHECK(http_probe("bbc.com", "/", at, world, baseline, config, HttpMutation::HeaderCase).kind == VerdictKind::Ok);
    CHECK(http_probe("bbc.com", "/", at, world, baseline, config, HttpMutation::MethodCase).kind == VerdictKind::Ok);
    CHECK(http_probe("google.com", "/", at, world, baseline, config).kind == VerdictKind::Ok);
}

TEST_CASE_FIXTURE(Fixture, "tls_probe") {
    auto reset = tls_probe("instagram.com", at, world, baseline, config);
    CHECK(reset.kind == VerdictKind::TlsRstAfterClientHello);
    CHECK(reset.evidence.sni == "instagram.com");
    CHECK(tls_probe("google.com", at, world, baseline, config).kind == VerdictKind::Ok);

    auto no_sni = tls_probe("instagram.com", at, world, baseline, config, false);
    CHECK(no_sni.kind == VerdictKind::Ok);
    CHECK(censim::testing::predict_verdict(world, at, "instagram.com", Layer::Tls, HttpMutation::None, "/") ==
          VerdictKind::TlsRstAfterClientHello);
}

TEST_CASE_FIXTURE(Fixture, "protocol_matrix") {
    std::vector<MatrixTarget> targets{{Transport::Udp, 53, PayloadKind::Dns},     {Transport::Tcp, 80, PayloadKind::Http},
                                      {Transport::Tcp, 443, PayloadKind::Tls},    {Transport::Udp, 1194, PayloadKind::OpenVpn},
                                      {Transport::Tcp, 22, PayloadKind::Ssh},     {Transport::Tcp, 1883, PayloadKind::Mqtt},
                                      {Transport::Tcp, 80, PayloadKind::Ssh}};
    auto rows = protocol_matrix(at, world, targets, config);
    REQUIRE(rows.size() == targets.size());
    for (int i = 0; i < 3; ++i)
        CHECK_MESSAGE(rows[i].verdict.kind == VerdictKind::Ok, rows[i].target.label());
    for (int i = 3; i < 6; ++i) {
        CHECK_MESSAGE(rows[i].verdict.kind == VerdictKind::SilentDrop, rows[i].target.label());
        CHECK(rows[i].verdict.evidence.received_count() == 0);
    }
    // Handshake on 80 succeeds, the SSH bytes vanish.
    CHECK(rows[6].verdict.kind == VerdictKind::SilentDrop);
    CHECK(targets[0].label() == "udp/53:dns");
    CHECK_THROWS_AS(protocol_matrix(at, world, {}, config), Error);
}

TEST_CASE("build_payload") {
    auto ovpn = build_payload(PayloadKind::OpenVpn, 1);
    CHECK(ovpn.size() == 14);
    CHECK(ovpn[0] == 0x38);
    CHECK(to_string(build_payload(PayloadKind::Ssh, 1)) == "SSH-2.0-OpenSSH_9.6\r\n");
    CHECK(build_payload(PayloadKind::Mqtt, 1)[0] == 0x10);
    CHECK(build_payload(PayloadKind::Empty, 1).empty());
    CHECK(build_payload(PayloadKind::Random, 1) == build_payload(PayloadKind::Random, 1));
    CHECK(build_payload(PayloadKind::Random, 1) != build_payload(PayloadKind::Random, 2));
}

TEST_CASE("build_http_request mutations") {
    auto plain = build_http_request("bbc.com", "/", HttpMutation::None);
    CHECK(plain.method == "GET");
    CHECK(plain.headers[0].first == "Host");
    auto header = build_http_request("bbc.com", "/", HttpMutation::HeaderCase);
    CHECK(header.headers[0].first != "Host");
    CHECK(header.host());
    CHECK(normalize_domain(*header.host()) == "bbc.com");
    CHECK(*header.host() != "bbc.com");
    CHECK(build_http_request("bbc.com", "/", HttpMutation::MethodCase).method == "gEt");
}

TEST_CASE("classify") {
    ProbeConfig config;
    BaselineEntry base;
    base.addresses = {Ipv4(1, 2, 3, 4)};
    base.http["/"] = {200, 42};
    base.tls_ok = true;

    CHECK_THROWS_AS(classify(DnsObservation{}, nullptr, config), Error);
    CHECK(classify(DnsObservation{true, 0, {Ipv4(1, 2, 3, 4)}}, &base, config) == VerdictKind::Ok);
    CHECK(classify(DnsObservation{true, 0, {Ipv4(10, 10, 34, 7)}}, &base, config) == VerdictKind::DnsPoisoned);
    CHECK(classify(DnsObservation{false, 0, {}}, &base, config) == VerdictKind::SilentDrop);

    wire::HttpResponse blockpage = censor::render_blockpage();
    HttpObservation page{"/", netsim::ConnectionResult::Established, true, false, blockpage};
    CHECK(classify(page, &base, config) == VerdictKind::HttpBlockPage);
    HttpObservation rst{"/", netsim::ConnectionResult::Established, true, true, std::nullopt};
    CHECK(classify(rst, &base, config) == VerdictKind::TcpRst);
    HttpObservation silent{"/", netsim::ConnectionResult::Established, false, false, std::nullopt};
    CHECK(classify(silent, &base, config) == VerdictKind::SilentDrop);
    HttpObservation syn_lost{"/", netsim::ConnectionResult::SilentTimeout, false, false, std::nullopt};
    CHECK(classify(syn_lost, &base, config) == VerdictKind::SilentDrop);

    TlsObservation ok_tls{netsim::ConnectionResult::Established, true, false, true};
    CHECK(classify(ok_tls, &base, config) == VerdictKind::Ok);
    TlsObservation reset_tls{netsim::ConnectionResult::Established, true, true, false};
    CHECK(classify(reset_tls, &base, config) == VerdictKind::TlsRstAfterClientHello);
}

TEST_CASE("ttl_trace") {
    ProbeConfig config;
    auto world = chain_world({3, 1}, gateway_policy());
    auto trace = ttl_trace(Layer::Dns, "twitter.com", endpoints("v1"), world, 16, config);
    REQUIRE(trace.steps.size() == 3);
    CHECK(trace.steps[0].outcome == TraceOutcome::TimeExceeded);
    CHECK(trace.steps[0].router == RouterId("v1-r1"));
    CHECK(trace.steps[1].outcome == TraceOutcome::TimeExceeded);
    CHECK(trace.steps[2].outcome == TraceOutcome::Injected);
    CHECK(trace.first_interfering_ttl == 3);
    CHECK(trace.chokepoint_router == RouterId("GW"));

    CHECK(ttl_trace(Layer::Dns, "twitter.com", endpoints("v2"), world, 16, config).first_interfering_ttl == 1);

    auto open = world.with_policy(censor::CensorPolicy::pass_all());
    auto clean = ttl_trace(Layer::Dns, "twitter.com", endpoints("v1"), open, 16, config);
    CHECK_FALSE(clean.first_interfering_ttl);
    CHECK(clean.steps.back().outcome == TraceOutcome::Delivered);

    auto short_trace = ttl_trace(Layer::Tls, "instagram.com", endpoints("v1"), world, 2, config);
    CHECK_FALSE(short_trace.first_interfering_ttl);
    CHECK(short_trace.steps.size() == 2);

    auto dropped = ttl_trace(Layer::Http, "bbc.com", endpoints("v1"),
                             world.with_policy([] {
                                 auto p = gateway_policy();
                                 p.allowed_classes.erase(wire::ProtocolClass::Http);
                                 return p;
                             }()),
                             16, config);
    CHECK(dropped.first_interfering_ttl == 3);
    CHECK(dropped.steps.back().outcome == TraceOutcome::Dropped);
    CHECK_THROWS_AS(ttl_trace(Layer::Dns, "x.test", endpoints("v1"), world, 0, config), Error);
}

TEST_CASE("consensus_chokepoint") {
    TraceResult a, b;
    a.chokepoint_router = RouterId("GW");
    b.chokepoint_router = RouterId("GW");
    auto c = consensus_chokepoint({a, b});
    CHECK(c.kind == Consensus::Kind::Unanimous);
    CHECK(c.routers == std::vector{RouterId("GW")});

    CHECK(consensus_chokepoint({a}).kind == Consensus::Kind::Unanimous);

    b.chokepoint_router = RouterId("GW2");
    auto d = consensus_chokepoint({a, b});
    CHECK(d.kind == Consensus::Kind::Divergent);
    CHECK(d.routers == std::vector{RouterId("GW"), RouterId("GW2")});

    CHECK_THROWS_AS(consensus_chokepoint({}), Error);
    b.chokepoint_router.reset();
    CHECK_THROWS_AS(consensus_chokepoint({a, b}), Error);
}

TEST_CASE("evidence digest tracks content") {
    Evidence e;
    auto empty = e.digest();
    e.events.push_back({Direction::Sent, Packet::udp(HostId("a"), HostId("b"), 1, 53, {})});
    CHECK(e.digest() != empty);
    CHECK(e.digest().size() == 16);
    CHECK(e.received_count() == 0);
}

TEST_CASE("baseline refuses bogon answers") {
    auto world = chain_world({2}, gateway_policy(), {{"odd.test", Ipv4(10, 10, 34, 9)}});
    CHECK_THROWS_AS(measure_baseline(world, HostId("baseline"), HostId("resolver"), HostId("origin"), {"odd.test"},
                                     ProbeConfig{}),
                    Error);
    CHECK_THROWS_AS(measure_baseline_entry(world, endpoints("v1"), "x.test", ProbeConfig{}), Error);
}
