#include <doctest.h>

#include "censim/error.hpp"
#include "censim/packet.hpp"
#include "censim/types.hpp"

using namespace censim;

TEST_CASE("ipv4 parse and print") {
    auto a = Ipv4::parse("10.10.34.34");
    REQUIRE(a);
    CHECK(a->str() == "10.10.34.34");
    CHECK(a->value() == 0x0a0a2222u);
    CHECK(*a == Ipv4(10, 10, 34, 34));
    CHECK_FALSE(Ipv4::parse("10.10.34"));
    CHECK_FALSE(Ipv4::parse("10.10.34.256"));
    CHECK_FALSE(Ipv4::parse("10.10.34.34.1"));
    CHECK_FALSE(Ipv4::parse("a.b.c.d"));
    CHECK_FALSE(Ipv4::parse(""));
}

TEST_CASE("cidr containment") {
    auto pool = Ipv4Cidr::parse("10.10.34.0/24");
    REQUIRE(pool);
    CHECK(pool->contains(Ipv4(10, 10, 34, 34)));
    CHECK(pool->contains(Ipv4(10, 10, 34, 7)));
    CHECK_FALSE(pool->contains(Ipv4(10, 10, 35, 1)));
    CHECK(pool->str() == "10.10.34.0/24");
    CHECK(Ipv4Cidr::parse("0.0.0.0/0")->contains(Ipv4(8, 8, 8, 8)));
    CHECK(Ipv4Cidr::parse("1.2.3.4/32")->contains(Ipv4(1, 2, 3, 4)));
    CHECK_FALSE(Ipv4Cidr::parse("1.2.3.4/33"));
    CHECK_FALSE(Ipv4Cidr::parse("1.2.3.4"));
    CHECK_THROWS_AS(Ipv4Cidr(Ipv4(1, 2, 3, 4), 40), Error);
}

TEST_CASE("domain helpers") {
    CHECK(normalize_domain("WWW.Example.COM.") == "www.example.com");
    CHECK(domain_equals("FACEBOOK.COM", "facebook.com"));
    CHECK(domain_equals("facebook.com.", "facebook.com"));
    CHECK(domain_has_suffix("m.facebook.com", "facebook.com"));
    CHECK(domain_has_suffix("facebook.com", "facebook.com"));
    CHECK_FALSE(domain_has_suffix("notfacebook.com", "facebook.com"));
    CHECK_FALSE(domain_has_suffix("facebook.com", "m.facebook.com"));
}

TEST_CASE("fnv1a digest is stable") {
    CHECK(fnv1a({}) == 0xcbf29ce484222325ULL);
    CHECK(fnv1a(to_bytes("a")) == 0xaf63dc4c8601ec8cULL);
    CHECK(digest_hex(0xabcULL) == "0000000000000abc");
    CHECK(hex(Bytes{0x00, 0xff, 0x10}) == "00ff10");
}

TEST_CASE("error messages carry the code") {
    Error e(Errc::MalformedSpec, "path misses chokepoint");
    CHECK(e.code() == Errc::MalformedSpec);
    CHECK(std::string(e.what()) == "MALFORMED_SPEC: path misses chokepoint");
}

TEST_CASE("packet invariants") {
    auto p = Packet::tcp(HostId("a"), HostId("b"), 1000, 80, TcpFlags(TcpFlags::Syn));
    CHECK(p.ttl == 64);
    CHECK(p.has_flag(TcpFlags::Syn));
    CHECK_NOTHROW(p.validate());

    auto r = p.reply(TcpFlags(TcpFlags::Syn | TcpFlags::Ack));
    CHECK(r.src == HostId("b"));
    CHECK(r.dst == HostId("a"));
    CHECK(r.src_port == 80);
    CHECK(r.dst_port == 1000);
    CHECK(r.tcp_flags->str() == "SYN|ACK");

    auto bad = p;
    bad.ttl = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad.ttl = 256;
    CHECK_THROWS_AS(bad.validate(), Error);

    auto udp = Packet::udp(HostId("a"), HostId("b"), 1, 53, {});
    CHECK_NOTHROW(udp.validate());
    udp.tcp_flags = TcpFlags(TcpFlags::Ack);
    CHECK_THROWS_AS(udp.validate(), Error);
}

TEST_CASE("packet serialization separates fields") {
    auto a = Packet::udp(HostId("a"), HostId("b"), 1, 53, to_bytes("x"));
    auto b = a;
    b.ttl = 63;
    CHECK(serialize(a) != serialize(b));
    CHECK(serialize(a) == serialize(Packet::udp(HostId("a"), HostId("b"), 1, 53, to_bytes("x"))));
    auto c = Packet::udp(HostId("ab"), HostId(""), 1, 53, to_bytes("x"));
    auto d = Packet::udp(HostId("a"), HostId("b"), 1, 53, to_bytes("x"));
    CHECK(serialize(c) != serialize(d));
}
