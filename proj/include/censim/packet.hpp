#pragma once

#include "censim/types.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace censim {

enum class Transport : std::uint8_t { Tcp, Udp };

std::string_view to_string(Transport proto);

class TcpFlags {
public:
    enum Bit : std::uint8_t { Syn = 0x01, Ack = 0x02, Rst = 0x04, Fin = 0x08, Psh = 0x10 };

    constexpr TcpFlags() = default;
    constexpr explicit TcpFlags(std::uint8_t bits) : bits_(bits & 0x1f) {}

    constexpr bool has(Bit bit) const { return (bits_ & bit) != 0; }
    constexpr std::uint8_t bits() const { return bits_; }
    std::string str() const;

    bool operator==(const TcpFlags&) const = default;

private:
    std::uint8_t bits_ = 0;
};

inline constexpr int kDefaultTtl = 64;

// A simulated datagram or segment. tcp_flags is set exactly when proto is Tcp.
struct Packet {
    HostId src;
    HostId dst;
    int ttl = kDefaultTtl;
    Transport proto = Transport::Udp;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    std::optional<TcpFlags> tcp_flags;
    Bytes payload;

    static Packet udp(HostId src, HostId dst, std::uint16_t src_port, std::uint16_t dst_port, Bytes payload,
                      int ttl = kDefaultTtl);
    static Packet tcp(HostId src, HostId dst, std::uint16_t src_port, std::uint16_t dst_port, TcpFlags flags,
                      Bytes payload = {}, int ttl = kDefaultTtl);

    bool is_tcp() const { return proto == Transport::Tcp; }
    bool has_flag(TcpFlags::Bit bit) const { return tcp_flags && tcp_flags->has(bit); }

    // Packet travelling the other way on the same flow, with a fresh ttl.
    Packet reply(TcpFlags flags, Bytes payload = {}) const;
    Packet reply(Bytes payload) const;

    // Throws InvalidPacket when ttl or flag presence violate the invariants.
    void validate() const;

    bool operator==(const Packet&) const = default;
};

// Stable byte encoding of a packet, used for evidence digests and determinism checks.
Bytes serialize(const Packet& pkt);

} // namespace censim
