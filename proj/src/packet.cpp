#include "censim/packet.hpp"

#include "censim/error.hpp"

namespace censim {

std::string_view to_string(Transport proto) { return proto == Transport::Tcp ? "tcp" : "udp"; }

std::string TcpFlags::str() const {
    std::string out;
    auto add = [&](Bit bit, const char* name) {
        if (has(bit)) {
            if (!out.empty())
                out += '|';
            out += name;
        }
    };
    add(Syn, "SYN");
    add(Ack, "ACK");
    add(Rst, "RST");
    add(Fin, "FIN");
    add(Psh, "PSH");
    return out.empty() ? "-" : out;
}

Packet Packet::udp(HostId src, HostId dst, std::uint16_t src_port, std::uint16_t dst_port, Bytes payload, int ttl) {
    Packet p;
    p.src = std::move(src);
    p.dst = std::move(dst);
    p.ttl = ttl;
    p.proto = Transport::Udp;
    p.src_port = src_port;
    p.dst_port = dst_port;
    p.payload = std::move(payload);
    return p;
}

Packet Packet::tcp(HostId src, HostId dst, std::uint16_t src_port, std::uint16_t dst_port, TcpFlags flags,
                   Bytes payload, int ttl) {
    Packet p;
    p.src = std::move(src);
    p.dst = std::move(dst);
    p.ttl = ttl;
    p.proto = Transport::Tcp;
    p.src_port = src_port;
    p.dst_port = dst_port;
    p.tcp_flags = flags;
    p.payload = std::move(payload);
    return p;
}

Packet Packet::reply(TcpFlags flags, Bytes payload) const {
    return Packet::tcp(dst, src, dst_port, src_port, flags, std::move(payload));
}

Packet Packet::reply(Bytes payload) const {
    if (is_tcp())
        return reply(TcpFlags(TcpFlags::Psh | TcpFlags::Ack), std::move(payload));
    return Packet::udp(dst, src, dst_port, src_port, std::move(payload));
}

void Packet::validate() const {
    if (ttl < 1 || ttl > 255)
        throw Error(Errc::InvalidPacket, "ttl out of range 1..255: " + std::to_string(ttl));
    if (tcp_flags.has_value() != is_tcp())
        throw Error(Errc::InvalidPacket, "tcp_flags must be present exactly for TCP packets");
}

Bytes serialize(const Packet& pkt) {
    Bytes out;
    auto put_str = [&](const std::string& s) {
        out.push_back(static_cast<std::uint8_t>(s.size()));
        out.insert(out.end(), s.begin(), s.end());
    };
    auto put16 = [&](std::uint16_t v) {
        out.push_back(static_cast<std::uint8_t>(v >> 8));
        out.push_back(static_cast<std::uint8_t>(v));
    };
    put_str(pkt.src.value);
    put_str(pkt.dst.value);
    out.push_back(static_cast<std::uint8_t>(pkt.ttl));
    out.push_back(pkt.is_tcp() ? 6 : 17);
    put16(pkt.src_port);
    put16(pkt.dst_port);
    out.push_back(pkt.tcp_flags ? pkt.tcp_flags->bits() : 0);
    out.insert(out.end(), pkt.payload.begin(), pkt.payload.end());
    return out;
}

} // namespace censim
