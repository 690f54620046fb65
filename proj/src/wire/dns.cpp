#include "censim/error.hpp"
#include "censim/wire.hpp"

namespace censim::wire {

namespace {

constexpr std::size_t kHeaderLen = 12;
constexpr int kMaxPointerHops = 16;

[[noreturn]] void malformed(const std::string& why) { throw Error(Errc::MalformedDns, why); }

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t offset() const { return offset_; }
    void seek(std::size_t off) { offset_ = off; }

    std::uint8_t u8() {
        need(1);
        return bytes_[offset_++];
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>((bytes_[offset_] << 8) | bytes_[offset_ + 1]);
        offset_ += 2;
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t hi = u16();
        return (hi << 16) | u16();
    }
    void skip(std::size_t n) {
        need(n);
        offset_ += n;
    }

    // Reads a possibly-compressed name starting at the current offset.
    std::string name() {
        std::string out;
        std::size_t pos = offset_;
        std::optional<std::size_t> resume;
        int hops = 0;
        for (;;) {
            if (pos >= bytes_.size())
                malformed("name runs past end of message");
            std::uint8_t len = bytes_[pos];
            if ((len & 0xc0) == 0xc0) {
                if (pos + 1 >= bytes_.size())
                    malformed("truncated compression pointer");
                if (++hops > kMaxPointerHops)
                    malformed("compression pointer loop");
                if (!resume)
                    resume = pos + 2;
                pos = static_cast<std::size_t>(((len & 0x3f) << 8) | bytes_[pos + 1]);
                continue;
            }
            if ((len & 0xc0) != 0)
                malformed("reserved label type");
            if (len == 0) {
                ++pos;
                break;
            }
            if (pos + 1 + len > bytes_.size())
                malformed("label runs past end of message");
            if (!out.empty())
                out += '.';
            for (std::size_t i = 0; i < len; ++i) {
                auto c = bytes_[pos + 1 + i];
                if (c >= 0x80 || c == '.')
                    malformed("label byte outside the ASCII hostname set");
                out += static_cast<char>(c);
            }
            pos += 1 + len;
        }
        offset_ = resume.value_or(pos);
        validate_qname(out);
        return out;
    }

private:
    void need(std::size_t n) const {
        if (offset_ + n > bytes_.size())
            malformed("truncated message");
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t offset_ = 0;
};

void put16(Bytes& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put32(Bytes& out, std::uint32_t v) {
    put16(out, static_cast<std::uint16_t>(v >> 16));
    put16(out, static_cast<std::uint16_t>(v));
}

void put_name(Bytes& out, std::string_view name) {
    // absolute form "a.b." encodes the same as "a.b"
    if (name.size() > 1 && name.back() == '.')
        name.remove_suffix(1);
    validate_qname(name);
    std::size_t start = 0;
    while (start <= name.size()) {
        auto dot = name.find('.', start);
        auto label = name.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start);
        out.push_back(static_cast<std::uint8_t>(label.size()));
        out.insert(out.end(), label.begin(), label.end());
        if (dot == std::string_view::npos)
            break;
        start = dot + 1;
    }
    out.push_back(0);
}

} // namespace

void validate_qname(std::string_view qname) {
    if (qname.empty())
        malformed("empty name");
    if (qname.size() > 253)
        malformed("name longer than 253 bytes");
    std::size_t label = 0;
    for (char c : qname) {
        if (static_cast<unsigned char>(c) >= 0x80)
            malformed("non-ASCII byte in name");
        if (c == '.') {
            if (label == 0)
                malformed("empty label in name");
            label = 0;
            continue;
        }
        if (++label > 63)
            malformed("label longer than 63 bytes");
    }
    if (label == 0)
        malformed("empty label in name");
}

Bytes encode_dns_query(std::uint16_t id, std::string_view qname) {
    DnsMessage msg;
    msg.id = id;
    msg.qname = std::string(qname);
    return encode_dns(msg);
}

Bytes encode_dns(const DnsMessage& msg) {
    if (!msg.is_response && !msg.answers.empty())
        malformed("query messages carry no answers");
    Bytes out;
    out.reserve(64);
    put16(out, msg.id);
    std::uint16_t flags = msg.is_response ? static_cast<std::uint16_t>(0x8180 | (msg.rcode & 0x0f)) : 0x0100;
    put16(out, flags);
    put16(out, 1);
    put16(out, static_cast<std::uint16_t>(msg.answers.size()));
    put16(out, 0);
    put16(out, 0);
    put_name(out, msg.qname);
    put16(out, msg.qtype);
    put16(out, kDnsClassIn);
    for (const auto& ans : msg.answers) {
        put_name(out, ans.name);
        put16(out, kDnsTypeA);
        put16(out, kDnsClassIn);
        put32(out, ans.ttl_seconds);
        put16(out, 4);
        put32(out, ans.address.value());
    }
    return out;
}

DnsMessage decode_dns(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderLen)
        malformed("message shorter than the 12-byte header");
    Reader r(bytes);
    DnsMessage msg;
    msg.id = r.u16();
    std::uint16_t flags = r.u16();
    msg.is_response = (flags & 0x8000) != 0;
    msg.rcode = static_cast<std::uint8_t>(flags & 0x0f);
    std::uint16_t qdcount = r.u16();
    std::uint16_t ancount = r.u16();
    r.u16();
    r.u16();
    if (qdcount != 1)
        malformed("expected exactly one question, got " + std::to_string(qdcount));
    if (!msg.is_response && ancount != 0)
        malformed("query carries answer records");
    msg.qname = r.name();
    msg.qtype = r.u16();
    if (r.u16() != kDnsClassIn)
        malformed("question class is not IN");
    for (std::uint16_t i = 0; i < ancount; ++i) {
        auto name = r.name();
        auto type = r.u16();
        auto cls = r.u16();
        auto ttl = r.u32();
        auto rdlen = r.u16();
        if (type == kDnsTypeA && cls == kDnsClassIn) {
            if (rdlen != 4)
                malformed("A record with rdlength " + std::to_string(rdlen));
            msg.answers.push_back({std::move(name), Ipv4(r.u32()), ttl});
        } else {
            r.skip(rdlen);
        }
    }
    return msg;
}

} // namespace censim::wire
