#include "censim/error.hpp"
#include "censim/wire.hpp"

namespace censim::wire {

namespace {

constexpr std::uint16_t kExtServerName = 0x0000;
constexpr std::uint16_t kExtSupportedGroups = 0x000a;
constexpr std::uint16_t kExtSupportedVersions = 0x002b;
constexpr std::uint8_t kNameTypeHostName = 0;

[[noreturn]] void malformed(const std::string& why) { throw Error(Errc::MalformedTls, why); }

void put16(Bytes& out, std::size_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put24(Bytes& out, std::size_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    put16(out, v & 0xffff);
}

Bytes wrap_handshake(std::uint16_t record_version, std::uint8_t type, const Bytes& body) {
    Bytes out;
    out.push_back(kTlsHandshake);
    put16(out, record_version);
    put16(out, body.size() + 4);
    out.push_back(type);
    put24(out, body.size());
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

class Cursor {
public:
    explicit Cursor(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t remaining() const { return bytes_.size() - pos_; }
    std::uint8_t u8() { return take(1)[0]; }
    std::uint16_t u16() {
        auto b = take(2);
        return static_cast<std::uint16_t>((b[0] << 8) | b[1]);
    }
    std::uint32_t u24() {
        auto b = take(3);
        return (std::uint32_t(b[0]) << 16) | (std::uint32_t(b[1]) << 8) | b[2];
    }
    std::span<const std::uint8_t> take(std::size_t n) {
        if (n > remaining())
            malformed("length field exceeds enclosing data");
        auto out = bytes_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

std::optional<std::string> parse_server_name(std::span<const std::uint8_t> ext) {
    Cursor c(ext);
    auto list_len = c.u16();
    if (list_len != c.remaining())
        malformed("server_name list length mismatch");
    std::optional<std::string> host;
    while (c.remaining() > 0) {
        auto type = c.u8();
        auto len = c.u16();
        auto name = c.take(len);
        if (type == kNameTypeHostName && !host)
            host = std::string(name.begin(), name.end());
    }
    return host;
}

} // namespace

Bytes build_client_hello(const ClientHelloOptions& options) {
    Bytes body;
    put16(body, 0x0303);
    body.insert(body.end(), options.random.begin(), options.random.end());
    body.push_back(0); // empty session id
    const std::uint16_t suites[] = {0x1301, 0x1302, 0x1303, 0xc02f};
    put16(body, sizeof suites);
    for (auto s : suites)
        put16(body, s);
    body.push_back(1);
    body.push_back(0);

    Bytes ext;
    if (options.sni) {
        const auto& name = *options.sni;
        if (name.size() > 0xffff - 5)
            malformed("server name too long");
        put16(ext, kExtServerName);
        put16(ext, name.size() + 5);
        put16(ext, name.size() + 3);
        ext.push_back(kNameTypeHostName);
        put16(ext, name.size());
        ext.insert(ext.end(), name.begin(), name.end());
    }
    put16(ext, kExtSupportedGroups);
    put16(ext, 4);
    put16(ext, 2);
    put16(ext, 0x001d);
    put16(ext, kExtSupportedVersions);
    put16(ext, 3);
    ext.push_back(2);
    put16(ext, 0x0304);

    put16(body, ext.size());
    body.insert(body.end(), ext.begin(), ext.end());
    return wrap_handshake(options.record_version, kHandshakeClientHello, body);
}

ClientHello parse_client_hello(std::span<const std::uint8_t> bytes) {
    if (!bytes.empty() && bytes[0] != kTlsHandshake)
        throw Error(Errc::NotClientHello, "record content type " + std::to_string(bytes[0]) + " is not handshake");
    if (bytes.size() < 5)
        malformed("truncated record header");
    Cursor record(bytes);
    record.u8();
    ClientHello hello;
    hello.record_version = record.u16();
    auto record_len = record.u16();
    if (record_len > record.remaining())
        malformed("record length exceeds available bytes");
    auto fragment = record.take(record_len);
    hello.raw.assign(bytes.begin(), bytes.begin() + 5 + record_len);

    if (fragment.size() < 4)
        malformed("truncated handshake header");
    Cursor hs(fragment);
    if (auto type = hs.u8(); type != kHandshakeClientHello)
        throw Error(Errc::NotClientHello, "handshake type " + std::to_string(type) + " is not ClientHello");
    Cursor msg(hs.take(hs.u24()));

    msg.u16(); // client_version
    msg.take(32);
    auto sid_len = msg.u8();
    if (sid_len > 32)
        malformed("session id longer than 32 bytes");
    msg.take(sid_len);
    auto suites_len = msg.u16();
    if (suites_len % 2 != 0)
        malformed("odd cipher suite vector length");
    msg.take(suites_len);
    auto comp_len = msg.u8();
    if (comp_len == 0)
        malformed("empty compression method list");
    msg.take(comp_len);
    if (msg.remaining() == 0)
        return hello;

    auto ext_total = msg.u16();
    if (ext_total != msg.remaining())
        malformed("extensions length mismatch");
    while (msg.remaining() > 0) {
        auto type = msg.u16();
        auto data = msg.take(msg.u16());
        if (type == kExtServerName && !hello.sni)
            hello.sni = parse_server_name(data);
    }
    return hello;
}

Bytes build_server_hello(const std::array<std::uint8_t, 32>& random) {
    Bytes body;
    put16(body, 0x0303);
    body.insert(body.end(), random.begin(), random.end());
    body.push_back(0);
    put16(body, 0x1301);
    body.push_back(0);
    put16(body, 0);
    return wrap_handshake(0x0303, kHandshakeServerHello, body);
}

bool is_server_handshake(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 6 && bytes[0] == kTlsHandshake && bytes[5] != kHandshakeClientHello;
}

} // namespace censim::wire
