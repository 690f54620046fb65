#include "censim/error.hpp"
#include "censim/wire.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>

namespace censim::wire {

namespace {

constexpr std::array<std::string_view, 9> kMethods = {"GET",     "POST",    "HEAD",  "PUT",  "DELETE",
                                                      "OPTIONS", "CONNECT", "TRACE", "PATCH"};

[[noreturn]] void malformed(const std::string& why) { throw Error(Errc::MalformedHttp, why); }

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](unsigned char x, unsigned char y) {
               return std::tolower(x) == std::tolower(y);
           });
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t'))
        s.remove_suffix(1);
    return s;
}

bool is_token(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return c > 0x20 && c < 0x7f && c != ':' && c != '(' && c != ')' && c != ',' && c != ';' && c != '"';
    });
}

struct Head {
    std::string_view start_line;
    HeaderList headers;
    std::size_t body_offset = 0;
};

Head split_head(std::span<const std::uint8_t> bytes) {
    std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    auto end = text.find("\r\n\r\n");
    if (end == std::string_view::npos)
        malformed("head is not terminated by CRLFCRLF");
    Head head;
    head.body_offset = end + 4;
    auto block = text.substr(0, end + 2);
    auto eol = block.find("\r\n");
    head.start_line = block.substr(0, eol);
    if (head.start_line.empty())
        malformed("missing start line");
    std::size_t pos = eol + 2;
    while (pos < block.size()) {
        auto next = block.find("\r\n", pos);
        auto line = block.substr(pos, next - pos);
        pos = next + 2;
        auto colon = line.find(':');
        if (colon == std::string_view::npos)
            malformed("header line without a colon");
        auto name = line.substr(0, colon);
        if (!is_token(name))
            malformed("invalid header name");
        head.headers.emplace_back(std::string(name), std::string(trim(line.substr(colon + 1))));
    }
    return head;
}

std::optional<std::string> find_header(const HeaderList& headers, std::string_view name) {
    for (const auto& [k, v] : headers)
        if (iequals(k, name))
            return v;
    return std::nullopt;
}

void append(Bytes& out, std::string_view s) { out.insert(out.end(), s.begin(), s.end()); }

} // namespace

std::optional<std::string> HttpRequest::host() const { return find_header(headers, "Host"); }

std::optional<std::string> HttpResponse::header(std::string_view name) const { return find_header(headers, name); }

std::span<const std::string_view> canonical_methods() { return kMethods; }

bool is_canonical_method(std::string_view token) {
    return std::find(kMethods.begin(), kMethods.end(), token) != kMethods.end();
}

HttpRequest parse_http_request(std::span<const std::uint8_t> bytes) {
    auto head = split_head(bytes);
    auto line = head.start_line;
    auto sp1 = line.find(' ');
    auto sp2 = sp1 == std::string_view::npos ? sp1 : line.find(' ', sp1 + 1);
    if (sp2 == std::string_view::npos || line.find(' ', sp2 + 1) != std::string_view::npos)
        malformed("request line must be METHOD SP target SP version");
    HttpRequest req;
    req.method = std::string(line.substr(0, sp1));
    req.path = std::string(line.substr(sp1 + 1, sp2 - sp1 - 1));
    req.version = std::string(line.substr(sp2 + 1));
    if (!is_token(req.method))
        malformed("invalid method token");
    if (req.path.empty())
        malformed("empty request target");
    if (!req.version.starts_with("HTTP/"))
        malformed("invalid HTTP version");
    req.headers = std::move(head.headers);
    return req;
}

Bytes serialize_http_request(const HttpRequest& req) {
    Bytes out;
    append(out, req.method);
    append(out, " ");
    append(out, req.path);
    append(out, " ");
    append(out, req.version);
    append(out, "\r\n");
    for (const auto& [name, value] : req.headers) {
        append(out, name);
        append(out, ": ");
        append(out, value);
        append(out, "\r\n");
    }
    append(out, "\r\n");
    return out;
}

Bytes render_http_response(const HttpResponse& resp) {
    if (resp.status_code < 100 || resp.status_code > 599)
        malformed("status code out of range: " + std::to_string(resp.status_code));
    Bytes out;
    append(out, "HTTP/1.1 ");
    append(out, std::to_string(resp.status_code));
    append(out, " ");
    append(out, resp.reason);
    append(out, "\r\n");
    for (const auto& [name, value] : resp.headers) {
        if (iequals(name, "Content-Length"))
            continue;
        append(out, name);
        append(out, ": ");
        append(out, value);
        append(out, "\r\n");
    }
    append(out, "Content-Length: ");
    append(out, std::to_string(resp.body.size()));
    append(out, "\r\n\r\n");
    out.insert(out.end(), resp.body.begin(), resp.body.end());
    return out;
}

HttpResponse parse_http_response(std::span<const std::uint8_t> bytes) {
    auto head = split_head(bytes);
    auto line = head.start_line;
    if (!line.starts_with("HTTP/"))
        malformed("status line does not start with HTTP/");
    auto sp1 = line.find(' ');
    if (sp1 == std::string_view::npos || line.size() < sp1 + 4)
        malformed("truncated status line");
    HttpResponse resp;
    auto code = line.substr(sp1 + 1, 3);
    auto [ptr, ec] = std::from_chars(code.data(), code.data() + code.size(), resp.status_code);
    if (ec != std::errc{} || ptr != code.data() + 3 || resp.status_code < 100 || resp.status_code > 599)
        malformed("invalid status code");
    if (line.size() > sp1 + 4) {
        if (line[sp1 + 4] != ' ')
            malformed("invalid status line");
        resp.reason = std::string(line.substr(sp1 + 5));
    }
    resp.headers = std::move(head.headers);
    auto rest = bytes.subspan(head.body_offset);
    if (auto len = resp.header("Content-Length")) {
        std::size_t n = 0;
        auto [p, e] = std::from_chars(len->data(), len->data() + len->size(), n);
        if (e != std::errc{} || p != len->data() + len->size())
            malformed("invalid Content-Length");
        if (n > rest.size())
            malformed("body shorter than Content-Length");
        rest = rest.first(n);
    }
    resp.body.assign(rest.begin(), rest.end());
    return resp;
}

} // namespace censim::wire
