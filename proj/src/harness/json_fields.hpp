#pragma once

// Typed accessors for JSON documents. Failures raise PARSE_ERROR naming the
// field path.

#include "censim/error.hpp"
#include "censim/types.hpp"

#include <json.hpp>

#include <algorithm>
#include <string>
#include <string_view>

namespace censim::harness::fields {

using nlohmann::json;

[[noreturn]] inline void parse_fail(const std::string& path, const std::string& why) {
    throw Error(Errc::ParseError, "field '" + path + "': " + why);
}

inline std::string join(const std::string& path, std::string_view key) {
    return path.empty() ? std::string(key) : path + "." + std::string(key);
}

inline std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

inline const json& require(const json& obj, std::string_view key, const std::string& path) {
    if (!obj.is_object())
        parse_fail(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end())
        parse_fail(join(path, key), "missing");
    return *it;
}

inline const json* optional_field(const json& obj, std::string_view key, const std::string& path) {
    if (!obj.is_object())
        parse_fail(path, "expected an object");
    auto it = obj.find(key);
    return it == obj.end() || it->is_null() ? nullptr : &*it;
}

inline std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string())
        parse_fail(path, "expected a string");
    return j.get<std::string>();
}

inline bool as_bool(const json& j, const std::string& path) {
    if (!j.is_boolean())
        parse_fail(path, "expected true or false");
    return j.get<bool>();
}

inline std::uint64_t as_uint(const json& j, const std::string& path, std::uint64_t max) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0))
        parse_fail(path, "expected a non-negative integer");
    auto v = j.get<std::uint64_t>();
    if (v > max)
        parse_fail(path, "value " + std::to_string(v) + " exceeds " + std::to_string(max));
    return v;
}

inline const json& as_array(const json& j, const std::string& path) {
    if (!j.is_array())
        parse_fail(path, "expected an array");
    return j;
}

inline Ipv4 as_ipv4(const json& j, const std::string& path) {
    auto addr = Ipv4::parse(as_string(j, path));
    if (!addr)
        parse_fail(path, "not a dotted-quad IPv4 address");
    return *addr;
}

inline Ipv4Cidr as_cidr(const json& j, const std::string& path) {
    auto cidr = Ipv4Cidr::parse(as_string(j, path));
    if (!cidr)
        parse_fail(path, "not an IPv4 CIDR block");
    return *cidr;
}

template <typename T, typename F>
inline T as_enum(const json& j, const std::string& path, F&& from_string, std::string_view what) {
    auto text = as_string(j, path);
    auto v = from_string(text);
    if (!v)
        parse_fail(path, "unknown " + std::string(what) + " '" + text + "'");
    return *v;
}

template <typename F>
inline void each(const json& arr, const std::string& path, F&& fn) {
    const auto& a = as_array(arr, path);
    for (std::size_t i = 0; i < a.size(); ++i)
        fn(a[i], index(path, i));
}

// Parses `text`; syntax errors report the 1-based line of `source`.
inline json parse_document(std::string_view text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        auto upto = std::min<std::size_t>(e.byte, text.size());
        auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
        throw Error(Errc::ParseError, source + ":" + std::to_string(line) + ": " + e.what());
    }
}

} // namespace censim::harness::fields
