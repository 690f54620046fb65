#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace censim {

enum class Errc {
    MalformedSpec,
    UnknownHost,
    InvalidPacket,
    MalformedDns,
    MalformedHttp,
    NotClientHello,
    MalformedTls,
    EmptyInput,
    MissingBaseline,
    ParseError,
    ValidationError,
    EmptyReport,
    ProbeError,
};

std::string_view to_string(Errc code);

// Every failure the library reports carries one of the codes above so the CLI
// can map it onto an exit status.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace censim
