#pragma once

// Randomized invariant checks. Each property runs `cases` generated inputs
// from its own seed and reports how many failed; the unit suite and the
// acceptance binary share them.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace censim::testing {

struct PropertyResult {
    std::string name;
    int cases = 0;
    int failures = 0;
    std::string first_failure;

    bool ok() const { return cases > 0 && failures == 0; }
};

using Property = std::function<PropertyResult(std::uint64_t seed, int cases)>;

struct NamedProperty {
    std::string name;
    Property run;
};

PropertyResult dns_codec_roundtrip(std::uint64_t seed, int cases);
PropertyResult http_request_roundtrip(std::uint64_t seed, int cases);
PropertyResult http_response_roundtrip(std::uint64_t seed, int cases);
PropertyResult client_hello_roundtrip(std::uint64_t seed, int cases);
PropertyResult whitelist_precedence(std::uint64_t seed, int cases);
PropertyResult exemption_totality(std::uint64_t seed, int cases);
PropertyResult silent_drop_zero_bytes(std::uint64_t seed, int cases);
PropertyResult ttl_reachability(std::uint64_t seed, int cases);
PropertyResult censor_locality(std::uint64_t seed, int cases);
PropertyResult chokepoint_localization(std::uint64_t seed, int cases);
PropertyResult classifier_totality(std::uint64_t seed, int cases);

// Codec round-trips first, then the policy and network properties.
std::vector<NamedProperty> all_properties();

} // namespace censim::testing
