#pragma once

// Scenario fixtures, small hand-built worlds and random generators shared by
// the unit, property and acceptance binaries.

#include "censim/harness.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace censim::testing {

using Rng = std::mt19937_64;

std::filesystem::path scenario_path(std::string_view file);

// Loaded and validated once per process.
const harness::Scenario& june2025();
const harness::Scenario& passall();
// june2025 run once (parallel runner).
const harness::Report& june2025_report();

// Vantages "v1".."vN"; vantage i reaches the outside through
// chokepoint_indices[i]-1 access routers, then "GW", then `tail` transit
// routers. Hosts resolver, origin, baseline.
netsim::TopologySpec chain_topology(const std::vector<int>& chokepoint_indices, int tail = 1);
netsim::World chain_world(const std::vector<int>& chokepoint_indices, censor::CensorPolicy policy,
                          std::map<std::string, Ipv4> zone = {}, int tail = 1);
probe::Endpoints endpoints(std::string vantage);

// Policy used by the small worlds: one rule per layer, whitelist mode on.
//   dns:  blocked.test (suffix)        http: "forbidden" host, case-sensitive, BLOCKPAGE
//   sni:  sni-blocked.test             http: "resetme" host, case-sensitive, RST
//   exempt: safe.blocked.test
censor::CensorPolicy sample_policy();

// Generators.
std::string random_label(Rng& rng, std::size_t min_len = 1, std::size_t max_len = 20);
std::string random_domain(Rng& rng);
Bytes random_bytes(Rng& rng, std::size_t max_len);
Ipv4 random_ipv4(Rng& rng);
template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
    return items[rng() % items.size()];
}

} // namespace censim::testing
