#include "support/fixtures.hpp"

namespace censim::testing {

std::filesystem::path scenario_path(std::string_view file) {
    return std::filesystem::path(CENSIM_SCENARIO_DIR) / std::string(file);
}

const harness::Scenario& june2025() {
    static const auto s = harness::load_scenario(scenario_path("june2025.json"));
    return s;
}

const harness::Scenario& passall() {
    static const auto s = harness::load_scenario(scenario_path("passall.json"));
    return s;
}

const harness::Report& june2025_report() {
    static const auto r = harness::run_scenario(june2025());
    return r;
}

netsim::TopologySpec chain_topology(const std::vector<int>& chokepoint_indices, int tail) {
    netsim::TopologySpec spec;
    spec.chokepoint = RouterId("GW");
    for (std::size_t i = 0; i < chokepoint_indices.size(); ++i) {
        auto id = "v" + std::to_string(i + 1);
        netsim::VantageSpec v{HostId(id), {}};
        for (int k = 1; k < chokepoint_indices[i]; ++k)
            v.path.emplace_back(id + "-r" + std::to_string(k));
        v.path.emplace_back("GW");
        for (int k = 1; k <= tail; ++k)
            v.path.emplace_back("transit" + std::to_string(k));
        spec.vantages.push_back(std::move(v));
    }
    spec.hosts = {{HostId("resolver"), netsim::HostRole::Resolver},
                  {HostId("origin"), netsim::HostRole::Origin},
                  {HostId("baseline"), netsim::HostRole::Baseline}};
    return spec;
}

netsim::World chain_world(const std::vector<int>& chokepoint_indices, censor::CensorPolicy policy,
                          std::map<std::string, Ipv4> zone, int tail) {
    return netsim::World(netsim::build_topology(chain_topology(chokepoint_indices, tail)), std::move(policy),
                         netsim::Services(std::move(zone)));
}

probe::Endpoints endpoints(std::string vantage) {
    return {HostId(std::move(vantage)), HostId("resolver"), HostId("origin")};
}

censor::CensorPolicy sample_policy() {
    censor::CensorPolicy p;
    p.dns_blacklist.push_back({"blocked.test", false, std::nullopt});
    p.dns_whitelist.insert("safe.blocked.test");
    p.http_rules.push_back({"forbidden", censor::HttpMatchOn::Host, true, censor::HttpAction::BlockPage});
    p.http_rules.push_back({"resetme", censor::HttpMatchOn::Host, true, censor::HttpAction::Reset});
    p.sni_blacklist.push_back({"sni-blocked.test", false, std::nullopt});
    p.whitelist_mode = true;
    return p;
}

std::string random_label(Rng& rng, std::size_t min_len, std::size_t max_len) {
    static constexpr std::string_view kAlphabet = "abcdefghijklmnopqrstuvwxyz0123456789";
    auto len = min_len + rng() % (max_len - min_len + 1);
    std::string out;
    for (std::size_t i = 0; i < len; ++i) {
        // no leading or trailing hyphen
        bool inner = i > 0 && i + 1 < len;
        if (inner && rng() % 10 == 0)
            out.push_back('-');
        else
            out.push_back(kAlphabet[rng() % kAlphabet.size()]);
    }
    return out;
}

std::string random_domain(Rng& rng) {
    auto labels = 2 + rng() % 3;
    std::string out;
    for (std::size_t i = 0; i < labels; ++i) {
        if (i)
            out.push_back('.');
        out += random_label(rng, 1, 16);
    }
    return out;
}

Bytes random_bytes(Rng& rng, std::size_t max_len) {
    Bytes out(rng() % (max_len + 1));
    for (auto& b : out)
        b = static_cast<std::uint8_t>(rng());
    return out;
}

Ipv4 random_ipv4(Rng& rng) { return Ipv4(static_cast<std::uint32_t>(rng())); }

} // namespace censim::testing
