#pragma once

// Scenario files in, reports out. Field names of both JSON documents are a
// stable external contract, documented in docs/schema.md.

#include "censim/censor.hpp"
#include "censim/netsim.hpp"
#include "censim/probe.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace censim::harness {

inline constexpr std::string_view kToolVersion = "censim 1.0.0";

enum class Category { Blacklisted, Whitelisted, Neutral };

std::string_view to_string(Category c);
std::optional<Category> category_from_string(std::string_view text);

struct DomainEntry {
    std::string name;
    Category category = Category::Neutral;
};

struct TraceSpec {
    probe::Layer layer = probe::Layer::Dns;
    std::string domain;
};

struct MatrixTargetSpec {
    Transport proto = Transport::Tcp;
    std::optional<std::uint16_t> port; // nullopt: seed-chosen high port
    probe::PayloadKind payload = probe::PayloadKind::Empty;
};

struct ProbePlan {
    std::vector<HostId> vantages; // empty: every vantage in the topology
    std::vector<probe::Layer> layers{probe::Layer::Dns, probe::Layer::Http, probe::Layer::Tls};
    std::vector<probe::HttpMutation> mutations;
    std::string http_path = "/";
    std::vector<TraceSpec> traces;
    int max_ttl = 16;
};

struct Scenario {
    std::string name;
    std::uint64_t seed = 0;
    netsim::TopologySpec topology;
    HostId resolver;
    HostId origin;
    HostId baseline;
    std::map<std::string, Ipv4> zone; // explicit records; others are synthesized
    std::uint32_t zone_ttl = netsim::Services::kZoneTtl;
    censor::CensorPolicy policy;
    std::vector<DomainEntry> domains; // sorted by name
    std::vector<MatrixTargetSpec> matrix;
    ProbePlan plan;
    std::vector<Ipv4Cidr> bogons{censor::kDefaultPoisonPool};
    std::vector<std::string> blockpage_markers{"10.10.34.34"};
};

// PARSE_ERROR for unreadable files, bad JSON (with line) or mistyped fields
// (with the field path); VALIDATION_ERROR naming the violated invariant.
Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
void validate_scenario(const Scenario& scenario);

// Which policy layers would act on a domain when probed the way the plan
// probes it. Used to check the declared categories.
std::vector<probe::Layer> matching_layers(const Scenario& scenario, const std::string& domain);

// World and probe settings a scenario implies.
netsim::World build_world(const Scenario& scenario);
probe::ProbeConfig probe_config(const Scenario& scenario);
std::vector<probe::MatrixTarget> resolve_matrix(const Scenario& scenario);
std::vector<HostId> plan_vantages(const Scenario& scenario);

// --- Report ------------------------------------------------------------------

struct VerdictRow {
    std::string domain;
    Category category = Category::Neutral;
    HostId vantage;
    probe::Layer layer = probe::Layer::Dns;
    probe::HttpMutation mutation = probe::HttpMutation::None;
    probe::VerdictKind verdict = probe::VerdictKind::Ok;
    std::string evidence_digest;
    std::size_t packets_received = 0;
    std::vector<Ipv4> dns_answers;
    std::optional<std::uint32_t> dns_ttl;
    std::optional<int> http_status;
    std::optional<std::string> sni;

    std::string key() const;
    bool operator==(const VerdictRow&) const = default;
};

struct MatrixResult {
    HostId vantage;
    probe::MatrixTarget target;
    probe::VerdictKind verdict = probe::VerdictKind::Ok;
    std::size_t response_packets = 0;
    std::string evidence_digest;

    std::string key() const;
    bool operator==(const MatrixResult&) const = default;
};

struct Stats {
    double poisoned_fraction = 0.0; // DNS_POISONED rows / DNS rows
    std::size_t dns_rows = 0;
    std::size_t dns_poisoned = 0;
    std::size_t blockpage_count = 0;
    std::size_t rst_count = 0;
    std::size_t sni_reset_count = 0;
    std::size_t silent_drop_count = 0;
    std::vector<std::string> allowed_protocol_set; // matrix labels OK from every vantage
    std::optional<probe::Consensus> chokepoint_consensus;

    bool operator==(const Stats&) const = default;
};

struct Report {
    std::string scenario;
    std::uint64_t seed = 0;
    std::string tool_version{kToolVersion};
    std::vector<VerdictRow> rows;
    std::vector<MatrixResult> matrix;
    std::vector<probe::TraceResult> traces;
    Stats aggregates;
};

// EMPTY_REPORT when the report holds no DNS verdicts.
Stats aggregate(const Report& report);

nlohmann::json to_json(const Report& report);
// Recomputes the aggregates and rejects the document if they disagree.
Report report_from_json(const nlohmann::json& doc);
std::string serialize_report(const Report& report);
Report parse_report(std::string_view text);
Report load_report(const std::filesystem::path& path);

// --- Campaign ----------------------------------------------------------------

struct Capture {
    std::string name; // file stem, unique within a run
    probe::Evidence evidence;
};

struct RunOptions {
    std::optional<std::uint64_t> seed_override;
    std::vector<Capture>* captures = nullptr; // filled in report order when set
};

// Executes the probe plan: domains sorted, each domain probed DNS -> HTTP
// (plus mutations) -> TLS from every plan vantage, then the protocol matrix,
// then traces. Probe jobs fan out over OpenMP threads; results are merged
// back in that fixed order.
Report run_scenario(const Scenario& scenario, const RunOptions& opts = {});

// Plain loop over the same jobs. Kept as the reference the parallel runner
// must match byte for byte.
Report run_scenario_serial(const Scenario& scenario, const RunOptions& opts = {});

void write_captures(const std::vector<Capture>& captures, const std::filesystem::path& dir);
nlohmann::json evidence_to_json(const probe::Evidence& evidence);

} // namespace censim::harness
