#include "censim/error.hpp"
#include "censim/harness.hpp"
#include "json_fields.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace censim::harness {

using nlohmann::json;
using namespace fields;

namespace {

// Synthesized zone records land in 198.18.0.0/15, which never overlaps the
// poison pool.
constexpr std::uint32_t kSyntheticBase = (198u << 24) | (18u << 16);
constexpr std::uint32_t kSyntheticSpan = 1u << 17;

[[noreturn]] void invalid(const std::string& why) { throw Error(Errc::ValidationError, why); }

censor::DomainPattern parse_pattern(const json& j, const std::string& path) {
    censor::DomainPattern p;
    if (j.is_string()) {
        p.domain = j.get<std::string>();
        return p;
    }
    p.domain = as_string(require(j, "domain", path), join(path, "domain"));
    if (auto* e = optional_field(j, "exact", path))
        p.exact = as_bool(*e, join(path, "exact"));
    if (auto* a = optional_field(j, "poison", path))
        p.poison_override = as_ipv4(*a, join(path, "poison"));
    return p;
}

censor::CensorPolicy parse_policy(const json& j, const std::string& path) {
    auto policy = censor::CensorPolicy::pass_all();
    if (auto* f = optional_field(j, "dns_blacklist", path))
        each(*f, join(path, "dns_blacklist"),
             [&](const json& e, const std::string& p) { policy.dns_blacklist.push_back(parse_pattern(e, p)); });
    if (auto* f = optional_field(j, "dns_whitelist", path))
        each(*f, join(path, "dns_whitelist"),
             [&](const json& e, const std::string& p) { policy.dns_whitelist.insert(normalize_domain(as_string(e, p))); });
    if (auto* f = optional_field(j, "poison_pool", path))
        policy.poison_pool = as_cidr(*f, join(path, "poison_pool"));
    if (auto* f = optional_field(j, "poison_primary", path))
        policy.poison_primary = as_ipv4(*f, join(path, "poison_primary"));
    if (auto* f = optional_field(j, "poison_ttl_seconds", path))
        policy.poison_ttl_seconds = static_cast<std::uint32_t>(as_uint(*f, join(path, "poison_ttl_seconds"), 0xffffffff));
    if (auto* f = optional_field(j, "http_rules", path)) {
        each(*f, join(path, "http_rules"), [&](const json& e, const std::string& p) {
            censor::HttpRule rule;
            rule.pattern = as_string(require(e, "pattern", p), join(p, "pattern"));
            if (auto* m = optional_field(e, "match_on", p))
                rule.match_on = as_enum<censor::HttpMatchOn>(*m, join(p, "match_on"), [](std::string_view t) {
                    std::optional<censor::HttpMatchOn> out;
                    for (auto v : {censor::HttpMatchOn::Host, censor::HttpMatchOn::Path, censor::HttpMatchOn::Both})
                        if (censor::to_string(v) == t)
                            out = v;
                    return out;
                }, "match_on");
            if (auto* c = optional_field(e, "case_sensitive", p))
                rule.case_sensitive = as_bool(*c, join(p, "case_sensitive"));
            if (auto* a = optional_field(e, "action", p))
                rule.action = as_enum<censor::HttpAction>(*a, join(p, "action"), [](std::string_view t) {
                    std::optional<censor::HttpAction> out;
                    for (auto v : {censor::HttpAction::BlockPage, censor::HttpAction::Reset})
                        if (censor::to_string(v) == t)
                            out = v;
                    return out;
                }, "action");
            policy.http_rules.push_back(std::move(rule));
        });
    }
    if (auto* f = optional_field(j, "sni_blacklist", path))
        each(*f, join(path, "sni_blacklist"),
             [&](const json& e, const std::string& p) { policy.sni_blacklist.push_back(parse_pattern(e, p)); });
    if (auto* f = optional_field(j, "whitelist_mode", path))
        policy.whitelist_mode = as_bool(*f, join(path, "whitelist_mode"));
    if (auto* f = optional_field(j, "allowed_classes", path)) {
        policy.allowed_classes.clear();
        each(*f, join(path, "allowed_classes"), [&](const json& e, const std::string& p) {
            policy.allowed_classes.insert(
                as_enum<wire::ProtocolClass>(e, p, wire::protocol_class_from_string, "protocol class"));
        });
    }
    return policy;
}

netsim::TopologySpec parse_topology(const json& j, const std::string& path) {
    netsim::TopologySpec spec;
    spec.chokepoint = RouterId(as_string(require(j, "chokepoint", path), join(path, "chokepoint")));
    each(require(j, "vantages", path), join(path, "vantages"), [&](const json& v, const std::string& p) {
        netsim::VantageSpec vs;
        vs.id = HostId(as_string(require(v, "id", p), join(p, "id")));
        each(require(v, "path", p), join(p, "path"),
             [&](const json& r, const std::string& rp) { vs.path.emplace_back(as_string(r, rp)); });
        spec.vantages.push_back(std::move(vs));
    });
    if (auto* hosts = optional_field(j, "hosts", path)) {
        each(*hosts, join(path, "hosts"), [&](const json& h, const std::string& p) {
            netsim::HostSpec hs;
            hs.id = HostId(as_string(require(h, "id", p), join(p, "id")));
            hs.role = as_enum<netsim::HostRole>(require(h, "role", p), join(p, "role"), netsim::host_role_from_string,
                                                "host role");
            spec.hosts.push_back(std::move(hs));
        });
    }
    return spec;
}

std::vector<DomainEntry> read_domain_list(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in)
        throw Error(Errc::ParseError, "cannot open domain list " + file.string());
    std::vector<DomainEntry> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line.front() == '#')
            continue;
        auto comma = line.find(',');
        DomainEntry entry;
        entry.name = line.substr(0, comma);
        auto cat = comma == std::string::npos ? std::string("neutral") : line.substr(comma + 1);
        auto parsed = category_from_string(cat);
        if (!parsed)
            throw Error(Errc::ParseError,
                        file.string() + ":" + std::to_string(lineno) + ": unknown category '" + cat + "'");
        entry.category = *parsed;
        out.push_back(std::move(entry));
    }
    return out;
}

MatrixTargetSpec parse_target(const json& j, const std::string& path) {
    MatrixTargetSpec t;
    auto proto = as_string(require(j, "proto", path), join(path, "proto"));
    if (proto == "tcp")
        t.proto = Transport::Tcp;
    else if (proto == "udp")
        t.proto = Transport::Udp;
    else
        parse_fail(join(path, "proto"), "expected 'tcp' or 'udp'");
    const auto& port = require(j, "port", path);
    if (port.is_string()) {
        if (port.get<std::string>() != "random_high")
            parse_fail(join(path, "port"), "expected a port number or 'random_high'");
    } else {
        t.port = static_cast<std::uint16_t>(as_uint(port, join(path, "port"), 65535));
    }
    t.payload = as_enum<probe::PayloadKind>(require(j, "payload", path), join(path, "payload"),
                                            probe::payload_kind_from_string, "payload kind");
    return t;
}

ProbePlan parse_plan(const json& j, const std::string& path) {
    ProbePlan plan;
    if (auto* f = optional_field(j, "vantages", path))
        each(*f, join(path, "vantages"),
             [&](const json& e, const std::string& p) { plan.vantages.emplace_back(as_string(e, p)); });
    if (auto* f = optional_field(j, "layers", path)) {
        plan.layers.clear();
        each(*f, join(path, "layers"), [&](const json& e, const std::string& p) {
            plan.layers.push_back(as_enum<probe::Layer>(e, p, probe::layer_from_string, "layer"));
        });
    }
    if (auto* f = optional_field(j, "mutations", path))
        each(*f, join(path, "mutations"), [&](const json& e, const std::string& p) {
            plan.mutations.push_back(as_enum<probe::HttpMutation>(e, p, probe::http_mutation_from_string, "mutation"));
        });
    if (auto* f = optional_field(j, "http_path", path))
        plan.http_path = as_string(*f, join(path, "http_path"));
    if (auto* f = optional_field(j, "max_ttl", path))
        plan.max_ttl = static_cast<int>(as_uint(*f, join(path, "max_ttl"), 255));
    if (auto* f = optional_field(j, "traces", path))
        each(*f, join(path, "traces"), [&](const json& e, const std::string& p) {
            TraceSpec t;
            t.layer = as_enum<probe::Layer>(require(e, "layer", p), join(p, "layer"), probe::layer_from_string, "layer");
            t.domain = as_string(require(e, "domain", p), join(p, "domain"));
            plan.traces.push_back(std::move(t));
        });
    return plan;
}

HostId endpoint(const json& doc, std::string_view key, const netsim::TopologySpec& topo, netsim::HostRole role) {
    if (auto* eps = optional_field(doc, "endpoints", ""))
        if (auto* f = optional_field(*eps, key, "endpoints"))
            return HostId(as_string(*f, "endpoints." + std::string(key)));
    for (const auto& h : topo.hosts)
        if (h.role == role)
            return h.id;
    return {};
}

std::vector<std::string> all_probed_names(const Scenario& s) {
    std::set<std::string> names;
    for (const auto& d : s.domains)
        names.insert(normalize_domain(d.name));
    for (const auto& t : s.plan.traces)
        names.insert(normalize_domain(t.domain));
    return {names.begin(), names.end()};
}

} // namespace

std::string_view to_string(Category c) {
    switch (c) {
    case Category::Blacklisted: return "blacklisted";
    case Category::Whitelisted: return "whitelisted";
    case Category::Neutral: return "neutral";
    }
    return "neutral";
}

std::optional<Category> category_from_string(std::string_view text) {
    for (auto c : {Category::Blacklisted, Category::Whitelisted, Category::Neutral})
        if (to_string(c) == text)
            return c;
    return std::nullopt;
}

Scenario parse_scenario(const json& doc, const std::filesystem::path& base_dir) {
    Scenario s;
    s.name = as_string(require(doc, "name", ""), "name");
    if (auto* f = optional_field(doc, "seed", ""))
        s.seed = as_uint(*f, "seed", ~std::uint64_t(0));
    s.topology = parse_topology(require(doc, "topology", ""), "topology");
    s.resolver = endpoint(doc, "resolver", s.topology, netsim::HostRole::Resolver);
    s.origin = endpoint(doc, "origin", s.topology, netsim::HostRole::Origin);
    s.baseline = endpoint(doc, "baseline", s.topology, netsim::HostRole::Baseline);

    if (auto* zone = optional_field(doc, "zone", "")) {
        if (auto* ttl = optional_field(*zone, "ttl", "zone"))
            s.zone_ttl = static_cast<std::uint32_t>(as_uint(*ttl, "zone.ttl", 0xffffffff));
        if (auto* recs = optional_field(*zone, "records", "zone")) {
            if (!recs->is_object())
                parse_fail("zone.records", "expected an object");
            for (const auto& [name, addr] : recs->items())
                s.zone[normalize_domain(name)] = as_ipv4(addr, "zone.records." + name);
        }
    }

    if (auto* p = optional_field(doc, "policy", ""))
        s.policy = parse_policy(*p, "policy");

    if (auto* list = optional_field(doc, "domain_list", "")) {
        s.domains = read_domain_list(base_dir / as_string(*list, "domain_list"));
    }
    if (auto* domains = optional_field(doc, "domains", "")) {
        each(*domains, "domains", [&](const json& e, const std::string& p) {
            DomainEntry d;
            d.name = as_string(require(e, "name", p), join(p, "name"));
            d.category = as_enum<Category>(require(e, "category", p), join(p, "category"), category_from_string,
                                           "category");
            s.domains.push_back(std::move(d));
        });
    }
    std::sort(s.domains.begin(), s.domains.end(),
              [](const DomainEntry& a, const DomainEntry& b) { return a.name < b.name; });

    if (auto* m = optional_field(doc, "protocol_matrix", ""))
        each(*m, "protocol_matrix", [&](const json& e, const std::string& p) { s.matrix.push_back(parse_target(e, p)); });
    if (auto* plan = optional_field(doc, "probe_plan", ""))
        s.plan = parse_plan(*plan, "probe_plan");
    if (auto* probe = optional_field(doc, "probe", "")) {
        if (auto* b = optional_field(*probe, "bogons", "probe")) {
            s.bogons.clear();
            each(*b, "probe.bogons", [&](const json& e, const std::string& p) { s.bogons.push_back(as_cidr(e, p)); });
        }
        if (auto* m = optional_field(*probe, "blockpage_markers", "probe")) {
            s.blockpage_markers.clear();
            each(*m, "probe.blockpage_markers",
                 [&](const json& e, const std::string& p) { s.blockpage_markers.push_back(as_string(e, p)); });
        }
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::ParseError, "cannot open scenario " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    auto doc = parse_document(buf.str(), path.string());
    auto scenario = parse_scenario(doc, path.parent_path());
    validate_scenario(scenario);
    return scenario;
}

std::vector<probe::Layer> matching_layers(const Scenario& s, const std::string& domain) {
    std::vector<probe::Layer> out;
    if (censor::match_dns(domain, s.policy))
        out.push_back(probe::Layer::Dns);
    if (censor::match_http(probe::build_http_request(domain, s.plan.http_path, probe::HttpMutation::None), s.policy))
        out.push_back(probe::Layer::Http);
    wire::ClientHello hello;
    hello.sni = domain;
    if (censor::match_sni(hello, s.policy))
        out.push_back(probe::Layer::Tls);
    return out;
}

void validate_scenario(const Scenario& s) {
    if (s.name.empty())
        invalid("scenario name is empty");
    netsim::Topology topo;
    try {
        topo = netsim::build_topology(s.topology);
    } catch (const Error& e) {
        invalid(std::string("topology: ") + e.what());
    }
    auto expect_role = [&](const HostId& id, netsim::HostRole role, std::string_view what) {
        if (id.empty())
            invalid(std::string("no ") + std::string(what) + " host declared");
        if (topo.role(id) != role)
            invalid(std::string(what) + " '" + id.value + "' is not a " + std::string(netsim::to_string(role)) +
                    " host");
    };
    expect_role(s.resolver, netsim::HostRole::Resolver, "resolver");
    expect_role(s.origin, netsim::HostRole::Origin, "origin");
    expect_role(s.baseline, netsim::HostRole::Baseline, "baseline");

    s.policy.validate();

    if (s.domains.empty())
        invalid("domain test list is empty");
    std::set<std::string> seen;
    for (const auto& d : s.domains) {
        try {
            wire::validate_qname(d.name);
        } catch (const Error& e) {
            invalid("domain '" + d.name + "': " + e.what());
        }
        if (!seen.insert(normalize_domain(d.name)).second)
            invalid("domain listed twice: " + d.name);
        auto layers = matching_layers(s, d.name);
        bool exempt = s.policy.is_exempt(d.name);
        switch (d.category) {
        case Category::Blacklisted:
            if (layers.size() != 1)
                invalid("blacklisted domain '" + d.name + "' must match exactly one policy layer, matches " +
                        std::to_string(layers.size()));
            break;
        case Category::Whitelisted:
            if (!exempt)
                invalid("whitelisted domain '" + d.name + "' is not in policy.dns_whitelist");
            break;
        case Category::Neutral:
            if (!layers.empty() || exempt)
                invalid("neutral domain '" + d.name + "' is matched by the policy");
            break;
        }
    }
    for (const auto& t : s.plan.traces) {
        try {
            wire::validate_qname(t.domain);
        } catch (const Error& e) {
            invalid("trace domain '" + t.domain + "': " + e.what());
        }
    }
    for (const auto& v : s.plan.vantages)
        if (!topo.is_vantage(v))
            invalid("probe_plan vantage '" + v.value + "' is not a topology vantage");
    if (s.plan.max_ttl < 1)
        invalid("probe_plan.max_ttl must be at least 1");
    if (s.plan.http_path.empty() || s.plan.http_path.front() != '/')
        invalid("probe_plan.http_path must start with '/'");
    for (const auto& [name, addr] : s.zone)
        for (const auto& b : s.bogons)
            if (b.contains(addr))
                invalid("zone record " + name + " -> " + addr.str() + " lies in bogon range " + b.str());
    if (s.bogons.empty())
        invalid("probe.bogons is empty");
}

netsim::World build_world(const Scenario& s) {
    auto zone = s.zone;
    for (const auto& name : all_probed_names(s)) {
        if (zone.contains(name))
            continue;
        auto h = fnv1a(to_bytes(name), 0xcbf29ce484222325ULL ^ s.seed);
        zone.emplace(name, Ipv4(kSyntheticBase + static_cast<std::uint32_t>(h % kSyntheticSpan)));
    }
    return netsim::World(netsim::build_topology(s.topology), s.policy, netsim::Services(std::move(zone), s.zone_ttl));
}

probe::ProbeConfig probe_config(const Scenario& s) {
    probe::ProbeConfig cfg;
    cfg.bogons = s.bogons;
    cfg.blockpage_markers = s.blockpage_markers;
    cfg.http_paths = {s.plan.http_path};
    cfg.seed = s.seed;
    return cfg;
}

std::vector<probe::MatrixTarget> resolve_matrix(const Scenario& s) {
    std::vector<probe::MatrixTarget> out;
    for (std::size_t i = 0; i < s.matrix.size(); ++i) {
        const auto& spec = s.matrix[i];
        probe::MatrixTarget t{spec.proto, 0, spec.payload};
        if (spec.port) {
            t.port = *spec.port;
        } else {
            auto h = fnv1a(to_bytes("random_high|" + std::to_string(i)), 0xcbf29ce484222325ULL ^ s.seed);
            t.port = static_cast<std::uint16_t>(49152 + h % 16384);
        }
        out.push_back(t);
    }
    return out;
}

std::vector<HostId> plan_vantages(const Scenario& s) {
    if (!s.plan.vantages.empty())
        return s.plan.vantages;
    std::vector<HostId> out;
    for (const auto& v : s.topology.vantages)
        out.push_back(v.id);
    return out;
}

} // namespace censim::harness
