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

constexpr std::string_view kSchema = "censim.report/1";

template <typename T>
json nullable(const std::optional<T>& v) {
    return v ? json(*v) : json();
}

std::string_view to_string(probe::Consensus::Kind k) {
    return k == probe::Consensus::Kind::Unanimous ? "unanimous" : "divergent";
}

json addresses_json(const std::vector<Ipv4>& addrs) {
    json out = json::array();
    for (auto a : addrs)
        out.push_back(a.str());
    return out;
}

json row_json(const VerdictRow& r) {
    return {{"domain", r.domain},
            {"category", to_string(r.category)},
            {"vantage", r.vantage.value},
            {"layer", to_string(r.layer)},
            {"mutation", to_string(r.mutation)},
            {"verdict", to_string(r.verdict)},
            {"evidence_digest", r.evidence_digest},
            {"packets_received", r.packets_received},
            {"dns_answers", addresses_json(r.dns_answers)},
            {"dns_ttl", nullable(r.dns_ttl)},
            {"http_status", nullable(r.http_status)},
            {"sni", nullable(r.sni)}};
}

json matrix_json(const MatrixResult& m) {
    return {{"vantage", m.vantage.value},
            {"proto", to_string(m.target.proto)},
            {"port", m.target.port},
            {"payload", to_string(m.target.payload)},
            {"label", m.target.label()},
            {"verdict", to_string(m.verdict)},
            {"response_packets", m.response_packets},
            {"evidence_digest", m.evidence_digest}};
}

json router_json(const std::optional<RouterId>& r) { return r ? json(r->value) : json(); }

json trace_json(const probe::TraceResult& t) {
    json steps = json::array();
    for (const auto& s : t.steps)
        steps.push_back({{"ttl", s.ttl}, {"outcome", to_string(s.outcome)}, {"router", router_json(s.router)}});
    return {{"vantage", t.vantage.value},
            {"layer", to_string(t.layer)},
            {"target", t.target},
            {"first_interfering_ttl", nullable(t.first_interfering_ttl)},
            {"chokepoint_router", router_json(t.chokepoint_router)},
            {"steps", std::move(steps)}};
}

json stats_json(const Stats& s) {
    json consensus;
    if (s.chokepoint_consensus) {
        json routers = json::array();
        for (const auto& r : s.chokepoint_consensus->routers)
            routers.push_back(r.value);
        consensus = {{"kind", to_string(s.chokepoint_consensus->kind)}, {"routers", std::move(routers)}};
    }
    return {{"poisoned_fraction", s.poisoned_fraction},
            {"dns_rows", s.dns_rows},
            {"dns_poisoned", s.dns_poisoned},
            {"blockpage_count", s.blockpage_count},
            {"rst_count", s.rst_count},
            {"sni_reset_count", s.sni_reset_count},
            {"silent_drop_count", s.silent_drop_count},
            {"allowed_protocol_set", s.allowed_protocol_set},
            {"chokepoint_consensus", std::move(consensus)}};
}

// --- Reading -----------------------------------------------------------------

std::optional<std::string> opt_string(const json& obj, std::string_view key, const std::string& path) {
    require(obj, key, path);
    auto* f = optional_field(obj, key, path);
    return f ? std::optional(as_string(*f, join(path, key))) : std::nullopt;
}

template <typename T>
std::optional<T> opt_uint(const json& obj, std::string_view key, const std::string& path, std::uint64_t max) {
    require(obj, key, path);
    auto* f = optional_field(obj, key, path);
    return f ? std::optional(static_cast<T>(as_uint(*f, join(path, key), max))) : std::nullopt;
}

std::string str_field(const json& obj, std::string_view key, const std::string& path) {
    return as_string(require(obj, key, path), join(path, key));
}

std::uint64_t uint_field(const json& obj, std::string_view key, const std::string& path, std::uint64_t max) {
    return as_uint(require(obj, key, path), join(path, key), max);
}

template <typename T, typename F>
T enum_field(const json& obj, std::string_view key, const std::string& path, F&& from, std::string_view what) {
    return as_enum<T>(require(obj, key, path), join(path, key), from, what);
}

std::optional<RouterId> opt_router(const json& obj, std::string_view key, const std::string& path) {
    auto s = opt_string(obj, key, path);
    return s ? std::optional(RouterId{*s}) : std::nullopt;
}

VerdictRow read_row(const json& j, const std::string& path) {
    VerdictRow r;
    r.domain = str_field(j, "domain", path);
    r.category = enum_field<Category>(j, "category", path, category_from_string, "category");
    r.vantage = HostId{str_field(j, "vantage", path)};
    r.layer = enum_field<probe::Layer>(j, "layer", path, probe::layer_from_string, "layer");
    r.mutation = enum_field<probe::HttpMutation>(j, "mutation", path, probe::http_mutation_from_string, "mutation");
    r.verdict = enum_field<probe::VerdictKind>(j, "verdict", path, probe::verdict_from_string, "verdict");
    r.evidence_digest = str_field(j, "evidence_digest", path);
    r.packets_received = uint_field(j, "packets_received", path, UINT32_MAX);
    each(require(j, "dns_answers", path), join(path, "dns_answers"),
         [&](const json& a, const std::string& p) { r.dns_answers.push_back(as_ipv4(a, p)); });
    r.dns_ttl = opt_uint<std::uint32_t>(j, "dns_ttl", path, UINT32_MAX);
    r.http_status = opt_uint<int>(j, "http_status", path, 999);
    r.sni = opt_string(j, "sni", path);
    return r;
}

Transport transport_from(const json& j, const std::string& path) {
    auto text = as_string(j, path);
    if (text == "tcp")
        return Transport::Tcp;
    if (text == "udp")
        return Transport::Udp;
    parse_fail(path, "unknown transport '" + text + "'");
}

MatrixResult read_matrix(const json& j, const std::string& path) {
    MatrixResult m;
    m.vantage = HostId{str_field(j, "vantage", path)};
    m.target.proto = transport_from(require(j, "proto", path), join(path, "proto"));
    m.target.port = static_cast<std::uint16_t>(uint_field(j, "port", path, 65535));
    m.target.payload = enum_field<probe::PayloadKind>(j, "payload", path, probe::payload_kind_from_string, "payload");
    if (auto label = str_field(j, "label", path); label != m.target.label())
        parse_fail(join(path, "label"), "'" + label + "' does not match proto/port/payload");
    m.verdict = enum_field<probe::VerdictKind>(j, "verdict", path, probe::verdict_from_string, "verdict");
    m.response_packets = uint_field(j, "response_packets", path, UINT32_MAX);
    m.evidence_digest = str_field(j, "evidence_digest", path);
    return m;
}

probe::TraceResult read_trace(const json& j, const std::string& path) {
    probe::TraceResult t;
    t.vantage = HostId{str_field(j, "vantage", path)};
    t.layer = enum_field<probe::Layer>(j, "layer", path, probe::layer_from_string, "layer");
    t.target = str_field(j, "target", path);
    t.first_interfering_ttl = opt_uint<int>(j, "first_interfering_ttl", path, 255);
    t.chokepoint_router = opt_router(j, "chokepoint_router", path);
    each(require(j, "steps", path), join(path, "steps"), [&](const json& s, const std::string& p) {
        probe::TraceStep step;
        step.ttl = static_cast<int>(uint_field(s, "ttl", p, 255));
        step.outcome =
            enum_field<probe::TraceOutcome>(s, "outcome", p, probe::trace_outcome_from_string, "trace outcome");
        step.router = opt_router(s, "router", p);
        t.steps.push_back(std::move(step));
    });
    return t;
}

Stats read_stats(const json& j, const std::string& path) {
    Stats s;
    const auto& pf = require(j, "poisoned_fraction", path);
    if (!pf.is_number())
        parse_fail(join(path, "poisoned_fraction"), "expected a number");
    s.poisoned_fraction = pf.get<double>();
    s.dns_rows = uint_field(j, "dns_rows", path, UINT32_MAX);
    s.dns_poisoned = uint_field(j, "dns_poisoned", path, UINT32_MAX);
    s.blockpage_count = uint_field(j, "blockpage_count", path, UINT32_MAX);
    s.rst_count = uint_field(j, "rst_count", path, UINT32_MAX);
    s.sni_reset_count = uint_field(j, "sni_reset_count", path, UINT32_MAX);
    s.silent_drop_count = uint_field(j, "silent_drop_count", path, UINT32_MAX);
    each(require(j, "allowed_protocol_set", path), join(path, "allowed_protocol_set"),
         [&](const json& l, const std::string& p) { s.allowed_protocol_set.push_back(as_string(l, p)); });
    require(j, "chokepoint_consensus", path);
    if (auto* c = optional_field(j, "chokepoint_consensus", path)) {
        auto cpath = join(path, "chokepoint_consensus");
        probe::Consensus consensus;
        auto kind = str_field(*c, "kind", cpath);
        if (kind == "unanimous")
            consensus.kind = probe::Consensus::Kind::Unanimous;
        else if (kind == "divergent")
            consensus.kind = probe::Consensus::Kind::Divergent;
        else
            parse_fail(join(cpath, "kind"), "unknown consensus kind '" + kind + "'");
        each(require(*c, "routers", cpath), join(cpath, "routers"),
             [&](const json& r, const std::string& p) { consensus.routers.push_back(RouterId{as_string(r, p)}); });
        s.chokepoint_consensus = std::move(consensus);
    }
    return s;
}

} // namespace

std::string VerdictRow::key() const {
    std::string k = domain + "/" + vantage.value + "/" + std::string(to_string(layer));
    if (mutation != probe::HttpMutation::None)
        k += "/" + std::string(to_string(mutation));
    return k;
}

std::string MatrixResult::key() const { return "matrix/" + vantage.value + "/" + target.label(); }

Stats aggregate(const Report& report) {
    Stats s;
    auto count = [&](probe::VerdictKind kind) {
        std::size_t n = 0;
        for (const auto& r : report.rows)
            n += r.verdict == kind;
        for (const auto& m : report.matrix)
            n += m.verdict == kind;
        return n;
    };
    for (const auto& r : report.rows) {
        if (r.layer != probe::Layer::Dns)
            continue;
        ++s.dns_rows;
        s.dns_poisoned += r.verdict == probe::VerdictKind::DnsPoisoned;
    }
    if (s.dns_rows == 0)
        throw Error(Errc::EmptyReport, "report '" + report.scenario + "' holds no DNS verdicts");
    s.poisoned_fraction = static_cast<double>(s.dns_poisoned) / static_cast<double>(s.dns_rows);
    s.blockpage_count = count(probe::VerdictKind::HttpBlockPage);
    s.rst_count = count(probe::VerdictKind::TcpRst);
    s.sni_reset_count = count(probe::VerdictKind::TlsRstAfterClientHello);
    s.silent_drop_count = count(probe::VerdictKind::SilentDrop);

    std::set<std::string> labels, blocked;
    for (const auto& m : report.matrix) {
        labels.insert(m.target.label());
        if (m.verdict != probe::VerdictKind::Ok)
            blocked.insert(m.target.label());
    }
    for (const auto& l : labels)
        if (!blocked.count(l))
            s.allowed_protocol_set.push_back(l);

    std::vector<probe::TraceResult> localized;
    std::copy_if(report.traces.begin(), report.traces.end(), std::back_inserter(localized),
                 [](const probe::TraceResult& t) { return t.chokepoint_router.has_value(); });
    if (!localized.empty())
        s.chokepoint_consensus = probe::consensus_chokepoint(localized);
    return s;
}

json to_json(const Report& report) {
    json rows = json::array(), matrix = json::array(), traces = json::array();
    for (const auto& r : report.rows)
        rows.push_back(row_json(r));
    for (const auto& m : report.matrix)
        matrix.push_back(matrix_json(m));
    for (const auto& t : report.traces)
        traces.push_back(trace_json(t));
    return {{"schema", kSchema},
            {"scenario", report.scenario},
            {"seed", report.seed},
            {"tool_version", report.tool_version},
            {"verdicts", std::move(rows)},
            {"protocol_matrix", std::move(matrix)},
            {"traces", std::move(traces)},
            {"aggregates", stats_json(report.aggregates)}};
}

Report report_from_json(const json& doc) {
    if (auto schema = str_field(doc, "schema", ""); schema != kSchema)
        parse_fail("schema", "unsupported report schema '" + schema + "'");
    Report report;
    report.scenario = str_field(doc, "scenario", "");
    report.seed = uint_field(doc, "seed", "", UINT64_MAX);
    report.tool_version = str_field(doc, "tool_version", "");
    each(require(doc, "verdicts", ""), "verdicts",
         [&](const json& j, const std::string& p) { report.rows.push_back(read_row(j, p)); });
    each(require(doc, "protocol_matrix", ""), "protocol_matrix",
         [&](const json& j, const std::string& p) { report.matrix.push_back(read_matrix(j, p)); });
    each(require(doc, "traces", ""), "traces",
         [&](const json& j, const std::string& p) { report.traces.push_back(read_trace(j, p)); });
    report.aggregates = read_stats(require(doc, "aggregates", ""), "aggregates");
    if (aggregate(report) != report.aggregates)
        throw Error(Errc::ValidationError, "stored aggregates do not match the verdict rows");
    return report;
}

std::string serialize_report(const Report& report) { return to_json(report).dump(2) + "\n"; }

Report parse_report(std::string_view text) { return report_from_json(parse_document(text, "report")); }

Report load_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::ParseError, "cannot open report " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return report_from_json(parse_document(buf.str(), path.string()));
}

} // namespace censim::harness
