// censim: run censorship scenarios and inspect their reports.
//
// Exit codes: 0 completed, 2 unreadable or invalid input, 3 runtime failure.

#include "censim/error.hpp"
#include "censim/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using namespace censim;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitRuntime = 3;

int exit_code(const Error& e) {
    switch (e.code()) {
    case Errc::ParseError:
    case Errc::ValidationError:
    case Errc::MalformedSpec:
        return kExitInput;
    default:
        return kExitRuntime;
    }
}

fs::path default_report_path(const harness::Scenario& s) {
    fs::path dir = ".";
    if (const char* env = std::getenv("CENSIM_OUT_DIR"); env && *env)
        dir = env;
    return dir / (s.name + ".report.json");
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width)
        s.append(width - s.size(), ' ');
    return s;
}

std::string opt_str(const std::optional<RouterId>& r) { return r ? r->value : "-"; }

void print_consensus(const std::optional<probe::Consensus>& c) {
    if (!c) {
        std::cout << "chokepoint consensus: none (no interference localized)\n";
        return;
    }
    if (c->kind == probe::Consensus::Kind::Unanimous) {
        std::cout << "chokepoint consensus: UNANIMOUS(" << c->routers.front().value << ")\n";
        return;
    }
    std::cout << "chokepoint consensus: DIVERGENT(";
    for (std::size_t i = 0; i < c->routers.size(); ++i)
        std::cout << (i ? ", " : "") << c->routers[i].value;
    std::cout << ")\n";
}

void show_report(const harness::Report& r) {
    std::cout << "scenario " << r.scenario << "  seed " << r.seed << "  (" << r.tool_version << ")\n\n";

    // verdict counts per layer
    std::map<std::string, std::map<std::string, std::size_t>> by_layer;
    for (const auto& row : r.rows) {
        auto layer = std::string(probe::to_string(row.layer));
        if (row.mutation != probe::HttpMutation::None)
            layer += "+" + std::string(probe::to_string(row.mutation));
        ++by_layer[layer][std::string(probe::to_string(row.verdict))];
    }
    std::cout << pad("LAYER", 20) << pad("VERDICT", 28) << "COUNT\n";
    for (const auto& [layer, counts] : by_layer)
        for (const auto& [verdict, n] : counts)
            std::cout << pad(layer, 20) << pad(verdict, 28) << n << "\n";

    if (!r.matrix.empty()) {
        std::cout << "\n" << pad("VANTAGE", 16) << pad("TARGET", 24) << pad("VERDICT", 28) << "RESPONSES\n";
        for (const auto& m : r.matrix)
            std::cout << pad(m.vantage.value, 16) << pad(m.target.label(), 24)
                      << pad(std::string(probe::to_string(m.verdict)), 28) << m.response_packets << "\n";
    }
    if (!r.traces.empty()) {
        std::cout << "\n" << pad("VANTAGE", 16) << pad("LAYER", 8) << pad("TARGET", 28) << pad("FIRST TTL", 11)
                  << "ROUTER\n";
        for (const auto& t : r.traces)
            std::cout << pad(t.vantage.value, 16) << pad(std::string(probe::to_string(t.layer)), 8)
                      << pad(t.target, 28)
                      << pad(t.first_interfering_ttl ? std::to_string(*t.first_interfering_ttl) : "-", 11)
                      << opt_str(t.chokepoint_router) << "\n";
    }

    const auto& a = r.aggregates;
    std::printf("\npoisoned_fraction   %.4f (%zu/%zu DNS verdicts)\n", a.poisoned_fraction, a.dns_poisoned,
                a.dns_rows);
    std::cout << "blockpages          " << a.blockpage_count << "\n"
              << "tcp resets          " << a.rst_count << "\n"
              << "sni resets          " << a.sni_reset_count << "\n"
              << "silent drops        " << a.silent_drop_count << "\n"
              << "allowed protocols   ";
    for (std::size_t i = 0; i < a.allowed_protocol_set.size(); ++i)
        std::cout << (i ? ", " : "") << a.allowed_protocol_set[i];
    std::cout << "\n";
    print_consensus(a.chokepoint_consensus);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic censorship-gateway simulator and measurement client"};
    app.set_version_flag("--version", std::string(harness::kToolVersion));
    app.require_subcommand(1);

    std::string scenario_path, out_path, captures_dir, report_path, domain, layer_name, vantage;
    std::optional<std::uint64_t> seed;
    std::optional<int> max_ttl;

    auto* run = app.add_subcommand("run", "Run a scenario and write its report");
    run->add_option("scenario", scenario_path, "Scenario file")->required();
    run->add_option("--out", out_path, "Report path (default: $CENSIM_OUT_DIR/<name>.report.json)");
    run->add_option("--captures", captures_dir, "Write full packet captures to this directory");
    run->add_option("--seed", seed, "Override the scenario seed");

    auto* validate = app.add_subcommand("validate", "Check a scenario file");
    validate->add_option("scenario", scenario_path, "Scenario file")->required();

    auto* report = app.add_subcommand("report", "Inspect reports");
    report->require_subcommand(1);
    auto* show = report->add_subcommand("show", "Print a summary table");
    show->add_option("report", report_path, "Report file")->required();

    auto* trace = app.add_subcommand("trace", "TTL-limited trace of one domain");
    trace->add_option("scenario", scenario_path, "Scenario file")->required();
    trace->add_option("--domain", domain, "Domain to trace")->required();
    trace->add_option("--layer", layer_name, "dns, http or tls")
        ->required()
        ->check(CLI::IsMember({"dns", "http", "tls"}));
    trace->add_option("--vantage", vantage, "Trace from this vantage only");
    trace->add_option("--max-ttl", max_ttl, "Highest ttl to try")->check(CLI::Range(1, 255));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitInput;
    }

    try {
        if (*run) {
            auto scenario = harness::load_scenario(scenario_path);
            std::vector<harness::Capture> captures;
            harness::RunOptions opts;
            opts.seed_override = seed;
            if (!captures_dir.empty())
                opts.captures = &captures;
            auto result = harness::run_scenario(scenario, opts);
            fs::path out = out_path.empty() ? default_report_path(scenario) : fs::path(out_path);
            if (out.has_parent_path())
                fs::create_directories(out.parent_path());
            std::ofstream file(out, std::ios::binary);
            if (!file)
                throw Error(Errc::ProbeError, "cannot write report " + out.string());
            file << harness::serialize_report(result);
            if (!captures_dir.empty())
                harness::write_captures(captures, captures_dir);
            std::printf("%s: %zu verdicts, %zu matrix results, %zu traces, poisoned_fraction %.4f -> %s\n",
                        result.scenario.c_str(), result.rows.size(), result.matrix.size(), result.traces.size(),
                        result.aggregates.poisoned_fraction, out.string().c_str());
        } else if (*validate) {
            auto scenario = harness::load_scenario(scenario_path);
            std::cout << "ok: " << scenario.name << " (" << scenario.domains.size() << " domains, "
                      << scenario.topology.vantages.size() << " vantages, " << scenario.matrix.size()
                      << " matrix targets)\n";
        } else if (*show) {
            show_report(harness::load_report(report_path));
        } else if (*trace) {
            auto scenario = harness::load_scenario(scenario_path);
            auto world = harness::build_world(scenario);
            auto config = harness::probe_config(scenario);
            auto layer = *probe::layer_from_string(layer_name);
            std::vector<HostId> vantages;
            if (vantage.empty()) {
                vantages = harness::plan_vantages(scenario);
            } else {
                if (!world.topology().is_vantage(HostId{vantage}))
                    throw Error(Errc::ValidationError, "unknown vantage '" + vantage + "'");
                vantages.push_back(HostId{vantage});
            }
            std::vector<probe::TraceResult> localized;
            for (const auto& v : vantages) {
                auto t = probe::ttl_trace(layer, domain, {v, scenario.resolver, scenario.origin}, world,
                                          max_ttl.value_or(scenario.plan.max_ttl), config);
                std::cout << "vantage " << v.value << " (" << layer_name << " " << domain << ")\n";
                std::cout << "  " << pad("TTL", 6) << pad("OUTCOME", 16) << "ROUTER\n";
                for (const auto& s : t.steps)
                    std::cout << "  " << pad(std::to_string(s.ttl), 6)
                              << pad(std::string(probe::to_string(s.outcome)), 16) << opt_str(s.router) << "\n";
                std::cout << "  first interfering ttl: "
                          << (t.first_interfering_ttl ? std::to_string(*t.first_interfering_ttl) : "-")
                          << ", chokepoint: " << opt_str(t.chokepoint_router) << "\n\n";
                if (t.chokepoint_router)
                    localized.push_back(std::move(t));
            }
            print_consensus(localized.empty() ? std::nullopt
                                              : std::optional(probe::consensus_chokepoint(localized)));
        }
    } catch (const Error& e) {
        std::cerr << "censim: " << e.what() << "\n";
        return exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "censim: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
