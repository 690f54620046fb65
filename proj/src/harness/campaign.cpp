#include "censim/error.hpp"
#include "censim/harness.hpp"

#include <exception>
#include <fstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace censim::harness {

namespace {

struct Context {
    const Scenario& scenario;
    netsim::World world;
    probe::ProbeConfig config;
    std::vector<HostId> vantages;
    std::vector<probe::MatrixTarget> targets;
    probe::Baseline baseline;
    bool keep_captures = false;

    Context(const Scenario& s, std::uint64_t seed, bool captures)
        : scenario(s), world(build_world(with_seed(s, seed))), config(probe_config(s)), vantages(plan_vantages(s)),
          targets(resolve_matrix(with_seed(s, seed))), keep_captures(captures) {
        config.seed = seed;
    }

    static Scenario with_seed(const Scenario& s, std::uint64_t seed) {
        Scenario copy = s;
        copy.seed = seed;
        return copy;
    }

    probe::Endpoints at(const HostId& vantage) const { return {vantage, scenario.resolver, scenario.origin}; }
    probe::Endpoints outside() const { return at(scenario.baseline); }
};

// Output of one job. Jobs never touch shared mutable state.
struct JobOutput {
    std::vector<VerdictRow> rows;
    std::vector<MatrixResult> matrix;
    std::optional<probe::TraceResult> trace;
    std::vector<Capture> captures;
};

std::string sanitize(std::string_view s) {
    std::string out(s);
    for (auto& c : out)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-' && c != '_')
            c = '_';
    return out;
}

VerdictRow make_row(const DomainEntry& d, const HostId& vantage, probe::Layer layer, probe::HttpMutation mutation,
                    const probe::Verdict& v) {
    VerdictRow row;
    row.domain = d.name;
    row.category = d.category;
    row.vantage = vantage;
    row.layer = layer;
    row.mutation = mutation;
    row.verdict = v.kind;
    row.evidence_digest = v.evidence.digest();
    row.packets_received = v.evidence.received_count();
    row.dns_answers = v.evidence.dns_answers;
    row.dns_ttl = v.evidence.dns_ttl;
    row.http_status = v.evidence.http_status;
    row.sni = v.evidence.sni;
    return row;
}

void push(JobOutput& out, const Context& ctx, VerdictRow row, probe::Evidence&& evidence) {
    if (ctx.keep_captures)
        out.captures.push_back({sanitize(row.key()), std::move(evidence)});
    out.rows.push_back(std::move(row));
}

// All layers for one (domain, vantage) pair, in report order.
JobOutput domain_job(const Context& ctx, const DomainEntry& d, const HostId& vantage) {
    JobOutput out;
    auto at = ctx.at(vantage);
    const auto& plan = ctx.scenario.plan;
    for (auto layer : plan.layers) {
        switch (layer) {
        case probe::Layer::Dns: {
            auto r = probe::dns_probe(d.name, at, ctx.world, ctx.baseline, ctx.config);
            push(out, ctx, make_row(d, vantage, layer, probe::HttpMutation::None, r.verdict),
                 std::move(r.verdict.evidence));
            break;
        }
        case probe::Layer::Http: {
            std::vector<probe::HttpMutation> mutations{probe::HttpMutation::None};
            mutations.insert(mutations.end(), plan.mutations.begin(), plan.mutations.end());
            for (auto m : mutations) {
                auto v = probe::http_probe(d.name, plan.http_path, at, ctx.world, ctx.baseline, ctx.config, m);
                push(out, ctx, make_row(d, vantage, layer, m, v), std::move(v.evidence));
            }
            break;
        }
        case probe::Layer::Tls: {
            auto v = probe::tls_probe(d.name, at, ctx.world, ctx.baseline, ctx.config);
            push(out, ctx, make_row(d, vantage, layer, probe::HttpMutation::None, v), std::move(v.evidence));
            break;
        }
        }
    }
    return out;
}

JobOutput matrix_job(const Context& ctx, const HostId& vantage) {
    JobOutput out;
    for (auto& row : probe::protocol_matrix(ctx.at(vantage), ctx.world, ctx.targets, ctx.config)) {
        MatrixResult r{vantage, row.target, row.verdict.kind, row.verdict.evidence.received_count(),
                       row.verdict.evidence.digest()};
        if (ctx.keep_captures)
            out.captures.push_back({sanitize(r.key()), std::move(row.verdict.evidence)});
        out.matrix.push_back(std::move(r));
    }
    return out;
}

JobOutput trace_job(const Context& ctx, const TraceSpec& spec, const HostId& vantage) {
    JobOutput out;
    out.trace = probe::ttl_trace(spec.layer, spec.domain, ctx.at(vantage), ctx.world, ctx.scenario.plan.max_ttl,
                                 ctx.config);
    return out;
}

// Flattened job list in report order.
struct Job {
    enum class Kind { Domain, Matrix, Trace } kind;
    std::size_t item = 0; // domain or trace index
    std::size_t vantage = 0;
};

std::vector<Job> plan_jobs(const Context& ctx) {
    std::vector<Job> jobs;
    for (std::size_t d = 0; d < ctx.scenario.domains.size(); ++d)
        for (std::size_t v = 0; v < ctx.vantages.size(); ++v)
            jobs.push_back({Job::Kind::Domain, d, v});
    if (!ctx.targets.empty())
        for (std::size_t v = 0; v < ctx.vantages.size(); ++v)
            jobs.push_back({Job::Kind::Matrix, 0, v});
    for (std::size_t t = 0; t < ctx.scenario.plan.traces.size(); ++t)
        for (std::size_t v = 0; v < ctx.vantages.size(); ++v)
            jobs.push_back({Job::Kind::Trace, t, v});
    return jobs;
}

JobOutput run_job(const Context& ctx, const Job& job) {
    const auto& vantage = ctx.vantages[job.vantage];
    switch (job.kind) {
    case Job::Kind::Domain: return domain_job(ctx, ctx.scenario.domains[job.item], vantage);
    case Job::Kind::Matrix: return matrix_job(ctx, vantage);
    case Job::Kind::Trace: return trace_job(ctx, ctx.scenario.plan.traces[job.item], vantage);
    }
    return {};
}

Report merge(const Context& ctx, std::uint64_t seed, std::vector<JobOutput>& outputs, const RunOptions& opts) {
    Report report;
    report.scenario = ctx.scenario.name;
    report.seed = seed;
    for (auto& o : outputs) {
        std::move(o.rows.begin(), o.rows.end(), std::back_inserter(report.rows));
        std::move(o.matrix.begin(), o.matrix.end(), std::back_inserter(report.matrix));
        if (o.trace)
            report.traces.push_back(std::move(*o.trace));
        if (opts.captures)
            std::move(o.captures.begin(), o.captures.end(), std::back_inserter(*opts.captures));
    }
    report.aggregates = aggregate(report);
    return report;
}

std::vector<std::string> domain_names(const Scenario& s) {
    std::vector<std::string> names;
    for (const auto& d : s.domains)
        names.push_back(d.name);
    return names;
}

} // namespace

Report run_scenario_serial(const Scenario& scenario, const RunOptions& opts) {
    auto seed = opts.seed_override.value_or(scenario.seed);
    Context ctx(scenario, seed, opts.captures != nullptr);
    ctx.baseline = probe::measure_baseline(ctx.world, scenario.baseline, scenario.resolver, scenario.origin,
                                           domain_names(scenario), ctx.config);
    auto jobs = plan_jobs(ctx);
    std::vector<JobOutput> outputs;
    outputs.reserve(jobs.size());
    for (const auto& job : jobs)
        outputs.push_back(run_job(ctx, job));
    return merge(ctx, seed, outputs, opts);
}

Report run_scenario(const Scenario& scenario, const RunOptions& opts) {
    auto seed = opts.seed_override.value_or(scenario.seed);
    Context ctx(scenario, seed, opts.captures != nullptr);
    const auto& domains = scenario.domains;
    const auto n_domains = static_cast<std::ptrdiff_t>(domains.size());

    // Exceptions must not escape an OpenMP region; keep the first one by job index.
    std::vector<std::exception_ptr> errors(domains.size());
    std::vector<probe::BaselineEntry> entries(domains.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < n_domains; ++i) {
        try {
            entries[i] = probe::measure_baseline_entry(ctx.world, ctx.outside(), domains[i].name, ctx.config);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    for (std::size_t i = 0; i < domains.size(); ++i)
        ctx.baseline.set(domains[i].name, std::move(entries[i]));

    auto jobs = plan_jobs(ctx);
    const auto n_jobs = static_cast<std::ptrdiff_t>(jobs.size());
    std::vector<JobOutput> outputs(jobs.size());
    errors.assign(jobs.size(), nullptr);
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < n_jobs; ++i) {
        try {
            outputs[i] = run_job(ctx, jobs[i]);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return merge(ctx, seed, outputs, opts);
}

void write_captures(const std::vector<Capture>& captures, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& c : captures) {
        auto file = dir / (c.name + ".json");
        std::ofstream out(file);
        if (!out)
            throw Error(Errc::ProbeError, "cannot write capture " + file.string());
        out << evidence_to_json(c.evidence).dump(2) << '\n';
    }
}

nlohmann::json evidence_to_json(const probe::Evidence& evidence) {
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : evidence.events) {
        const auto& p = e.packet;
        events.push_back({{"direction", e.direction == probe::Direction::Sent ? "sent" : "received"},
                          {"src", p.src.value},
                          {"dst", p.dst.value},
                          {"ttl", p.ttl},
                          {"proto", std::string(to_string(p.proto))},
                          {"src_port", p.src_port},
                          {"dst_port", p.dst_port},
                          {"tcp_flags", p.tcp_flags ? nlohmann::json(p.tcp_flags->str()) : nlohmann::json()},
                          {"payload_hex", hex(p.payload)}});
    }
    return {{"digest", evidence.digest()}, {"events", std::move(events)}};
}

} // namespace censim::harness
