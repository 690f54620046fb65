// Serial reference vs OpenMP campaign runner on a scaled copy of a scenario.
//
//   censim_bench [scenario.json] [--scale N] [--reps R]
//
// Each domain is replicated N times under a fresh name that keeps its
// category (blacklist patterns are suffix matches, so copies stay covered).

#include "censim/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace censim;

namespace {

harness::Scenario scaled(const harness::Scenario& base, int scale) {
    auto s = base;
    s.domains.clear();
    for (const auto& d : base.domains) {
        s.domains.push_back(d);
        if (d.category != harness::Category::Neutral)
            continue;
        for (int i = 1; i < scale; ++i)
            s.domains.push_back({"copy" + std::to_string(i) + "-" + d.name, d.category});
    }
    for (const auto& d : base.domains) {
        if (d.category != harness::Category::Blacklisted)
            continue;
        for (int i = 1; i < scale; ++i)
            s.domains.push_back({"copy" + std::to_string(i) + "." + d.name, d.category});
    }
    std::sort(s.domains.begin(), s.domains.end(),
              [](const harness::DomainEntry& a, const harness::DomainEntry& b) { return a.name < b.name; });
    return s;
}

template <typename F>
double best_of(int reps, F&& fn) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        auto t0 = std::chrono::steady_clock::now();
        fn();
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

} // namespace

int main(int argc, char** argv) {
    std::string path = CENSIM_DEFAULT_SCENARIO;
    int scale = 20, reps = 3;
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg == "--scale" && i + 1 < argc)
            scale = std::max(1, std::atoi(argv[++i]));
        else if (arg == "--reps" && i + 1 < argc)
            reps = std::max(1, std::atoi(argv[++i]));
        else
            path = arg;
    }

    auto scenario = scaled(harness::load_scenario(path), scale);
    int threads = 1;
#ifdef _OPENMP
    threads = omp_get_max_threads();
#endif
    std::printf("scenario %s x%d: %zu domains, %zu vantages, %d threads\n", scenario.name.c_str(), scale,
                scenario.domains.size(), scenario.topology.vantages.size(), threads);

    std::string serial_bytes, parallel_bytes;
    harness::run_scenario_serial(scenario); // warm-up, untimed
    double serial = best_of(reps, [&] { serial_bytes = harness::serialize_report(harness::run_scenario_serial(scenario)); });
    double parallel = best_of(reps, [&] { parallel_bytes = harness::serialize_report(harness::run_scenario(scenario)); });

    std::printf("serial    %8.3f s\nparallel  %8.3f s\nspeedup   %8.2fx\nreports   %s\n", serial, parallel,
                serial / parallel, serial_bytes == parallel_bytes ? "identical" : "DIFFER");
    return serial_bytes == parallel_bytes ? 0 : 1;
}
