// Compares the thread-parallel Monte-Carlo driver against a serial run:
// the summary tables must be identical (per-replication seeding makes the
// result independent of scheduling), and the timings are reported.

#include <chrono>
#include <cstring>
#include <iostream>

#include "bimatch/simulator.hpp"

using namespace bimatch;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool same_tables(const StudyTable& a, const StudyTable& b) {
    if (a.rows.size() != b.rows.size()) return false;
    for (size_t k = 0; k < a.rows.size(); ++k) {
        const auto& x = a.rows[k];
        const auto& y = b.rows[k];
        if (x.method != y.method || x.estimand != y.estimand || x.reps != y.reps ||
            x.bias != y.bias || x.mse != y.mse || x.coverage != y.coverage ||
            x.prop_matched != y.prop_matched) {
            return false;
        }
    }
    return a.mean_exposed_count == b.mean_exposed_count &&
           a.share_in_band == b.share_in_band;
}

}  // namespace

int main(int argc, char** argv) {
    int reps = 12;
    int threads = 0;  // 0 = library default
    for (int k = 1; k + 1 < argc; ++k) {
        if (std::strcmp(argv[k], "--reps") == 0) {
            reps = std::atoi(argv[++k]);
        } else if (std::strcmp(argv[k], "--threads") == 0) {
            threads = std::atoi(argv[++k]);
        }
    }

    ScenarioSpec spec;
    spec.scenario = 'a';
    spec.sparsity = "medium";
    spec.seed = 7;

    StudyOptions serial;
    serial.threads = 1;
    StudyOptions parallel;
    parallel.threads = threads;

    auto t0 = Clock::now();
    const StudyTable a = run_study(spec, reps, serial);
    const double t_serial = seconds_since(t0);

    t0 = Clock::now();
    const StudyTable b = run_study(spec, reps, parallel);
    const double t_parallel = seconds_since(t0);

    std::cout << "serial:   " << t_serial << " s\n";
    std::cout << "parallel: " << t_parallel << " s\n";
    if (!same_tables(a, b)) {
        std::cerr << "FAIL: parallel summary differs from serial reference\n";
        return 1;
    }
    std::cout << "OK: summaries identical across thread counts\n";
    return 0;
}
