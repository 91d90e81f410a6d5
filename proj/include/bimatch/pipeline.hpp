#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bimatch/csv_io.hpp"
#include "bimatch/matching.hpp"
#include "bimatch/simulator.hpp"

namespace bimatch {

// Exit codes shared by the CLI and the pipeline driver.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNoMatches = 3;

struct RunConfig {
    std::string input_dir;
    std::string out_dir;
    // "threshold:d=K" or "proportion:th=0.5"; ignored when the input
    // directory supplies exposures.csv directly.
    std::string exposure = "threshold:d=1";
    TuningParams tuning;
    std::vector<Method> methods{Method::one_one, Method::one_or_two, Method::one_two};
    double alpha = 0.05;
    std::uint64_t seed = 42;
    int jobs = 0;  // 0 = library default
    std::vector<int> units;  // 1-based; empty = all outcome units

    void check() const;
};

// Flat key=value config file; '#' starts a comment. Keys mirror the CLI
// flags (input, out, exposure, delta, delta_prime, eps, delta_dprime,
// ell, kpow, adjust, methods, alpha, seed, jobs, units).
RunConfig parse_config_file(const std::string& path);
void apply_config_entry(RunConfig& config, const std::string& key,
                        const std::string& value);

std::vector<Method> parse_methods(const std::string& csv);

// Full analysis: load -> validate -> expose -> match -> estimate -> infer
// -> global test. Writes per-unit matchset.json / estimate.json /
// inference.json, global_test.json when M > 1, and summary.csv/.txt.
// Returns an exit code; diagnostics go to stderr.
int run_pipeline(const RunConfig& config);

// Reruns one of the reported studies at a reduced replication count and
// compares against the published reference values. Writes summary.csv and
// checks.txt under out_dir; returns 0 iff every check passes.
// Known ids: "2", "3", "d1" (alias "s1"), "d4", "d5", "d6".
int reproduce(const std::string& table, int reps, std::uint64_t seed,
              const std::string& out_dir, int jobs = 0);

// Version string embedded in all JSON reports.
std::string version_string();

}  // namespace bimatch
