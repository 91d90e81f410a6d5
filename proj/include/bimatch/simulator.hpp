#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bimatch/matching.hpp"
#include "bimatch/panel.hpp"

namespace bimatch {

// One synthetic-study configuration: confounding scenario, exposure
// sparsity, size, seed, and the optional generative variants.
struct ScenarioSpec {
    char scenario = 'a';  // a..e
    std::string sparsity = "medium";
    int N = 50, M = 200, T = 400;
    std::uint64_t seed = 42;
    // Unit locations form the study geography and stay fixed across
    // replications and across `seed`; change this to sample a different
    // geography.
    std::uint64_t location_seed = 2;

    bool null_effects = false;       // zero out the exposure effect
    bool heterogeneous = false;      // time/unit-varying exposure effect
    double ar1_rho = 0.0;            // AR(1) outcome errors when > 0
    bool network_confounding = false;  // distance-driven network variant of (a)
    std::string gp_kernel = "printed";  // or "intended"
    int threshold_override = 0;      // exposure threshold d; 0 = catalog

    void check() const;
};

struct Locations {
    std::vector<double> xi, yi;  // interventional units
    std::vector<double> xj, yj;  // outcome units
};

Locations gen_locations(std::uint64_t seed, int N, int M);

// All generated arrays are row-major with time as the leading index.
struct SimData {
    int N = 0, M = 0, T = 0;
    Locations loc;
    std::vector<double> dist;   // [N*M]
    std::vector<double> R;      // [N*M] neighbor indicator (distance <= 0.1)
    std::vector<double> Q;      // [N*M] column-normalized R

    std::vector<double> X;      // [T*N*6]
    std::vector<double> W;      // [T*M*6]
    std::vector<double> P;      // [T*N*M], only kept when store_full
    std::vector<double> Ptilde;     // [T*M] = sum_i q_ij P_tij
    std::vector<double> Pneighbor;  // [T*N] neighbor mean of P over j

    std::vector<std::uint8_t> A;  // [T*N]
    std::vector<std::uint8_t> G;  // [T*N*M]
    std::vector<double> Y;        // [T*M]
    std::vector<double> effect;   // [T*M] true per-period exposure effect
    std::vector<std::uint8_t> E;  // [T*M] exposure indicators used in Y
    int d = 0;                    // threshold that produced E

    double x(int t, int i, int s) const { return X[(size_t(t) * N + i) * 6 + s]; }
    double w(int t, int j, int s) const { return W[(size_t(t) * M + j) * 6 + s]; }
};

// Covariates, treatment, network, and outcome for one replication.
// store_full keeps the [T*N*M] network-covariate tensor (needed only for
// CSV export; the summaries used by estimation are always kept).
SimData generate(const ScenarioSpec& spec, std::uint64_t seed, bool store_full = false);

// Calibrated exposure-count thresholds d per (scenario, sparsity).
int exposure_threshold(const ScenarioSpec& spec);

// Exposure counts E_tj = I(sum_i A G >= d) for one outcome unit.
std::vector<std::uint8_t> sim_exposure(const SimData& data, int j, int d);

// Balance covariates used throughout the synthetic studies: W3, W5, W6
// and the q-weighted network covariate, standardized by pooled SD.
BalanceCovariateSet sim_balance_covariates(const SimData& data, int j,
                                           const std::vector<std::uint8_t>& exposure);

// Converts one replication into the generic panel container (used by the
// CSV export path). Requires store_full data.
PanelDataset to_panel(const SimData& data);

struct MethodSummary {
    std::string method;
    std::string estimand = "effect";  // truth the row is scored against
    double bias = 0.0;
    double mse = 0.0;
    double coverage = 0.0;  // percent
    double prop_matched = 0.0;  // percent; 0 for the baselines
    int reps = 0;
};

struct StudyOptions {
    TuningParams tuning;
    std::vector<Method> methods{Method::one_one, Method::one_or_two, Method::one_two};
    bool include_naive = true;
    double alpha = 0.05;
    int unit = 0;        // outcome unit under study
    int threads = 0;     // 0 = library default
};

struct ReplicationRow {
    int rep = 0;
    std::string method;
    std::string estimand;
    bool used = false;
    double estimate = 0.0, ci_lo = 0.0, ci_hi = 0.0;
    double prop_matched = 0.0;
    double truth = 0.0;
};

struct StudyTable {
    std::vector<MethodSummary> rows;
    std::vector<ReplicationRow> replications;  // ordered by (row, rep)
    double mean_exposed_count = 0.0;
    double share_in_band = 0.0;  // replications inside the sparsity band
};

// Monte-Carlo study of single-unit estimation (bias/MSE/coverage/matched
// proportion). Per-replication seeds derive from (spec.seed, rep), so the
// table is identical for any thread count.
StudyTable run_study(const ScenarioSpec& spec, int reps, const StudyOptions& options);

struct GlobalNullSummary {
    std::string method;
    double mean_estimate = 0.0;
    double rate_p_below_alpha = 0.0;      // share of unit p-values < alpha
    double rate_min_p_below_alpha = 0.0;  // share of reps with any p < alpha
    double rate_fdr_reject = 0.0;         // share of reps rejecting after BH
    double mean_available = 0.0;          // units with a usable matchset
};

// Multi-unit global-null study (all M outcome units, BH-corrected test).
std::vector<GlobalNullSummary> run_global_null_study(const ScenarioSpec& spec, int reps,
                                                     const StudyOptions& options);

std::pair<int, int> sparsity_band(const std::string& sparsity);

}  // namespace bimatch
