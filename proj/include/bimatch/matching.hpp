#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bimatch/panel.hpp"

namespace bimatch {

enum class Method { one_one, one_two, one_or_two };

std::string method_name(Method m);
Method parse_method(const std::string& name);

struct TuningParams {
    double delta = 2.0;
    // Mean standardized-covariate imbalance cap; infinity disables the
    // covariate constraints without touching the time constraints.
    double delta_prime = 0.05;
    int eps = 6;
    // Per-match covariate cap (standardized units); unset = no cap.
    std::optional<double> delta_dprime;
    // Auxiliary expansion: localized/power columns of grid length ell up
    // to order kpow-1. Unset ell = linear constraints only.
    std::optional<double> ell;
    int kpow = 2;
    bool adjust = true;

    void check() const {
        if (delta < 0 || delta_prime < 0 || eps < 0) {
            throw std::invalid_argument("tuning parameters must be nonnegative");
        }
        if (delta_dprime && *delta_dprime < 0) {
            throw std::invalid_argument("delta'' must be nonnegative");
        }
        if (ell && (*ell <= 0 || kpow < 2)) {
            throw std::invalid_argument("auxiliary expansion needs ell > 0 and K >= 2");
        }
    }
};

// One matching instance for a single outcome unit. Times are the
// 1-based integers used in the data; covariate row t-1 belongs to time t.
struct MatchingProblem {
    int T = 0;
    std::vector<int> exposed;
    std::vector<int> unexposed;
    BalanceCovariateSet covariates;
    TuningParams params;
    Method method = Method::one_one;

    // Candidates surviving the per-match filters (eps, triple ordering,
    // delta'', same-interval groups).
    std::vector<std::pair<int, int>> cand_pairs;          // (t_e, t_u)
    std::vector<std::array<int, 3>> cand_triples;         // (t_e, t_u1, t_u2)

    // Column indices that generate aggregate balance constraints.
    std::vector<int> active_columns;
};

struct NoMatchesPossible : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConstraintSlack {
    std::string id;      // e.g. "A.2", "C.4[w3]"
    double value = 0.0;  // |achieved|
    double bound = 0.0;
    bool satisfied = true;
};

struct BalanceReport {
    int n_matches = 0;
    double mean_time_imbalance = 0.0;
    std::vector<std::string> covariate_labels;
    std::vector<double> mean_covariate_imbalance;
    int max_time_gap = 0;
    std::vector<std::string> dropped_columns;
    std::vector<ConstraintSlack> constraints;
    bool feasible() const {
        for (const auto& c : constraints)
            if (!c.satisfied) return false;
        return true;
    }
};

struct MatchSet {
    std::vector<std::pair<int, int>> pairs;
    std::vector<std::array<int, 3>> triples;
    bool proven_optimal = false;
    int cardinality_bound = 0;  // max matches ignoring aggregate constraints
    BalanceReport report;

    int cardinality() const {
        return static_cast<int>(pairs.size() + triples.size());
    }
};

struct ExposureSeries;  // exposure.hpp

// Appends localized columns (v - xi_r) on a grid of length ell, their
// powers up to kpow-1, global powers v^k, and the analogous columns for
// time, plus per-match same-interval groups. When `exposure` is given,
// the appended covariate columns are standardized by pooled SD; time
// columns always stay in raw time units (their cap is delta).
BalanceCovariateSet expand_auxiliary(const BalanceCovariateSet& covariates, double ell,
                                     int kpow,
                                     const std::vector<std::uint8_t>* exposure = nullptr);

MatchingProblem build_problem(const ExposureSeries& exposure,
                              const BalanceCovariateSet& covariates,
                              const TuningParams& params, Method method);

struct SolveOptions {
    // Exact search is attempted when the candidate count is at most this.
    size_t exact_candidate_limit = 5000;
    size_t exact_node_budget = 2000000;
    size_t repair_move_budget = 50000;
};

MatchSet solve(const MatchingProblem& problem, const SolveOptions& options = {});

// Recomputes every constraint from the problem data and reports the slack
// per constraint id; violations make BalanceReport::feasible() false.
BalanceReport verify_feasibility(const MatchSet& matchset,
                                 const MatchingProblem& problem);

}  // namespace bimatch
