#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "bimatch/exposure.hpp"
#include "bimatch/matching.hpp"
#include "bimatch/rng.hpp"
#include "doctest.h"

using namespace bimatch;

namespace {

struct SmallInstance {
    ExposureSeries es;
    BalanceCovariateSet cov;
    TuningParams params;
};

SmallInstance random_instance(Rng& rng, int max_exposed = 5, int max_unexposed = 7) {
    const int ne = 1 + int(rng.uniform() * max_exposed);
    const int nu = 1 + int(rng.uniform() * max_unexposed);
    const int T = ne + nu;
    SmallInstance s;
    s.es.unit = 0;
    s.es.rule = "test";
    s.es.e.assign(T, 0);
    // Scatter the exposed periods.
    std::vector<int> idx(T);
    for (int t = 0; t < T; ++t) idx[t] = t;
    for (int t = T - 1; t > 0; --t) std::swap(idx[t], idx[int(rng.uniform() * (t + 1))]);
    for (int k = 0; k < ne; ++k) s.es.e[idx[k]] = 1;

    const int K = int(rng.uniform() * 3);  // 0..2 covariates
    std::vector<double> vals(size_t(T) * K);
    for (double& v : vals) v = rng.normal(0, 1);
    std::vector<std::string> labels;
    for (int k = 0; k < K; ++k) labels.push_back("w" + std::to_string(k + 1));
    s.cov = BalanceCovariateSet::raw(T, vals, labels);

    const double deltas[] = {0, 1, 2};
    const double dprimes[] = {0.05, 0.1, std::numeric_limits<double>::infinity()};
    const int epss[] = {2, 6};
    s.params.delta = deltas[int(rng.uniform() * 3)];
    s.params.delta_prime = dprimes[int(rng.uniform() * 3)];
    s.params.eps = epss[int(rng.uniform() * 2)];
    return s;
}

// Independent exhaustive oracle: tries every assignment of candidates to
// exposed periods (or leaving one unmatched) and keeps the best cardinality
// among assignments that use disjoint unexposed periods and satisfy the
// aggregate caps. No pruning beyond the obvious, so correctness is visible.
struct Oracle {
    const MatchingProblem& p;
    std::vector<std::vector<std::array<int, 3>>> by_exposed;  // tu2=-1 for pairs
    int best = 0;

    explicit Oracle(const MatchingProblem& prob) : p(prob) {
        by_exposed.resize(p.exposed.size());
        auto pos = [&](int te) {
            return int(std::lower_bound(p.exposed.begin(), p.exposed.end(), te) -
                       p.exposed.begin());
        };
        for (auto& c : p.cand_pairs) by_exposed[pos(c.first)].push_back({c.first, c.second, -1});
        for (auto& c : p.cand_triples) by_exposed[pos(c[0])].push_back(c);
    }

    bool aggregates_ok(const std::vector<std::array<int, 3>>& chosen) const {
        if (chosen.empty()) return true;
        const double n = double(chosen.size());
        double st = 0;
        for (auto& c : chosen) {
            st += c[2] < 0 ? c[0] - c[1] : c[0] - 0.5 * (c[1] + c[2]);
        }
        if (std::abs(st) > p.params.delta * n + 1e-9) return false;
        for (int col : p.active_columns) {
            const double cap = p.covariates.uses_delta_cap(col) ? p.params.delta
                                                                : p.params.delta_prime;
            if (!std::isfinite(cap)) continue;
            double sc = 0;
            for (auto& c : chosen) {
                const double ve = p.covariates.at(c[0] - 1, col);
                if (c[2] < 0) {
                    sc += ve - p.covariates.at(c[1] - 1, col);
                } else {
                    sc += ve - 0.5 * (p.covariates.at(c[1] - 1, col) +
                                      p.covariates.at(c[2] - 1, col));
                }
            }
            if (std::abs(sc) > cap * n + 1e-9) return false;
        }
        return true;
    }

    void rec(size_t e, std::vector<std::array<int, 3>>& chosen,
             std::vector<char>& used) {
        if (e == by_exposed.size()) {
            if (aggregates_ok(chosen)) best = std::max(best, int(chosen.size()));
            return;
        }
        rec(e + 1, chosen, used);  // leave unmatched
        for (auto& c : by_exposed[e]) {
            if (used[c[1]] || (c[2] >= 0 && used[c[2]])) continue;
            used[c[1]] = 1;
            if (c[2] >= 0) used[c[2]] = 1;
            chosen.push_back(c);
            rec(e + 1, chosen, used);
            chosen.pop_back();
            used[c[1]] = 0;
            if (c[2] >= 0) used[c[2]] = 0;
        }
    }

    int run() {
        std::vector<std::array<int, 3>> chosen;
        std::vector<char> used(p.T + 1, 0);
        best = 0;
        rec(0, chosen, used);
        return best;
    }
};

}  // namespace

TEST_CASE("solver cardinality equals exhaustive enumeration on small instances") {
    Rng rng(101);
    int done = 0;
    while (done < 120) {
        SmallInstance s = random_instance(rng);
        for (Method m : {Method::one_one, Method::one_or_two, Method::one_two}) {
            MatchingProblem prob = build_problem(s.es, s.cov, s.params, m);
            MatchSet ms = solve(prob);
            CHECK(ms.proven_optimal);
            const int oracle = Oracle(prob).run();
            CHECK(ms.cardinality() == oracle);
            CHECK(ms.cardinality() <= ms.cardinality_bound);
            CHECK(ms.report.feasible());
        }
        ++done;
    }
}

TEST_CASE("both backends always return feasible match sets") {
    Rng rng(202);
    SolveOptions force_heuristic;
    force_heuristic.exact_candidate_limit = 0;
    for (int it = 0; it < 150; ++it) {
        SmallInstance s = random_instance(rng, 5, 12);
        for (Method m : {Method::one_one, Method::one_or_two, Method::one_two}) {
            MatchingProblem prob = build_problem(s.es, s.cov, s.params, m);
            for (bool force : {false, true}) {
                MatchSet ms = force ? solve(prob, force_heuristic) : solve(prob);
                BalanceReport rep = verify_feasibility(ms, prob);
                CHECK(rep.feasible());
                // Every returned match must come from the candidate lists.
                for (auto& pr : ms.pairs) {
                    CHECK(std::find(prob.cand_pairs.begin(), prob.cand_pairs.end(), pr) !=
                          prob.cand_pairs.end());
                }
                for (auto& tr : ms.triples) {
                    CHECK(std::find(prob.cand_triples.begin(), prob.cand_triples.end(),
                                    tr) != prob.cand_triples.end());
                }
            }
        }
    }
}

TEST_CASE("cardinality is monotone in eps") {
    Rng rng(303);
    for (int it = 0; it < 40; ++it) {
        SmallInstance s = random_instance(rng);
        s.params.delta_prime = std::numeric_limits<double>::infinity();
        int prev = -1;
        for (int eps : {0, 1, 2, 4, 8}) {
            s.params.eps = eps;
            int card = 0;
            try {
                card = solve(build_problem(s.es, s.cov, s.params, Method::one_one))
                           .cardinality();
            } catch (const NoMatchesPossible&) {
                card = 0;
            }
            CHECK(card >= prev);
            prev = card;
        }
    }
}

TEST_CASE("flexible matching dominates the fixed designs") {
    Rng rng(404);
    for (int it = 0; it < 60; ++it) {
        SmallInstance s = random_instance(rng);
        auto card = [&](Method m) {
            return solve(build_problem(s.es, s.cov, s.params, m)).cardinality();
        };
        const int c11 = card(Method::one_one);
        const int c12 = card(Method::one_two);
        const int cflex = card(Method::one_or_two);
        CHECK(cflex >= c11);
        CHECK(cflex >= c12);
    }
}

TEST_CASE("unadjusted mode drops exactly the covariate constraints") {
    Rng rng(505);
    SmallInstance s = random_instance(rng);
    while (s.cov.cols == 0) s = random_instance(rng);
    s.params.delta_prime = 0.05;

    s.params.adjust = true;
    MatchingProblem adj = build_problem(s.es, s.cov, s.params, Method::one_one);
    s.params.adjust = false;
    MatchingProblem unadj = build_problem(s.es, s.cov, s.params, Method::one_one);

    CHECK_FALSE(adj.active_columns.empty());
    CHECK(unadj.active_columns.empty());

    MatchSet ms = solve(unadj);
    bool saw_time = false;
    for (auto& c : ms.report.constraints) {
        CHECK(c.id.find('[') == std::string::npos);  // no covariate constraints
        saw_time = saw_time || c.id.find(".2") != std::string::npos;
    }
    CHECK(saw_time);

    // delta' = infinity must behave like unadjusted for the aggregates.
    s.params.adjust = true;
    s.params.delta_prime = std::numeric_limits<double>::infinity();
    MatchingProblem inf = build_problem(s.es, s.cov, s.params, Method::one_one);
    CHECK(inf.active_columns.empty());
}

TEST_CASE("verify_feasibility flags injected violations") {
    // Two exposed, two unexposed periods; eps large; force a bad match in.
    ExposureSeries es;
    es.e = {1, 0, 1, 0};
    std::vector<double> vals = {10, 0, -10, 0};
    BalanceCovariateSet cov = BalanceCovariateSet::raw(4, vals, {"w"});
    TuningParams params;
    params.eps = 3;
    params.delta = 0.0;  // aggregate time gaps must cancel
    params.delta_prime = 0.05;
    MatchingProblem prob = build_problem(es, cov, params, Method::one_one);

    MatchSet bad;
    bad.pairs = {{1, 2}, {3, 4}};  // tgap sum = -1 - 1 = -2, violates delta=0
    BalanceReport rep = verify_feasibility(bad, prob);
    CHECK_FALSE(rep.feasible());

    MatchSet ok;
    ok.pairs = {{1, 2}};  // single pair: |sum tgap| = 1 > 0*n, still violates
    CHECK_FALSE(verify_feasibility(ok, prob).feasible());
}

TEST_CASE("per-match gap never exceeds eps and triples straddle the exposed period") {
    Rng rng(606);
    for (int it = 0; it < 40; ++it) {
        SmallInstance s = random_instance(rng);
        MatchingProblem prob = build_problem(s.es, s.cov, s.params, Method::one_or_two);
        MatchSet ms = solve(prob);
        for (auto& pr : ms.pairs) {
            CHECK(std::abs(pr.first - pr.second) <= s.params.eps);
        }
        for (auto& tr : ms.triples) {
            CHECK(tr[1] < tr[0]);
            CHECK(tr[0] < tr[2]);
            CHECK(tr[0] - tr[1] <= s.params.eps);
            CHECK(tr[2] - tr[0] <= s.params.eps);
        }
    }
}

TEST_CASE("single-class exposure raises NoMatchesPossible") {
    ExposureSeries es;
    es.e = {1, 1, 1};
    BalanceCovariateSet cov = BalanceCovariateSet::raw(3, {}, {});
    TuningParams params;
    CHECK_THROWS_AS(build_problem(es, cov, params, Method::one_one), NoMatchesPossible);
}

TEST_CASE("per-match covariate cap filters candidates") {
    ExposureSeries es;
    es.e = {1, 0, 1, 0};
    // w jumps from t=3 on, so only the (1,2) pair survives a tight cap.
    std::vector<double> vals = {0.0, 0.05, 3.0, 5.0};
    BalanceCovariateSet cov = BalanceCovariateSet::raw(4, vals, {"w"});
    TuningParams params;
    params.eps = 1;
    params.delta = 5;
    params.delta_prime = std::numeric_limits<double>::infinity();
    params.delta_dprime = 0.25;
    MatchingProblem prob = build_problem(es, cov, params, Method::one_one);
    REQUIRE(prob.cand_pairs.size() == 1);
    CHECK(prob.cand_pairs[0] == std::make_pair(1, 2));
}
