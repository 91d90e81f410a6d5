#include "bimatch/matching.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "bimatch/exposure.hpp"

namespace bimatch {

namespace {

constexpr double kTol = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

// One candidate match. tu2 < 0 marks a pair.
struct Cand {
    int te = 0, tu1 = 0, tu2 = -1;
    double tgap = 0.0;     // signed time contribution to constraint .2
    double abs_gap = 0.0;  // tie-break gap: |te-tu| or mean of the two gaps
    bool is_pair() const { return tu2 < 0; }
};

double cap_for(const BalanceCovariateSet& cov, int c, const TuningParams& p) {
    return cov.uses_delta_cap(c) ? p.delta : p.delta_prime;
}

// Signed contrast of column c for a candidate (exposed minus imputed).
double col_contrast(const BalanceCovariateSet& cov, int c, const Cand& m) {
    const double e = cov.at(m.te - 1, c);
    if (m.is_pair()) return e - cov.at(m.tu1 - 1, c);
    return e - 0.5 * (cov.at(m.tu1 - 1, c) + cov.at(m.tu2 - 1, c));
}

bool same_groups(const BalanceCovariateSet& cov, int a, int b) {
    for (const auto& g : cov.same_interval_groups) {
        if (g[a - 1] != g[b - 1]) return false;
    }
    return true;
}

// Per-match covariate cap (delta''), applied to the non-dropped
// delta'-capped columns.
bool within_dprime(const BalanceCovariateSet& cov, const Cand& m, double dd) {
    for (int c = 0; c < cov.cols; ++c) {
        if (cov.dropped[c] || cov.uses_delta_cap(c)) continue;
        if (std::abs(col_contrast(cov, c, m)) > dd + kTol) return false;
    }
    return true;
}

Cand make_pair(int te, int tu) {
    Cand m;
    m.te = te;
    m.tu1 = tu;
    m.tgap = te - tu;
    m.abs_gap = std::abs(m.tgap);
    return m;
}

Cand make_triple(int te, int tu1, int tu2) {
    Cand m;
    m.te = te;
    m.tu1 = tu1;
    m.tu2 = tu2;
    m.tgap = te - 0.5 * (tu1 + tu2);
    m.abs_gap = 0.5 * (std::abs(te - tu1) + std::abs(tu2 - te));
    return m;
}

struct Instance {
    const MatchingProblem* prob = nullptr;
    std::vector<Cand> cands;
    // Candidate indices per exposed position, sorted by (abs_gap, tu1, tu2).
    std::vector<std::vector<int>> by_te;
    std::vector<double> contrasts;  // [cand * n_active + k]
    int n_active = 0;
    std::vector<double> caps;  // per active column

    double contrast(int cand, int k) const {
        return contrasts[static_cast<size_t>(cand) * n_active + k];
    }
};

Instance build_instance(const MatchingProblem& p) {
    Instance ins;
    ins.prob = &p;
    ins.n_active = static_cast<int>(p.active_columns.size());
    for (int c : p.active_columns) ins.caps.push_back(cap_for(p.covariates, c, p.params));

    for (const auto& [te, tu] : p.cand_pairs) ins.cands.push_back(make_pair(te, tu));
    for (const auto& t : p.cand_triples) ins.cands.push_back(make_triple(t[0], t[1], t[2]));

    ins.contrasts.resize(ins.cands.size() * ins.n_active);
    for (size_t m = 0; m < ins.cands.size(); ++m) {
        for (int k = 0; k < ins.n_active; ++k) {
            ins.contrasts[m * ins.n_active + k] =
                col_contrast(p.covariates, p.active_columns[k], ins.cands[m]);
        }
    }

    ins.by_te.resize(p.exposed.size());
    for (size_t e = 0; e < p.exposed.size(); ++e) {
        for (size_t m = 0; m < ins.cands.size(); ++m) {
            if (ins.cands[m].te == p.exposed[e]) ins.by_te[e].push_back((int)m);
        }
        auto& v = ins.by_te[e];
        std::sort(v.begin(), v.end(), [&](int a, int b) {
            const Cand &x = ins.cands[a], &y = ins.cands[b];
            if (x.abs_gap != y.abs_gap) return x.abs_gap < y.abs_gap;
            if (x.tu1 != y.tu1) return x.tu1 < y.tu1;
            return (x.tu2 < 0 ? 0 : x.tu2) < (y.tu2 < 0 ? 0 : y.tu2);
        });
    }
    return ins;
}

// Canonical key for deterministic tie-breaking: matches sorted by
// (t_e, t_u1, t_u2) flattened to ints, pairs carrying t_u2 = 0.
std::vector<int> canonical_key(const Instance& ins, const std::vector<int>& chosen) {
    std::vector<std::array<int, 3>> rows;
    for (int m : chosen) {
        const Cand& c = ins.cands[m];
        rows.push_back({c.te, c.tu1, c.tu2 < 0 ? 0 : c.tu2});
    }
    std::sort(rows.begin(), rows.end());
    std::vector<int> key;
    for (const auto& r : rows) {
        key.push_back(r[0]);
        key.push_back(r[1]);
        key.push_back(r[2]);
    }
    return key;
}

double total_gap(const Instance& ins, const std::vector<int>& chosen) {
    double g = 0.0;
    for (int m : chosen) g += ins.cands[m].abs_gap;
    return g;
}

bool aggregates_ok(const Instance& ins, double s_time, const std::vector<double>& s_col,
                   int n) {
    const double dn = static_cast<double>(n);
    if (std::abs(s_time) > ins.prob->params.delta * dn + kTol) return false;
    for (int k = 0; k < ins.n_active; ++k) {
        if (std::abs(s_col[k]) > ins.caps[k] * dn + kTol) return false;
    }
    return true;
}

// Total aggregate-constraint violation; zero means feasible.
double violation(const Instance& ins, double s_time, const std::vector<double>& s_col,
                 int n) {
    const double dn = static_cast<double>(n);
    double v = std::max(0.0, std::abs(s_time) - ins.prob->params.delta * dn - kTol);
    for (int k = 0; k < ins.n_active; ++k) {
        v += std::max(0.0, std::abs(s_col[k]) - ins.caps[k] * dn - kTol);
    }
    return v;
}

// Kuhn augmenting-path maximum bipartite matching over the given edges
// (exposed position -> list of unexposed times). Deterministic: positions
// are processed in order and edges in the given order.
int max_bipartite(const std::vector<std::vector<int>>& adj, int t_max,
                  std::vector<int>* match_of_te = nullptr) {
    std::vector<int> owner(t_max + 1, -1);  // unexposed time -> exposed pos
    std::vector<char> seen(t_max + 1, 0);
    std::function<bool(int)> try_match = [&](int e) {
        for (int tu : adj[e]) {
            if (seen[tu]) continue;
            seen[tu] = 1;
            if (owner[tu] < 0 || try_match(owner[tu])) {
                owner[tu] = e;
                return true;
            }
        }
        return false;
    };
    int card = 0;
    for (size_t e = 0; e < adj.size(); ++e) {
        std::fill(seen.begin(), seen.end(), 0);
        if (try_match(static_cast<int>(e))) ++card;
    }
    if (match_of_te) {
        match_of_te->assign(adj.size(), -1);
        for (int tu = 1; tu <= t_max; ++tu) {
            if (owner[tu] >= 0) (*match_of_te)[owner[tu]] = tu;
        }
    }
    return card;
}

// Upper bound on cardinality ignoring the aggregate balance constraints.
int cardinality_bound(const Instance& ins) {
    const MatchingProblem& p = *ins.prob;
    const int E = static_cast<int>(p.exposed.size());
    if (p.method == Method::one_two) {
        // A triple solution induces a valid before-matching and a valid
        // after-matching, so both matchings bound the cardinality.
        std::vector<std::vector<int>> before(E), after(E);
        for (const Cand& c : ins.cands) {
            int e = static_cast<int>(std::lower_bound(p.exposed.begin(), p.exposed.end(),
                                                      c.te) -
                                     p.exposed.begin());
            before[e].push_back(c.tu1);
            after[e].push_back(c.tu2);
        }
        for (auto* side : {&before, &after}) {
            for (auto& v : *side) {
                std::sort(v.begin(), v.end());
                v.erase(std::unique(v.begin(), v.end()), v.end());
            }
        }
        return std::min(max_bipartite(before, p.T), max_bipartite(after, p.T));
    }
    // 1-1 and 1-1/2: every solution yields a matching of exposed periods
    // to one of their unexposed times.
    std::vector<std::vector<int>> adj(E);
    for (const Cand& c : ins.cands) {
        int e = static_cast<int>(
            std::lower_bound(p.exposed.begin(), p.exposed.end(), c.te) -
            p.exposed.begin());
        adj[e].push_back(c.tu1);
        if (!c.is_pair()) adj[e].push_back(c.tu2);
    }
    for (auto& v : adj) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    return max_bipartite(adj, p.T);
}

struct SearchResult {
    std::vector<int> chosen;
    bool proven = false;
};

// Depth-first search over exposed positions; every leaf whose aggregate
// sums are feasible competes on (cardinality, total gap, canonical key).
SearchResult exact_search(const Instance& ins, size_t node_budget) {
    const int E = static_cast<int>(ins.prob->exposed.size());
    std::vector<char> used(ins.prob->T + 1, 0);
    std::vector<int> current;
    std::vector<double> s_col(ins.n_active, 0.0);
    double s_time = 0.0;

    std::vector<int> best;  // empty set is feasible
    int best_card = 0;
    double best_gap = 0.0;
    std::vector<int> best_key;
    size_t nodes = 0;
    bool exhausted = false;

    std::function<void(int)> dfs = [&](int e) {
        if (exhausted) return;
        if (++nodes > node_budget) {
            exhausted = true;
            return;
        }
        const int cur = static_cast<int>(current.size());
        if (cur + (E - e) < best_card) return;
        if (e == E) {
            if (!aggregates_ok(ins, s_time, s_col, cur)) return;
            const double gap = total_gap(ins, current);
            if (cur > best_card || (cur == best_card && gap < best_gap - kTol)) {
                best = current;
                best_card = cur;
                best_gap = gap;
                best_key = canonical_key(ins, best);
            } else if (cur == best_card && std::abs(gap - best_gap) <= kTol) {
                auto key = canonical_key(ins, current);
                if (best_key.empty() || key < best_key) {
                    best = current;
                    best_gap = std::min(best_gap, gap);
                    best_key = std::move(key);
                }
            }
            return;
        }
        for (int m : ins.by_te[e]) {
            const Cand& c = ins.cands[m];
            if (used[c.tu1] || (!c.is_pair() && used[c.tu2])) continue;
            used[c.tu1] = 1;
            if (!c.is_pair()) used[c.tu2] = 1;
            current.push_back(m);
            s_time += c.tgap;
            for (int k = 0; k < ins.n_active; ++k) s_col[k] += ins.contrast(m, k);
            dfs(e + 1);
            for (int k = 0; k < ins.n_active; ++k) s_col[k] -= ins.contrast(m, k);
            s_time -= c.tgap;
            current.pop_back();
            used[c.tu1] = 0;
            if (!c.is_pair()) used[c.tu2] = 0;
            if (exhausted) return;
        }
        dfs(e + 1);  // leave this exposed period unmatched
    };
    dfs(0);

    SearchResult r;
    r.chosen = std::move(best);
    r.proven = !exhausted;
    return r;
}

// Greedy maximum-cardinality start followed by deterministic
// best-improvement repair of the aggregate balance constraints.
std::vector<int> heuristic_search(const Instance& ins, size_t move_budget) {
    const MatchingProblem& p = *ins.prob;
    const int E = static_cast<int>(p.exposed.size());
    std::vector<int> chosen(E, -1);
    std::vector<char> used(p.T + 1, 0);

    auto occupy = [&](int m, char v) {
        used[ins.cands[m].tu1] = v;
        if (!ins.cands[m].is_pair()) used[ins.cands[m].tu2] = v;
    };

    if (p.method == Method::one_two) {
        for (int e = 0; e < E; ++e) {
            for (int m : ins.by_te[e]) {
                const Cand& c = ins.cands[m];
                if (used[c.tu1] || used[c.tu2]) continue;
                chosen[e] = m;
                occupy(m, 1);
                break;
            }
        }
    } else {
        // Maximum matching on pair candidates, then map back to the
        // pair with that unexposed time.
        std::vector<std::vector<int>> adj(E);
        for (int e = 0; e < E; ++e) {
            for (int m : ins.by_te[e]) {
                if (ins.cands[m].is_pair()) adj[e].push_back(ins.cands[m].tu1);
            }
        }
        std::vector<int> mate;
        max_bipartite(adj, p.T, &mate);
        for (int e = 0; e < E; ++e) {
            if (mate[e] < 0) continue;
            for (int m : ins.by_te[e]) {
                if (ins.cands[m].is_pair() && ins.cands[m].tu1 == mate[e]) {
                    chosen[e] = m;
                    occupy(m, 1);
                    break;
                }
            }
        }
    }

    double s_time = 0.0;
    std::vector<double> s_col(ins.n_active, 0.0);
    int n = 0;
    for (int e = 0; e < E; ++e) {
        if (chosen[e] < 0) continue;
        ++n;
        s_time += ins.cands[chosen[e]].tgap;
        for (int k = 0; k < ins.n_active; ++k) s_col[k] += ins.contrast(chosen[e], k);
    }

    auto eval = [&](double st, const std::vector<double>& sc, int nn) {
        return violation(ins, st, sc, nn);
    };

    std::vector<double> tmp(ins.n_active);
    size_t moves = 0;
    while (moves < move_budget && eval(s_time, s_col, n) > 0.0) {
        double cur_v = eval(s_time, s_col, n);
        int best_e = -1, best_m = -1;
        double best_v = cur_v;
        double best_gap = kInf;
        // Replacement moves: same exposed period, different candidate.
        for (int e = 0; e < E; ++e) {
            if (chosen[e] < 0) continue;
            const int old = chosen[e];
            occupy(old, 0);
            for (int m : ins.by_te[e]) {
                if (m == old) continue;
                const Cand& c = ins.cands[m];
                if (used[c.tu1] || (!c.is_pair() && used[c.tu2])) continue;
                const double st = s_time - ins.cands[old].tgap + c.tgap;
                for (int k = 0; k < ins.n_active; ++k) {
                    tmp[k] = s_col[k] - ins.contrast(old, k) + ins.contrast(m, k);
                }
                const double v = eval(st, tmp, n);
                // Only strictly improving moves are eligible; accepting
                // equal-violation swaps lets the loop cycle between two
                // candidates until the budget runs out.
                if (v >= cur_v - 1e-12) continue;
                if (v < best_v - 1e-12 ||
                    (v < best_v + 1e-12 && c.abs_gap < best_gap)) {
                    best_v = v;
                    best_gap = c.abs_gap;
                    best_e = e;
                    best_m = m;
                }
            }
            occupy(old, 1);
        }
        ++moves;
        if (best_e >= 0) {
            const int old = chosen[best_e];
            occupy(old, 0);
            s_time += ins.cands[best_m].tgap - ins.cands[old].tgap;
            for (int k = 0; k < ins.n_active; ++k) {
                s_col[k] += ins.contrast(best_m, k) - ins.contrast(old, k);
            }
            chosen[best_e] = best_m;
            occupy(best_m, 1);
            continue;
        }
        // Stalled: drop the match whose removal shrinks the violation most.
        int drop_e = -1;
        double drop_v = kInf;
        for (int e = 0; e < E; ++e) {
            if (chosen[e] < 0) continue;
            const int m = chosen[e];
            const double st = s_time - ins.cands[m].tgap;
            for (int k = 0; k < ins.n_active; ++k) {
                tmp[k] = s_col[k] - ins.contrast(m, k);
            }
            const double v = eval(st, tmp, n - 1);
            if (v < drop_v) {
                drop_v = v;
                drop_e = e;
            }
        }
        if (drop_e < 0) break;  // nothing left to drop
        const int m = chosen[drop_e];
        occupy(m, 0);
        s_time -= ins.cands[m].tgap;
        for (int k = 0; k < ins.n_active; ++k) s_col[k] -= ins.contrast(m, k);
        chosen[drop_e] = -1;
        --n;
    }

    // Never return an infeasible set: if the move budget ran out mid-repair,
    // shed matches until the aggregates fit (the empty set always does).
    while (n > 0 && eval(s_time, s_col, n) > 0.0) {
        int drop_e = -1;
        double drop_v = kInf;
        for (int e = 0; e < E; ++e) {
            if (chosen[e] < 0) continue;
            const int m = chosen[e];
            const double st = s_time - ins.cands[m].tgap;
            for (int k = 0; k < ins.n_active; ++k) {
                tmp[k] = s_col[k] - ins.contrast(m, k);
            }
            const double v = eval(st, tmp, n - 1);
            if (v < drop_v) {
                drop_v = v;
                drop_e = e;
            }
        }
        const int m = chosen[drop_e];
        occupy(m, 0);
        s_time -= ins.cands[m].tgap;
        for (int k = 0; k < ins.n_active; ++k) s_col[k] -= ins.contrast(m, k);
        chosen[drop_e] = -1;
        --n;
    }

    // Re-add matches for unmatched exposed periods while staying feasible.
    bool added = true;
    while (added && eval(s_time, s_col, n) == 0.0 && moves < move_budget) {
        added = false;
        for (int e = 0; e < E; ++e) {
            if (chosen[e] >= 0) continue;
            for (int m : ins.by_te[e]) {
                const Cand& c = ins.cands[m];
                if (used[c.tu1] || (!c.is_pair() && used[c.tu2])) continue;
                const double st = s_time + c.tgap;
                for (int k = 0; k < ins.n_active; ++k) {
                    tmp[k] = s_col[k] + ins.contrast(m, k);
                }
                if (eval(st, tmp, n + 1) == 0.0) {
                    chosen[e] = m;
                    occupy(m, 1);
                    s_time = st;
                    s_col = tmp;
                    ++n;
                    added = true;
                    break;
                }
            }
        }
        ++moves;
    }

    // Polish: with cardinality fixed and feasibility intact, drive the
    // signed aggregate sums toward zero. The realized |sum(tgap)|/n and
    // |sum(contrast)|/n are the first-order bias terms, so centering them
    // inside their caps directly tightens the estimate, not just the bound.
    auto center_score = [&](double st, const std::vector<double>& sc) {
        double s = std::abs(st) / (p.params.delta > 0.0 ? p.params.delta : 1.0);
        for (int k = 0; k < ins.n_active; ++k) {
            s += std::abs(sc[k]) / (ins.caps[k] > 0.0 ? ins.caps[k] : 1.0);
        }
        return s;
    };
    while (moves < move_budget && eval(s_time, s_col, n) == 0.0) {
        double cur = center_score(s_time, s_col);
        int best_e = -1, best_m = -1;
        double best_s = cur;
        for (int e = 0; e < E; ++e) {
            if (chosen[e] < 0) continue;
            const int old = chosen[e];
            occupy(old, 0);
            for (int m : ins.by_te[e]) {
                if (m == old) continue;
                const Cand& c = ins.cands[m];
                if (used[c.tu1] || (!c.is_pair() && used[c.tu2])) continue;
                const double st = s_time - ins.cands[old].tgap + c.tgap;
                for (int k = 0; k < ins.n_active; ++k) {
                    tmp[k] = s_col[k] - ins.contrast(old, k) + ins.contrast(m, k);
                }
                if (eval(st, tmp, n) != 0.0) continue;
                const double s = center_score(st, tmp);
                if (s < best_s - 1e-9) {
                    best_s = s;
                    best_e = e;
                    best_m = m;
                }
            }
            occupy(old, 1);
        }
        ++moves;
        if (best_e < 0) break;
        const int old = chosen[best_e];
        occupy(old, 0);
        s_time += ins.cands[best_m].tgap - ins.cands[old].tgap;
        for (int k = 0; k < ins.n_active; ++k) {
            s_col[k] += ins.contrast(best_m, k) - ins.contrast(old, k);
        }
        chosen[best_e] = best_m;
        occupy(best_m, 1);
    }

    std::vector<int> out;
    for (int e = 0; e < E; ++e) {
        if (chosen[e] >= 0) out.push_back(chosen[e]);
    }
    return out;
}

MatchSet assemble(const Instance& ins, const std::vector<int>& chosen, bool proven,
                  int bound) {
    MatchSet ms;
    ms.proven_optimal = proven;
    ms.cardinality_bound = bound;
    std::vector<int> sorted = chosen;
    std::sort(sorted.begin(), sorted.end(), [&](int a, int b) {
        return ins.cands[a].te < ins.cands[b].te;
    });
    for (int m : sorted) {
        const Cand& c = ins.cands[m];
        if (c.is_pair()) {
            ms.pairs.emplace_back(c.te, c.tu1);
        } else {
            ms.triples.push_back({c.te, c.tu1, c.tu2});
        }
    }
    ms.report = verify_feasibility(ms, *ins.prob);
    return ms;
}

}  // namespace

std::string method_name(Method m) {
    switch (m) {
        case Method::one_one: return "1-1";
        case Method::one_two: return "1-2";
        case Method::one_or_two: return "1-1/2";
    }
    return "?";
}

Method parse_method(const std::string& name) {
    if (name == "1-1") return Method::one_one;
    if (name == "1-2") return Method::one_two;
    if (name == "1-1/2" || name == "1-12") return Method::one_or_two;
    throw std::invalid_argument("unknown matching method: " + name);
}

BalanceCovariateSet expand_auxiliary(const BalanceCovariateSet& covariates, double ell,
                                     int kpow,
                                     const std::vector<std::uint8_t>* exposure) {
    if (ell <= 0.0 || kpow < 2) {
        throw std::invalid_argument("expand_auxiliary: need ell > 0 and K >= 2");
    }
    const int T = covariates.T;
    BalanceCovariateSet out = covariates;
    out.same_interval_groups.clear();

    struct NewCol {
        std::vector<double> values;
        std::string label;
        bool delta_cap = false;
    };
    std::vector<NewCol> extra;

    // Localized powers of one series v over support [a,b], partitioned
    // into ceil((b-a)/ell) intervals with midpoints xi_r. The interval
    // indicator follows the partition (matched periods constrained to a
    // common interval elsewhere), so exactly one localized column is
    // active per time period.
    auto expand_series = [&](const std::vector<double>& v, const std::string& base,
                             double a, double b, bool delta_cap) {
        const int R = static_cast<int>(std::ceil((b - a) / ell - kTol));
        std::vector<int> group(T);
        for (int t = 0; t < T; ++t) {
            int g = static_cast<int>(std::floor((v[t] - a) / ell));
            group[t] = std::clamp(g, 0, R - 1);
        }
        for (int r = 0; r < R; ++r) {
            const double xi = a + (r + 0.5) * ell;
            for (int k = 1; k <= kpow - 1; ++k) {
                NewCol col;
                col.label = base + "|loc" + std::to_string(r + 1) +
                            (k > 1 ? "^" + std::to_string(k) : "");
                col.delta_cap = delta_cap;
                col.values.resize(T);
                for (int t = 0; t < T; ++t) {
                    col.values[t] = group[t] == r ? std::pow(v[t] - xi, k) : 0.0;
                }
                extra.push_back(std::move(col));
            }
        }
        for (int k = 2; k <= kpow - 1; ++k) {
            NewCol col;
            col.label = base + "^" + std::to_string(k);
            col.delta_cap = delta_cap;
            col.values.resize(T);
            for (int t = 0; t < T; ++t) col.values[t] = std::pow(v[t], k);
            extra.push_back(std::move(col));
        }
        out.same_interval_groups.push_back(std::move(group));
    };

    std::vector<double> series(T);
    for (int c = 0; c < covariates.cols; ++c) {
        if (covariates.dropped[c] || covariates.uses_delta_cap(c)) continue;
        double a = kInf, b = -kInf;
        for (int t = 0; t < T; ++t) {
            series[t] = covariates.at(t, c);
            a = std::min(a, series[t]);
            b = std::max(b, series[t]);
        }
        if (b - a <= kTol) continue;  // degenerate support, nothing to localize
        expand_series(series, covariates.labels[c], a, b, false);
    }
    // Time itself, capped by delta rather than delta'.
    if (T > 1) {
        for (int t = 0; t < T; ++t) series[t] = t + 1;
        expand_series(series, "time", 1.0, static_cast<double>(T), true);
    }

    const int base_cols = out.cols;
    const int total = base_cols + static_cast<int>(extra.size());
    std::vector<double> values(static_cast<size_t>(T) * total);
    for (int t = 0; t < T; ++t) {
        for (int c = 0; c < base_cols; ++c) {
            values[static_cast<size_t>(t) * total + c] = out.at(t, c);
        }
        for (size_t x = 0; x < extra.size(); ++x) {
            values[static_cast<size_t>(t) * total + base_cols + x] = extra[x].values[t];
        }
    }
    out.values = std::move(values);
    out.cols = total;
    if (out.cap_is_delta.empty()) out.cap_is_delta.assign(base_cols, 0);
    for (const auto& col : extra) {
        out.labels.push_back(col.label);
        out.pooled_sd.push_back(1.0);
        out.dropped.push_back(0);
        out.cap_is_delta.push_back(col.delta_cap ? 1 : 0);
    }

    if (exposure) {
        // Standardize the appended delta'-capped columns the same way the
        // raw covariate columns were.
        std::vector<double> e_vals, u_vals;
        for (int c = base_cols; c < out.cols; ++c) {
            if (out.uses_delta_cap(c)) continue;
            e_vals.clear();
            u_vals.clear();
            for (int t = 0; t < T; ++t) {
                ((*exposure)[t] ? e_vals : u_vals).push_back(out.at(t, c));
            }
            auto var = [](const std::vector<double>& v) {
                if (v.size() < 2) return 0.0;
                double m = 0.0;
                for (double x : v) m += x;
                m /= static_cast<double>(v.size());
                double ss = 0.0;
                for (double x : v) ss += (x - m) * (x - m);
                return ss / static_cast<double>(v.size() - 1);
            };
            const double pooled = std::sqrt((var(e_vals) + var(u_vals)) / 2.0);
            if (pooled <= 1e-12) {
                out.dropped[c] = 1;
                continue;
            }
            out.pooled_sd[c] = pooled;
            for (int t = 0; t < T; ++t) {
                out.values[static_cast<size_t>(t) * out.cols + c] /= pooled;
            }
        }
    }
    return out;
}

MatchingProblem build_problem(const ExposureSeries& exposure,
                              const BalanceCovariateSet& covariates,
                              const TuningParams& params, Method method) {
    params.check();
    MatchingProblem p;
    p.T = static_cast<int>(exposure.e.size());
    p.params = params;
    p.method = method;
    p.covariates = covariates;
    if (params.ell && covariates.same_interval_groups.empty()) {
        p.covariates = expand_auxiliary(covariates, *params.ell, params.kpow,
                                        &exposure.e);
    }
    if (p.covariates.T != p.T) {
        throw std::invalid_argument("build_problem: covariate/exposure length mismatch");
    }
    for (int t = 0; t < p.T; ++t) {
        (exposure.e[t] ? p.exposed : p.unexposed).push_back(t + 1);
    }
    if (p.exposed.empty() || p.unexposed.empty()) {
        throw NoMatchesPossible("exposure series has a single class");
    }

    const BalanceCovariateSet& cov = p.covariates;
    for (int c = 0; c < cov.cols; ++c) {
        if (cov.dropped[c]) continue;
        if (cov.uses_delta_cap(c)) {
            p.active_columns.push_back(c);
        } else if (params.adjust && std::isfinite(params.delta_prime)) {
            p.active_columns.push_back(c);
        }
    }

    const bool dd = params.adjust && params.delta_dprime.has_value();
    auto pair_ok = [&](int te, int tu) {
        if (std::abs(te - tu) > params.eps) return false;
        if (!same_groups(cov, te, tu)) return false;
        if (dd && !within_dprime(cov, make_pair(te, tu), *params.delta_dprime)) {
            return false;
        }
        return true;
    };

    if (method != Method::one_two) {
        for (int te : p.exposed) {
            for (int tu : p.unexposed) {
                if (pair_ok(te, tu)) p.cand_pairs.emplace_back(te, tu);
            }
        }
    }
    if (method != Method::one_one) {
        for (int te : p.exposed) {
            for (int tu1 : p.unexposed) {
                if (tu1 >= te || te - tu1 > params.eps) continue;
                if (!same_groups(cov, te, tu1)) continue;
                for (int tu2 : p.unexposed) {
                    if (tu2 <= te || tu2 - te > params.eps) continue;
                    if (!same_groups(cov, te, tu2)) continue;
                    if (dd && !within_dprime(cov, make_triple(te, tu1, tu2),
                                             *params.delta_dprime)) {
                        continue;
                    }
                    p.cand_triples.push_back({te, tu1, tu2});
                }
            }
        }
    }
    return p;
}

MatchSet solve(const MatchingProblem& problem, const SolveOptions& options) {
    Instance ins = build_instance(problem);
    const int bound = cardinality_bound(ins);

    // Exact search explores leaves, so it is only attempted on instances
    // small enough that the tree fits the node budget in practice.
    const bool try_exact = ins.cands.size() <= options.exact_candidate_limit &&
                           problem.exposed.size() <= 24 &&
                           problem.unexposed.size() <= 64;
    if (try_exact) {
        SearchResult r = exact_search(ins, options.exact_node_budget);
        if (r.proven) return assemble(ins, r.chosen, true, bound);
        std::vector<int> h = heuristic_search(ins, options.repair_move_budget);
        // Keep whichever of the two feasible sets matches more periods.
        const auto& pick = h.size() > r.chosen.size() ? h : r.chosen;
        return assemble(ins, pick, false, bound);
    }
    std::vector<int> h = heuristic_search(ins, options.repair_move_budget);
    return assemble(ins, h, false, bound);
}

BalanceReport verify_feasibility(const MatchSet& matchset,
                                 const MatchingProblem& problem) {
    const BalanceCovariateSet& cov = problem.covariates;
    const TuningParams& par = problem.params;
    const char prefix = problem.method == Method::one_one   ? 'A'
                        : problem.method == Method::one_two ? 'B'
                                                            : 'C';
    BalanceReport rep;
    auto add = [&rep](std::string id, double value, double bound) {
        ConstraintSlack s;
        s.id = std::move(id);
        s.value = value;
        s.bound = bound;
        s.satisfied = value <= bound + kTol;
        rep.constraints.push_back(std::move(s));
    };
    auto cid = [&prefix](const std::string& suffix) {
        return std::string(1, prefix) + "." + suffix;
    };

    const int n = matchset.cardinality();
    rep.n_matches = n;

    // .1 — disjoint use of time periods, class membership, triple ordering.
    std::vector<int> use_count(problem.T + 1, 0);
    std::vector<char> is_exposed(problem.T + 1, 0);
    for (int te : problem.exposed) is_exposed[te] = 1;
    double reused = 0.0, misclassified = 0.0, misordered = 0.0;
    auto touch = [&](int t, bool exposed_role) {
        if (t < 1 || t > problem.T) {
            misclassified += 1.0;
            return;
        }
        if (++use_count[t] > 1) reused += 1.0;
        if (static_cast<bool>(is_exposed[t]) != exposed_role) misclassified += 1.0;
    };
    for (const auto& [te, tu] : matchset.pairs) {
        touch(te, true);
        touch(tu, false);
    }
    for (const auto& t : matchset.triples) {
        touch(t[0], true);
        touch(t[1], false);
        touch(t[2], false);
        if (!(t[1] < t[0] && t[0] < t[2])) misordered += 1.0;
    }
    if (problem.method == Method::one_one && !matchset.triples.empty()) {
        misclassified += 1.0;
    }
    if (problem.method == Method::one_two && !matchset.pairs.empty()) {
        misclassified += 1.0;
    }
    add(cid("1"), reused + misclassified, 0.0);
    add(cid("3o"), misordered, 0.0);  // triple before/after ordering

    // .2 — mean time imbalance; .3 — per-match gaps.
    double s_time = 0.0;
    int max_gap = 0;
    for (const auto& [te, tu] : matchset.pairs) {
        s_time += te - tu;
        max_gap = std::max(max_gap, std::abs(te - tu));
    }
    for (const auto& t : matchset.triples) {
        s_time += t[0] - 0.5 * (t[1] + t[2]);
        max_gap = std::max({max_gap, std::abs(t[0] - t[1]), std::abs(t[2] - t[0])});
    }
    rep.mean_time_imbalance = n > 0 ? s_time / n : 0.0;
    rep.max_time_gap = max_gap;
    add(cid("2"), std::abs(s_time), par.delta * n);
    add(cid("3"), max_gap, par.eps);

    // .4/.5 — aggregate covariate balance on every non-dropped column.
    std::vector<Cand> cands;
    for (const auto& [te, tu] : matchset.pairs) cands.push_back(make_pair(te, tu));
    for (const auto& t : matchset.triples) {
        cands.push_back(make_triple(t[0], t[1], t[2]));
    }
    for (int c = 0; c < cov.cols; ++c) {
        if (cov.dropped[c]) {
            rep.dropped_columns.push_back(cov.labels[c]);
            continue;
        }
        double s = 0.0;
        for (const Cand& m : cands) s += col_contrast(cov, c, m);
        rep.covariate_labels.push_back(cov.labels[c]);
        rep.mean_covariate_imbalance.push_back(n > 0 ? s / n : 0.0);
        if (cov.uses_delta_cap(c)) {
            add(cid("2") + "[" + cov.labels[c] + "]", std::abs(s), par.delta * n);
        } else if (par.adjust && std::isfinite(par.delta_prime)) {
            // An infinite cap disables the constraint (and would turn the
            // bound into inf * 0 = NaN for empty match sets).
            add(cid("4") + "[" + cov.labels[c] + "]", std::abs(s), par.delta_prime * n);
        }
    }

    // Per-match covariate cap and same-interval restrictions, when active.
    if (par.adjust && par.delta_dprime) {
        double worst = 0.0;
        for (const Cand& m : cands) {
            for (int c = 0; c < cov.cols; ++c) {
                if (cov.dropped[c] || cov.uses_delta_cap(c)) continue;
                worst = std::max(worst, std::abs(col_contrast(cov, c, m)));
            }
        }
        add(cid("4m"), worst, *par.delta_dprime);
    }
    if (!cov.same_interval_groups.empty()) {
        double breaks = 0.0;
        for (const Cand& m : cands) {
            if (!same_groups(cov, m.te, m.tu1)) breaks += 1.0;
            if (!m.is_pair() && !same_groups(cov, m.te, m.tu2)) breaks += 1.0;
        }
        add(cid("aux"), breaks, 0.0);
    }
    return rep;
}

}  // namespace bimatch
