#include "bimatch/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "bimatch/estimator.hpp"
#include "bimatch/exposure.hpp"
#include "bimatch/inference.hpp"
#include "bimatch/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace bimatch {

std::string version_string() {
#ifdef BIMATCH_VERSION
    return BIMATCH_VERSION;
#else
    return "v0.1.0";
#endif
}

void RunConfig::check() const {
    if (input_dir.empty()) throw std::invalid_argument("config: input directory required");
    if (out_dir.empty()) throw std::invalid_argument("config: output directory required");
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("config: alpha must be in (0,1)");
    }
    if (methods.empty()) throw std::invalid_argument("config: at least one method");
    tuning.check();
}

std::vector<Method> parse_methods(const std::string& csv) {
    std::vector<Method> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(parse_method(tok));
    }
    if (out.empty()) throw std::invalid_argument("empty methods list");
    return out;
}

void apply_config_entry(RunConfig& c, const std::string& key, const std::string& value) {
    if (key == "input") {
        c.input_dir = value;
    } else if (key == "out") {
        c.out_dir = value;
    } else if (key == "exposure") {
        c.exposure = value;
    } else if (key == "delta") {
        c.tuning.delta = std::stod(value);
    } else if (key == "delta_prime") {
        c.tuning.delta_prime =
            value == "inf" ? std::numeric_limits<double>::infinity() : std::stod(value);
    } else if (key == "eps") {
        c.tuning.eps = std::stoi(value);
    } else if (key == "delta_dprime") {
        c.tuning.delta_dprime = std::stod(value);
    } else if (key == "ell") {
        c.tuning.ell = std::stod(value);
    } else if (key == "kpow") {
        c.tuning.kpow = std::stoi(value);
    } else if (key == "adjust") {
        c.tuning.adjust = value == "1" || value == "true" || value == "yes";
    } else if (key == "methods") {
        c.methods = parse_methods(value);
    } else if (key == "alpha") {
        c.alpha = std::stod(value);
    } else if (key == "seed") {
        c.seed = std::stoull(value);
    } else if (key == "jobs") {
        c.jobs = std::stoi(value);
    } else if (key == "units") {
        c.units.clear();
        std::stringstream ss(value);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (!tok.empty()) c.units.push_back(std::stoi(tok));
        }
    } else {
        throw std::invalid_argument("unknown config key: " + key);
    }
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    RunConfig c;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto strip = [](std::string s) {
            const size_t a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string();
            const size_t b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        line = strip(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                        ": expected key=value");
        }
        apply_config_entry(c, strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
    }
    return c;
}

namespace {

struct ExposureRuleSpec {
    std::string kind;  // "threshold" or "proportion"
    int d = 1;
    double th = 0.5;
};

ExposureRuleSpec parse_exposure_rule(const std::string& s) {
    ExposureRuleSpec r;
    if (s.rfind("threshold:d=", 0) == 0) {
        r.kind = "threshold";
        r.d = std::stoi(s.substr(12));
        if (r.d < 1) throw std::invalid_argument("exposure threshold d must be >= 1");
    } else if (s.rfind("proportion:th=", 0) == 0) {
        r.kind = "proportion";
        r.th = std::stod(s.substr(14));
        if (!(r.th > 0.0 && r.th <= 1.0)) {
            throw std::invalid_argument("exposure proportion threshold must be in (0,1]");
        }
    } else {
        throw std::invalid_argument("exposure rule must be threshold:d=K or "
                                    "proportion:th=V, got '" + s + "'");
    }
    return r;
}

json tuning_json(const TuningParams& t) {
    json out;
    out["delta"] = t.delta;
    if (std::isinf(t.delta_prime)) {
        out["delta_prime"] = "inf";
    } else {
        out["delta_prime"] = t.delta_prime;
    }
    out["eps"] = t.eps;
    if (t.delta_dprime) out["delta_dprime"] = *t.delta_dprime;
    if (t.ell) {
        out["ell"] = *t.ell;
        out["kpow"] = t.kpow;
    }
    out["adjust"] = t.adjust;
    return out;
}

json report_json(const BalanceReport& r) {
    json out;
    out["n_matches"] = r.n_matches;
    out["mean_time_imbalance"] = r.mean_time_imbalance;
    out["max_time_gap"] = r.max_time_gap;
    json covs = json::array();
    for (size_t k = 0; k < r.covariate_labels.size(); ++k) {
        covs.push_back({{"label", r.covariate_labels[k]},
                        {"mean_imbalance", r.mean_covariate_imbalance[k]}});
    }
    out["covariates"] = covs;
    out["dropped_columns"] = r.dropped_columns;
    json cons = json::array();
    for (const auto& c : r.constraints) {
        cons.push_back({{"id", c.id},
                        {"value", c.value},
                        {"bound", c.bound},
                        {"satisfied", c.satisfied}});
    }
    out["constraints"] = cons;
    out["feasible"] = r.feasible();
    return out;
}

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

// Balance covariates for one outcome unit from a generic panel: the
// unit's own covariates, plus q-weighted summaries of the treatment-side
// and pairwise covariates (uniform weights unless q_weights.csv supplied
// a vector for that covariate).
BalanceCovariateSet panel_balance_covariates(const LoadedData& data, int j,
                                             const std::vector<std::uint8_t>& exposure) {
    const PanelDataset& p = data.panel;
    const int T = p.T;
    std::vector<std::string> labels;
    std::vector<std::vector<double>> cols;
    for (int s = 0; s < p.pW; ++s) {
        std::vector<double> col(T);
        for (int t = 0; t < T; ++t) col[t] = p.w(t, j, s);
        cols.push_back(std::move(col));
        labels.push_back(p.w_names[s]);
    }
    const auto weights_for = [&](const std::string& name) {
        auto it = data.q_weights.find(name);
        if (it != data.q_weights.end()) return it->second;
        return std::vector<double>(p.N, 1.0 / p.N);
    };
    for (int s = 0; s < p.pX; ++s) {
        const auto q = weights_for(p.x_names[s]);
        std::vector<double> col(T, 0.0);
        for (int t = 0; t < T; ++t) {
            for (int i = 0; i < p.N; ++i) col[t] += q[i] * p.x(t, i, s);
        }
        cols.push_back(std::move(col));
        labels.push_back("q:" + p.x_names[s]);
    }
    for (int s = 0; s < p.pP; ++s) {
        const auto q = weights_for(p.p_names[s]);
        std::vector<double> col(T, 0.0);
        for (int t = 0; t < T; ++t) {
            for (int i = 0; i < p.N; ++i) col[t] += q[i] * p.p(t, i, j, s);
        }
        cols.push_back(std::move(col));
        labels.push_back("q:" + p.p_names[s]);
    }
    const int K = int(cols.size());
    std::vector<double> flat(size_t(T) * K);
    for (int t = 0; t < T; ++t) {
        for (int k = 0; k < K; ++k) flat[size_t(t) * K + k] = cols[k][t];
    }
    return standardize(flat, T, K, labels, exposure);
}

struct UnitResult {
    int unit = 0;  // 1-based
    bool available = false;
    std::string note;
    struct PerMethod {
        Method method = Method::one_one;
        bool ok = false;
        std::string note;
        MatchSet matchset;
        EffectEstimate estimate;
        InferenceResult inference;
    };
    std::vector<PerMethod> methods;
};

}  // namespace

int run_pipeline(const RunConfig& config) {
    try {
        config.check();
    } catch (const std::exception& ex) {
        std::cerr << "config error: " << ex.what() << '\n';
        return kExitValidation;
    }

    LoadedData data;
    try {
        data = load_directory(config.input_dir);
    } catch (const std::exception& ex) {
        std::cerr << "ingestion error: " << ex.what() << '\n';
        return kExitValidation;
    }
    if (!data.has_exposures && !(data.has_network && data.has_treatments)) {
        std::cerr << "missing exposure source: provide exposures.csv or both "
                     "treatments.csv and network.csv\n";
        return kExitValidation;
    }
    const ValidationReport vr = validate(data.panel);
    if (!vr.ok()) {
        std::cerr << "validation failed:\n";
        for (const auto& issue : vr.issues) std::cerr << "  - " << issue << '\n';
        return kExitValidation;
    }

    ExposureRuleSpec rule;
    if (!data.has_exposures) {
        try {
            rule = parse_exposure_rule(config.exposure);
        } catch (const std::exception& ex) {
            std::cerr << "config error: " << ex.what() << '\n';
            return kExitValidation;
        }
    }

    const int M = data.panel.M;
    std::vector<int> units = config.units;
    if (units.empty()) {
        for (int j = 1; j <= M; ++j) units.push_back(j);
    }
    for (int j : units) {
        if (j < 1 || j > M) {
            std::cerr << "unit index out of range: " << j << '\n';
            return kExitValidation;
        }
    }
    fs::create_directories(config.out_dir);

    std::vector<UnitResult> results(units.size());
#ifdef _OPENMP
    if (config.jobs > 0) omp_set_num_threads(config.jobs);
#endif
#pragma omp parallel for schedule(dynamic)
    for (int u = 0; u < int(units.size()); ++u) {
        const int j = units[u];
        UnitResult& res = results[u];
        res.unit = j;
        std::vector<std::uint8_t> e(data.panel.T);
        std::string rule_name;
        if (data.has_exposures) {
            for (int t = 0; t < data.panel.T; ++t) {
                e[t] = data.exposures[size_t(t) * M + (j - 1)];
            }
            rule_name = "file";
        } else if (rule.kind == "threshold") {
            ExposureSeries es = threshold_exposure(data.panel, j - 1, rule.d);
            e = es.e;
            rule_name = es.rule;
        } else {
            ExposureSeries es = proportion_exposure(data.panel, j - 1, rule.th);
            e = es.e;
            rule_name = es.rule;
        }
        int n_exposed = 0;
        for (auto v : e) n_exposed += v;
        if (n_exposed == 0 || n_exposed == int(e.size())) {
            res.note = "single-class exposure series; unit skipped";
            continue;
        }
        res.available = true;

        BalanceCovariateSet cov;
        try {
            cov = panel_balance_covariates(data, j - 1, e);
        } catch (const std::exception& ex) {
            res.available = false;
            res.note = std::string("balance covariates unavailable: ") + ex.what();
            continue;
        }
        ExposureSeries es{j - 1, e, rule_name};
        for (Method m : config.methods) {
            UnitResult::PerMethod pm;
            pm.method = m;
            try {
                MatchingProblem prob = build_problem(es, cov, config.tuning, m);
                pm.matchset = solve(prob);
                std::vector<double> y(data.panel.T);
                for (int t = 0; t < data.panel.T; ++t) y[t] = data.panel.y(t, j - 1);
                pm.estimate = impute_and_estimate(pm.matchset, y, n_exposed,
                                                  method_name(m));
                pm.inference = wald(pm.estimate, config.alpha);
                pm.ok = true;
            } catch (const std::exception& ex) {
                pm.note = ex.what();
            }
            res.methods.push_back(std::move(pm));
        }
    }

    // Per-unit reports.
    bool any_matches = false;
    for (const auto& res : results) {
        const fs::path udir = fs::path(config.out_dir) / ("unit_" + std::to_string(res.unit));
        fs::create_directories(udir);
        json ms, est, inf;
        ms["unit"] = res.unit;
        ms["available"] = res.available;
        if (!res.note.empty()) ms["note"] = res.note;
        ms["tuning"] = tuning_json(config.tuning);
        ms["version"] = version_string();
        est["unit"] = res.unit;
        est["version"] = version_string();
        inf["unit"] = res.unit;
        inf["alpha"] = config.alpha;
        inf["version"] = version_string();
        json ms_m = json::array(), est_m = json::array(), inf_m = json::array();
        for (const auto& pm : res.methods) {
            json m;
            m["method"] = method_name(pm.method);
            m["ok"] = pm.ok;
            if (!pm.note.empty()) m["note"] = pm.note;
            if (pm.ok) {
                any_matches = true;
                m["proven_optimal"] = pm.matchset.proven_optimal;
                m["cardinality_bound"] = pm.matchset.cardinality_bound;
                json pairs = json::array();
                for (const auto& [te, tu] : pm.matchset.pairs) {
                    pairs.push_back({te, tu});
                }
                m["pairs"] = pairs;
                json triples = json::array();
                for (const auto& t : pm.matchset.triples) {
                    triples.push_back({t[0], t[1], t[2]});
                }
                m["triples"] = triples;
                m["report"] = report_json(pm.matchset.report);
            }
            ms_m.push_back(m);

            json e2;
            e2["method"] = method_name(pm.method);
            e2["ok"] = pm.ok;
            if (pm.ok) {
                e2["tau_hat"] = pm.estimate.tau_hat;
                e2["n_matches"] = int(pm.estimate.differences.size());
                e2["prop_matched"] = pm.estimate.prop_matched;
                e2["estimand"] = pm.estimate.estimand;
                e2["matched_exposed"] = pm.estimate.matched_exposed;
                e2["differences"] = pm.estimate.differences;
            }
            est_m.push_back(e2);

            json i2;
            i2["method"] = method_name(pm.method);
            i2["ok"] = pm.ok;
            if (pm.ok) {
                i2["tau_hat"] = pm.inference.tau_hat;
                i2["s_hat"] = pm.inference.s_hat;
                i2["n"] = pm.inference.n;
                i2["ci"] = {pm.inference.ci_lo, pm.inference.ci_hi};
                i2["p_value"] = pm.inference.p_value;
                i2["no_variance"] = pm.inference.no_variance;
            }
            inf_m.push_back(i2);
        }
        ms["methods"] = ms_m;
        est["methods"] = est_m;
        inf["methods"] = inf_m;
        write_json_file(udir / "matchset.json", ms);
        write_json_file(udir / "estimate.json", est);
        write_json_file(udir / "inference.json", inf);
    }

    // Global test across units (per method), when more than one unit.
    if (results.size() > 1) {
        json g;
        g["alpha"] = config.alpha;
        g["version"] = version_string();
        json per_method = json::array();
        for (size_t mi = 0; mi < config.methods.size(); ++mi) {
            std::vector<double> p(results.size(), 1.0);
            std::vector<bool> avail(results.size(), false);
            for (size_t u = 0; u < results.size(); ++u) {
                if (!results[u].available || mi >= results[u].methods.size()) continue;
                const auto& pm = results[u].methods[mi];
                if (pm.ok && !pm.inference.no_variance) {
                    p[u] = pm.inference.p_value;
                    avail[u] = true;
                }
            }
            json m;
            m["method"] = method_name(config.methods[mi]);
            bool any_avail = false;
            for (bool a : avail) any_avail = any_avail || a;
            if (!any_avail) {
                m["ok"] = false;
                per_method.push_back(m);
                continue;
            }
            GlobalTestResult gt = global_test(p, config.alpha, &avail);
            m["ok"] = true;
            m["global_reject"] = gt.global_reject;
            json adj = json::array(), rej = json::array(), aff = json::array(),
                 unav = json::array(), pv = json::array();
            for (size_t u = 0; u < results.size(); ++u) {
                pv.push_back(avail[u] ? json(gt.p_values[u]) : json(nullptr));
                adj.push_back(avail[u] ? json(gt.adjusted[u]) : json(nullptr));
                rej.push_back(bool(gt.rejected[u]));
            }
            for (int u : gt.affected_units) aff.push_back(results[u].unit);
            for (int u : gt.unavailable_units) unav.push_back(results[u].unit);
            m["units"] = [&] {
                json us = json::array();
                for (const auto& r : results) us.push_back(r.unit);
                return us;
            }();
            m["p_values"] = pv;
            m["adjusted"] = adj;
            m["rejected"] = rej;
            m["affected_units"] = aff;
            m["unavailable_units"] = unav;
            per_method.push_back(m);
        }
        g["methods"] = per_method;
        write_json_file(fs::path(config.out_dir) / "global_test.json", g);
    }

    // Human-oriented summary: one row per unit and method.
    {
        std::ostringstream csv, txt;
        csv.precision(10);
        csv << "unit,method,estimate,p_value,n_matches,prop_matched\n";
        txt << "unit  method  estimate  p-value  n-matches  prop-matched\n";
        for (const auto& res : results) {
            for (const auto& pm : res.methods) {
                if (!pm.ok) {
                    csv << res.unit << ',' << method_name(pm.method) << ",,,0,\n";
                    txt << res.unit << "  " << method_name(pm.method)
                        << "  (no matches)\n";
                    continue;
                }
                csv << res.unit << ',' << method_name(pm.method) << ','
                    << pm.estimate.tau_hat << ',' << pm.inference.p_value << ','
                    << pm.estimate.differences.size() << ',' << pm.estimate.prop_matched
                    << '\n';
                txt << res.unit << "  " << method_name(pm.method) << "  "
                    << pm.estimate.tau_hat << "  " << pm.inference.p_value << "  "
                    << pm.estimate.differences.size() << "  "
                    << pm.estimate.prop_matched << '\n';
            }
            if (res.methods.empty()) {
                csv << res.unit << ",,,,0,\n";
                txt << res.unit << "  (unavailable: " << res.note << ")\n";
            }
        }
        write_text_file((fs::path(config.out_dir) / "summary.csv").string(), csv.str());
        write_text_file((fs::path(config.out_dir) / "summary.txt").string(), txt.str());
    }

    if (!any_matches) {
        std::cerr << "no matches found for any requested unit\n";
        return kExitNoMatches;
    }
    return kExitOk;
}

namespace {

struct Check {
    std::string what;
    bool pass = false;
    double value = 0.0;
};

void emit_checks(const std::string& out_dir, const std::vector<Check>& checks) {
    std::ostringstream ss;
    ss.precision(6);
    for (const auto& c : checks) {
        ss << (c.pass ? "PASS" : "FAIL") << ' ' << c.what << " (value=" << c.value
           << ")\n";
    }
    std::cout << ss.str();
    write_text_file((fs::path(out_dir) / "checks.txt").string(), ss.str());
}

void write_study_csv(const std::string& out_dir,
                     const std::vector<std::pair<std::string, StudyTable>>& tables) {
    std::ostringstream csv;
    csv.precision(10);
    csv << "study,method,estimand,bias,mse,coverage,prop_matched,reps\n";
    for (const auto& [name, table] : tables) {
        for (const auto& row : table.rows) {
            csv << name << ',' << row.method << ',' << row.estimand << ',' << row.bias
                << ',' << row.mse << ',' << row.coverage << ',' << row.prop_matched
                << ',' << row.reps << '\n';
        }
    }
    write_text_file((fs::path(out_dir) / "summary.csv").string(), csv.str());
}

const MethodSummary* find_row(const StudyTable& t, const std::string& method,
                              const std::string& estimand = "") {
    for (const auto& r : t.rows) {
        if (r.method == method && (estimand.empty() || r.estimand == estimand)) {
            return &r;
        }
    }
    return nullptr;
}

bool is_matching_name(const std::string& m) {
    return m == "1-1" || m == "1-2" || m == "1-1/2";
}

}  // namespace

int reproduce(const std::string& table, int reps, std::uint64_t seed,
              const std::string& out_dir, int jobs) {
    fs::create_directories(out_dir);
    StudyOptions opts;
    opts.threads = jobs;
    std::vector<Check> checks;
    const auto add = [&checks](const std::string& what, bool pass, double value) {
        checks.push_back({what, pass, value});
    };

    if (table == "2") {
        std::vector<std::pair<std::string, StudyTable>> tables;
        for (char sc : {'a', 'b', 'c', 'd', 'e'}) {
            ScenarioSpec spec;
            spec.scenario = sc;
            spec.seed = seed;
            StudyTable t = run_study(spec, reps, opts);
            const std::string name = std::string("scenario-") + sc;
            for (const auto& row : t.rows) {
                if (!is_matching_name(row.method)) continue;
                add(name + " " + row.method + " |bias| <= 0.08",
                    std::abs(row.bias) <= 0.08, row.bias);
                add(name + " " + row.method + " coverage in [88,100]",
                    row.coverage >= 88.0 && row.coverage <= 100.0, row.coverage);
            }
            if (sc == 'a') {
                const auto* r = find_row(t, "1-1");
                add("scenario-a 1-1 matched proportion >= 95%",
                    r && r->prop_matched >= 95.0, r ? r->prop_matched : 0.0);
            }
            if (sc == 'b') {
                const auto* r = find_row(t, "naive-t");
                add("scenario-b naive-t bias in [-1.15,-0.75]",
                    r && r->bias >= -1.15 && r->bias <= -0.75, r ? r->bias : 0.0);
                add("scenario-b naive-t coverage <= 30%",
                    r && r->coverage <= 30.0, r ? r->coverage : 100.0);
            }
            if (sc == 'c') {
                const auto* r = find_row(t, "naive-all");
                add("scenario-c naive-all bias in [-4.3,-2.8]",
                    r && r->bias >= -4.3 && r->bias <= -2.8, r ? r->bias : 0.0);
                add("scenario-c naive-all coverage == 0%",
                    r && r->coverage == 0.0, r ? r->coverage : 100.0);
            }
            tables.emplace_back(name, std::move(t));
        }
        write_study_csv(out_dir, tables);
    } else if (table == "3") {
        ScenarioSpec spec;
        spec.scenario = 'b';
        spec.null_effects = true;
        spec.seed = seed;
        opts.methods = {Method::one_one};
        auto rows = run_global_null_study(spec, reps, opts);
        std::ostringstream csv;
        csv.precision(10);
        csv << "method,mean_estimate,rate_p_below_alpha,rate_min_p_below_alpha,"
               "rate_fdr_reject,mean_available\n";
        for (const auto& r : rows) {
            csv << r.method << ',' << r.mean_estimate << ',' << r.rate_p_below_alpha
                << ',' << r.rate_min_p_below_alpha << ',' << r.rate_fdr_reject << ','
                << r.mean_available << '\n';
        }
        write_text_file((fs::path(out_dir) / "summary.csv").string(), csv.str());
        const auto* m11 = [&]() -> const GlobalNullSummary* {
            for (const auto& r : rows)
                if (r.method == "1-1") return &r;
            return nullptr;
        }();
        const auto* nt = [&]() -> const GlobalNullSummary* {
            for (const auto& r : rows)
                if (r.method == "naive-t") return &r;
            return nullptr;
        }();
        add("1-1 rate of min raw p < 0.05 >= 0.95",
            m11 && m11->rate_min_p_below_alpha >= 0.95,
            m11 ? m11->rate_min_p_below_alpha : 0.0);
        add("1-1 FDR global rejection rate in [0.02,0.16]",
            m11 && m11->rate_fdr_reject >= 0.02 && m11->rate_fdr_reject <= 0.16,
            m11 ? m11->rate_fdr_reject : 0.0);
        add("naive-t FDR global rejection rate == 1",
            nt && nt->rate_fdr_reject == 1.0, nt ? nt->rate_fdr_reject : 0.0);
    } else if (table == "d1" || table == "s1") {
        opts.tuning.adjust = false;
        std::vector<std::pair<std::string, StudyTable>> tables;
        for (char sc : {'b', 'c', 'd'}) {
            ScenarioSpec spec;
            spec.scenario = sc;
            spec.seed = seed;
            StudyTable t = run_study(spec, reps, opts);
            const std::string name = std::string("scenario-") + sc + "-unadjusted";
            for (const auto& row : t.rows) {
                if (!is_matching_name(row.method)) continue;
                if (sc == 'd') {
                    add(name + " " + row.method + " bias <= -0.25", row.bias <= -0.25,
                        row.bias);
                } else {
                    add(name + " " + row.method + " |bias| <= 0.08",
                        std::abs(row.bias) <= 0.08, row.bias);
                    add(name + " " + row.method + " coverage >= 88%",
                        row.coverage >= 88.0, row.coverage);
                }
            }
            tables.emplace_back(name, std::move(t));
        }
        write_study_csv(out_dir, tables);
    } else if (table == "d4") {
        ScenarioSpec spec;
        spec.scenario = 'a';
        spec.network_confounding = true;
        spec.seed = seed;
        StudyTable t = run_study(spec, reps, opts);
        for (const auto& row : t.rows) {
            if (!is_matching_name(row.method)) continue;
            add("network-confounding " + row.method + " |bias| <= 0.08",
                std::abs(row.bias) <= 0.08, row.bias);
        }
        write_study_csv(out_dir, {{"network-confounding", std::move(t)}});
    } else if (table == "d5") {
        ScenarioSpec spec;
        spec.scenario = 'b';
        spec.heterogeneous = true;
        spec.seed = seed;
        StudyTable t = run_study(spec, reps, opts);
        for (const auto& row : t.rows) {
            if (!is_matching_name(row.method)) continue;
            if (row.estimand == "tau-matched") {
                add("heterogeneous " + row.method + " vs matched estimand |bias| <= 0.08",
                    std::abs(row.bias) <= 0.08, row.bias);
                add("heterogeneous " + row.method + " vs matched estimand coverage >= 90%",
                    row.coverage >= 90.0, row.coverage);
            } else if (row.estimand == "tau") {
                add("heterogeneous " + row.method + " vs all-period estimand bias > 0.1",
                    row.bias > 0.1, row.bias);
            }
        }
        write_study_csv(out_dir, {{"heterogeneous", std::move(t)}});
    } else if (table == "d6") {
        ScenarioSpec spec;
        spec.scenario = 'a';
        spec.ar1_rho = 0.8;
        spec.seed = seed;
        StudyTable t = run_study(spec, reps, opts);
        for (const auto& row : t.rows) {
            if (!is_matching_name(row.method)) continue;
            add("ar1 rho=0.8 " + row.method + " coverage in [88,98]",
                row.coverage >= 88.0 && row.coverage <= 98.0, row.coverage);
        }
        write_study_csv(out_dir, {{"ar1", std::move(t)}});
    } else {
        std::cerr << "unknown table id '" << table
                  << "' (known: 2, 3, d1, d4, d5, d6)\n";
        return kExitValidation;
    }

    emit_checks(out_dir, checks);
    for (const auto& c : checks) {
        if (!c.pass) return 1;
    }
    return kExitOk;
}

}  // namespace bimatch
