// Command-line front end: exposure computation, constrained matching,
// effect estimation with Wald/FDR inference, bias-bound calculators, and
// the Monte-Carlo study drivers.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bimatch/csv_io.hpp"
#include "bimatch/estimator.hpp"
#include "bimatch/pipeline.hpp"
#include "bimatch/rng.hpp"
#include "bimatch/simulator.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace bimatch;

namespace {

struct TuningFlags {
    double delta = 2.0;
    std::string delta_prime = "0.05";
    int eps = 6;
    double delta_dprime = -1.0;
    double ell = -1.0;
    int kpow = 2;
    bool unadjusted = false;

    TuningParams to_params() const {
        TuningParams t;
        t.delta = delta;
        t.delta_prime = delta_prime == "inf"
                            ? std::numeric_limits<double>::infinity()
                            : std::stod(delta_prime);
        t.eps = eps;
        if (delta_dprime >= 0.0) t.delta_dprime = delta_dprime;
        if (ell > 0.0) t.ell = ell;
        t.kpow = kpow;
        t.adjust = !unadjusted;
        t.check();
        return t;
    }
};

void add_tuning_flags(CLI::App* cmd, TuningFlags& f) {
    cmd->add_option("--delta", f.delta, "Mean time-imbalance cap");
    cmd->add_option("--delta-prime", f.delta_prime,
                    "Mean covariate-imbalance cap ('inf' disables)");
    cmd->add_option("--eps", f.eps, "Per-match maximum time gap");
    cmd->add_option("--delta-dprime", f.delta_dprime,
                    "Per-match covariate gap cap (negative = unset)");
    cmd->add_option("--ell", f.ell,
                    "Auxiliary-expansion grid length (nonpositive = off)");
    cmd->add_option("--kpow", f.kpow, "Auxiliary-expansion smoothness order");
    cmd->add_flag("--unadjusted", f.unadjusted, "Drop the covariate constraints");
}

int cmd_simulate(const std::string& scenario, const std::string& sparsity, int reps,
                 std::uint64_t seed, const std::string& methods,
                 const std::string& out_dir, const TuningFlags& tf, bool null_effects,
                 bool heterogeneous, double ar1, bool network_confounding,
                 const std::string& kernel, int threshold, int unit, int jobs,
                 const std::string& export_dir) {
    ScenarioSpec spec;
    if (scenario.size() != 1) throw CLI::ValidationError("--scenario must be a..e");
    spec.scenario = scenario[0];
    spec.sparsity = sparsity;
    spec.seed = seed;
    spec.null_effects = null_effects;
    spec.heterogeneous = heterogeneous;
    spec.ar1_rho = ar1;
    spec.network_confounding = network_confounding;
    spec.gp_kernel = kernel;
    spec.threshold_override = threshold;
    spec.check();

    if (!export_dir.empty()) {
        // Dump the first replication in the documented CSV formats.
        const SimData data = generate(spec, mix_seed(seed, 0), /*store_full=*/true);
        fs::create_directories(export_dir);
        const PanelDataset panel = to_panel(data);
        write_treatments_csv((fs::path(export_dir) / "treatments.csv").string(), panel);
        write_network_csv((fs::path(export_dir) / "network.csv").string(), panel);
        write_outcomes_csv((fs::path(export_dir) / "outcomes.csv").string(), panel);
        write_x_covariates_csv((fs::path(export_dir) / "x_covariates.csv").string(),
                               panel);
        write_w_covariates_csv((fs::path(export_dir) / "w_covariates.csv").string(),
                               panel);
        write_p_covariates_csv((fs::path(export_dir) / "p_covariates.csv").string(),
                               panel);
        write_exposures_csv((fs::path(export_dir) / "exposures.csv").string(), data.E,
                            data.T, data.M);
        std::cout << "exported replication 0 to " << export_dir << "\n";
        if (reps == 0) return kExitOk;
    }

    StudyOptions opts;
    opts.tuning = tf.to_params();
    opts.methods = parse_methods(methods);
    opts.unit = unit - 1;
    opts.threads = jobs;
    const StudyTable table = run_study(spec, reps, opts);

    fs::create_directories(out_dir);
    std::ostringstream csv;
    csv.precision(10);
    csv << "method,estimand,bias,mse,coverage,prop_matched,reps\n";
    for (const auto& r : table.rows) {
        csv << r.method << ',' << r.estimand << ',' << r.bias << ',' << r.mse << ','
            << r.coverage << ',' << r.prop_matched << ',' << r.reps << '\n';
    }
    write_text_file((fs::path(out_dir) / "summary.csv").string(), csv.str());

    json reps_json = json::array();
    for (const auto& rr : table.replications) {
        json r;
        r["rep"] = rr.rep;
        r["method"] = rr.method;
        r["estimand"] = rr.estimand;
        r["used"] = rr.used;
        if (rr.used) {
            r["estimate"] = rr.estimate;
            r["ci"] = {rr.ci_lo, rr.ci_hi};
            r["prop_matched"] = rr.prop_matched;
            r["truth"] = rr.truth;
        }
        reps_json.push_back(std::move(r));
    }
    json out;
    out["scenario"] = scenario;
    out["sparsity"] = sparsity;
    out["seed"] = seed;
    out["threshold"] = exposure_threshold(spec);
    out["mean_exposed_count"] = table.mean_exposed_count;
    out["share_in_band"] = table.share_in_band;
    out["version"] = version_string();
    out["replications"] = reps_json;
    std::ofstream jf(fs::path(out_dir) / "replications.json");
    jf << out.dump(2) << '\n';

    std::cout << csv.str();
    std::cout << "mean exposed count " << table.mean_exposed_count << ", share in band "
              << table.share_in_band << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Outcome-unit causal effects under bipartite interference: "
                 "exposure mapping, constrained matching, estimation, inference"};
    app.require_subcommand(1);

    // ---- simulate ----
    auto* sim = app.add_subcommand("simulate", "Run the Monte-Carlo study");
    std::string sim_scenario = "a", sim_sparsity = "medium";
    int sim_reps = 100;
    std::uint64_t sim_seed = 42;
    std::string sim_methods = "1-1,1-12,1-2";
    std::string sim_out = "sim_out";
    TuningFlags sim_tf;
    bool sim_null = false, sim_het = false, sim_nc = false;
    double sim_ar1 = 0.0;
    std::string sim_kernel = "printed";
    int sim_threshold = 0, sim_unit = 1, sim_jobs = 0;
    std::string sim_export;
    sim->add_option("--scenario", sim_scenario, "Confounding scenario a..e");
    sim->add_option("--sparsity", sim_sparsity, "dense|medium|sparse");
    sim->add_option("--reps", sim_reps, "Replication count");
    sim->add_option("--seed", sim_seed, "Base seed");
    sim->add_option("--methods", sim_methods, "Comma list of 1-1,1-12,1-2");
    sim->add_option("--out", sim_out, "Output directory");
    sim->add_flag("--null-effects", sim_null, "Zero exposure effect");
    sim->add_flag("--heterogeneous", sim_het, "Heterogeneous exposure effect");
    sim->add_option("--ar1", sim_ar1, "AR(1) error correlation");
    sim->add_flag("--network-confounding", sim_nc,
                  "Distance-driven network variant of scenario a");
    sim->add_option("--kernel", sim_kernel, "GP kernel: printed|intended");
    sim->add_option("--threshold", sim_threshold, "Exposure threshold d (0 = catalog)");
    sim->add_option("--unit", sim_unit, "Outcome unit under study (1-based)");
    sim->add_option("--jobs", sim_jobs, "Worker threads (0 = default)");
    sim->add_option("--export-panel", sim_export,
                    "Also dump replication 0 as CSV files into this directory");
    add_tuning_flags(sim, sim_tf);

    // ---- shared analysis flags ----
    struct AnalysisFlags {
        std::string input, out = "out";
        std::string exposure = "threshold:d=1";
        std::string methods = "1-1,1-12,1-2";
        double alpha = 0.05;
        std::uint64_t seed = 42;
        int jobs = 0;
        std::vector<int> units;
        TuningFlags tf;
    };
    const auto add_analysis_flags = [](CLI::App* cmd, AnalysisFlags& f,
                                       bool need_input) {
        auto* in = cmd->add_option("--input", f.input, "Input directory of CSV files");
        if (need_input) in->required();
        cmd->add_option("--out", f.out, "Output directory");
        cmd->add_option("--exposure", f.exposure,
                        "threshold:d=K or proportion:th=V (ignored with exposures.csv)");
        cmd->add_option("--methods", f.methods, "Comma list of 1-1,1-12,1-2");
        cmd->add_option("--alpha", f.alpha, "Significance level");
        cmd->add_option("--seed", f.seed, "Seed recorded in reports");
        cmd->add_option("--jobs", f.jobs, "Worker threads");
        cmd->add_option("--units", f.units, "1-based outcome units (default: all)");
        add_tuning_flags(cmd, f.tf);
    };

    auto* match = app.add_subcommand("match", "Solve the matching program per unit");
    AnalysisFlags match_f;
    add_analysis_flags(match, match_f, true);

    auto* estimate = app.add_subcommand("estimate", "Match and estimate per unit");
    AnalysisFlags est_f;
    add_analysis_flags(estimate, est_f, true);

    auto* testg = app.add_subcommand("test-global",
                                     "Match, estimate, and test the global null");
    AnalysisFlags test_f;
    add_analysis_flags(testg, test_f, true);

    auto* run = app.add_subcommand("run", "Full pipeline, optionally from a config file");
    AnalysisFlags run_f;
    std::string run_config;
    run->add_option("--config", run_config, "key=value config file");
    add_analysis_flags(run, run_f, false);

    // ---- reproduce ----
    auto* rep = app.add_subcommand("reproduce", "Re-run a reported study and compare");
    std::string rep_table = "2";
    int rep_reps = 100, rep_jobs = 0;
    std::uint64_t rep_seed = 42;
    std::string rep_out = "reproduce_out";
    rep->add_option("--table", rep_table, "Study id: 2, 3, d1, d4, d5, d6");
    rep->add_option("--reps", rep_reps, "Replication count");
    rep->add_option("--seed", rep_seed, "Base seed");
    rep->add_option("--out", rep_out, "Output directory");
    rep->add_option("--jobs", rep_jobs, "Worker threads");

    // ---- bound ----
    auto* bound = app.add_subcommand("bound", "Bias-bound calculator");
    std::string bound_kind = "linear";
    double b_delta = 2.0, b_delta_prime = 0.05;
    double b_beta2 = 0.0, b_beta3 = 0.0, b_beta4 = 0.0, b_beta5 = 0.0;
    double b_c = 1.0, b_ell = 1.0;
    int b_K = 2, b_T = 2;
    std::vector<double> b_supports;
    bound->add_option("--kind", bound_kind, "linear|smooth");
    bound->add_option("--delta", b_delta, "Time-imbalance cap");
    bound->add_option("--delta-prime", b_delta_prime, "Covariate-imbalance cap");
    bound->add_option("--beta2", b_beta2, "|time coefficient| (linear)");
    bound->add_option("--beta3", b_beta3, "L1 norm of outcome-covariate coefficients");
    bound->add_option("--beta4", b_beta4, "L1 norm of summarized-X coefficients");
    bound->add_option("--beta5", b_beta5, "L1 norm of summarized-P coefficients");
    bound->add_option("--c", b_c, "Derivative bound (smooth)");
    bound->add_option("--ell", b_ell, "Grid length (smooth)");
    bound->add_option("--K", b_K, "Smoothness order (smooth)");
    bound->add_option("--T", b_T, "Time periods (smooth)");
    bound->add_option("--support", b_supports,
                      "Covariate supports as a_1 b_1 a_2 b_2 ... (smooth)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            return cmd_simulate(sim_scenario, sim_sparsity, sim_reps, sim_seed,
                                sim_methods, sim_out, sim_tf, sim_null, sim_het,
                                sim_ar1, sim_nc, sim_kernel, sim_threshold, sim_unit,
                                sim_jobs, sim_export);
        }
        if (rep->parsed()) {
            return reproduce(rep_table, rep_reps, rep_seed, rep_out, rep_jobs);
        }
        if (bound->parsed()) {
            json out;
            if (bound_kind == "linear") {
                LinearBoundInputs in{b_delta, b_delta_prime, b_beta2,
                                     b_beta3, b_beta4,       b_beta5};
                out["kind"] = "linear";
                out["bound"] = linear_bias_bound(in);
            } else if (bound_kind == "smooth") {
                SmoothBoundInputs in;
                in.delta = b_delta;
                in.delta_prime = b_delta_prime;
                in.c = b_c;
                in.K = b_K;
                in.ell = b_ell;
                in.T = b_T;
                if (b_supports.size() % 2 != 0) {
                    std::cerr << "--support needs an even count of values\n";
                    return kExitValidation;
                }
                for (size_t k = 0; k + 1 < b_supports.size(); k += 2) {
                    in.supports.emplace_back(b_supports[k], b_supports[k + 1]);
                }
                const auto consts = smooth_bound_constants(in);
                out["kind"] = "smooth";
                out["C_T"] = consts.C_T;
                out["C_WXP"] = consts.C_WXP;
                out["C_TWXP"] = consts.C_TWXP;
                out["bound"] = smooth_bias_bound(in);
            } else {
                std::cerr << "unknown bound kind '" << bound_kind << "'\n";
                return kExitValidation;
            }
            std::cout << out.dump(2) << '\n';
            return kExitOk;
        }

        // match / estimate / test-global / run all execute the pipeline;
        // they differ only in which outputs the user cares about.
        AnalysisFlags* f = nullptr;
        if (match->parsed()) f = &match_f;
        if (estimate->parsed()) f = &est_f;
        if (testg->parsed()) f = &test_f;
        RunConfig config;
        if (run->parsed()) {
            if (!run_config.empty()) config = parse_config_file(run_config);
            f = &run_f;
            // CLI flags override config-file values when given.
            if (run->count("--input")) config.input_dir = f->input;
            if (run->count("--out") || config.out_dir.empty()) config.out_dir = f->out;
            if (run->count("--exposure")) config.exposure = f->exposure;
            if (run->count("--methods")) config.methods = parse_methods(f->methods);
            if (run->count("--alpha")) config.alpha = f->alpha;
            if (run->count("--seed")) config.seed = f->seed;
            if (run->count("--jobs")) config.jobs = f->jobs;
            if (run->count("--units")) config.units = f->units;
            if (run->count("--delta")) config.tuning.delta = f->tf.delta;
            if (run->count("--delta-prime")) {
                config.tuning.delta_prime = f->tf.to_params().delta_prime;
            }
            if (run->count("--eps")) config.tuning.eps = f->tf.eps;
            if (run->count("--delta-dprime")) {
                config.tuning.delta_dprime = f->tf.delta_dprime;
            }
            if (run->count("--ell")) config.tuning.ell = f->tf.ell;
            if (run->count("--kpow")) config.tuning.kpow = f->tf.kpow;
            if (run->count("--unadjusted")) config.tuning.adjust = !f->tf.unadjusted;
        } else if (f != nullptr) {
            config.input_dir = f->input;
            config.out_dir = f->out;
            config.exposure = f->exposure;
            config.methods = parse_methods(f->methods);
            config.alpha = f->alpha;
            config.seed = f->seed;
            config.jobs = f->jobs;
            config.units = f->units;
            config.tuning = f->tf.to_params();
        } else {
            return kExitValidation;
        }
        return run_pipeline(config);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return kExitValidation;
    }
}
