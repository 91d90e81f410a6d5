#include "bimatch/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "bimatch/estimator.hpp"
#include "bimatch/exposure.hpp"
#include "bimatch/inference.hpp"
#include "bimatch/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bimatch {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Stream ids so every generated block has its own reproducible substream.
enum Stream : std::uint64_t {
    kLoc = 1,
    kX1 = 2,
    kX2 = 3,
    kX3 = 4,
    kW1 = 5,
    kW2 = 6,
    kW3 = 7,
    kP = 8,
    kZ = 9,
    kA = 10,
    kG = 11,
    kEps = 12,
    kEffect = 13,
};

double sigmoid_inv(double eta) { return 1.0 / (1.0 + std::exp(eta)); }

// Lower Cholesky factor of the T x T covariance, cached per (T, kernel).
const Eigen::MatrixXd& gp_chol(int T, const std::string& kernel) {
    static std::mutex mu;
    static std::map<std::pair<int, std::string>, Eigen::MatrixXd> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find({T, kernel});
    if (it != cache.end()) return it->second;

    Eigen::MatrixXd cov(T, T);
    for (int a = 0; a < T; ++a) {
        for (int b = 0; b < T; ++b) {
            const double dsq = double(a - b) * double(a - b);
            if (kernel == "printed") {
                cov(a, b) = std::exp(-dsq) / 20000.0;
            } else {  // "intended": squared-exponential with length scale 100
                cov(a, b) = std::exp(-dsq / 20000.0);
            }
        }
    }
    // The long-length-scale kernel is numerically singular; escalate jitter
    // until the factorization succeeds.
    double jitter = 0.0;
    for (int attempt = 0; attempt < 12; ++attempt) {
        Eigen::MatrixXd work = cov;
        if (jitter > 0.0) work.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(work);
        if (llt.info() == Eigen::Success) {
            auto [pos, ok] = cache.emplace(std::make_pair(T, kernel),
                                           Eigen::MatrixXd(llt.matrixL()));
            (void)ok;
            return pos->second;
        }
        jitter = jitter == 0.0 ? 1e-12 : jitter * 10.0;
    }
    throw std::runtime_error("gp_chol: covariance factorization failed");
}

bool in_low(double frac, double lo1, double hi1, double lo2, double hi2) {
    return (frac >= lo1 && frac < hi1) || (frac >= lo2 && frac < hi2);
}

}  // namespace

void ScenarioSpec::check() const {
    if (scenario < 'a' || scenario > 'e') {
        throw std::invalid_argument("scenario must be one of a..e");
    }
    if (sparsity != "dense" && sparsity != "medium" && sparsity != "sparse") {
        throw std::invalid_argument("sparsity must be dense, medium, or sparse");
    }
    if (N < 1 || M < 1 || T < 2) throw std::invalid_argument("need N,M >= 1 and T >= 2");
    if (ar1_rho < 0.0 || ar1_rho >= 1.0) {
        throw std::invalid_argument("ar1_rho must be in [0,1)");
    }
    if (gp_kernel != "printed" && gp_kernel != "intended") {
        throw std::invalid_argument("gp_kernel must be printed or intended");
    }
    if (network_confounding && scenario != 'a') {
        throw std::invalid_argument("network confounding variant applies to scenario a");
    }
}

Locations gen_locations(std::uint64_t seed, int N, int M) {
    Rng rng(seed);
    Locations loc;
    loc.xi.resize(N);
    loc.yi.resize(N);
    loc.xj.resize(M);
    loc.yj.resize(M);
    // Stratified blocks: fixed index ranges sit in the low half of each
    // coordinate so treatment- and outcome-side clusters overlap partially.
    for (int i = 0; i < N; ++i) {
        const double f = double(i) / N;
        const bool xlow = in_low(f, 0.0, 0.2, 0.6, 0.8);
        const bool ylow = in_low(f, 0.0, 0.2, 0.4, 0.6);
        loc.xi[i] = xlow ? rng.uniform(0.0, 0.5) : rng.uniform(0.5, 1.0);
        loc.yi[i] = ylow ? rng.uniform(0.0, 0.5) : rng.uniform(0.5, 1.0);
    }
    for (int j = 0; j < M; ++j) {
        const double f = double(j) / M;
        const bool xlow = in_low(f, 0.0, 0.34, 0.565, 0.78);
        const bool ylow = in_low(f, 0.0, 0.25, 0.5, 0.75);
        loc.xj[j] = xlow ? rng.uniform(0.0, 0.5) : rng.uniform(0.5, 1.0);
        loc.yj[j] = ylow ? rng.uniform(0.0, 0.5) : rng.uniform(0.5, 1.0);
    }
    return loc;
}

int exposure_threshold(const ScenarioSpec& spec) {
    if (spec.threshold_override > 0) return spec.threshold_override;
    // Calibrated so the per-unit exposed-period count lands in the target
    // band (dense 150-200, medium 80-120, sparse 30-60 of T=400).
    const int band = spec.sparsity == "dense" ? 0 : (spec.sparsity == "medium" ? 1 : 2);
    if (spec.network_confounding) {
        static const int d_nc[3] = {6, 8, 9};
        return d_nc[band];
    }
    switch (spec.scenario) {
        case 'a': {
            static const int d[3] = {5, 6, 7};
            return d[band];
        }
        case 'b': {
            static const int d[3] = {3, 4, 5};
            return d[band];
        }
        case 'c': {
            static const int d[3] = {6, 7, 8};
            return d[band];
        }
        case 'd': {
            static const int d[3] = {5, 7, 9};
            return d[band];
        }
        default: {  // 'e'
            static const int d[3] = {3, 4, 6};
            return d[band];
        }
    }
}

std::pair<int, int> sparsity_band(const std::string& sparsity) {
    if (sparsity == "dense") return {150, 200};
    if (sparsity == "medium") return {80, 120};
    return {30, 60};
}

SimData generate(const ScenarioSpec& spec, std::uint64_t seed, bool store_full) {
    spec.check();
    const int N = spec.N, M = spec.M, T = spec.T;
    SimData d;
    d.N = N;
    d.M = M;
    d.T = T;
    // Locations describe the study geography and are held fixed across
    // replications: they derive from the dedicated geography seed, while
    // every other block uses the per-replication seed.
    d.loc = gen_locations(mix_seed(spec.location_seed, kLoc), N, M);

    d.dist.resize(size_t(N) * M);
    d.R.resize(size_t(N) * M);
    d.Q.assign(size_t(N) * M, 0.0);
    std::vector<double> row_r(N, 0.0), col_r(M, 0.0);
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j < M; ++j) {
            const double dx = d.loc.xi[i] - d.loc.xj[j];
            const double dy = d.loc.yi[i] - d.loc.yj[j];
            const double dist = std::sqrt(dx * dx + dy * dy);
            d.dist[size_t(i) * M + j] = dist;
            const double r = dist <= 0.1 ? 1.0 : 0.0;
            d.R[size_t(i) * M + j] = r;
            row_r[i] += r;
            col_r[j] += r;
        }
    }
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j < M; ++j) {
            if (d.R[size_t(i) * M + j] > 0.0 && col_r[j] > 0.0) {
                d.Q[size_t(i) * M + j] = 1.0 / col_r[j];
            }
        }
    }

    d.X.assign(size_t(T) * N * 6, 0.0);
    d.W.assign(size_t(T) * M * 6, 0.0);
    auto X = [&](int t, int i, int s) -> double& { return d.X[(size_t(t) * N + i) * 6 + s]; };
    auto W = [&](int t, int j, int s) -> double& { return d.W[(size_t(t) * M + j) * 6 + s]; };

    // Covariate 1: Gaussian-process time series, mean 3t/400.
    const Eigen::MatrixXd& L = gp_chol(T, spec.gp_kernel);
    Eigen::VectorXd z(T);
    {
        Rng rng(mix_seed(seed, kX1));
        for (int i = 0; i < N; ++i) {
            for (int t = 0; t < T; ++t) z(t) = rng.normal();
            Eigen::VectorXd path = L * z;
            for (int t = 0; t < T; ++t) X(t, i, 0) = 3.0 * (t + 1) / 400.0 + path(t);
        }
    }
    {
        Rng rng(mix_seed(seed, kW1));
        for (int j = 0; j < M; ++j) {
            for (int t = 0; t < T; ++t) z(t) = rng.normal();
            Eigen::VectorXd path = L * z;
            for (int t = 0; t < T; ++t) W(t, j, 0) = 3.0 * (t + 1) / 400.0 + path(t);
        }
    }

    // Covariate 2: time-invariant, skewed toward 4 inside the low square
    // and toward 0 outside it.
    {
        Rng rng(mix_seed(seed, kX2));
        for (int i = 0; i < N; ++i) {
            const bool low = d.loc.xi[i] <= 0.5 && d.loc.yi[i] <= 0.5;
            const double v = 8.0 * (low ? rng.beta(9.0, 1.0) : rng.beta(1.0, 9.0));
            for (int t = 0; t < T; ++t) X(t, i, 1) = v;
        }
    }
    {
        Rng rng(mix_seed(seed, kW2));
        for (int j = 0; j < M; ++j) {
            const bool low = d.loc.xj[j] <= 0.5 && d.loc.yj[j] <= 0.5;
            const double v = 8.0 * (low ? rng.beta(9.0, 1.0) : rng.beta(1.0, 9.0));
            for (int t = 0; t < T; ++t) W(t, j, 1) = v;
        }
    }

    // Covariate 3: variance (interventional) / shape (outcome) grows with t.
    {
        Rng rng(mix_seed(seed, kX3));
        for (int t = 0; t < T; ++t) {
            const double sd = (t + 1) / 100.0;
            for (int i = 0; i < N; ++i) X(t, i, 2) = rng.normal(0.0, sd);
        }
    }
    {
        Rng rng(mix_seed(seed, kW3));
        for (int t = 0; t < T; ++t) {
            const double shape = (t + 1) / 100.0;
            for (int j = 0; j < M; ++j) W(t, j, 2) = 2.0 * rng.beta(shape, 2.0);
        }
    }

    // Pairwise covariate: drawn for neighbor pairs only (it always enters
    // weighted by r or q, so non-neighbor values never matter).
    std::vector<std::pair<int, int>> neighbors;
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j < M; ++j) {
            if (d.R[size_t(i) * M + j] > 0.0) neighbors.emplace_back(i, j);
        }
    }
    d.Ptilde.assign(size_t(T) * M, 0.0);
    d.Pneighbor.assign(size_t(T) * N, 0.0);
    if (store_full) d.P.assign(size_t(T) * N * M, 0.0);
    {
        Rng rng(mix_seed(seed, kP));
        for (int t = 0; t < T; ++t) {
            const double shape = (t + 1) / 50.0;
            for (const auto& [i, j] : neighbors) {
                const double p = rng.beta(shape, 10.0);
                if (store_full) d.P[(size_t(t) * N + i) * M + j] = p;
                d.Ptilde[size_t(t) * M + j] += d.Q[size_t(i) * M + j] * p;
                d.Pneighbor[size_t(t) * N + i] += p / row_r[i];
            }
        }
    }

    // Covariates 4/5: network summaries of the other side's 2 and 3.
    for (int j = 0; j < M; ++j) {
        double w4 = 0.0;
        for (int i = 0; i < N; ++i) w4 += d.Q[size_t(i) * M + j] * X(0, i, 1);
        for (int t = 0; t < T; ++t) {
            W(t, j, 3) = w4;
            double w5 = 0.0;
            for (int i = 0; i < N; ++i) {
                const double q = d.Q[size_t(i) * M + j];
                if (q > 0.0) w5 += q * X(t, i, 2);
            }
            W(t, j, 4) = w5;
        }
    }
    for (int i = 0; i < N; ++i) {
        double x4 = 0.0;
        if (row_r[i] > 0.0) {
            for (int j = 0; j < M; ++j) {
                x4 += d.R[size_t(i) * M + j] * W(0, j, 1) / row_r[i];
            }
        }
        for (int t = 0; t < T; ++t) {
            X(t, i, 3) = x4;
            double x5 = 0.0;
            if (row_r[i] > 0.0) {
                for (int j = 0; j < M; ++j) {
                    if (d.R[size_t(i) * M + j] > 0.0) x5 += W(t, j, 2) / row_r[i];
                }
            }
            X(t, i, 4) = x5;
        }
    }

    // Covariate 6: one global time series shared by both sides,
    // mean t/200 and variance log(t)/10 (t = 1 reuses the t = 2 variance).
    {
        Rng rng(mix_seed(seed, kZ));
        for (int t = 0; t < T; ++t) {
            const double tt = t == 0 ? 2.0 : double(t + 1);
            const double v = rng.normal((t + 1) / 200.0, std::log(tt) / 10.0);
            for (int i = 0; i < N; ++i) X(t, i, 5) = v;
            for (int j = 0; j < M; ++j) W(t, j, 5) = v;
        }
    }

    // Treatments.
    d.A.assign(size_t(T) * N, 0);
    {
        Rng rng(mix_seed(seed, kA));
        for (int t = 0; t < T; ++t) {
            for (int i = 0; i < N; ++i) {
                double p = 0.5;
                switch (spec.scenario) {
                    case 'a':
                        p = 0.5;
                        break;
                    case 'b':
                        p = sigmoid_inv(X(t, i, 0) / 1.2);
                        break;
                    case 'c':
                        p = 1.0 / (1.0 + 0.3 * std::exp(X(t, i, 1) - X(t, i, 3) / 40.0));
                        break;
                    case 'd':
                        p = sigmoid_inv(X(t, i, 2) / 2.0 + X(t, i, 4) / 2.0 + X(t, i, 5) +
                                        d.Pneighbor[size_t(t) * N + i] / 10.0);
                        break;
                    case 'e':
                        p = 1.0 /
                            (1.0 + 0.45 * std::exp(X(t, i, 0) / 20.0 + X(t, i, 1) +
                                                   X(t, i, 2) / 100.0 + X(t, i, 3) +
                                                   X(t, i, 4) / 20.0 + X(t, i, 5) / 1.5 +
                                                   d.Pneighbor[size_t(t) * N + i] / 10.0));
                        break;
                }
                d.A[size_t(t) * N + i] = rng.bernoulli(p) ? 1 : 0;
            }
        }
    }

    // Network and exposure counts.
    d.G.assign(size_t(T) * N * M, 0);
    d.E.assign(size_t(T) * M, 0);
    d.d = exposure_threshold(spec);
    {
        Rng rng(mix_seed(seed, kG));
        const bool dist_driven = spec.scenario != 'a' || spec.network_confounding;
        const bool time_varying = spec.scenario == 'd' || spec.scenario == 'e';
        const double dist_scale =
            (spec.scenario == 'b') ? 2.0 : ((spec.scenario == 'c' || spec.network_confounding) ? 1.7 : 1.0);
        std::vector<int> count(M);
        for (int t = 0; t < T; ++t) {
            std::fill(count.begin(), count.end(), 0);
            const double drift =
                time_varying ? 0.1 * std::exp(std::sin(kPi * (t + 1) / 1000.0)) : 0.0;
            for (int i = 0; i < N; ++i) {
                const bool treated = d.A[size_t(t) * N + i] != 0;
                for (int j = 0; j < M; ++j) {
                    double p;
                    if (!dist_driven) {
                        p = 0.17;
                    } else if (time_varying) {
                        p = 1.0 / (1.0 + drift + std::exp(d.dist[size_t(i) * M + j]));
                    } else {
                        p = 1.0 / (dist_scale *
                                   (1.0 + std::exp(d.dist[size_t(i) * M + j])));
                    }
                    const bool g = rng.bernoulli(p);
                    if (g) {
                        d.G[(size_t(t) * N + i) * M + j] = 1;
                        if (treated) ++count[j];
                    }
                }
            }
            for (int j = 0; j < M; ++j) {
                d.E[size_t(t) * M + j] = count[j] >= d.d ? 1 : 0;
            }
        }
    }

    // True per-period exposure effect.
    d.effect.assign(size_t(T) * M, 0.0);
    if (!spec.null_effects) {
        if (spec.heterogeneous) {
            Rng rng(mix_seed(seed, kEffect));
            for (int t = 0; t < T; ++t) {
                for (int j = 0; j < M; ++j) {
                    d.effect[size_t(t) * M + j] =
                        1.0 + rng.normal() + 0.005 * (400.0 - (t + 1));
                }
            }
        } else {
            std::fill(d.effect.begin(), d.effect.end(), 1.0);
        }
    }

    // Outcomes.
    d.Y.assign(size_t(T) * M, 0.0);
    {
        Rng rng(mix_seed(seed, kEps));
        std::vector<double> prev_eps(M, 0.0);
        const double rho = spec.ar1_rho;
        for (int t = 0; t < T; ++t) {
            for (int j = 0; j < M; ++j) {
                double eps = rng.normal();
                if (rho > 0.0) {
                    eps = t == 0 ? eps
                                 : rho * prev_eps[j] + std::sqrt(1.0 - rho * rho) * eps;
                    prev_eps[j] = eps;
                }
                double base;
                if (spec.heterogeneous) {
                    base = W(t, j, 2) + W(t, j, 4) + d.Ptilde[size_t(t) * M + j] +
                           W(t, j, 5);
                } else {
                    switch (spec.scenario) {
                        case 'a':
                            base = W(t, j, 1);
                            break;
                        case 'b':
                            base = W(t, j, 0);
                            break;
                        case 'c':
                            base = 4.0 * W(t, j, 1) + 4.0 * W(t, j, 3);
                            break;
                        case 'd':
                            base = W(t, j, 2) + W(t, j, 4) +
                                   d.Ptilde[size_t(t) * M + j] + W(t, j, 5);
                            break;
                        default:  // 'e'
                            base = W(t, j, 0) + 2.0 * W(t, j, 1) + W(t, j, 2) +
                                   0.1 * W(t, j, 2) * W(t, j, 2) + 2.0 * W(t, j, 3) +
                                   W(t, j, 4) + sigmoid_inv(W(t, j, 4)) +
                                   std::sin(d.Ptilde[size_t(t) * M + j]) +
                                   2.0 * W(t, j, 5);
                            break;
                    }
                }
                const double e = d.E[size_t(t) * M + j] ? 1.0 : 0.0;
                d.Y[size_t(t) * M + j] =
                    d.effect[size_t(t) * M + j] * e + base + eps;
            }
        }
    }
    return d;
}

std::vector<std::uint8_t> sim_exposure(const SimData& data, int j, int d) {
    std::vector<std::uint8_t> e(data.T, 0);
    for (int t = 0; t < data.T; ++t) {
        int count = 0;
        for (int i = 0; i < data.N; ++i) {
            if (data.A[size_t(t) * data.N + i] &&
                data.G[(size_t(t) * data.N + i) * data.M + j]) {
                ++count;
            }
        }
        e[t] = count >= d ? 1 : 0;
    }
    return e;
}

BalanceCovariateSet sim_balance_covariates(const SimData& data, int j,
                                           const std::vector<std::uint8_t>& exposure) {
    const int T = data.T;
    std::vector<double> cols(size_t(T) * 4);
    for (int t = 0; t < T; ++t) {
        cols[size_t(t) * 4 + 0] = data.w(t, j, 2);
        cols[size_t(t) * 4 + 1] = data.w(t, j, 4);
        cols[size_t(t) * 4 + 2] = data.w(t, j, 5);
        cols[size_t(t) * 4 + 3] = data.Ptilde[size_t(t) * data.M + j];
    }
    return standardize(cols, T, 4, {"w3", "w5", "w6", "p"}, exposure);
}

PanelDataset to_panel(const SimData& data) {
    if (data.P.empty() && data.N * data.M > 0) {
        throw std::invalid_argument("to_panel: replication was generated without "
                                    "the full pairwise covariate tensor");
    }
    PanelDataset p = PanelDataset::zeros(data.T, data.N, data.M, 6, 6, 1);
    for (size_t k = 0; k < data.A.size(); ++k) p.A[k] = data.A[k];
    for (size_t k = 0; k < data.G.size(); ++k) p.G[k] = data.G[k];
    p.Y = data.Y;
    p.X = data.X;
    p.W = data.W;
    p.P = data.P;
    p.x_names = {"x1", "x2", "x3", "x4", "x5", "x6"};
    p.w_names = {"w1", "w2", "w3", "w4", "w5", "w6"};
    p.p_names = {"p1"};
    return p;
}

namespace {

struct RepRecord {
    bool used = false;
    double est = 0.0, lo = 0.0, hi = 0.0, prop = 0.0, truth = 0.0;
};

struct RowSpec {
    std::string method;
    std::string estimand;
    bool is_matching = false;
    Method m = Method::one_one;
};

double mean_over(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / double(v.size());
}

}  // namespace

StudyTable run_study(const ScenarioSpec& spec, int reps, const StudyOptions& options) {
    spec.check();
    options.tuning.check();
    if (reps < 1) throw std::invalid_argument("run_study: reps must be >= 1");

    std::vector<RowSpec> rows;
    std::vector<std::string> estimands;
    if (spec.heterogeneous) {
        estimands = {"tau", "tau-exposed", "tau-matched"};
    } else {
        estimands = {"effect"};
    }
    for (Method m : options.methods) {
        for (const auto& e : estimands) {
            rows.push_back({method_name(m), e, true, m});
        }
    }
    const std::string naive_target = spec.heterogeneous ? "tau-exposed" : "effect";
    if (options.include_naive) {
        rows.push_back({"naive-t", naive_target, false});
        rows.push_back({"naive-j", naive_target, false});
        rows.push_back({"naive-all", naive_target, false});
    }

    std::vector<std::vector<RepRecord>> rec(rows.size(),
                                            std::vector<RepRecord>(reps));
    std::vector<int> exposed_counts(reps, 0);

#ifdef _OPENMP
    if (options.threads > 0) omp_set_num_threads(options.threads);
#endif
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < reps; ++r) {
        const SimData data = generate(spec, mix_seed(spec.seed, r));
        const int j = options.unit;
        const int T = data.T;
        std::vector<std::uint8_t> e(T);
        int n_exposed = 0;
        for (int t = 0; t < T; ++t) {
            e[t] = data.E[size_t(t) * data.M + j];
            n_exposed += e[t];
        }
        exposed_counts[r] = n_exposed;
        if (n_exposed == 0 || n_exposed == T) continue;

        // Truths for this replication.
        double tau_all = 0.0, tau_exposed = 0.0;
        for (int t = 0; t < T; ++t) {
            const double f = data.effect[size_t(t) * data.M + j];
            tau_all += f;
            if (e[t]) tau_exposed += f;
        }
        tau_all /= T;
        tau_exposed /= n_exposed;
        const double homo_truth = spec.null_effects ? 0.0 : 1.0;

        BalanceCovariateSet cov;
        try {
            cov = sim_balance_covariates(data, j, e);
        } catch (const std::exception&) {
            continue;
        }
        ExposureSeries es{j, e, "threshold"};

        size_t row_idx = 0;
        for (Method m : options.methods) {
            bool ok = true;
            EffectEstimate est;
            InferenceResult inf;
            double tau_matched = 0.0;
            try {
                MatchingProblem prob = build_problem(es, cov, options.tuning, m);
                MatchSet ms = solve(prob);
                est = impute_and_estimate(ms, [&] {
                    std::vector<double> y(T);
                    for (int t = 0; t < T; ++t) y[t] = data.Y[size_t(t) * data.M + j];
                    return y;
                }(), n_exposed, method_name(m));
                inf = wald(est, options.alpha);
                for (int te : est.matched_exposed) {
                    tau_matched += data.effect[size_t(te - 1) * data.M + j];
                }
                tau_matched /= double(est.matched_exposed.size());
            } catch (const std::exception&) {
                ok = false;
            }
            for (const auto& target : estimands) {
                RepRecord& rr = rec[row_idx++][r];
                if (!ok) continue;
                rr.used = true;
                rr.est = est.tau_hat;
                rr.lo = inf.ci_lo;
                rr.hi = inf.ci_hi;
                rr.prop = est.prop_matched;
                if (spec.heterogeneous) {
                    rr.truth = target == "tau" ? tau_all
                               : target == "tau-exposed" ? tau_exposed
                                                         : tau_matched;
                } else {
                    rr.truth = homo_truth;
                }
            }
        }

        if (options.include_naive) {
            const double naive_truth =
                spec.heterogeneous ? tau_exposed : homo_truth;
            std::vector<double> yj(T);
            for (int t = 0; t < T; ++t) yj[t] = data.Y[size_t(t) * data.M + j];
            // naive-t: the unit's own exposed vs unexposed periods.
            try {
                NaiveEstimate ne = naive_t(e, yj);
                InferenceResult inf = naive_wald(ne, options.alpha);
                RepRecord& rr = rec[row_idx][r];
                rr = {true, ne.tau_hat, inf.ci_lo, inf.ci_hi, 0.0, naive_truth};
            } catch (const std::exception&) {
            }
            ++row_idx;
            // naive-j: cross-sectional contrast across all units at the
            // first time point only.
            try {
                std::vector<std::uint8_t> e1(data.E.begin(),
                                             data.E.begin() + data.M);
                std::vector<double> y1(data.Y.begin(),
                                       data.Y.begin() + data.M);
                NaiveEstimate ne = naive_j(e1, y1);
                InferenceResult inf = naive_wald(ne, options.alpha);
                RepRecord& rr = rec[row_idx][r];
                rr = {true, ne.tau_hat, inf.ci_lo, inf.ci_hi, 0.0, naive_truth};
            } catch (const std::exception&) {
            }
            ++row_idx;
            // naive-all: every exposed cell vs every unexposed cell.
            try {
                NaiveEstimate ne = naive_all(data.E, data.Y, T, data.M);
                InferenceResult inf = naive_wald(ne, options.alpha);
                RepRecord& rr = rec[row_idx][r];
                rr = {true, ne.tau_hat, inf.ci_lo, inf.ci_hi, 0.0, naive_truth};
            } catch (const std::exception&) {
            }
            ++row_idx;
        }
    }

    StudyTable table;
    const auto [band_lo, band_hi] = sparsity_band(spec.sparsity);
    double count_sum = 0.0;
    int in_band = 0;
    for (int r = 0; r < reps; ++r) {
        count_sum += exposed_counts[r];
        if (exposed_counts[r] >= band_lo && exposed_counts[r] <= band_hi) ++in_band;
    }
    table.mean_exposed_count = count_sum / reps;
    table.share_in_band = double(in_band) / reps;

    for (size_t k = 0; k < rows.size(); ++k) {
        MethodSummary s;
        s.method = rows[k].method;
        s.estimand = rows[k].estimand;
        double bias = 0.0, mse = 0.0, cover = 0.0, prop = 0.0;
        int n = 0;
        for (int r = 0; r < reps; ++r) {
            const RepRecord& rr = rec[k][r];
            if (!rr.used) continue;
            ++n;
            bias += rr.est - rr.truth;
            mse += (rr.est - rr.truth) * (rr.est - rr.truth);
            cover += (rr.lo <= rr.truth && rr.truth <= rr.hi) ? 1.0 : 0.0;
            prop += rr.prop;
        }
        if (n > 0) {
            s.bias = bias / n;
            s.mse = mse / n;
            s.coverage = 100.0 * cover / n;
            s.prop_matched = rows[k].is_matching ? 100.0 * prop / n : 0.0;
        }
        s.reps = n;
        table.rows.push_back(std::move(s));
        for (int r = 0; r < reps; ++r) {
            const RepRecord& rr = rec[k][r];
            table.replications.push_back({r, rows[k].method, rows[k].estimand, rr.used,
                                          rr.est, rr.lo, rr.hi, rr.prop, rr.truth});
        }
    }
    return table;
}

std::vector<GlobalNullSummary> run_global_null_study(const ScenarioSpec& spec, int reps,
                                                     const StudyOptions& options) {
    spec.check();
    options.tuning.check();
    if (reps < 1) throw std::invalid_argument("reps must be >= 1");

    std::vector<std::string> names;
    for (Method m : options.methods) names.push_back(method_name(m));
    if (options.include_naive) names.push_back("naive-t");
    const size_t n_methods = names.size();

    struct RepStats {
        double est_sum = 0.0;
        int n_avail = 0;
        int n_below = 0;
        bool any_below = false;
        bool fdr_reject = false;
        bool usable = false;
    };
    std::vector<std::vector<RepStats>> stats(n_methods, std::vector<RepStats>(reps));

#ifdef _OPENMP
    if (options.threads > 0) omp_set_num_threads(options.threads);
#endif
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < reps; ++r) {
        const SimData data = generate(spec, mix_seed(spec.seed, r));
        const int T = data.T, M = data.M;
        std::vector<std::vector<double>> pvals(n_methods,
                                               std::vector<double>(M, 1.0));
        std::vector<std::vector<bool>> avail(n_methods, std::vector<bool>(M, false));
        std::vector<std::vector<double>> ests(n_methods);

        for (int j = 0; j < M; ++j) {
            std::vector<std::uint8_t> e(T);
            int n_exposed = 0;
            for (int t = 0; t < T; ++t) {
                e[t] = data.E[size_t(t) * M + j];
                n_exposed += e[t];
            }
            if (n_exposed == 0 || n_exposed == T) continue;
            std::vector<double> yj(T);
            for (int t = 0; t < T; ++t) yj[t] = data.Y[size_t(t) * M + j];

            BalanceCovariateSet cov;
            bool have_cov = true;
            try {
                cov = sim_balance_covariates(data, j, e);
            } catch (const std::exception&) {
                have_cov = false;
            }
            ExposureSeries es{j, e, "threshold"};

            for (size_t k = 0; k < options.methods.size(); ++k) {
                if (!have_cov) break;
                try {
                    MatchingProblem prob =
                        build_problem(es, cov, options.tuning, options.methods[k]);
                    MatchSet ms = solve(prob);
                    EffectEstimate est = impute_and_estimate(
                        ms, yj, n_exposed, method_name(options.methods[k]));
                    InferenceResult inf = wald(est, options.alpha);
                    if (inf.no_variance) continue;
                    pvals[k][j] = inf.p_value;
                    avail[k][j] = true;
                    ests[k].push_back(est.tau_hat);
                } catch (const std::exception&) {
                }
            }
            if (options.include_naive) {
                const size_t k = n_methods - 1;
                try {
                    NaiveEstimate ne = naive_t(e, yj);
                    InferenceResult inf = naive_wald(ne, options.alpha);
                    pvals[k][j] = inf.p_value;
                    avail[k][j] = true;
                    ests[k].push_back(ne.tau_hat);
                } catch (const std::exception&) {
                }
            }
        }

        for (size_t k = 0; k < n_methods; ++k) {
            RepStats& rs = stats[k][r];
            int n_avail = 0;
            for (int j = 0; j < M; ++j) n_avail += avail[k][j] ? 1 : 0;
            if (n_avail == 0) continue;
            rs.usable = true;
            rs.n_avail = n_avail;
            for (double v : ests[k]) rs.est_sum += v;
            for (int j = 0; j < M; ++j) {
                if (avail[k][j] && pvals[k][j] < options.alpha) {
                    ++rs.n_below;
                    rs.any_below = true;
                }
            }
            GlobalTestResult g = global_test(pvals[k], options.alpha, &avail[k]);
            rs.fdr_reject = g.global_reject;
        }
    }

    std::vector<GlobalNullSummary> out;
    for (size_t k = 0; k < n_methods; ++k) {
        GlobalNullSummary s;
        s.method = names[k];
        int used = 0;
        double est = 0.0, below = 0.0, anyb = 0.0, fdr = 0.0, availm = 0.0;
        for (int r = 0; r < reps; ++r) {
            const RepStats& rs = stats[k][r];
            if (!rs.usable) continue;
            ++used;
            est += rs.est_sum / rs.n_avail;
            below += double(rs.n_below) / rs.n_avail;
            anyb += rs.any_below ? 1.0 : 0.0;
            fdr += rs.fdr_reject ? 1.0 : 0.0;
            availm += rs.n_avail;
        }
        if (used > 0) {
            s.mean_estimate = est / used;
            s.rate_p_below_alpha = below / used;
            s.rate_min_p_below_alpha = anyb / used;
            s.rate_fdr_reject = fdr / used;
            s.mean_available = availm / used;
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace bimatch
