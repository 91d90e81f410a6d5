#include "bimatch/panel.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace bimatch {

namespace {

bool is_binary(double v) { return v == 0.0 || v == 1.0; }

// Unbiased variance; a class with fewer than 2 points has no spread.
double class_variance(const std::vector<double>& v) {
    const size_t n = v.size();
    if (n < 2) return 0.0;
    double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(n - 1);
}

}  // namespace

PanelDataset PanelDataset::zeros(int T, int N, int M, int pX, int pW, int pP) {
    PanelDataset d;
    d.T = T;
    d.N = N;
    d.M = M;
    d.pX = pX;
    d.pW = pW;
    d.pP = pP;
    d.A.assign(static_cast<size_t>(T) * N, 0.0);
    d.G.assign(static_cast<size_t>(T) * N * M, 0.0);
    d.Y.assign(static_cast<size_t>(T) * M, 0.0);
    d.X.assign(static_cast<size_t>(T) * N * pX, 0.0);
    d.W.assign(static_cast<size_t>(T) * M * pW, 0.0);
    d.P.assign(static_cast<size_t>(T) * N * M * pP, 0.0);
    for (int s = 0; s < pX; ++s) d.x_names.push_back("x" + std::to_string(s + 1));
    for (int s = 0; s < pW; ++s) d.w_names.push_back("w" + std::to_string(s + 1));
    for (int s = 0; s < pP; ++s) d.p_names.push_back("p" + std::to_string(s + 1));
    return d;
}

ValidationReport validate(const PanelDataset& d) {
    ValidationReport rep;
    auto issue = [&rep](const std::string& m) { rep.issues.push_back(m); };

    if (d.T <= 0 || d.N <= 0 || d.M <= 0) {
        issue("non-positive dimensions");
        return rep;
    }
    auto check_size = [&](const std::vector<double>& v, size_t want, const char* name) {
        if (v.size() != want) {
            issue(std::string("dimension mismatch: ") + name);
            return false;
        }
        return true;
    };
    const bool a_ok = check_size(d.A, static_cast<size_t>(d.T) * d.N, "A");
    const bool g_ok = check_size(d.G, static_cast<size_t>(d.T) * d.N * d.M, "G");
    check_size(d.Y, static_cast<size_t>(d.T) * d.M, "Y");
    check_size(d.X, static_cast<size_t>(d.T) * d.N * d.pX, "X");
    check_size(d.W, static_cast<size_t>(d.T) * d.M * d.pW, "W");
    check_size(d.P, static_cast<size_t>(d.T) * d.N * d.M * d.pP, "P");

    if (a_ok) {
        for (int t = 0; t < d.T; ++t) {
            for (int i = 0; i < d.N; ++i) {
                const double v = d.a(t, i);
                if (std::isnan(v)) {
                    issue("missing treatment cell t=" + std::to_string(t + 1) +
                          " i=" + std::to_string(i + 1));
                } else if (!is_binary(v)) {
                    issue("non-binary treatment t=" + std::to_string(t + 1) +
                          " i=" + std::to_string(i + 1));
                }
            }
        }
    }
    if (g_ok) {
        for (int t = 0; t < d.T; ++t) {
            size_t nan_count = 0;
            for (int i = 0; i < d.N; ++i) {
                for (int j = 0; j < d.M; ++j) {
                    const double v = d.g(t, i, j);
                    if (std::isnan(v)) {
                        ++nan_count;
                    } else if (!is_binary(v)) {
                        issue("non-binary network entry t=" + std::to_string(t + 1));
                    }
                }
            }
            if (nan_count == static_cast<size_t>(d.N) * d.M) {
                issue("missing network slice t=" + std::to_string(t + 1));
            } else if (nan_count > 0) {
                issue("missing network cells t=" + std::to_string(t + 1));
            }
        }
    }
    auto check_nan = [&](const std::vector<double>& v, const char* name) {
        for (double x : v) {
            if (std::isnan(x)) {
                issue(std::string("missing cell in ") + name);
                return;
            }
        }
    };
    check_nan(d.Y, "Y");
    check_nan(d.X, "X");
    check_nan(d.W, "W");
    check_nan(d.P, "P");
    return rep;
}

SummaryWeights SummaryWeights::uniform(int n, std::string label) {
    SummaryWeights w;
    w.q.assign(n, 1.0 / static_cast<double>(n));
    w.label = std::move(label);
    return w;
}

std::vector<double> summarize(const std::vector<double>& x_t, int n, int p,
                              const SummaryWeights& weights) {
    if (static_cast<int>(weights.q.size()) != n) {
        throw std::invalid_argument("summarize: weight length does not match unit count");
    }
    if (x_t.size() != static_cast<size_t>(n) * p) {
        throw std::invalid_argument("summarize: matrix size mismatch");
    }
    std::vector<double> out(p, 0.0);
    for (int i = 0; i < n; ++i) {
        const double qi = weights.q[i];
        if (qi == 0.0) continue;
        for (int s = 0; s < p; ++s) out[s] += qi * x_t[static_cast<size_t>(i) * p + s];
    }
    return out;
}

BalanceCovariateSet BalanceCovariateSet::raw(int T, std::vector<double> values,
                                             std::vector<std::string> labels) {
    BalanceCovariateSet set;
    set.T = T;
    set.cols = static_cast<int>(labels.size());
    if (values.size() != static_cast<size_t>(T) * set.cols) {
        throw std::invalid_argument("BalanceCovariateSet::raw: size mismatch");
    }
    set.values = std::move(values);
    set.labels = std::move(labels);
    set.pooled_sd.assign(set.cols, 1.0);
    set.dropped.assign(set.cols, 0);
    return set;
}

BalanceCovariateSet standardize(const std::vector<double>& columns, int T, int K,
                                std::vector<std::string> labels,
                                const std::vector<std::uint8_t>& exposure) {
    if (static_cast<int>(exposure.size()) != T) {
        throw std::invalid_argument("standardize: exposure length mismatch");
    }
    if (columns.size() != static_cast<size_t>(T) * K ||
        static_cast<int>(labels.size()) != K) {
        throw std::invalid_argument("standardize: column size mismatch");
    }
    int n_exposed = 0;
    for (auto e : exposure) n_exposed += (e != 0);
    if (n_exposed == 0 || n_exposed == T) {
        throw std::invalid_argument("standardize: exposure series is single-class");
    }

    BalanceCovariateSet set;
    set.T = T;
    set.cols = K;
    set.values = columns;
    set.labels = std::move(labels);
    set.pooled_sd.assign(K, 1.0);
    set.dropped.assign(K, 0);

    std::vector<double> e_vals, u_vals;
    for (int c = 0; c < K; ++c) {
        e_vals.clear();
        u_vals.clear();
        for (int t = 0; t < T; ++t) {
            (exposure[t] ? e_vals : u_vals).push_back(set.at(t, c));
        }
        const double pooled =
            std::sqrt((class_variance(e_vals) + class_variance(u_vals)) / 2.0);
        if (pooled <= 1e-12) {
            set.dropped[c] = 1;
            continue;
        }
        set.pooled_sd[c] = pooled;
        for (int t = 0; t < T; ++t) {
            set.values[static_cast<size_t>(t) * K + c] /= pooled;
        }
    }
    return set;
}

}  // namespace bimatch
