#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bimatch {

// Complete panel over T time periods, N interventional units, M outcome
// units. Time indices are 1..T at the API surface; storage is 0-based.
// Missing cells are represented as NaN and rejected by validate().
struct PanelDataset {
    int T = 0;
    int N = 0;
    int M = 0;

    std::vector<double> A;  // [T*N] binary treatments
    std::vector<double> G;  // [T*N*M] binary bipartite network
    std::vector<double> Y;  // [T*M] outcomes

    int pX = 0, pW = 0, pP = 0;
    std::vector<double> X;  // [T*N*pX]
    std::vector<double> W;  // [T*M*pW]
    std::vector<double> P;  // [T*N*M*pP]
    std::vector<std::string> x_names, w_names, p_names;

    // Optional time-invariant blocks. They never enter balance constraints
    // (constant across time), but are carried for completeness.
    int pXs = 0, pWs = 0, pPs = 0;
    std::vector<double> Xstar;  // [N*pXs]
    std::vector<double> Wstar;  // [M*pWs]
    std::vector<double> Pstar;  // [N*M*pPs]

    double a(int t, int i) const { return A[static_cast<size_t>(t) * N + i]; }
    double g(int t, int i, int j) const {
        return G[(static_cast<size_t>(t) * N + i) * M + j];
    }
    double y(int t, int j) const { return Y[static_cast<size_t>(t) * M + j]; }
    double x(int t, int i, int s) const {
        return X[(static_cast<size_t>(t) * N + i) * pX + s];
    }
    double w(int t, int j, int s) const {
        return W[(static_cast<size_t>(t) * M + j) * pW + s];
    }
    double p(int t, int i, int j, int s) const {
        return P[((static_cast<size_t>(t) * N + i) * M + j) * pP + s];
    }

    static PanelDataset zeros(int T, int N, int M, int pX = 0, int pW = 0, int pP = 0);
};

struct ValidationReport {
    std::vector<std::string> issues;
    bool ok() const { return issues.empty(); }
};

// Shape and domain checks: tensor sizes consistent with (T,N,M,p*),
// A and G binary, no NaN cells. A fully-NaN network time slice is
// reported as a missing slice rather than one issue per cell.
ValidationReport validate(const PanelDataset& data);

// One q-vector summarizing a covariate across interventional units.
struct SummaryWeights {
    std::vector<double> q;  // length N
    std::string label;

    static SummaryWeights uniform(int n, std::string label = "mean");
};

// q^T X_t for an N x p covariate slice (row-major).
std::vector<double> summarize(const std::vector<double>& x_t, int n, int p,
                              const SummaryWeights& weights);

// Balance covariates for one outcome unit: T rows, one column per
// constraint variable. pooled_sd is the scaling applied per column
// (1.0 when the set is raw/unstandardized). Constant columns are
// flagged dropped and generate no constraints.
struct BalanceCovariateSet {
    int T = 0;
    int cols = 0;
    std::vector<double> values;  // [T*cols] row-major
    std::vector<std::string> labels;
    std::vector<double> pooled_sd;
    std::vector<std::uint8_t> dropped;
    // Columns whose balance cap is delta (time auxiliaries) rather than
    // delta'. Empty means all columns use delta'.
    std::vector<std::uint8_t> cap_is_delta;
    // Auxiliary-expansion interval memberships (one group vector per raw
    // column plus one for time); matched periods must share every group.
    std::vector<std::vector<int>> same_interval_groups;

    double at(int t, int c) const { return values[static_cast<size_t>(t) * cols + c]; }
    bool uses_delta_cap(int c) const {
        return !cap_is_delta.empty() && cap_is_delta[c] != 0;
    }

    static BalanceCovariateSet raw(int T, std::vector<double> values,
                                   std::vector<std::string> labels);
};

// Divide each column by the pooled SD of exposed and unexposed classes,
// sqrt((Var_e + Var_u)/2) with unbiased variances. Zero-pooled-SD
// columns are flagged dropped and left unscaled. Throws if the exposure
// series is single-class.
BalanceCovariateSet standardize(const std::vector<double>& columns, int T, int K,
                                std::vector<std::string> labels,
                                const std::vector<std::uint8_t>& exposure);

}  // namespace bimatch
