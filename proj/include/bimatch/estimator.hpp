#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "bimatch/matching.hpp"

namespace bimatch {

struct NoMatches : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EffectEstimate {
    double tau_hat = 0.0;
    std::vector<int> matched_exposed;   // matched exposed time periods
    std::vector<double> differences;    // D_t = Y_te - Y_imp(0)
    double prop_matched = 1.0;          // |matched| / |exposed|
    std::string method;
    // "all-exposed" when every exposed period is matched, otherwise the
    // estimate targets only the matched exposed population.
    std::string estimand = "all-exposed";
};

// tau_hat = mean over matched exposed periods of observed minus imputed
// outcome; pairs impute Y_tu, triples the average of the two unexposed.
// `y` is the outcome series for the unit, index t-1 for time t.
EffectEstimate impute_and_estimate(const MatchSet& matchset,
                                   const std::vector<double>& y,
                                   int n_exposed_total = -1,
                                   const std::string& method = "");

// Difference-in-means baselines. Each returns the class-mean contrast and
// keeps the per-class values for pooled-variance inference.
struct NaiveEstimate {
    double tau_hat = 0.0;
    std::vector<double> exposed_values;
    std::vector<double> unexposed_values;
    std::string method;
};

NaiveEstimate naive_t(const std::vector<std::uint8_t>& e, const std::vector<double>& y);
NaiveEstimate naive_j(const std::vector<std::uint8_t>& e_at_t,
                      const std::vector<double>& y_at_t);
// Full-panel contrast; e and y are [T x M] row-major.
NaiveEstimate naive_all(const std::vector<std::uint8_t>& e, const std::vector<double>& y,
                        int T, int M);

struct LinearBoundInputs {
    double delta = 0.0;
    double delta_prime = 0.0;
    double beta2_abs = 0.0;
    double beta3_l1 = 0.0;
    double beta4_l1 = 0.0;
    double beta5_l1 = 0.0;
};

// delta*|beta2| + delta'*(|beta3|_1 + |beta4|_1 + |beta5|_1)
double linear_bias_bound(const LinearBoundInputs& in);

struct SmoothBoundInputs {
    double delta = 0.0;
    double delta_prime = 0.0;
    double c = 0.0;  // cap on |h^(k)| for k = 1..K
    int K = 2;
    double ell = 1.0;
    int T = 2;
    std::vector<std::pair<double, double>> supports;  // [a_s, b_s] per covariate
};

struct SmoothBoundConstants {
    double C_T = 0.0, C_WXP = 0.0, C_TWXP = 0.0;
};

SmoothBoundConstants smooth_bound_constants(const SmoothBoundInputs& in);

// C_T*delta + C_WXP*delta' + C_TWXP*ell^(K-1)
double smooth_bias_bound(const SmoothBoundInputs& in);

}  // namespace bimatch
