#pragma once

#include <string>
#include <vector>

#include "bimatch/estimator.hpp"

namespace bimatch {

struct InferenceResult {
    double tau_hat = 0.0;
    double s_hat = 0.0;  // sample SD of the per-match differences
    int n = 0;
    double alpha = 0.05;
    double ci_lo = 0.0, ci_hi = 0.0;
    double p_value = 1.0;
    bool no_variance = false;  // n == 1: interval and p-value are degenerate
};

// Wald interval tau_hat +/- z_{1-alpha/2} * s_hat / sqrt(n) and the
// two-sided normal p-value. A zero spread gives p = 0 unless tau_hat is
// also zero (then p = 1). Set one_sided for P(Z > tau/se).
InferenceResult wald(const EffectEstimate& estimate, double alpha,
                     bool one_sided = false);

// Pooled two-sample interval for the difference-in-means baselines.
InferenceResult naive_wald(const NaiveEstimate& estimate, double alpha);

struct GlobalTestResult {
    std::vector<double> p_values;
    std::vector<double> adjusted;
    std::vector<bool> rejected;          // adjusted p < alpha
    bool global_reject = false;
    std::vector<int> affected_units;     // indices into the supplied vector
    std::vector<int> unavailable_units;  // units that produced no p-value
    double alpha = 0.05;
};

// Benjamini-Hochberg step-up adjustment with monotonicity enforcement.
std::vector<double> bh_adjust(const std::vector<double>& p);

// Rejects the global null iff any BH-adjusted p-value is strictly below
// alpha. `available` marks entries that carry a real p-value; units
// without one are listed as unavailable and do not enter the adjustment.
GlobalTestResult global_test(const std::vector<double>& p, double alpha,
                             const std::vector<bool>* available = nullptr);

}  // namespace bimatch
