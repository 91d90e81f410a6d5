#include "bimatch/estimator.hpp"

#include <cmath>
#include <numeric>

namespace bimatch {

namespace {

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double factorial(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

}  // namespace

EffectEstimate impute_and_estimate(const MatchSet& matchset,
                                   const std::vector<double>& y, int n_exposed_total,
                                   const std::string& method) {
    if (matchset.cardinality() == 0) {
        throw NoMatches("matchset is empty; estimation refused");
    }
    EffectEstimate est;
    est.method = method;
    for (const auto& [te, tu] : matchset.pairs) {
        est.matched_exposed.push_back(te);
        est.differences.push_back(y[te - 1] - y[tu - 1]);
    }
    for (const auto& t : matchset.triples) {
        est.matched_exposed.push_back(t[0]);
        est.differences.push_back(y[t[0] - 1] - 0.5 * (y[t[1] - 1] + y[t[2] - 1]));
    }
    est.tau_hat = mean(est.differences);
    if (n_exposed_total > 0) {
        est.prop_matched =
            static_cast<double>(est.matched_exposed.size()) / n_exposed_total;
        if (static_cast<int>(est.matched_exposed.size()) < n_exposed_total) {
            est.estimand = "matched-population";
        }
    }
    return est;
}

static NaiveEstimate naive_from_classes(std::vector<double> e_vals,
                                        std::vector<double> u_vals, std::string method) {
    if (e_vals.empty() || u_vals.empty()) {
        throw NoMatches("naive estimator needs both exposure classes");
    }
    NaiveEstimate est;
    est.method = std::move(method);
    est.tau_hat = mean(e_vals) - mean(u_vals);
    est.exposed_values = std::move(e_vals);
    est.unexposed_values = std::move(u_vals);
    return est;
}

NaiveEstimate naive_t(const std::vector<std::uint8_t>& e, const std::vector<double>& y) {
    std::vector<double> ev, uv;
    for (size_t t = 0; t < e.size(); ++t) (e[t] ? ev : uv).push_back(y[t]);
    return naive_from_classes(std::move(ev), std::move(uv), "naive-t");
}

NaiveEstimate naive_j(const std::vector<std::uint8_t>& e_at_t,
                      const std::vector<double>& y_at_t) {
    std::vector<double> ev, uv;
    for (size_t j = 0; j < e_at_t.size(); ++j) (e_at_t[j] ? ev : uv).push_back(y_at_t[j]);
    return naive_from_classes(std::move(ev), std::move(uv), "naive-j");
}

NaiveEstimate naive_all(const std::vector<std::uint8_t>& e, const std::vector<double>& y,
                        int T, int M) {
    std::vector<double> ev, uv;
    for (size_t k = 0; k < static_cast<size_t>(T) * M; ++k) {
        (e[k] ? ev : uv).push_back(y[k]);
    }
    return naive_from_classes(std::move(ev), std::move(uv), "naive-all");
}

double linear_bias_bound(const LinearBoundInputs& in) {
    return in.delta * in.beta2_abs +
           in.delta_prime * (in.beta3_l1 + in.beta4_l1 + in.beta5_l1);
}

SmoothBoundConstants smooth_bound_constants(const SmoothBoundInputs& in) {
    SmoothBoundConstants k;
    double inv_fact_sum = 0.0;  // sum over k=1..K-1 of 1/k!
    for (int i = 1; i <= in.K - 1; ++i) inv_fact_sum += 1.0 / factorial(i);
    k.C_T = (in.T - 1) * in.c / in.ell * inv_fact_sum;
    double support_sum = 0.0;
    for (const auto& [a, b] : in.supports) support_sum += b - a;
    k.C_WXP = support_sum * in.c / in.ell * inv_fact_sum;
    k.C_TWXP = std::pow(0.5, in.K - 1) *
               ((in.T - 1) * in.c / factorial(in.K) +
                support_sum * in.c / factorial(in.K));
    return k;
}

double smooth_bias_bound(const SmoothBoundInputs& in) {
    const SmoothBoundConstants k = smooth_bound_constants(in);
    return k.C_T * in.delta + k.C_WXP * in.delta_prime +
           k.C_TWXP * std::pow(in.ell, in.K - 1);
}

}  // namespace bimatch
