#include "bimatch/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "bimatch/rng.hpp"

namespace bimatch {

namespace {

double sample_sd(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

InferenceResult from_se(double tau, double se, int n, double alpha, bool one_sided) {
    InferenceResult r;
    r.tau_hat = tau;
    r.n = n;
    r.alpha = alpha;
    const double z = norm_ppf(1.0 - alpha / 2.0);
    r.ci_lo = tau - z * se;
    r.ci_hi = tau + z * se;
    if (se == 0.0) {
        r.p_value = tau == 0.0 ? 1.0 : 0.0;
    } else if (one_sided) {
        r.p_value = 1.0 - norm_cdf(tau / se);
    } else {
        r.p_value = 2.0 * (1.0 - norm_cdf(std::abs(tau) / se));
    }
    return r;
}

}  // namespace

InferenceResult wald(const EffectEstimate& estimate, double alpha, bool one_sided) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("wald: alpha must be in (0,1)");
    }
    const int n = static_cast<int>(estimate.differences.size());
    if (n == 0) throw NoMatches("wald: no per-match differences");
    const double s = sample_sd(estimate.differences, estimate.tau_hat);
    InferenceResult r = from_se(estimate.tau_hat, s / std::sqrt(double(n)), n, alpha,
                                one_sided);
    r.s_hat = s;
    r.no_variance = n == 1;
    return r;
}

InferenceResult naive_wald(const NaiveEstimate& estimate, double alpha) {
    const size_t ne = estimate.exposed_values.size();
    const size_t nu = estimate.unexposed_values.size();
    if (ne < 2 || nu < 2) {
        throw std::invalid_argument("naive_wald: both classes need at least 2 values");
    }
    auto mean = [](const std::vector<double>& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
    };
    const double se_class = sample_sd(estimate.exposed_values,
                                      mean(estimate.exposed_values));
    const double su_class = sample_sd(estimate.unexposed_values,
                                      mean(estimate.unexposed_values));
    const double pooled =
        std::sqrt(((ne - 1) * se_class * se_class + (nu - 1) * su_class * su_class) /
                  double(ne + nu - 2));
    const double se = pooled * std::sqrt(1.0 / ne + 1.0 / nu);
    InferenceResult r = from_se(estimate.tau_hat, se, static_cast<int>(ne + nu), alpha,
                                false);
    r.s_hat = pooled;
    return r;
}

std::vector<double> bh_adjust(const std::vector<double>& p) {
    const int m = static_cast<int>(p.size());
    if (m == 0) throw std::invalid_argument("bh_adjust: empty p-value vector");
    for (double x : p) {
        if (!(x >= 0.0 && x <= 1.0)) {
            throw std::invalid_argument("bh_adjust: p-values must be in [0,1]");
        }
    }
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&p](int a, int b) { return p[a] < p[b]; });
    // Step-up: adjusted_(i) = min_{k >= i} p_(k) * m / k, capped at 1.
    std::vector<double> adj(m);
    double running = 1.0;
    for (int i = m - 1; i >= 0; --i) {
        const double val = p[order[i]] * m / static_cast<double>(i + 1);
        running = std::min(running, val);
        adj[order[i]] = running;
    }
    return adj;
}

GlobalTestResult global_test(const std::vector<double>& p, double alpha,
                             const std::vector<bool>* available) {
    GlobalTestResult res;
    res.alpha = alpha;
    res.p_values = p;
    std::vector<double> usable;
    std::vector<int> index_map;
    for (int i = 0; i < static_cast<int>(p.size()); ++i) {
        if (available && !(*available)[i]) {
            res.unavailable_units.push_back(i);
        } else {
            usable.push_back(p[i]);
            index_map.push_back(i);
        }
    }
    if (usable.empty()) throw std::invalid_argument("global_test: no available p-values");
    const std::vector<double> adj = bh_adjust(usable);
    res.adjusted.assign(p.size(), std::nan(""));
    res.rejected.assign(p.size(), false);
    for (size_t k = 0; k < adj.size(); ++k) {
        res.adjusted[index_map[k]] = adj[k];
        if (adj[k] < alpha) {
            res.rejected[index_map[k]] = true;
            res.affected_units.push_back(index_map[k]);
            res.global_reject = true;
        }
    }
    return res;
}

}  // namespace bimatch
