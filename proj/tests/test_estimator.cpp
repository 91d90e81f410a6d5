#include <cmath>
#include <vector>

#include "bimatch/estimator.hpp"
#include "bimatch/rng.hpp"
#include "doctest.h"

using namespace bimatch;

TEST_CASE("pair and triple imputation on hand values") {
    // y indexed by time-1: y(1)=10, y(2)=3, y(3)=20, y(4)=5, y(5)=7.
    std::vector<double> y = {10, 3, 20, 5, 7};
    MatchSet ms;
    ms.pairs = {{1, 2}};          // D = 10 - 3 = 7
    ms.triples = {{3, 2, 4}};     // te=3, tu1=2, tu2=4 -> D = 20 - 4 = 16
    ms.triples[0] = {3, 2, 4};
    EffectEstimate est = impute_and_estimate(ms, y, 2, "1-1/2");
    REQUIRE(est.differences.size() == 2);
    CHECK(est.differences[0] == doctest::Approx(7.0));
    CHECK(est.differences[1] == doctest::Approx(16.0));
    CHECK(est.tau_hat == doctest::Approx(11.5));
    CHECK(est.prop_matched == doctest::Approx(1.0));
    CHECK(est.estimand == "all-exposed");
}

TEST_CASE("partial matching reports the matched-population estimand") {
    std::vector<double> y = {4, 1, 0, 0};
    MatchSet ms;
    ms.pairs = {{1, 2}};
    EffectEstimate est = impute_and_estimate(ms, y, 3, "1-1");
    CHECK(est.prop_matched == doctest::Approx(1.0 / 3.0));
    CHECK(est.estimand != "all-exposed");
}

TEST_CASE("empty match set throws") {
    MatchSet ms;
    std::vector<double> y = {1, 2};
    CHECK_THROWS_AS(impute_and_estimate(ms, y, 1, "1-1"), NoMatches);
}

TEST_CASE("estimator is shift equivariant in the outcome") {
    Rng rng(5);
    std::vector<double> y(30);
    for (double& v : y) v = rng.normal(0, 3);
    MatchSet ms;
    ms.pairs = {{2, 5}, {9, 11}, {20, 18}};
    ms.triples = {{14, 13, 16}};
    EffectEstimate base = impute_and_estimate(ms, y, 4, "1-1/2");
    std::vector<double> shifted = y;
    for (double& v : shifted) v += 17.5;
    EffectEstimate sh = impute_and_estimate(ms, shifted, 4, "1-1/2");
    CHECK(sh.tau_hat == doctest::Approx(base.tau_hat).epsilon(1e-12));
}

TEST_CASE("naive estimators equal direct mean contrasts") {
    Rng rng(31);
    const int T = 50;
    std::vector<std::uint8_t> e(T);
    std::vector<double> y(T);
    for (int t = 0; t < T; ++t) {
        e[t] = rng.bernoulli(0.4);
        y[t] = rng.normal(0, 1);
    }
    e[0] = 1;
    e[1] = 0;  // both classes present
    double se = 0, su = 0;
    int ne = 0, nu = 0;
    for (int t = 0; t < T; ++t) {
        if (e[t]) { se += y[t]; ++ne; } else { su += y[t]; ++nu; }
    }
    NaiveEstimate nt = naive_t(e, y);
    CHECK(nt.tau_hat == doctest::Approx(se / ne - su / nu).epsilon(1e-12));
    CHECK(int(nt.exposed_values.size()) == ne);

    // naive_j has identical algebra on a cross-section.
    NaiveEstimate nj = naive_j(e, y);
    CHECK(nj.tau_hat == doctest::Approx(nt.tau_hat).epsilon(1e-12));

    // naive_all over a T x M grid equals the pooled contrast.
    const int M = 7, TT = 20;
    std::vector<std::uint8_t> eg(TT * M);
    std::vector<double> yg(TT * M);
    double pse = 0, psu = 0;
    int pne = 0, pnu = 0;
    for (int k = 0; k < TT * M; ++k) {
        eg[k] = rng.bernoulli(0.3);
        yg[k] = rng.normal(1, 2);
        if (eg[k]) { pse += yg[k]; ++pne; } else { psu += yg[k]; ++pnu; }
    }
    eg[0] = 1;
    eg[1] = 0;
    pse = psu = 0; pne = pnu = 0;
    for (int k = 0; k < TT * M; ++k) {
        if (eg[k]) { pse += yg[k]; ++pne; } else { psu += yg[k]; ++pnu; }
    }
    NaiveEstimate na = naive_all(eg, yg, TT, M);
    CHECK(na.tau_hat == doctest::Approx(pse / pne - psu / pnu).epsilon(1e-12));

    std::vector<std::uint8_t> all_ones(T, 1);
    CHECK_THROWS(naive_t(all_ones, y));
}

TEST_CASE("linear bias bound formula") {
    LinearBoundInputs in;
    in.delta = 2.0;
    in.delta_prime = 0.05;
    in.beta2_abs = 3.0;
    in.beta3_l1 = 1.0;
    in.beta4_l1 = 2.0;
    in.beta5_l1 = 4.0;
    CHECK(linear_bias_bound(in) == doctest::Approx(2 * 3 + 0.05 * 7).epsilon(1e-12));
}

TEST_CASE("smooth bound constants on the worked example") {
    // c=1, K=2, ell=0.5, T=11, one covariate on [0,1]:
    // C_T = (T-1)*c/ell * sum_{k=1}^{K-1} 1/k! = 10/0.5 = 20
    // C_WXP = (b-a)*c/ell * 1 = 2
    // C_TWXP = (1/2)^(K-1) * ((T-1)*c/K! + (b-a)*c/K!) = 0.5*(5 + 0.5) = 2.75
    SmoothBoundInputs in;
    in.c = 1.0;
    in.K = 2;
    in.ell = 0.5;
    in.T = 11;
    in.supports = {{0.0, 1.0}};
    in.delta = 2.0;
    in.delta_prime = 0.05;
    SmoothBoundConstants k = smooth_bound_constants(in);
    CHECK(k.C_T == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(k.C_WXP == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(k.C_TWXP == doctest::Approx(2.75).epsilon(1e-12));
    CHECK(smooth_bias_bound(in) ==
          doctest::Approx(20 * 2.0 + 2 * 0.05 + 2.75 * 0.5).epsilon(1e-12));
}
