#include <vector>

#include "bimatch/exposure.hpp"
#include "bimatch/rng.hpp"
#include "doctest.h"

using namespace bimatch;

namespace {

PanelDataset random_panel(std::uint64_t seed, int T, int N, int M, double pa,
                          double pg) {
    PanelDataset d = PanelDataset::zeros(T, N, M);
    Rng rng(seed);
    for (auto& v : d.A) v = rng.bernoulli(pa) ? 1.0 : 0.0;
    for (auto& v : d.G) v = rng.bernoulli(pg) ? 1.0 : 0.0;
    for (auto& v : d.Y) v = rng.normal(0, 1);
    return d;
}

int treated_neighbors(const PanelDataset& d, int t, int j) {
    int c = 0;
    for (int i = 0; i < d.N; ++i) {
        if (d.a(t, i) != 0.0 && d.g(t, i, j) != 0.0) ++c;
    }
    return c;
}

}  // namespace

TEST_CASE("threshold exposure equals the nested-loop count oracle") {
    PanelDataset d = random_panel(11, 25, 6, 4, 0.5, 0.4);
    for (int j = 0; j < d.M; ++j) {
        for (int dd = 1; dd <= 4; ++dd) {
            ExposureSeries es = threshold_exposure(d, j, dd);
            REQUIRE(int(es.e.size()) == d.T);
            CHECK(es.unit == j);
            for (int t = 0; t < d.T; ++t) {
                CHECK(int(es.e[t]) == (treated_neighbors(d, t, j) >= dd ? 1 : 0));
            }
        }
    }
}

TEST_CASE("exposure is monotone decreasing in the threshold") {
    PanelDataset d = random_panel(13, 40, 8, 3, 0.6, 0.5);
    for (int j = 0; j < d.M; ++j) {
        ExposureSeries prev = threshold_exposure(d, j, 1);
        for (int dd = 2; dd <= 8; ++dd) {
            ExposureSeries cur = threshold_exposure(d, j, dd);
            for (int t = 0; t < d.T; ++t) CHECK(cur.e[t] <= prev.e[t]);
            prev = cur;
        }
    }
}

TEST_CASE("threshold d=1 is the any-treated-neighbor rule") {
    PanelDataset d = random_panel(17, 30, 5, 3, 0.4, 0.3);
    for (int j = 0; j < d.M; ++j) {
        ExposureSeries es = threshold_exposure(d, j, 1);
        ExposureSeries any = custom_exposure(
            d, j,
            [](const std::vector<double>& a, const std::vector<double>& g) {
                for (size_t i = 0; i < a.size(); ++i) {
                    if (a[i] != 0.0 && g[i] != 0.0) return true;
                }
                return false;
            });
        CHECK(es.e == any.e);
    }
}

TEST_CASE("proportion exposure with the zero-connection convention") {
    PanelDataset d = PanelDataset::zeros(2, 3, 1);
    // t=0: connections {0,1}, treated {0} -> fraction 1/2.
    d.G[0 * 3 * 1 + 0] = 1;
    d.G[0 * 3 * 1 + 1] = 1;
    d.A[0 * 3 + 0] = 1;
    // t=1: no connections at all.
    d.A[1 * 3 + 0] = 1;

    ExposureSeries half = proportion_exposure(d, 0, 0.5);
    CHECK(int(half.e[0]) == 1);   // 0.5 >= 0.5
    CHECK(int(half.e[1]) == 0);   // no connections -> unexposed
    ExposureSeries strict = proportion_exposure(d, 0, 0.51);
    CHECK(int(strict.e[0]) == 0);
}

TEST_CASE("proportion rule rejects thresholds outside (0,1]") {
    PanelDataset d = PanelDataset::zeros(1, 2, 1);
    CHECK_THROWS(proportion_exposure(d, 0, 0.0));
    CHECK_THROWS(proportion_exposure(d, 0, 1.5));
    CHECK_NOTHROW(proportion_exposure(d, 0, 1.0));
}
