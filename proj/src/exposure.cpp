#include "bimatch/exposure.hpp"

#include <stdexcept>

namespace bimatch {

namespace {

void check_unit(const PanelDataset& data, int j) {
    if (j < 0 || j >= data.M) {
        throw std::out_of_range("exposure: outcome unit index out of range");
    }
}

}  // namespace

ExposureSeries threshold_exposure(const PanelDataset& data, int j, int d) {
    check_unit(data, j);
    if (d < 1) throw std::invalid_argument("threshold_exposure: d must be >= 1");
    ExposureSeries s;
    s.unit = j;
    s.rule = "threshold:d=" + std::to_string(d);
    s.e.resize(data.T);
    for (int t = 0; t < data.T; ++t) {
        int count = 0;
        for (int i = 0; i < data.N; ++i) {
            if (data.a(t, i) != 0.0 && data.g(t, i, j) != 0.0) ++count;
        }
        s.e[t] = count >= d ? 1 : 0;
    }
    return s;
}

ExposureSeries proportion_exposure(const PanelDataset& data, int j, double threshold) {
    check_unit(data, j);
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        throw std::invalid_argument("proportion_exposure: threshold must be in (0,1]");
    }
    ExposureSeries s;
    s.unit = j;
    s.rule = "proportion:th=" + std::to_string(threshold);
    s.e.resize(data.T);
    for (int t = 0; t < data.T; ++t) {
        int treated = 0, connected = 0;
        for (int i = 0; i < data.N; ++i) {
            if (data.g(t, i, j) != 0.0) {
                ++connected;
                if (data.a(t, i) != 0.0) ++treated;
            }
        }
        s.e[t] = connected > 0 &&
                         static_cast<double>(treated) >= threshold * connected
                     ? 1
                     : 0;
    }
    return s;
}

ExposureSeries custom_exposure(const PanelDataset& data, int j, const ExposureRule& fn,
                               std::string rule_name) {
    check_unit(data, j);
    ExposureSeries s;
    s.unit = j;
    s.rule = std::move(rule_name);
    s.e.resize(data.T);
    std::vector<double> a_t(data.N), g_t(data.N);
    for (int t = 0; t < data.T; ++t) {
        for (int i = 0; i < data.N; ++i) {
            a_t[i] = data.a(t, i);
            g_t[i] = data.g(t, i, j);
        }
        s.e[t] = fn(a_t, g_t) ? 1 : 0;
    }
    return s;
}

}  // namespace bimatch
