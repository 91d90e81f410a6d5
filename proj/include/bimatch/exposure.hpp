#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bimatch/panel.hpp"

namespace bimatch {

// Binary exposure series for one outcome unit.
struct ExposureSeries {
    int unit = 0;  // 0-based outcome-unit index
    std::vector<std::uint8_t> e;
    std::string rule;
};

// E_t = 1 iff at least d treated interventional units are connected to j at t.
ExposureSeries threshold_exposure(const PanelDataset& data, int j, int d);

// E_t = 1 iff the treated fraction of connected units reaches `threshold`;
// periods with no connections map to E_t = 0.
ExposureSeries proportion_exposure(const PanelDataset& data, int j, double threshold);

// Generic rule hook: fn receives (A_t, G_t.j) and returns the binary exposure.
using ExposureRule =
    std::function<bool(const std::vector<double>&, const std::vector<double>&)>;
ExposureSeries custom_exposure(const PanelDataset& data, int j, const ExposureRule& fn,
                               std::string rule_name = "custom");

}  // namespace bimatch
