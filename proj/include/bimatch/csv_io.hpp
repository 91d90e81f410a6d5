#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bimatch/panel.hpp"

namespace bimatch {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Everything read from an input directory. Indices in the files are
// 1-based; tensors are stored 0-based as in PanelDataset.
struct LoadedData {
    PanelDataset panel;
    bool has_treatments = false;
    bool has_network = false;
    // Optional externally supplied exposures [T*M]; empty when absent.
    std::vector<std::uint8_t> exposures;
    bool has_exposures = false;
    // Per-covariate summary weights from q_weights.csv.
    std::map<std::string, std::vector<double>> q_weights;
};

// Reads outcomes.csv (required) plus whichever of treatments.csv,
// network.csv, x/w/p_covariates.csv, q_weights.csv, exposures.csv exist
// in `dir`. Dimensions are inferred from the maximum indices seen.
// Cells never mentioned stay NaN (network: 0) so validate() can report
// incomplete panels.
LoadedData load_directory(const std::string& dir);

// Writers for the same long formats (used by `simulate --out`).
void write_treatments_csv(const std::string& path, const PanelDataset& p);
void write_network_csv(const std::string& path, const PanelDataset& p);
void write_outcomes_csv(const std::string& path, const PanelDataset& p);
void write_x_covariates_csv(const std::string& path, const PanelDataset& p);
void write_w_covariates_csv(const std::string& path, const PanelDataset& p);
void write_p_covariates_csv(const std::string& path, const PanelDataset& p);
void write_exposures_csv(const std::string& path, const std::vector<std::uint8_t>& e,
                         int T, int M);

// Generic helpers.
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// Minimal CSV layer: header row required, fields must not contain commas.
std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                               const std::vector<std::string>& header);

}  // namespace bimatch
