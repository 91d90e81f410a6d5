// Development helper: sweeps the exposure threshold d per scenario and
// sparsity band and reports, for a handful of replications, the mean
// exposed-period count and the share of replications inside the target
// band. The chosen values are frozen in exposure_threshold().

#include <cstring>
#include <iostream>

#include "bimatch/rng.hpp"
#include "bimatch/simulator.hpp"

using namespace bimatch;

int main(int argc, char** argv) {
    int reps = 10;
    std::string scenarios = "abcde";
    bool network_confounding = false;
    for (int k = 1; k < argc; ++k) {
        if (std::strcmp(argv[k], "--reps") == 0 && k + 1 < argc) {
            reps = std::atoi(argv[++k]);
        } else if (std::strcmp(argv[k], "--scenarios") == 0 && k + 1 < argc) {
            scenarios = argv[++k];
        } else if (std::strcmp(argv[k], "--network-confounding") == 0) {
            network_confounding = true;
        }
    }

    for (char sc : scenarios) {
        ScenarioSpec spec;
        spec.scenario = sc;
        spec.network_confounding = network_confounding;
        spec.threshold_override = 1;  // E in Y is irrelevant for the counts
        std::cout << "scenario " << sc << (network_confounding ? " (nc)" : "") << "\n";
        // Count distribution of exposed periods for unit 1 across d; one
        // generation per replication, counts tallied for every d at once.
        constexpr int kMaxD = 12;
        std::vector<double> mean(kMaxD + 1, 0.0);
        std::vector<int> in_dense(kMaxD + 1, 0), in_medium(kMaxD + 1, 0),
            in_sparse(kMaxD + 1, 0);
        for (int r = 0; r < reps; ++r) {
            const SimData data = generate(spec, mix_seed(spec.seed, r));
            std::vector<int> treated(data.T, 0);
            for (int t = 0; t < data.T; ++t) {
                for (int i = 0; i < data.N; ++i) {
                    if (data.A[size_t(t) * data.N + i] &&
                        data.G[(size_t(t) * data.N + i) * data.M]) {
                        ++treated[t];
                    }
                }
            }
            for (int d = 1; d <= kMaxD; ++d) {
                int c = 0;
                for (int t = 0; t < data.T; ++t) c += treated[t] >= d ? 1 : 0;
                mean[d] += c;
                if (c >= 150 && c <= 200) ++in_dense[d];
                if (c >= 80 && c <= 120) ++in_medium[d];
                if (c >= 30 && c <= 60) ++in_sparse[d];
            }
        }
        for (int d = 1; d <= kMaxD; ++d) {
            std::cout << "  d=" << d << " mean=" << mean[d] / reps
                      << " dense=" << double(in_dense[d]) / reps
                      << " medium=" << double(in_medium[d]) / reps
                      << " sparse=" << double(in_sparse[d]) / reps << "\n";
        }
    }
    return 0;
}
