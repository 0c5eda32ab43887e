#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "thal/matrix.hpp"

namespace thal::augment {

struct OversampleConfig {
    std::size_t neighbors = 5;  // capped at minority-1
    std::uint64_t seed = 0;
};

// For each minority row, the `neighbors` nearest other minority rows by
// unweighted Euclidean distance, ties by index.
std::vector<std::vector<std::size_t>> knn_minority(const FeatureMatrix& minority_rows,
                                                   std::size_t neighbors);
namespace reference {
std::vector<std::vector<std::size_t>> knn_minority_serial(const FeatureMatrix& minority_rows,
                                                          std::size_t neighbors);
}

// x_o + u * (x_hat - x_o)
std::vector<double> smote_interpolate(std::span<const double> x_o,
                                      std::span<const double> x_hat, double u);

// Where each synthetic row came from: output row = base + u*(neighbor-base).
struct SyntheticProvenance {
    std::size_t output_row;     // index in the balanced matrix
    std::size_t base_row;       // index in the balanced matrix (an original)
    std::size_t neighbor_row;   // index in the balanced matrix (an original)
    double u;
};

struct BalanceResult {
    FeatureMatrix features;
    LabelVector labels;
    std::vector<SyntheticProvenance> provenance;
};

// Append synthetic minority rows until class counts are equal. Originals are
// preserved verbatim and come first.
BalanceResult balance(const FeatureMatrix& matrix, const LabelVector& labels,
                      const OversampleConfig& config);

}  // namespace thal::augment
