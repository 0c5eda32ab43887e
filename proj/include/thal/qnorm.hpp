#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "thal/matrix.hpp"

namespace thal::qnorm {

enum class Variant { All, ClassSpecific, Discrete, Ratio };

struct QuantileStrategy {
    Variant variant = Variant::All;
    std::optional<LabelVector> class_labels;          // ClassSpecific, Discrete, Ratio
    std::optional<std::vector<int>> batch_labels;     // Discrete
    std::uint64_t seed = 0;                           // Ratio pairing
};

// Ranks 1..n by ascending magnitude; ties receive the mean of their positions.
std::vector<double> rank_within_sample(std::span<const double> record);

// Rank-average quantile normalization under the selected strategy. Output
// dimension equals input dimension; records are restored to original order.
FeatureMatrix quantile_normalize(const FeatureMatrix& matrix,
                                 const QuantileStrategy& strategy);

// Straight-line serial implementation of the All-strategy group kernel,
// kept as the comparison baseline for the parallel path.
namespace reference {
FeatureMatrix normalize_group_serial(const FeatureMatrix& matrix);
}

// Out-of-sample mapping: a record is ranked within itself and its values
// replaced by the stored rank-mean vector (built from training rows only).
class RankMeanMap {
public:
    static RankMeanMap fit(const FeatureMatrix& train);
    std::vector<double> transform(std::span<const double> record) const;
    FeatureMatrix transform(const FeatureMatrix& matrix) const;
    const std::vector<double>& rank_means() const { return rank_means_; }

private:
    std::vector<double> rank_means_;  // ascending, length = feature count
};

}  // namespace thal::qnorm
