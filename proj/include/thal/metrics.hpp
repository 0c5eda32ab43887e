#pragma once

#include <optional>

#include "thal/matrix.hpp"

namespace thal::metrics {

struct ConfusionCounts {
    std::size_t true_positive = 0;   // h-hat
    std::size_t false_positive = 0;
    std::size_t false_negative = 0;  // eta
    std::size_t true_negative = 0;

    std::size_t total() const {
        return true_positive + false_positive + false_negative + true_negative;
    }
};

ConfusionCounts confusion(const LabelVector& predicted, const LabelVector& truth,
                          int positive_class = 1);

// Zero denominators yield nullopt ("undefined"), kept distinct from 0 so
// aggregates are not inflated.
std::optional<double> precision(const ConfusionCounts& counts);
std::optional<double> recall(const ConfusionCounts& counts);
std::optional<double> f_measure(std::optional<double> precision,
                                std::optional<double> recall);

struct MetricsReport {
    ConfusionCounts counts;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f_measure;
};

MetricsReport evaluate(const LabelVector& predicted, const LabelVector& truth,
                       int positive_class = 1);

}  // namespace thal::metrics
