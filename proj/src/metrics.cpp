#include "thal/metrics.hpp"

#include <stdexcept>

namespace thal::metrics {

ConfusionCounts confusion(const LabelVector& predicted, const LabelVector& truth,
                          int positive_class) {
    if (predicted.size() != truth.size())
        throw std::invalid_argument("predicted/truth length mismatch");
    if (predicted.empty()) throw std::invalid_argument("nothing to evaluate");
    ConfusionCounts c;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        bool pred_pos = predicted[i] == positive_class;
        bool true_pos = truth[i] == positive_class;
        if (pred_pos && true_pos)
            ++c.true_positive;
        else if (pred_pos && !true_pos)
            ++c.false_positive;
        else if (!pred_pos && true_pos)
            ++c.false_negative;
        else
            ++c.true_negative;
    }
    return c;
}

std::optional<double> precision(const ConfusionCounts& counts) {
    std::size_t denom = counts.true_positive + counts.false_positive;
    if (denom == 0) return std::nullopt;
    return static_cast<double>(counts.true_positive) / static_cast<double>(denom);
}

std::optional<double> recall(const ConfusionCounts& counts) {
    std::size_t denom = counts.true_positive + counts.false_negative;
    if (denom == 0) return std::nullopt;
    return static_cast<double>(counts.true_positive) / static_cast<double>(denom);
}

std::optional<double> f_measure(std::optional<double> precision,
                                std::optional<double> recall) {
    if (!precision || !recall) return std::nullopt;
    double p = *precision, r = *recall;
    if (p + r == 0.0) return std::nullopt;
    return 2.0 * p * r / (p + r);
}

MetricsReport evaluate(const LabelVector& predicted, const LabelVector& truth,
                       int positive_class) {
    MetricsReport rep;
    rep.counts = confusion(predicted, truth, positive_class);
    rep.precision = precision(rep.counts);
    rep.recall = recall(rep.counts);
    rep.f_measure = f_measure(rep.precision, rep.recall);
    return rep;
}

}  // namespace thal::metrics
