#include "thal/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "thal/rng.hpp"

namespace thal::augment {

namespace {

double sq_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) {
        double d = a[t] - b[t];
        s += d * d;
    }
    return s;
}

std::vector<std::size_t> neighbors_of(const FeatureMatrix& rows, std::size_t i,
                                      std::size_t k) {
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(rows.rows() - 1);
    for (std::size_t j = 0; j < rows.rows(); ++j) {
        if (j == i) continue;
        dist.emplace_back(sq_distance(rows.row(i), rows.row(j)), j);
    }
    std::stable_sort(dist.begin(), dist.end());
    std::vector<std::size_t> out(k);
    for (std::size_t n = 0; n < k; ++n) out[n] = dist[n].second;
    return out;
}

}  // namespace

std::vector<std::vector<std::size_t>> knn_minority(const FeatureMatrix& minority_rows,
                                                   std::size_t neighbors) {
    if (neighbors >= minority_rows.rows())
        throw std::invalid_argument("neighbor count must be below minority count");
    if (neighbors == 0) throw std::invalid_argument("neighbor count must be >= 1");
    std::vector<std::vector<std::size_t>> out(minority_rows.rows());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(minority_rows.rows()); ++i)
        out[i] = neighbors_of(minority_rows, i, neighbors);
    return out;
}

namespace reference {
std::vector<std::vector<std::size_t>> knn_minority_serial(const FeatureMatrix& minority_rows,
                                                          std::size_t neighbors) {
    if (neighbors >= minority_rows.rows())
        throw std::invalid_argument("neighbor count must be below minority count");
    if (neighbors == 0) throw std::invalid_argument("neighbor count must be >= 1");
    std::vector<std::vector<std::size_t>> out(minority_rows.rows());
    for (std::size_t i = 0; i < minority_rows.rows(); ++i)
        out[i] = neighbors_of(minority_rows, i, neighbors);
    return out;
}
}  // namespace reference

std::vector<double> smote_interpolate(std::span<const double> x_o,
                                      std::span<const double> x_hat, double u) {
    if (x_o.size() != x_hat.size()) throw std::invalid_argument("length mismatch");
    std::vector<double> out(x_o.size());
    for (std::size_t t = 0; t < x_o.size(); ++t) out[t] = x_o[t] + u * (x_hat[t] - x_o[t]);
    return out;
}

BalanceResult balance(const FeatureMatrix& matrix, const LabelVector& labels,
                      const OversampleConfig& config) {
    if (labels.size() != matrix.rows())
        throw std::invalid_argument("labels/matrix length mismatch");
    std::vector<std::size_t> idx0, idx1;
    for (std::size_t i = 0; i < labels.size(); ++i)
        (labels[i] == 0 ? idx0 : idx1).push_back(i);
    if (idx0.empty() || idx1.empty())
        throw std::invalid_argument("both classes must be present");

    BalanceResult result;
    result.features = matrix;
    result.labels = labels;
    if (idx0.size() == idx1.size()) return result;

    int minority_class = idx0.size() < idx1.size() ? 0 : 1;
    const auto& minority_idx = minority_class == 0 ? idx0 : idx1;
    std::size_t deficit = (minority_class == 0 ? idx1.size() - idx0.size()
                                               : idx0.size() - idx1.size());
    if (minority_idx.size() < 2)
        throw std::invalid_argument("minority class too small to oversample");

    std::size_t k = std::min(config.neighbors, minority_idx.size() - 1);
    FeatureMatrix minority = matrix.select_rows(minority_idx);
    auto nbrs = knn_minority(minority, k);

    auto rng = make_stream(config.seed, 0x5107eULL);
    std::uniform_int_distribution<std::size_t> pick_nbr(0, k - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t s = 0; s < deficit; ++s) {
        std::size_t o = s % minority_idx.size();  // round-robin over minority rows
        std::size_t nb = nbrs[o][pick_nbr(rng)];
        double u = unit(rng);
        auto synthetic = smote_interpolate(minority.row(o), minority.row(nb), u);
        result.features.append_row(synthetic);
        result.labels.push_back(minority_class);
        result.provenance.push_back({result.features.rows() - 1, minority_idx[o],
                                     minority_idx[nb], u});
    }
    return result;
}

}  // namespace thal::augment
