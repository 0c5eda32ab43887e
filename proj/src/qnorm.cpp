#include "thal/qnorm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "thal/rng.hpp"

namespace thal::qnorm {

namespace {

// Sort order of one record, ties broken by index (stable).
std::vector<std::size_t> sort_order(std::span<const double> rec) {
    std::vector<std::size_t> order(rec.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return rec[a] < rec[b]; });
    return order;
}

// Replace a record's values by `targets` (an ascending vector, one per sorted
// position); tied values get the mean of their run's targets.
void assign_by_rank(std::span<const double> rec, const std::vector<double>& targets,
                    std::span<double> out) {
    auto order = sort_order(rec);
    std::size_t c = rec.size();
    std::size_t i = 0;
    while (i < c) {
        std::size_t j = i;
        while (j + 1 < c && rec[order[j + 1]] == rec[order[i]]) ++j;
        double mean = 0.0;
        for (std::size_t p = i; p <= j; ++p) mean += targets[p];
        mean /= static_cast<double>(j - i + 1);
        for (std::size_t p = i; p <= j; ++p) out[order[p]] = mean;
        i = j + 1;
    }
}

// Cross-record rank means: entry p is the mean over rows of each row's
// p-th smallest value.
std::vector<double> rank_mean_vector(const FeatureMatrix& m,
                                     const std::vector<std::size_t>& rows) {
    std::size_t c = m.cols();
    std::vector<double> means(c, 0.0);
    std::vector<std::vector<double>> sorted(rows.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(rows.size()); ++k) {
        auto r = m.row_copy(rows[k]);
        std::sort(r.begin(), r.end());
        sorted[k] = std::move(r);
    }
    for (const auto& r : sorted)
        for (std::size_t p = 0; p < c; ++p) means[p] += r[p];
    for (auto& v : means) v /= static_cast<double>(rows.size());
    return means;
}

// Normalize one group of rows in place in `out`.
void normalize_group(const FeatureMatrix& in, const std::vector<std::size_t>& rows,
                     FeatureMatrix& out) {
    if (rows.empty()) throw std::invalid_argument("quantile group with zero records");
    auto means = rank_mean_vector(in, rows);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(rows.size()); ++k)
        assign_by_rank(in.row(rows[k]), means, out.row(rows[k]));
}

std::vector<std::size_t> all_rows(const FeatureMatrix& m) {
    std::vector<std::size_t> rows(m.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
}

void check_labels(const std::optional<LabelVector>& labels, std::size_t rows,
                  const char* what) {
    if (!labels) throw std::invalid_argument(std::string(what) + " requires class labels");
    if (labels->size() != rows)
        throw std::invalid_argument("class label length mismatch");
}

}  // namespace

std::vector<double> rank_within_sample(std::span<const double> record) {
    for (double v : record)
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite entry");
    std::vector<double> ranks(record.size());
    auto order = sort_order(record);
    std::size_t i = 0;
    while (i < record.size()) {
        std::size_t j = i;
        while (j + 1 < record.size() && record[order[j + 1]] == record[order[i]]) ++j;
        double mean_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t p = i; p <= j; ++p) ranks[order[p]] = mean_rank;
        i = j + 1;
    }
    return ranks;
}

FeatureMatrix quantile_normalize(const FeatureMatrix& matrix,
                                 const QuantileStrategy& strategy) {
    if (matrix.rows() == 0) throw std::invalid_argument("empty matrix");
    FeatureMatrix out(matrix.rows(), matrix.cols());

    switch (strategy.variant) {
        case Variant::All:
            normalize_group(matrix, all_rows(matrix), out);
            break;
        case Variant::ClassSpecific: {
            check_labels(strategy.class_labels, matrix.rows(), "ClassSpecific");
            std::map<int, std::vector<std::size_t>> groups;
            for (std::size_t i = 0; i < matrix.rows(); ++i)
                groups[(*strategy.class_labels)[i]].push_back(i);
            for (const auto& [cls, rows] : groups) normalize_group(matrix, rows, out);
            break;
        }
        case Variant::Discrete: {
            check_labels(strategy.class_labels, matrix.rows(), "Discrete");
            if (!strategy.batch_labels)
                throw std::invalid_argument("Discrete requires batch labels");
            if (strategy.batch_labels->size() != matrix.rows())
                throw std::invalid_argument("batch label length mismatch");
            std::map<std::pair<int, int>, std::vector<std::size_t>> groups;
            for (std::size_t i = 0; i < matrix.rows(); ++i)
                groups[{(*strategy.class_labels)[i], (*strategy.batch_labels)[i]}]
                    .push_back(i);
            for (const auto& [key, rows] : groups) normalize_group(matrix, rows, out);
            break;
        }
        case Variant::Ratio: {
            check_labels(strategy.class_labels, matrix.rows(), "Ratio");
            std::vector<std::size_t> cls0, cls1;
            for (std::size_t i = 0; i < matrix.rows(); ++i)
                ((*strategy.class_labels)[i] == 0 ? cls0 : cls1).push_back(i);
            if (cls0.empty() || cls1.empty())
                throw std::invalid_argument("Ratio requires both classes present");

            // Each class-0 record is divided elementwise by a uniformly random
            // class-1 record; the ratio matrix is normalized as one set and
            // mapped back multiplicatively. Class-1 records pass through.
            auto rng = make_stream(strategy.seed, 0x4a710ULL);
            std::uniform_int_distribution<std::size_t> pick(0, cls1.size() - 1);
            std::vector<std::size_t> partner(cls0.size());
            for (auto& p : partner) p = cls1[pick(rng)];

            FeatureMatrix ratios(cls0.size(), matrix.cols());
            for (std::size_t k = 0; k < cls0.size(); ++k)
                for (std::size_t j = 0; j < matrix.cols(); ++j) {
                    double denom = matrix.at(partner[k], j);
                    if (denom == 0.0) denom = 1.0;
                    ratios.at(k, j) = matrix.at(cls0[k], j) / denom;
                }
            FeatureMatrix norm_ratios(ratios.rows(), ratios.cols());
            normalize_group(ratios, all_rows(ratios), norm_ratios);
            for (std::size_t k = 0; k < cls0.size(); ++k)
                for (std::size_t j = 0; j < matrix.cols(); ++j) {
                    double denom = matrix.at(partner[k], j);
                    if (denom == 0.0) denom = 1.0;
                    out.at(cls0[k], j) = norm_ratios.at(k, j) * denom;
                }
            for (auto i : cls1) {
                auto src = matrix.row(i);
                std::copy(src.begin(), src.end(), out.row(i).begin());
            }
            break;
        }
    }
    return out;
}

namespace reference {

FeatureMatrix normalize_group_serial(const FeatureMatrix& matrix) {
    if (matrix.rows() == 0) throw std::invalid_argument("empty matrix");
    std::size_t b = matrix.rows(), c = matrix.cols();
    std::vector<double> means(c, 0.0);
    for (std::size_t i = 0; i < b; ++i) {
        auto r = matrix.row_copy(i);
        std::sort(r.begin(), r.end());
        for (std::size_t p = 0; p < c; ++p) means[p] += r[p];
    }
    for (auto& v : means) v /= static_cast<double>(b);
    FeatureMatrix out(b, c);
    for (std::size_t i = 0; i < b; ++i) assign_by_rank(matrix.row(i), means, out.row(i));
    return out;
}

}  // namespace reference

RankMeanMap RankMeanMap::fit(const FeatureMatrix& train) {
    if (train.rows() == 0) throw std::invalid_argument("empty training matrix");
    RankMeanMap map;
    map.rank_means_ = rank_mean_vector(train, all_rows(train));
    return map;
}

std::vector<double> RankMeanMap::transform(std::span<const double> record) const {
    if (record.size() != rank_means_.size())
        throw std::invalid_argument("record width mismatch");
    std::vector<double> out(record.size());
    assign_by_rank(record, rank_means_, out);
    return out;
}

FeatureMatrix RankMeanMap::transform(const FeatureMatrix& matrix) const {
    FeatureMatrix out(matrix.rows(), matrix.cols());
    for (std::size_t i = 0; i < matrix.rows(); ++i)
        assign_by_rank(matrix.row(i), rank_means_, out.row(i));
    return out;
}

}  // namespace thal::qnorm
