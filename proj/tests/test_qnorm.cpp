#include <doctest.h>

#include <algorithm>
#include <random>

#include "thal/qnorm.hpp"
#include "thal/rng.hpp"

using namespace thal;

namespace {

// Brute-force oracle for one group: per row, replace the k-th smallest value
// by the mean over rows of the k-th smallest values (no tie handling; callers
// use tie-free data).
FeatureMatrix oracle_rank_average(const FeatureMatrix& m) {
    std::size_t b = m.rows(), c = m.cols();
    std::vector<std::vector<double>> sorted(b);
    for (std::size_t i = 0; i < b; ++i) {
        sorted[i] = m.row_copy(i);
        std::sort(sorted[i].begin(), sorted[i].end());
    }
    FeatureMatrix out(b, c);
    for (std::size_t i = 0; i < b; ++i) {
        auto row = m.row_copy(i);
        for (std::size_t j = 0; j < c; ++j) {
            std::size_t rank =
                std::count_if(row.begin(), row.end(), [&](double v) { return v < row[j]; });
            double mean = 0.0;
            for (std::size_t k = 0; k < b; ++k) mean += sorted[k][rank];
            out.at(i, j) = mean / static_cast<double>(b);
        }
    }
    return out;
}

FeatureMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    auto rng = make_stream(seed);
    std::uniform_real_distribution<double> unif(-10.0, 10.0);
    FeatureMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m.at(i, j) = unif(rng);
    return m;
}

bool approx_equal(const FeatureMatrix& a, const FeatureMatrix& b, double tol) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (std::abs(a.at(i, j) - b.at(i, j)) > tol) return false;
    return true;
}

}  // namespace

TEST_CASE("rank_within_sample") {
    CHECK(qnorm::rank_within_sample(std::vector<double>{5, 1, 3}) ==
          std::vector<double>{3, 1, 2});
    CHECK(qnorm::rank_within_sample(std::vector<double>{2, 2}) ==
          std::vector<double>{1.5, 1.5});
    CHECK(qnorm::rank_within_sample(std::vector<double>{}).empty());
}

TEST_CASE("quantile_normalize All matches the frozen example") {
    auto m = FeatureMatrix::from_rows({{1, 3, 5}, {2, 4, 6}});
    auto out = qnorm::quantile_normalize(m, {});
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(out.at(i, 0) == doctest::Approx(1.5));
        CHECK(out.at(i, 1) == doctest::Approx(3.5));
        CHECK(out.at(i, 2) == doctest::Approx(5.5));
    }
}

TEST_CASE("quantile_normalize All matches the brute-force oracle") {
    auto m = random_matrix(20, 7, 101);
    auto expected = oracle_rank_average(m);
    auto got = qnorm::quantile_normalize(m, {});
    CHECK(approx_equal(got, expected, 1e-12));
    CHECK(approx_equal(got, qnorm::reference::normalize_group_serial(m), 0.0));
}

TEST_CASE("single record and identical records are unchanged") {
    auto one = FeatureMatrix::from_rows({{3, 1, 4}});
    CHECK(approx_equal(qnorm::quantile_normalize(one, {}), one, 1e-15));
    auto twin = FeatureMatrix::from_rows({{3, 1, 4}, {3, 1, 4}});
    CHECK(approx_equal(qnorm::quantile_normalize(twin, {}), twin, 1e-15));
}

TEST_CASE("post-normalization rows share one value multiset; idempotent") {
    auto m = random_matrix(30, 8, 55);
    auto out = qnorm::quantile_normalize(m, {});
    auto first = out.row_copy(0);
    std::sort(first.begin(), first.end());
    for (std::size_t i = 1; i < out.rows(); ++i) {
        auto r = out.row_copy(i);
        std::sort(r.begin(), r.end());
        for (std::size_t j = 0; j < r.size(); ++j)
            CHECK(r[j] == doctest::Approx(first[j]).epsilon(1e-12));
    }
    auto again = qnorm::quantile_normalize(out, {});
    CHECK(approx_equal(again, out, 1e-12));
}

TEST_CASE("within-record rank order preserved up to ties") {
    auto m = random_matrix(10, 6, 77);
    auto out = qnorm::quantile_normalize(m, {});
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t a = 0; a < m.cols(); ++a)
            for (std::size_t b = 0; b < m.cols(); ++b)
                if (m.at(i, a) < m.at(i, b)) CHECK(out.at(i, a) <= out.at(i, b));
}

TEST_CASE("class-specific strategy normalizes classes separately") {
    auto m = FeatureMatrix::from_rows({{1, 3, 5}, {2, 4, 6}, {10, 30, 50}, {20, 40, 60}});
    qnorm::QuantileStrategy strategy;
    strategy.variant = qnorm::Variant::ClassSpecific;
    strategy.class_labels = LabelVector{0, 0, 1, 1};
    auto out = qnorm::quantile_normalize(m, strategy);
    CHECK(out.at(0, 0) == doctest::Approx(1.5));
    CHECK(out.at(2, 0) == doctest::Approx(15.0));
    CHECK(out.at(3, 2) == doctest::Approx(55.0));
    // missing labels is an error
    qnorm::QuantileStrategy bad;
    bad.variant = qnorm::Variant::ClassSpecific;
    CHECK_THROWS(qnorm::quantile_normalize(m, bad));
}

TEST_CASE("discrete strategy groups by class and batch") {
    auto m = random_matrix(12, 5, 9);
    qnorm::QuantileStrategy strategy;
    strategy.variant = qnorm::Variant::Discrete;
    strategy.class_labels = LabelVector{0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1};
    strategy.batch_labels = std::vector<int>{0, 0, 0, 1, 1, 1, 0, 0, 0, 1, 1, 1};
    auto out = qnorm::quantile_normalize(m, strategy);
    // rows 0-2 form one group and share a multiset
    auto a = out.row_copy(0), b = out.row_copy(2);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    for (std::size_t j = 0; j < a.size(); ++j) CHECK(a[j] == doctest::Approx(b[j]));

    strategy.batch_labels.reset();
    CHECK_THROWS(qnorm::quantile_normalize(m, strategy));
}

TEST_CASE("ratio strategy requires both classes and keeps dimensions") {
    auto m = random_matrix(10, 4, 13);
    qnorm::QuantileStrategy strategy;
    strategy.variant = qnorm::Variant::Ratio;
    strategy.class_labels = LabelVector{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
    strategy.seed = 21;
    auto out = qnorm::quantile_normalize(m, strategy);
    CHECK(out.rows() == m.rows());
    CHECK(out.cols() == m.cols());
    // deterministic per seed
    auto out2 = qnorm::quantile_normalize(m, strategy);
    CHECK(approx_equal(out, out2, 0.0));

    strategy.class_labels = LabelVector{0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
    CHECK_THROWS(qnorm::quantile_normalize(m, strategy));
}

TEST_CASE("rank-mean map transforms held-out records through train ranks") {
    auto train = random_matrix(15, 6, 31);
    auto map = qnorm::RankMeanMap::fit(train);
    auto norm_train = qnorm::quantile_normalize(train, {});
    // transforming a training row reproduces its normalized values
    auto t0 = map.transform(train.row(3));
    for (std::size_t j = 0; j < t0.size(); ++j)
        CHECK(t0[j] == doctest::Approx(norm_train.at(3, j)));
    // held-out record gets the train value distribution
    std::vector<double> held{0.3, -2.0, 9.9, 1.1, 0.0, -5.5};
    auto mapped = map.transform(held);
    auto sorted_means = map.rank_means();
    auto sorted_mapped = mapped;
    std::sort(sorted_mapped.begin(), sorted_mapped.end());
    for (std::size_t j = 0; j < mapped.size(); ++j)
        CHECK(sorted_mapped[j] == doctest::Approx(sorted_means[j]));
}
