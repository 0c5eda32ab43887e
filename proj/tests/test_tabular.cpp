#include <doctest.h>

#include <algorithm>
#include <set>

#include "thal/synth.hpp"
#include "thal/tabular.hpp"

using namespace thal;

namespace {

const char* kTinyCsv =
    "sex,hb,mcv,phenotype\n"
    "female,13.1,90.2,normal\n"
    "male,11.0,72.5,carrier\n"
    "female,12.8,88.0,normal\n";

}  // namespace

TEST_CASE("load_csv_text parses and encodes sex") {
    auto ds = tabular::load_csv_text(kTinyCsv);
    CHECK(ds.features.rows() == 3);
    CHECK(ds.features.cols() == 3);
    CHECK(ds.features.column(0) == std::vector<double>{0.0, 1.0, 0.0});
    CHECK(ds.labels == LabelVector{0, 1, 0});
    CHECK(ds.schema.label_column == "phenotype");
    CHECK(ds.schema.feature_names == std::vector<std::string>{"sex", "hb", "mcv"});
    CHECK(ds.schema.categorical_columns == std::vector<std::string>{"sex"});
}

TEST_CASE("load_csv_text rejects bad input") {
    CHECK_THROWS_WITH_AS(tabular::load_csv_text("sex,hb,phenotype\n"),
                         doctest::Contains("empty data section"), std::runtime_error);
    CHECK_THROWS_WITH_AS(tabular::load_csv_text("sex,hb\nfemale,13\n"),
                         doctest::Contains("label column"), std::runtime_error);
    CHECK_THROWS_WITH_AS(
        tabular::load_csv_text("sex,hb,phenotype\nfemale,oops,normal\n"),
        doctest::Contains("non-parsable"), std::runtime_error);
    CHECK_THROWS_WITH_AS(tabular::load_csv_text("sex,hb,phenotype\nfemale,,normal\n"),
                         doctest::Contains("missing cell"), std::runtime_error);
    CHECK_THROWS(tabular::load_csv("/nonexistent/file.csv"));
}

TEST_CASE("synthetic dataset loads with 288 rows and 15 features") {
    auto ds = tabular::load_csv_text(synth::generate_csv(288, 7));
    CHECK(ds.features.rows() == 288);
    CHECK(ds.features.cols() == 15);
    std::size_t carriers = std::count(ds.labels.begin(), ds.labels.end(), 1);
    CHECK(carriers == 96);
}

TEST_CASE("split_learning is stratified and deterministic") {
    auto ds = tabular::load_csv_text(synth::generate_csv(288, 7));
    auto split = tabular::split_learning(ds.features, ds.labels, 0.9, 11);

    // 96*0.9 = 86.4 -> 86, 192*0.9 = 172.8 -> 173
    CHECK(split.train_indices.size() == 259);
    CHECK(split.test_indices.size() == 29);

    std::set<std::size_t> train(split.train_indices.begin(), split.train_indices.end());
    std::set<std::size_t> test(split.test_indices.begin(), split.test_indices.end());
    CHECK(train.size() + test.size() == 288);
    for (auto i : test) CHECK(train.count(i) == 0);

    auto again = tabular::split_learning(ds.features, ds.labels, 0.9, 11);
    CHECK(again.train_indices == split.train_indices);
    CHECK(again.test_indices == split.test_indices);

    auto other = tabular::split_learning(ds.features, ds.labels, 0.9, 12);
    CHECK(other.train_indices != split.train_indices);
}

TEST_CASE("split_learning per-class round-half-down rule") {
    // two balanced rows at fraction 0.5: one train + one test, one per class
    auto m = FeatureMatrix::from_rows({{1.0}, {2.0}});
    LabelVector y{0, 1};
    auto split = tabular::split_learning(m, y, 0.5, 3);
    CHECK(split.train_indices.size() == 1);
    CHECK(split.test_indices.size() == 1);
}

TEST_CASE("split_learning rejects bad fractions and single-class data") {
    auto m = FeatureMatrix::from_rows({{1.0}, {2.0}});
    CHECK_THROWS(tabular::split_learning(m, {0, 1}, 0.0, 1));
    CHECK_THROWS(tabular::split_learning(m, {0, 1}, 1.0, 1));
    CHECK_THROWS(tabular::split_learning(m, {0, 0}, 0.5, 1));
}

TEST_CASE("kfold k=9 on 288 rows gives 9 folds of 32") {
    auto ds = tabular::load_csv_text(synth::generate_csv(288, 7));
    auto folds = tabular::kfold(ds.features, ds.labels, 9, 5);
    REQUIRE(folds.size() == 9);
    std::set<std::size_t> seen;
    for (const auto& fold : folds) {
        CHECK(fold.test_indices.size() == 32);
        CHECK(fold.train_indices.size() == 256);
        for (auto i : fold.test_indices) CHECK(seen.insert(i).second);
    }
    CHECK(seen.size() == 288);
}

TEST_CASE("kfold small and error cases") {
    auto m = FeatureMatrix::from_rows({{1.0}, {2.0}, {3.0}, {4.0}});
    LabelVector y{0, 1, 0, 1};
    auto folds = tabular::kfold(m, y, 2, 1);
    REQUIRE(folds.size() == 2);
    for (const auto& fold : folds) {
        REQUIRE(fold.test_indices.size() == 2);
        int sum = y[fold.test_indices[0]] + y[fold.test_indices[1]];
        CHECK(sum == 1);  // one row per class
    }
    CHECK_THROWS(tabular::kfold(m, y, 300, 1));
}
