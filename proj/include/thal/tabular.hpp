#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "thal/matrix.hpp"

namespace thal::tabular {

struct LoadOptions {
    std::string label_column = "phenotype";
    // Columns encoded female->0, male->1 when present.
    std::vector<std::string> categorical_columns = {"sex"};
};

struct Dataset {
    FeatureMatrix features;
    LabelVector labels;
    Schema schema;
};

// Parse a header+rows CSV. Categorical "sex" is encoded female->0, male->1;
// the label column is extracted; any missing or non-numeric cell is an error.
Dataset load_csv(const std::string& path, const LoadOptions& opts = {});

// Same parser over an in-memory buffer (tests, generated data).
Dataset load_csv_text(const std::string& text, const LoadOptions& opts = {},
                      const std::string& origin = "<memory>");

// Stratified train/test split. Per-class train count = round(fraction*count),
// ties resolved downward.
DatasetSplit split_learning(const FeatureMatrix& matrix, const LabelVector& labels,
                            double fraction, std::uint64_t seed);

// Stratified k folds; every row appears in exactly one test fold. Per-class
// remainders go to the currently smallest folds so total fold sizes stay even.
std::vector<DatasetSplit> kfold(const FeatureMatrix& matrix, const LabelVector& labels,
                                int k, std::uint64_t seed);

}  // namespace thal::tabular
