#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "thal/fusion.hpp"
#include "thal/metrics.hpp"
#include "thal/optim.hpp"
#include "thal/qnorm.hpp"

namespace thal::pipeline {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Protocol {
    enum class Type { LearningSet, KFold } type = Type::LearningSet;
    std::vector<double> fractions = {0.9};
    std::vector<int> k_values = {9};
};

struct ExperimentConfig {
    std::string dataset_path;
    std::string label_column = "phenotype";
    qnorm::Variant qnorm_variant = qnorm::Variant::All;
    std::optional<std::string> batch_column;
    std::size_t fused_dim = 0;  // 0 = ceil(c/2)
    fusion::DmnConfig dmn;
    std::size_t smote_k = 5;
    std::string profile_path;  // empty = built-in desk profile
    optim::PtsoConfig ptso;
    double weight_bound = 5.0;
    Protocol protocol;
    std::vector<std::uint64_t> seeds = {1, 2, 3};

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig from_file(const std::string& path);
    nlohmann::json to_json() const;
};

// Row counts each train-only stage consumed; tests assert no test-fold rows
// leak into fitting.
struct StageTrace {
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
    std::size_t qnorm_fit_rows = 0;
    std::size_t dmn_train_rows = 0;
    std::size_t smote_input_rows = 0;
    std::size_t ptso_fitness_rows = 0;
};

struct SplitOutcome {
    std::string protocol_point;  // e.g. "fraction=0.9" or "k=9/fold=3"
    std::uint64_t seed = 0;
    metrics::MetricsReport metrics;
    metrics::MetricsReport baseline;  // all-majority-class predictor
    StageTrace trace;
};

struct Aggregate {
    std::string protocol_point;
    std::size_t outcomes = 0;
    std::size_t undefined_f = 0;
    std::optional<double> mean_precision, mean_recall, mean_f;
    std::optional<double> median_precision, median_recall, median_f;
};

struct RunReport {
    int schema_version = 1;
    std::uint64_t dataset_hash = 0;
    std::uint64_t config_hash = 0;
    nlohmann::json config_echo;
    std::vector<SplitOutcome> outcomes;
    std::vector<Aggregate> aggregates;
};

RunReport run_pipeline(const ExperimentConfig& config);

nlohmann::json report_to_json(const RunReport& report);
void emit_report(const RunReport& report, const std::string& path);
// one row per outcome
void emit_report_csv(const RunReport& report, const std::string& path);

std::uint64_t hash_file(const std::string& path);
std::uint64_t hash_string(const std::string& text);

}  // namespace thal::pipeline
