#include "thal/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "thal/augment.hpp"
#include "thal/model.hpp"
#include "thal/rng.hpp"
#include "thal/tabular.hpp"

namespace thal::pipeline {

namespace {

using nlohmann::json;

qnorm::Variant parse_variant(const std::string& s) {
    if (s == "all") return qnorm::Variant::All;
    if (s == "class") return qnorm::Variant::ClassSpecific;
    if (s == "discrete") return qnorm::Variant::Discrete;
    if (s == "ratio") return qnorm::Variant::Ratio;
    throw ConfigError("unknown qnorm strategy '" + s + "'");
}

std::string variant_name(qnorm::Variant v) {
    switch (v) {
        case qnorm::Variant::All: return "all";
        case qnorm::Variant::ClassSpecific: return "class";
        case qnorm::Variant::Discrete: return "discrete";
        case qnorm::Variant::Ratio: return "ratio";
    }
    return "?";
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t stage) {
    return splitmix64(seed ^ splitmix64(stage + 0x9e37ULL));
}

std::optional<double> median_of(std::vector<double> v) {
    if (v.empty()) return std::nullopt;
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

std::optional<double> mean_of(const std::vector<double>& v) {
    if (v.empty()) return std::nullopt;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

json metrics_to_json(const metrics::MetricsReport& m) {
    auto opt = [](std::optional<double> v) {
        return v ? json(*v) : json("undefined");
    };
    return json{{"tp", m.counts.true_positive},
                {"fp", m.counts.false_positive},
                {"fn", m.counts.false_negative},
                {"tn", m.counts.true_negative},
                {"precision", opt(m.precision)},
                {"recall", opt(m.recall)},
                {"f_measure", opt(m.f_measure)}};
}

// One train/test evaluation: the full Figure-1 style flow with every
// fitted statistic derived from the training fold only.
SplitOutcome run_split(const tabular::Dataset& ds, const DatasetSplit& split,
                       const ExperimentConfig& config, const model::TransferProfile& profile,
                       std::uint64_t seed, const std::string& point_name) {
    SplitOutcome outcome;
    outcome.protocol_point = point_name;
    outcome.seed = seed;

    auto train_x = ds.features.select_rows(split.train_indices);
    auto train_y = select_labels(ds.labels, split.train_indices);
    auto test_x = ds.features.select_rows(split.test_indices);
    auto test_y = select_labels(ds.labels, split.test_indices);
    outcome.trace.train_rows = train_x.rows();
    outcome.trace.test_rows = test_x.rows();

    // normalization: strategy-specific on the training fold, rank-mean map
    // for out-of-sample records
    qnorm::QuantileStrategy strategy;
    strategy.variant = config.qnorm_variant;
    strategy.seed = derive(seed, 1);
    if (config.qnorm_variant != qnorm::Variant::All) strategy.class_labels = train_y;
    if (config.qnorm_variant == qnorm::Variant::Discrete) {
        std::vector<int> batches(train_x.rows());
        if (config.batch_column) {
            auto it = std::find(ds.schema.feature_names.begin(),
                                ds.schema.feature_names.end(), *config.batch_column);
            if (it == ds.schema.feature_names.end())
                throw ConfigError("batch column '" + *config.batch_column + "' not found");
            std::size_t col =
                static_cast<std::size_t>(it - ds.schema.feature_names.begin());
            for (std::size_t i = 0; i < train_x.rows(); ++i)
                batches[i] = static_cast<int>(std::lround(train_x.at(i, col)));
        } else {
            // no natural batch factor: acquisition-order halves
            for (std::size_t i = 0; i < train_x.rows(); ++i)
                batches[i] = i < train_x.rows() / 2 ? 0 : 1;
        }
        strategy.batch_labels = std::move(batches);
    }
    auto norm_train = qnorm::quantile_normalize(train_x, strategy);
    auto rank_map = qnorm::RankMeanMap::fit(train_x);
    auto norm_test = rank_map.transform(test_x);
    outcome.trace.qnorm_fit_rows = train_x.rows();

    // shift to non-negative using training minima, then rank and fuse
    auto minima = fusion::column_minima(norm_train);
    auto shifted_train = fusion::shift_columns(norm_train, minima);
    auto shifted_test = fusion::shift_columns(norm_test, minima);
    auto plan = fusion::rank_features(shifted_train, train_y, config.fused_dim);

    std::vector<double> alpha_targets(shifted_train.rows());
    std::vector<std::vector<double>> centroids = {
        fusion::class_centroid(shifted_train, train_y, 0),
        fusion::class_centroid(shifted_train, train_y, 1)};
    for (std::size_t i = 0; i < shifted_train.rows(); ++i)
        alpha_targets[i] =
            fusion::alpha_target(shifted_train.row(i), centroids[train_y[i]]);

    fusion::DmnConfig dmn_config = config.dmn;
    dmn_config.seed = derive(seed, 2);
    auto dmn = fusion::DmnNetwork::make(shifted_train.cols(), dmn_config.depth,
                                        dmn_config.hidden, dmn_config.pieces,
                                        dmn_config.seed);
    fusion::train_dmn(dmn, shifted_train, alpha_targets, dmn_config);
    outcome.trace.dmn_train_rows = shifted_train.rows();

    auto alpha_train = fusion::dmn_forward_batch(dmn, shifted_train);
    auto alpha_test = fusion::dmn_forward_batch(dmn, shifted_test);
    auto fused_train = fusion::fuse(shifted_train, alpha_train, plan);
    auto fused_test = fusion::fuse(shifted_test, alpha_test, plan);

    // oversampling on the training fold only
    augment::OversampleConfig smote;
    smote.neighbors = config.smote_k;
    smote.seed = derive(seed, 3);
    outcome.trace.smote_input_rows = fused_train.rows();
    auto balanced = augment::balance(fused_train, train_y, smote);

    // classifier trained by the hybrid optimizer
    auto net = model::build_classifier(profile, fused_train.cols(), 2);
    model::FitnessContext context;
    context.network = &net;
    context.features = balanced.features;
    context.labels = balanced.labels;
    context.threads = config.ptso.threads;
    outcome.trace.ptso_fitness_rows = balanced.features.rows();

    optim::PtsoConfig ptso = config.ptso;
    ptso.seed = derive(seed, 4);
    auto bounds = optim::Bounds::uniform(net.psi_dim, -config.weight_bound,
                                         config.weight_bound);
    auto weights = model::train_classifier(net, context, ptso, bounds);

    auto predicted = model::predict(net, weights.psi, fused_test);
    outcome.metrics = metrics::evaluate(predicted, test_y, 1);

    // all-majority-class baseline on the same split
    std::size_t pos = 0;
    for (int y : train_y) pos += y == 1;
    int majority = 2 * pos > train_y.size() ? 1 : 0;
    LabelVector baseline_pred(test_y.size(), majority);
    outcome.baseline = metrics::evaluate(baseline_pred, test_y, 1);
    return outcome;
}

Aggregate aggregate_point(const std::string& point,
                          const std::vector<SplitOutcome>& outcomes) {
    Aggregate agg;
    agg.protocol_point = point;
    std::vector<double> ps, rs, fs;
    for (const auto& o : outcomes) {
        if (o.protocol_point.rfind(point, 0) != 0) continue;
        ++agg.outcomes;
        if (o.metrics.precision) ps.push_back(*o.metrics.precision);
        if (o.metrics.recall) rs.push_back(*o.metrics.recall);
        if (o.metrics.f_measure)
            fs.push_back(*o.metrics.f_measure);
        else
            ++agg.undefined_f;
    }
    agg.mean_precision = mean_of(ps);
    agg.mean_recall = mean_of(rs);
    agg.mean_f = mean_of(fs);
    agg.median_precision = median_of(ps);
    agg.median_recall = median_of(rs);
    agg.median_f = median_of(fs);
    return agg;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    try {
        ExperimentConfig c;
        c.dataset_path = j.at("dataset").get<std::string>();
        c.label_column = j.value("label_col", c.label_column);
        c.qnorm_variant = parse_variant(j.value("qnorm", "all"));
        if (j.contains("batch_col") && !j["batch_col"].is_null())
            c.batch_column = j["batch_col"].get<std::string>();
        c.fused_dim = j.value("fused_dim", 0);
        if (j.contains("dmn")) {
            const auto& d = j["dmn"];
            c.dmn.depth = d.value("depth", c.dmn.depth);
            c.dmn.pieces = d.value("pieces", c.dmn.pieces);
            c.dmn.hidden = d.value("hidden", c.dmn.hidden);
            c.dmn.epochs = d.value("epochs", c.dmn.epochs);
            c.dmn.learning_rate = d.value("lr", c.dmn.learning_rate);
            c.dmn.batch_size = d.value("batch", c.dmn.batch_size);
        }
        c.smote_k = j.value("smote_k", c.smote_k);
        c.profile_path = j.value("profile", std::string{});
        if (j.contains("ptso")) {
            const auto& p = j["ptso"];
            c.ptso.population_size = p.value("population", c.ptso.population_size);
            c.ptso.max_evaluations = p.value("evaluations", c.ptso.max_evaluations);
            c.ptso.p_switch = p.value("p_switch", c.ptso.p_switch);
            c.ptso.p_esc = p.value("p_esc", c.ptso.p_esc);
            c.ptso.p_replace = p.value("p_replace", c.ptso.p_replace);
            c.ptso.threads = p.value("threads", c.ptso.threads);
            c.weight_bound = p.value("bound", c.weight_bound);
        }
        if (j.contains("protocol")) {
            const auto& p = j["protocol"];
            std::string type = p.value("type", "learning_set");
            if (type == "learning_set") {
                c.protocol.type = Protocol::Type::LearningSet;
                if (p.contains("fractions"))
                    c.protocol.fractions = p["fractions"].get<std::vector<double>>();
            } else if (type == "kfold") {
                c.protocol.type = Protocol::Type::KFold;
                if (p.contains("k")) c.protocol.k_values = p["k"].get<std::vector<int>>();
            } else {
                throw ConfigError("unknown protocol type '" + type + "'");
            }
        }
        if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
        if (c.seeds.empty()) throw ConfigError("seeds must be non-empty");
        if (c.protocol.type == Protocol::Type::LearningSet && c.protocol.fractions.empty())
            throw ConfigError("protocol fractions must be non-empty");
        if (c.protocol.type == Protocol::Type::KFold && c.protocol.k_values.empty())
            throw ConfigError("protocol k values must be non-empty");
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad experiment config: ") + e.what());
    }
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config '" + path + "'");
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return from_json(j);
}

json ExperimentConfig::to_json() const {
    json protocol;
    if (this->protocol.type == Protocol::Type::LearningSet) {
        protocol = {{"type", "learning_set"}, {"fractions", this->protocol.fractions}};
    } else {
        protocol = {{"type", "kfold"}, {"k", this->protocol.k_values}};
    }
    return json{{"dataset", dataset_path},
                {"label_col", label_column},
                {"qnorm", variant_name(qnorm_variant)},
                {"batch_col", batch_column ? json(*batch_column) : json(nullptr)},
                {"fused_dim", fused_dim},
                {"dmn",
                 {{"depth", dmn.depth},
                  {"pieces", dmn.pieces},
                  {"hidden", dmn.hidden},
                  {"epochs", dmn.epochs},
                  {"lr", dmn.learning_rate},
                  {"batch", dmn.batch_size}}},
                {"smote_k", smote_k},
                {"profile", profile_path},
                {"ptso",
                 {{"population", ptso.population_size},
                  {"evaluations", ptso.max_evaluations},
                  {"p_switch", ptso.p_switch},
                  {"p_esc", ptso.p_esc},
                  {"p_replace", ptso.p_replace},
                  {"threads", ptso.threads},
                  {"bound", weight_bound}}},
                {"protocol", protocol},
                {"seeds", seeds}};
}

RunReport run_pipeline(const ExperimentConfig& config) {
    tabular::LoadOptions load_opts;
    load_opts.label_column = config.label_column;
    tabular::Dataset ds;
    try {
        ds = tabular::load_csv(config.dataset_path, load_opts);
    } catch (const std::exception& e) {
        throw DataError(std::string("[load] ") + e.what());
    }

    model::TransferProfile profile = config.profile_path.empty()
                                         ? model::TransferProfile::desk()
                                         : model::TransferProfile::load(config.profile_path);

    RunReport report;
    report.config_echo = config.to_json();
    report.dataset_hash = hash_file(config.dataset_path);
    report.config_hash = hash_string(report.config_echo.dump());

    std::vector<std::string> points;
    auto run_point = [&](const std::string& point, auto&& splits_for_seed) {
        points.push_back(point);
        for (auto seed : config.seeds) {
            for (const auto& [split, name] : splits_for_seed(seed)) {
                try {
                    report.outcomes.push_back(
                        run_split(ds, split, config, profile, seed, name));
                } catch (const ConfigError&) {
                    throw;
                } catch (const std::exception& e) {
                    throw DataError("[" + name + "] " + e.what());
                }
            }
        }
    };

    using NamedSplits = std::vector<std::pair<DatasetSplit, std::string>>;
    if (config.protocol.type == Protocol::Type::LearningSet) {
        for (double fraction : config.protocol.fractions) {
            std::ostringstream point;
            point << "fraction=" << fraction;
            run_point(point.str(), [&](std::uint64_t seed) {
                NamedSplits out;
                out.emplace_back(tabular::split_learning(ds.features, ds.labels, fraction, seed),
                                 point.str());
                return out;
            });
        }
    } else {
        for (int k : config.protocol.k_values) {
            std::string point = "k=" + std::to_string(k);
            run_point(point, [&](std::uint64_t seed) {
                NamedSplits out;
                auto folds = tabular::kfold(ds.features, ds.labels, k, seed);
                for (std::size_t f = 0; f < folds.size(); ++f)
                    out.emplace_back(folds[f], point + "/fold=" + std::to_string(f));
                return out;
            });
        }
    }

    for (const auto& point : points)
        report.aggregates.push_back(aggregate_point(point, report.outcomes));
    return report;
}

json report_to_json(const RunReport& report) {
    json outcomes = json::array();
    for (const auto& o : report.outcomes) {
        outcomes.push_back({{"protocol_point", o.protocol_point},
                            {"seed", o.seed},
                            {"metrics", metrics_to_json(o.metrics)},
                            {"baseline", metrics_to_json(o.baseline)},
                            {"trace",
                             {{"train_rows", o.trace.train_rows},
                              {"test_rows", o.trace.test_rows},
                              {"qnorm_fit_rows", o.trace.qnorm_fit_rows},
                              {"dmn_train_rows", o.trace.dmn_train_rows},
                              {"smote_input_rows", o.trace.smote_input_rows},
                              {"ptso_fitness_rows", o.trace.ptso_fitness_rows}}}});
    }
    json aggregates = json::array();
    auto opt = [](std::optional<double> v) { return v ? json(*v) : json("undefined"); };
    for (const auto& a : report.aggregates) {
        aggregates.push_back({{"protocol_point", a.protocol_point},
                              {"outcomes", a.outcomes},
                              {"undefined_f", a.undefined_f},
                              {"mean_precision", opt(a.mean_precision)},
                              {"mean_recall", opt(a.mean_recall)},
                              {"mean_f", opt(a.mean_f)},
                              {"median_precision", opt(a.median_precision)},
                              {"median_recall", opt(a.median_recall)},
                              {"median_f", opt(a.median_f)}});
    }
    return json{{"schema_version", report.schema_version},
                {"dataset_hash", report.dataset_hash},
                {"config_hash", report.config_hash},
                {"config", report.config_echo},
                {"outcomes", outcomes},
                {"aggregates", aggregates}};
}

void emit_report(const RunReport& report, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot write report to '" + path + "'");
    f << report_to_json(report).dump(2) << "\n";
    if (!f) throw DataError("write failure on '" + path + "'");
}

void emit_report_csv(const RunReport& report, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot write report to '" + path + "'");
    f << "protocol_point,seed,precision,recall,f_measure\n";
    auto cell = [](std::optional<double> v) {
        return v ? std::to_string(*v) : std::string("undefined");
    };
    for (const auto& o : report.outcomes)
        f << o.protocol_point << "," << o.seed << "," << cell(o.metrics.precision) << ","
          << cell(o.metrics.recall) << "," << cell(o.metrics.f_measure) << "\n";
    if (!f) throw DataError("write failure on '" + path + "'");
}

std::uint64_t hash_string(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t hash_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open '" + path + "' for hashing");
    std::stringstream buf;
    buf << f.rdbuf();
    return hash_string(buf.str());
}

}  // namespace thal::pipeline
