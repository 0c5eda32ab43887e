// Batch experiment CLI: pipeline runs, metric evaluation of prediction files,
// optimizer benchmarks, and synthetic dataset generation.
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "thal/metrics.hpp"
#include "thal/optim.hpp"
#include "thal/pipeline.hpp"
#include "thal/synth.hpp"

namespace {

using nlohmann::json;

thal::LabelVector read_label_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw thal::pipeline::DataError("cannot open '" + path + "'");
    thal::LabelVector labels;
    std::string line;
    while (std::getline(f, line)) {
        std::istringstream ls(line);
        std::string cell;
        if (!std::getline(ls, cell, ',')) continue;
        if (cell.empty()) continue;
        if (cell.find_first_not_of("01") != std::string::npos) continue;  // header
        labels.push_back(std::stoi(cell));
    }
    if (labels.empty()) throw thal::pipeline::DataError("no labels in '" + path + "'");
    return labels;
}

json metric_json(const thal::metrics::MetricsReport& m) {
    auto opt = [](std::optional<double> v) { return v ? json(*v) : json("undefined"); };
    return json{{"tp", m.counts.true_positive},
                {"fp", m.counts.false_positive},
                {"fn", m.counts.false_negative},
                {"tn", m.counts.true_negative},
                {"precision", opt(m.precision)},
                {"recall", opt(m.recall)},
                {"f_measure", opt(m.f_measure)}};
}

thal::optim::Algo parse_algo(const std::string& s) {
    if (s == "ptso") return thal::optim::Algo::Ptso;
    if (s == "tsa") return thal::optim::Algo::Tsa;
    if (s == "po") return thal::optim::Algo::Po;
    throw CLI::ValidationError("--algo", "must be ptso, tsa or po");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"thalassemia detection pipeline and PTSO optimizer toolkit"};
    app.require_subcommand(1);

    // pipeline
    auto* pipeline_cmd = app.add_subcommand("pipeline", "run the full experiment pipeline");
    std::string config_path, report_path = "report.json", csv_path;
    std::string label_col, qnorm_flag, batch_col, profile_path;
    std::uint64_t seed_override = 0;
    bool has_seed = false;
    std::size_t fused_dim = 0;
    pipeline_cmd->add_option("--config", config_path, "experiment config (JSON)")->required();
    pipeline_cmd->add_option("--out", report_path, "report output path");
    pipeline_cmd->add_option("--csv", csv_path, "also emit a flat CSV table");
    pipeline_cmd->add_option("--label-col", label_col, "label column override");
    pipeline_cmd->add_option("--qnorm", qnorm_flag, "normalization strategy")
        ->check(CLI::IsMember({"all", "class", "discrete", "ratio"}));
    pipeline_cmd->add_option("--batch-col", batch_col, "batch column for --qnorm discrete");
    pipeline_cmd->add_option("--fused-dim", fused_dim, "fused feature count e");
    pipeline_cmd->add_option("--profile", profile_path, "transfer profile file");
    pipeline_cmd->add_option("--seed", seed_override, "replace config seeds with one seed")
        ->each([&](const std::string&) { has_seed = true; });

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "metrics from prediction/truth label files");
    std::string pred_path, truth_path;
    eval_cmd->add_option("--pred", pred_path, "predicted labels CSV")->required();
    eval_cmd->add_option("--truth", truth_path, "true labels CSV")->required();

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "optimizer benchmark over seeds");
    std::string algo = "ptso", fn = "sphere", bench_out;
    std::size_t dim = 10, evals = 5000, n_seeds = 20;
    bench_cmd->add_option("--algo", algo)->check(CLI::IsMember({"ptso", "tsa", "po"}));
    bench_cmd->add_option("--fn", fn)->check(CLI::IsMember({"sphere", "rosenbrock", "rastrigin"}));
    bench_cmd->add_option("--dim", dim);
    bench_cmd->add_option("--evals", evals);
    bench_cmd->add_option("--seeds", n_seeds);
    bench_cmd->add_option("--out", bench_out, "write JSON here instead of stdout");

    // optimize
    auto* opt_cmd = app.add_subcommand("optimize", "single optimizer run");
    std::string opt_algo = "ptso", opt_fn = "sphere";
    std::size_t opt_dim = 10, opt_evals = 5000;
    std::uint64_t opt_seed = 1;
    double lo = -5.0, hi = 5.0;
    opt_cmd->add_option("--algo", opt_algo)->check(CLI::IsMember({"ptso", "tsa", "po"}));
    opt_cmd->add_option("--fn", opt_fn)
        ->check(CLI::IsMember({"sphere", "rosenbrock", "rastrigin"}));
    opt_cmd->add_option("--dim", opt_dim);
    opt_cmd->add_option("--evals", opt_evals);
    opt_cmd->add_option("--seed", opt_seed);
    opt_cmd->add_option("--lower", lo);
    opt_cmd->add_option("--upper", hi);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "write a deterministic synthetic dataset");
    std::string synth_out = "thalassemia.csv";
    std::size_t rows = 288;
    std::uint64_t synth_seed = 7;
    synth_cmd->add_option("--out", synth_out);
    synth_cmd->add_option("--rows", rows);
    synth_cmd->add_option("--seed", synth_seed);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*pipeline_cmd) {
            auto config = thal::pipeline::ExperimentConfig::from_file(config_path);
            if (!label_col.empty()) config.label_column = label_col;
            if (!qnorm_flag.empty()) {
                if (qnorm_flag == "all") config.qnorm_variant = thal::qnorm::Variant::All;
                if (qnorm_flag == "class")
                    config.qnorm_variant = thal::qnorm::Variant::ClassSpecific;
                if (qnorm_flag == "discrete")
                    config.qnorm_variant = thal::qnorm::Variant::Discrete;
                if (qnorm_flag == "ratio") config.qnorm_variant = thal::qnorm::Variant::Ratio;
            }
            if (!batch_col.empty()) config.batch_column = batch_col;
            if (fused_dim) config.fused_dim = fused_dim;
            if (!profile_path.empty()) config.profile_path = profile_path;
            if (has_seed) config.seeds = {seed_override};
            auto report = thal::pipeline::run_pipeline(config);
            thal::pipeline::emit_report(report, report_path);
            if (!csv_path.empty()) thal::pipeline::emit_report_csv(report, csv_path);
            std::cout << "report written to " << report_path << "\n";
        } else if (*eval_cmd) {
            auto pred = read_label_csv(pred_path);
            auto truth = read_label_csv(truth_path);
            auto m = thal::metrics::evaluate(pred, truth, 1);
            std::cout << metric_json(m).dump(2) << "\n";
        } else if (*bench_cmd) {
            auto objective = thal::optim::benchmark_objective(fn, dim);
            auto bounds = thal::optim::Bounds::uniform(dim, -5.0, 5.0);
            json results = json::array();
            for (std::size_t s = 1; s <= n_seeds; ++s) {
                thal::optim::PtsoConfig cfg;
                cfg.max_evaluations = evals;
                cfg.seed = s;
                cfg.algo = parse_algo(algo);
                auto r = thal::optim::run_ptso(objective, cfg, bounds);
                results.push_back({{"seed", s},
                                   {"best_fitness", r.best_fitness},
                                   {"evaluations", r.evaluations_used},
                                   {"history", r.history}});
            }
            if (bench_out.empty()) {
                std::cout << results.dump(2) << "\n";
            } else {
                std::ofstream f(bench_out);
                f << results.dump(2) << "\n";
            }
        } else if (*opt_cmd) {
            auto objective = thal::optim::benchmark_objective(opt_fn, opt_dim);
            auto bounds = thal::optim::Bounds::uniform(opt_dim, lo, hi);
            thal::optim::PtsoConfig cfg;
            cfg.max_evaluations = opt_evals;
            cfg.seed = opt_seed;
            cfg.algo = parse_algo(opt_algo);
            auto r = thal::optim::run_ptso(objective, cfg, bounds);
            json out = {{"best_fitness", r.best_fitness},
                        {"best_position", r.best_position},
                        {"evaluations", r.evaluations_used}};
            std::cout << out.dump(2) << "\n";
        } else if (*synth_cmd) {
            thal::synth::write_csv(synth_out, rows, synth_seed);
            std::cout << "dataset written to " << synth_out << "\n";
        }
    } catch (const thal::pipeline::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const thal::pipeline::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
