#include "thal/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "thal/rng.hpp"

namespace thal::fusion {

double weighted_euclidean(std::span<const double> y, std::span<const double> z) {
    if (y.size() != z.size()) throw std::invalid_argument("length mismatch");
    double sum = 0.0;
    for (std::size_t t = 0; t < y.size(); ++t) {
        double w = (y[t] != 0.0) ? y[t] : 1.0;
        double d = y[t] - z[t];
        sum += w * d * d;
    }
    if (sum < 0.0)
        throw std::domain_error("negative radicand in weighted Euclidean distance");
    return std::sqrt(sum);
}

std::vector<double> class_centroid(const FeatureMatrix& matrix, const LabelVector& labels,
                                   int class_id) {
    if (labels.size() != matrix.rows())
        throw std::invalid_argument("labels/matrix length mismatch");
    std::vector<double> mean(matrix.cols(), 0.0);
    std::size_t count = 0;
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
        if (labels[i] != class_id) continue;
        auto r = matrix.row(i);
        for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += r[j];
        ++count;
    }
    if (count == 0) throw std::invalid_argument("empty class");
    for (auto& v : mean) v /= static_cast<double>(count);
    return mean;
}

double alpha_target(std::span<const double> record, std::span<const double> centroid) {
    return weighted_euclidean(record, centroid);
}

double relu(double x) { return x >= 0.0 ? x : 0.0; }

double maxout_unit(std::span<const double> input,
                   const std::vector<std::vector<double>>& piece_weights,
                   const std::vector<double>& piece_biases) {
    if (piece_weights.empty() || piece_weights.size() != piece_biases.size())
        throw std::invalid_argument("maxout unit needs matching pieces");
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t w = 0; w < piece_weights.size(); ++w) {
        if (piece_weights[w].size() != input.size())
            throw std::invalid_argument("piece dimension mismatch");
        double v = piece_biases[w];
        for (std::size_t t = 0; t < input.size(); ++t) v += input[t] * piece_weights[w][t];
        best = std::max(best, v);
    }
    return best;
}

DmnNetwork DmnNetwork::make(std::size_t input_dim, std::size_t depth, std::size_t hidden,
                            std::size_t pieces, std::uint64_t seed) {
    if (depth == 0 || pieces == 0) throw std::invalid_argument("depth and pieces must be >= 1");
    DmnNetwork net;
    auto rng = make_stream(seed, 0xd317ULL);
    std::size_t in = input_dim;
    for (std::size_t d = 0; d < depth; ++d) {
        MaxoutLayer layer;
        layer.in = in;
        layer.width = (d + 1 == depth) ? 1 : hidden;
        layer.pieces = pieces;
        layer.weights.resize(layer.width * layer.pieces * layer.in);
        layer.biases.assign(layer.width * layer.pieces, 0.0);
        std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(in)));
        for (auto& w : layer.weights) w = gauss(rng);
        in = layer.width;
        net.layers.push_back(std::move(layer));
    }
    return net;
}

namespace {

struct LayerTrace {
    std::vector<double> output;       // width
    std::vector<std::size_t> argmax;  // winning piece per unit
};

std::vector<double> layer_forward(const MaxoutLayer& layer, std::span<const double> x,
                                  LayerTrace* trace) {
    if (x.size() != layer.in) throw std::invalid_argument("DMN shape mismatch");
    std::vector<double> out(layer.width);
    if (trace) trace->argmax.assign(layer.width, 0);
    for (std::size_t g = 0; g < layer.width; ++g) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_w = 0;
        for (std::size_t w = 0; w < layer.pieces; ++w) {
            double v = layer.bias(g, w);
            for (std::size_t t = 0; t < layer.in; ++t) v += x[t] * layer.weight(g, w, t);
            if (v > best) {
                best = v;
                best_w = w;
            }
        }
        out[g] = best;
        if (trace) trace->argmax[g] = best_w;
    }
    if (trace) trace->output = out;
    return out;
}

double full_mse(const DmnNetwork& net, const FeatureMatrix& records,
                const std::vector<double>& targets) {
    auto preds = dmn_forward_batch(net, records);
    double sum = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        double d = preds[i] - targets[i];
        sum += d * d;
    }
    return sum / static_cast<double>(preds.size());
}

}  // namespace

double dmn_forward(const DmnNetwork& network, std::span<const double> input) {
    if (network.layers.empty()) throw std::invalid_argument("empty network");
    std::vector<double> x(input.begin(), input.end());
    for (const auto& layer : network.layers) x = layer_forward(layer, x, nullptr);
    return x.front();
}

std::vector<double> dmn_forward_batch(const DmnNetwork& network,
                                      const FeatureMatrix& records) {
    std::vector<double> out(records.rows());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(records.rows()); ++i)
        out[i] = dmn_forward(network, records.row(i));
    return out;
}

namespace reference {
std::vector<double> dmn_forward_batch_serial(const DmnNetwork& network,
                                             const FeatureMatrix& records) {
    std::vector<double> out(records.rows());
    for (std::size_t i = 0; i < records.rows(); ++i)
        out[i] = dmn_forward(network, records.row(i));
    return out;
}
}  // namespace reference

TrainStats train_dmn(DmnNetwork& network, const FeatureMatrix& records,
                     const std::vector<double>& targets, const DmnConfig& config) {
    if (records.rows() == 0) throw std::invalid_argument("empty training set");
    if (records.rows() != targets.size())
        throw std::invalid_argument("records/targets length mismatch");

    TrainStats stats;
    stats.initial_mse = full_mse(network, records, targets);
    DmnNetwork best = network;
    double best_mse = stats.initial_mse;

    auto rng = make_stream(config.seed, 0x7a11ULL);
    std::vector<std::size_t> order(records.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::size_t n_layers = network.layers.size();
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            std::size_t end = std::min(order.size(), start + config.batch_size);

            // accumulate gradients over the mini-batch
            std::vector<std::vector<double>> grad_w(n_layers), grad_b(n_layers);
            for (std::size_t l = 0; l < n_layers; ++l) {
                grad_w[l].assign(network.layers[l].weights.size(), 0.0);
                grad_b[l].assign(network.layers[l].biases.size(), 0.0);
            }
            for (std::size_t k = start; k < end; ++k) {
                auto rec = records.row(order[k]);
                std::vector<double> x(rec.begin(), rec.end());
                std::vector<LayerTrace> traces(n_layers);
                std::vector<std::vector<double>> inputs(n_layers);
                for (std::size_t l = 0; l < n_layers; ++l) {
                    inputs[l] = x;
                    x = layer_forward(network.layers[l], x, &traces[l]);
                }
                double err = 2.0 * (x.front() - targets[order[k]]);
                std::vector<double> d{err};
                for (std::size_t li = n_layers; li-- > 0;) {
                    const auto& layer = network.layers[li];
                    std::vector<double> d_in(layer.in, 0.0);
                    for (std::size_t g = 0; g < layer.width; ++g) {
                        std::size_t w = traces[li].argmax[g];
                        grad_b[li][g * layer.pieces + w] += d[g];
                        for (std::size_t t = 0; t < layer.in; ++t) {
                            grad_w[li][(g * layer.pieces + w) * layer.in + t] +=
                                d[g] * inputs[li][t];
                            d_in[t] += d[g] * layer.weight(g, w, t);
                        }
                    }
                    d = std::move(d_in);
                }
            }

            double scale = config.learning_rate / static_cast<double>(end - start);
            for (std::size_t l = 0; l < n_layers; ++l) {
                auto& layer = network.layers[l];
                for (std::size_t i = 0; i < layer.weights.size(); ++i)
                    layer.weights[i] -= scale * grad_w[l][i];
                for (std::size_t i = 0; i < layer.biases.size(); ++i)
                    layer.biases[i] -= scale * grad_b[l][i];
            }
        }
        double mse = full_mse(network, records, targets);
        if (mse < best_mse) {
            best_mse = mse;
            best = network;
        }
    }
    network = best;
    stats.final_mse = best_mse;
    return stats;
}

std::vector<double> column_minima(const FeatureMatrix& basis) {
    std::vector<double> mins(basis.cols(), 0.0);
    for (std::size_t j = 0; j < basis.cols(); ++j) {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < basis.rows(); ++i) m = std::min(m, basis.at(i, j));
        mins[j] = basis.rows() ? m : 0.0;
    }
    return mins;
}

FeatureMatrix shift_columns(const FeatureMatrix& matrix, const std::vector<double>& minima) {
    if (minima.size() != matrix.cols()) throw std::invalid_argument("minima width mismatch");
    FeatureMatrix out(matrix.rows(), matrix.cols());
    for (std::size_t i = 0; i < matrix.rows(); ++i)
        for (std::size_t j = 0; j < matrix.cols(); ++j)
            out.at(i, j) = matrix.at(i, j) - minima[j];
    return out;
}

FusionPlan rank_features(const FeatureMatrix& matrix, const LabelVector& labels,
                         std::size_t fused_count) {
    if (matrix.cols() == 0) throw std::invalid_argument("no features");
    if (labels.size() != matrix.rows())
        throw std::invalid_argument("labels/matrix length mismatch");

    // Shift every column to be non-negative so the data-dependent weight in
    // the distance never yields a negative radicand.
    auto shifted = shift_columns(matrix, column_minima(matrix));

    FusionPlan plan;
    plan.scores.assign(matrix.cols(), 0.0);
    for (std::size_t j = 0; j < matrix.cols(); ++j) {
        auto col = shifted.column(j);
        // target profile: per row, the mean of this feature over the other
        // class; a feature that separates the classes scores high.
        double sum0 = 0.0, sum1 = 0.0;
        std::size_t n0 = 0, n1 = 0;
        for (std::size_t i = 0; i < col.size(); ++i) {
            if (labels[i] == 0) {
                sum0 += col[i];
                ++n0;
            } else {
                sum1 += col[i];
                ++n1;
            }
        }
        double mean0 = n0 ? sum0 / static_cast<double>(n0) : 0.0;
        double mean1 = n1 ? sum1 / static_cast<double>(n1) : 0.0;
        std::vector<double> target(col.size());
        for (std::size_t i = 0; i < col.size(); ++i)
            target[i] = labels[i] == 0 ? mean1 : mean0;
        plan.scores[j] = weighted_euclidean(col, target);
    }

    plan.ranked_order.resize(matrix.cols());
    std::iota(plan.ranked_order.begin(), plan.ranked_order.end(), std::size_t{0});
    std::stable_sort(plan.ranked_order.begin(), plan.ranked_order.end(),
                     [&](std::size_t a, std::size_t b) {
                         if (plan.scores[a] != plan.scores[b])
                             return plan.scores[a] > plan.scores[b];
                         return a < b;
                     });
    plan.fused_count =
        fused_count ? fused_count : (matrix.cols() + 1) / 2;
    return plan;
}

FeatureMatrix fuse(const FeatureMatrix& matrix, const std::vector<double>& alphas,
                   const FusionPlan& plan) {
    std::size_t c = matrix.cols();
    std::size_t e = plan.fused_count;
    if (plan.ranked_order.size() != c) throw std::invalid_argument("plan width mismatch");
    if (alphas.size() != matrix.rows())
        throw std::invalid_argument("alphas/matrix length mismatch");
    if (e > c) throw std::invalid_argument("fused count must be <= feature count");
    if (e == 0) throw std::invalid_argument("fused count must be >= 1");

    std::size_t group = c / e;  // last group absorbs the remainder
    FeatureMatrix out(matrix.rows(), e);
    for (std::size_t j = 0; j < matrix.rows(); ++j) {
        for (std::size_t g = 0; g < e; ++g) {
            std::size_t begin = g * group;
            std::size_t end = (g + 1 == e) ? c : begin + group;
            double sum = 0.0;
            for (std::size_t t = begin; t < end; ++t)
                sum += matrix.at(j, plan.ranked_order[t]);
            out.at(j, g) = alphas[j] / static_cast<double>(g + 1) * sum;
        }
    }
    return out;
}

}  // namespace thal::fusion
