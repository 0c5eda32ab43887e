#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "thal/matrix.hpp"

namespace thal::fusion {

// sqrt(sum_t W_t (y_t - z_t)^2) with W_t = y_t when y_t != 0, else 1.
// A negative radicand (possible when y has negative entries) is a domain
// error; callers shift inputs to be non-negative first.
double weighted_euclidean(std::span<const double> y, std::span<const double> z);

std::vector<double> class_centroid(const FeatureMatrix& matrix, const LabelVector& labels,
                                   int class_id);

double alpha_target(std::span<const double> record, std::span<const double> centroid);

double relu(double x);

// One maxout layer: output[g] = max over pieces of (x . A[:,g,w] + V[g,w]).
struct MaxoutLayer {
    std::size_t in = 0;
    std::size_t width = 0;
    std::size_t pieces = 0;
    // weights[((g * pieces) + w) * in + t], biases[g * pieces + w]
    std::vector<double> weights;
    std::vector<double> biases;

    double& weight(std::size_t g, std::size_t w, std::size_t t) {
        return weights[(g * pieces + w) * in + t];
    }
    double weight(std::size_t g, std::size_t w, std::size_t t) const {
        return weights[(g * pieces + w) * in + t];
    }
    double& bias(std::size_t g, std::size_t w) { return biases[g * pieces + w]; }
    double bias(std::size_t g, std::size_t w) const { return biases[g * pieces + w]; }
};

// Stacked maxout layers; the last layer has width 1 and its activation is the
// scalar network output.
struct DmnNetwork {
    std::vector<MaxoutLayer> layers;

    static DmnNetwork make(std::size_t input_dim, std::size_t depth, std::size_t hidden,
                           std::size_t pieces, std::uint64_t seed);
};

struct DmnConfig {
    std::size_t depth = 2;
    std::size_t hidden = 16;
    std::size_t pieces = 2;
    std::size_t epochs = 200;
    std::size_t batch_size = 16;
    double learning_rate = 0.01;
    std::uint64_t seed = 0;
};

// Affine pieces for a single maxout unit: value = max_w (x . piece_w + bias_w).
double maxout_unit(std::span<const double> input,
                   const std::vector<std::vector<double>>& piece_weights,
                   const std::vector<double>& piece_biases);

double dmn_forward(const DmnNetwork& network, std::span<const double> input);

struct TrainStats {
    double initial_mse = 0.0;
    double final_mse = 0.0;
};

// Mini-batch gradient descent on squared error; the gradient flows through the
// argmax piece of every maxout unit.
TrainStats train_dmn(DmnNetwork& network, const FeatureMatrix& records,
                     const std::vector<double>& targets, const DmnConfig& config);

// Batch prediction (parallel); reference::dmn_forward_batch_serial is the
// baseline used for comparison.
std::vector<double> dmn_forward_batch(const DmnNetwork& network,
                                      const FeatureMatrix& records);
namespace reference {
std::vector<double> dmn_forward_batch_serial(const DmnNetwork& network,
                                             const FeatureMatrix& records);
}

struct FusionPlan {
    std::vector<std::size_t> ranked_order;  // feature indices, best first
    std::size_t fused_count = 0;            // e
    std::vector<double> scores;             // per feature, original index order
};

// Rank features descending by the weighted Euclidean distance between each
// (shifted, non-negative) column and its opposite-class mean profile; ties by
// ascending index. fused_count 0 means "use ceil(c/2)".
FusionPlan rank_features(const FeatureMatrix& matrix, const LabelVector& labels,
                         std::size_t fused_count = 0);

// M[j,g] = (alpha_j / (g+1)) * sum of the record's values over ranked group g.
// Groups are contiguous runs of size c/e over the ranked order; the last group
// absorbs the remainder.
FeatureMatrix fuse(const FeatureMatrix& matrix, const std::vector<double>& alphas,
                   const FusionPlan& plan);

// Per-feature minima of `basis`, for shifting matrices to be non-negative
// before Eq-style distance scoring.
std::vector<double> column_minima(const FeatureMatrix& basis);
FeatureMatrix shift_columns(const FeatureMatrix& matrix, const std::vector<double>& minima);

}  // namespace thal::fusion
