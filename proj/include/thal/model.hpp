#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "thal/matrix.hpp"
#include "thal/optim.hpp"

namespace thal::model {

enum class LayerKind { SepConv, Pool, Dense };
enum class Activation { Relu, Maxout, Linear };

struct LayerSpec {
    LayerKind kind = LayerKind::Dense;
    // SepConv
    std::size_t kernel = 3;
    std::size_t channels = 4;
    bool residual = false;
    // Dense
    std::size_t width = 16;
    Activation activation = Activation::Relu;
    std::size_t pieces = 2;  // Maxout only
};

// Architecture preset standing in for a reused trained configuration: a fixed
// layer list whose leading `frozen_prefix` layers get deterministic weights
// from `seed`; only the tail is exposed to the optimizer.
struct TransferProfile {
    std::string name = "profile";
    std::uint64_t seed = 0;
    std::size_t frozen_prefix = 0;
    std::vector<LayerSpec> layers;

    static TransferProfile parse(const std::string& text);
    static TransferProfile load(const std::string& path);
    // 2 separable-conv blocks + pool (frozen) + one dense hidden layer.
    static TransferProfile desk(std::uint64_t seed = 42);
    // dense-only head, for small toy problems
    static TransferProfile dense_only(std::size_t hidden, std::uint64_t seed = 0);

    std::string canonical() const;
    std::uint64_t hash() const;
};

struct ClassifierNetwork {
    struct BuiltLayer {
        LayerSpec spec;
        bool frozen = false;
        std::size_t in_channels = 1, in_length = 0;
        std::size_t out_channels = 1, out_length = 0;
        std::size_t param_count = 0;
        std::size_t psi_offset = 0;           // trainable layers only
        std::vector<double> frozen_params;    // frozen layers only
    };

    TransferProfile profile;
    std::size_t input_dim = 0;
    std::size_t n_classes = 0;
    std::vector<BuiltLayer> layers;  // includes the implicit output layer
    std::size_t psi_dim = 0;         // trainable parameter count
};

// Instantiates the profile for the given input width; an output dense layer
// of n_classes logits (always trainable) is appended and scores go through
// softmax.
ClassifierNetwork build_classifier(const TransferProfile& profile, std::size_t input_dim,
                                   std::size_t n_classes);

// Softmax class scores for one record.
std::vector<double> forward(const ClassifierNetwork& network, std::span<const double> psi,
                            std::span<const double> record);

struct FitnessContext {
    const ClassifierNetwork* network = nullptr;
    FeatureMatrix features;
    LabelVector labels;  // class ids, one-hot targets internally
    int threads = 0;     // 0 = runtime default, 1 = serial
};

// Mean over records of the summed squared one-hot error.
double fitness(std::span<const double> psi, const FitnessContext& context);
namespace reference {
double fitness_serial(std::span<const double> psi, const FitnessContext& context);
}

struct WeightVector {
    std::vector<double> psi;
    std::uint64_t profile_hash = 0;
};

WeightVector train_classifier(const ClassifierNetwork& network, const FitnessContext& context,
                              const optim::PtsoConfig& ptso_config,
                              const optim::Bounds& bounds);

LabelVector predict(const ClassifierNetwork& network, std::span<const double> psi,
                    const FeatureMatrix& matrix);

// Text persistence: "thalw <dim> <profile-hash>" header, one value per line.
void save_weights(const std::string& path, const WeightVector& weights);
WeightVector load_weights(const std::string& path);

}  // namespace thal::model
