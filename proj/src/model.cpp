#include "thal/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "thal/rng.hpp"

namespace thal::model {

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::Maxout: return "maxout";
        case Activation::Linear: return "linear";
    }
    return "?";
}

Activation parse_activation(const std::string& s) {
    if (s == "relu") return Activation::Relu;
    if (s == "maxout") return Activation::Maxout;
    if (s == "linear") return Activation::Linear;
    throw std::runtime_error("unknown activation '" + s + "'");
}

std::size_t sepconv_params(std::size_t in_ch, const LayerSpec& s) {
    // depthwise kernels + pointwise mixing + bias
    return in_ch * s.kernel + s.channels * in_ch + s.channels;
}

std::size_t dense_params(std::size_t in_dim, const LayerSpec& s) {
    std::size_t per_piece = s.width * in_dim + s.width;
    return s.activation == Activation::Maxout ? s.pieces * per_piece : per_piece;
}

}  // namespace

TransferProfile TransferProfile::parse(const std::string& text) {
    TransferProfile p;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        if (key == "name") {
            ls >> p.name;
        } else if (key == "seed") {
            ls >> p.seed;
        } else if (key == "frozen_prefix") {
            ls >> p.frozen_prefix;
        } else if (key == "layer") {
            std::string kind;
            ls >> kind;
            LayerSpec spec;
            if (kind == "sepconv")
                spec.kind = LayerKind::SepConv;
            else if (kind == "pool")
                spec.kind = LayerKind::Pool;
            else if (kind == "dense")
                spec.kind = LayerKind::Dense;
            else
                throw std::runtime_error("unknown layer kind '" + kind + "'");
            std::string opt;
            while (ls >> opt) {
                auto eq = opt.find('=');
                if (eq == std::string::npos)
                    throw std::runtime_error("bad layer option '" + opt + "'");
                std::string k = opt.substr(0, eq), v = opt.substr(eq + 1);
                if (k == "kernel")
                    spec.kernel = std::stoul(v);
                else if (k == "channels")
                    spec.channels = std::stoul(v);
                else if (k == "residual")
                    spec.residual = v == "1" || v == "true";
                else if (k == "width")
                    spec.width = std::stoul(v);
                else if (k == "activation")
                    spec.activation = parse_activation(v);
                else if (k == "pieces")
                    spec.pieces = std::stoul(v);
                else
                    throw std::runtime_error("unknown layer option '" + k + "'");
            }
            p.layers.push_back(spec);
        } else {
            throw std::runtime_error("unknown profile key '" + key + "'");
        }
    }
    if (p.frozen_prefix > p.layers.size())
        throw std::runtime_error("frozen_prefix exceeds layer count");
    return p;
}

TransferProfile TransferProfile::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open profile '" + path + "'");
    std::stringstream buf;
    buf << f.rdbuf();
    return parse(buf.str());
}

TransferProfile TransferProfile::desk(std::uint64_t seed) {
    TransferProfile p;
    p.name = "desk";
    p.seed = seed;
    p.frozen_prefix = 3;
    LayerSpec conv1;
    conv1.kind = LayerKind::SepConv;
    conv1.kernel = 3;
    conv1.channels = 4;
    LayerSpec conv2 = conv1;
    conv2.residual = true;
    LayerSpec pool;
    pool.kind = LayerKind::Pool;
    LayerSpec dense;
    dense.kind = LayerKind::Dense;
    dense.width = 16;
    dense.activation = Activation::Relu;
    p.layers = {conv1, conv2, pool, dense};
    return p;
}

TransferProfile TransferProfile::dense_only(std::size_t hidden, std::uint64_t seed) {
    TransferProfile p;
    p.name = "dense" + std::to_string(hidden);
    p.seed = seed;
    p.frozen_prefix = 0;
    LayerSpec dense;
    dense.kind = LayerKind::Dense;
    dense.width = hidden;
    dense.activation = Activation::Relu;
    p.layers = {dense};
    return p;
}

std::string TransferProfile::canonical() const {
    std::ostringstream out;
    out << "name " << name << "\nseed " << seed << "\nfrozen_prefix " << frozen_prefix
        << "\n";
    for (const auto& l : layers) {
        switch (l.kind) {
            case LayerKind::SepConv:
                out << "layer sepconv kernel=" << l.kernel << " channels=" << l.channels
                    << " residual=" << (l.residual ? 1 : 0) << "\n";
                break;
            case LayerKind::Pool:
                out << "layer pool\n";
                break;
            case LayerKind::Dense:
                out << "layer dense width=" << l.width
                    << " activation=" << activation_name(l.activation);
                if (l.activation == Activation::Maxout) out << " pieces=" << l.pieces;
                out << "\n";
                break;
        }
    }
    return out.str();
}

std::uint64_t TransferProfile::hash() const { return fnv1a(canonical()); }

ClassifierNetwork build_classifier(const TransferProfile& profile, std::size_t input_dim,
                                   std::size_t n_classes) {
    if (input_dim < 1) throw std::invalid_argument("input dimension must be >= 1");
    if (n_classes < 2) throw std::invalid_argument("need at least two classes");

    ClassifierNetwork net;
    net.profile = profile;
    net.input_dim = input_dim;
    net.n_classes = n_classes;

    std::size_t ch = 1, len = input_dim;
    std::size_t psi_offset = 0;
    auto add_layer = [&](const LayerSpec& spec, bool frozen, std::size_t layer_index) {
        ClassifierNetwork::BuiltLayer bl;
        bl.spec = spec;
        bl.frozen = frozen;
        bl.in_channels = ch;
        bl.in_length = len;
        switch (spec.kind) {
            case LayerKind::SepConv:
                if (spec.kernel < 1 || spec.kernel % 2 == 0)
                    throw std::invalid_argument("sepconv kernel must be odd");
                if (spec.residual && spec.channels != ch)
                    throw std::invalid_argument("residual block needs matching channels");
                bl.out_channels = spec.channels;
                bl.out_length = len;
                bl.param_count = sepconv_params(ch, spec);
                break;
            case LayerKind::Pool:
                bl.out_channels = ch;
                bl.out_length = (len + 1) / 2;
                bl.param_count = 0;
                break;
            case LayerKind::Dense:
                bl.out_channels = 1;
                bl.out_length = spec.width;
                bl.param_count = dense_params(ch * len, spec);
                break;
        }
        if (frozen) {
            auto rng = make_stream(profile.seed, 0xf207e7ULL, layer_index);
            std::size_t fan_in =
                spec.kind == LayerKind::Dense ? ch * len : ch * spec.kernel;
            std::normal_distribution<double> gauss(
                0.0, 1.0 / std::sqrt(std::max<std::size_t>(1, fan_in)));
            bl.frozen_params.resize(bl.param_count);
            for (auto& w : bl.frozen_params) w = gauss(rng);
        } else {
            bl.psi_offset = psi_offset;
            psi_offset += bl.param_count;
        }
        ch = bl.out_channels;
        len = bl.out_length;
        net.layers.push_back(std::move(bl));
    };

    for (std::size_t i = 0; i < profile.layers.size(); ++i)
        add_layer(profile.layers[i], i < profile.frozen_prefix, i);

    // implicit output head: n_classes logits, always trainable
    LayerSpec head;
    head.kind = LayerKind::Dense;
    head.width = n_classes;
    head.activation = Activation::Linear;
    add_layer(head, false, profile.layers.size());

    net.psi_dim = psi_offset;
    return net;
}

namespace {

// channels x length activation buffer, channel-major
struct Act {
    std::size_t channels = 1, length = 0;
    std::vector<double> v;
    double at(std::size_t c, std::size_t x) const { return v[c * length + x]; }
};

std::span<const double> layer_params(const ClassifierNetwork::BuiltLayer& bl,
                                     std::span<const double> psi) {
    if (bl.frozen) return bl.frozen_params;
    return psi.subspan(bl.psi_offset, bl.param_count);
}

Act apply_layer(const ClassifierNetwork::BuiltLayer& bl, const Act& in,
                std::span<const double> psi) {
    auto p = layer_params(bl, psi);
    Act out;
    out.channels = bl.out_channels;
    out.length = bl.out_length;
    out.v.assign(out.channels * out.length, 0.0);

    switch (bl.spec.kind) {
        case LayerKind::SepConv: {
            std::size_t k = bl.spec.kernel, half = k / 2;
            const double* dw = p.data();                            // in_ch * k
            const double* pw = dw + bl.in_channels * k;             // out_ch * in_ch
            const double* bias = pw + bl.out_channels * bl.in_channels;
            std::vector<double> depth(bl.in_channels * bl.in_length, 0.0);
            for (std::size_t c = 0; c < bl.in_channels; ++c)
                for (std::size_t x = 0; x < bl.in_length; ++x) {
                    double s = 0.0;
                    for (std::size_t d = 0; d < k; ++d) {
                        std::ptrdiff_t src = static_cast<std::ptrdiff_t>(x + d) -
                                             static_cast<std::ptrdiff_t>(half);
                        if (src < 0 || src >= static_cast<std::ptrdiff_t>(bl.in_length))
                            continue;  // zero padding
                        s += in.at(c, static_cast<std::size_t>(src)) * dw[c * k + d];
                    }
                    depth[c * bl.in_length + x] = s;
                }
            for (std::size_t o = 0; o < bl.out_channels; ++o)
                for (std::size_t x = 0; x < bl.out_length; ++x) {
                    double s = bias[o];
                    for (std::size_t c = 0; c < bl.in_channels; ++c)
                        s += pw[o * bl.in_channels + c] * depth[c * bl.in_length + x];
                    if (bl.spec.residual) s += in.at(o, x);
                    out.v[o * out.length + x] = s >= 0.0 ? s : 0.0;  // ReLU
                }
            break;
        }
        case LayerKind::Pool: {
            for (std::size_t c = 0; c < bl.in_channels; ++c)
                for (std::size_t x = 0; x < bl.out_length; ++x) {
                    std::size_t a = 2 * x, b = 2 * x + 1;
                    double s = in.at(c, a);
                    if (b < bl.in_length) s = (s + in.at(c, b)) / 2.0;
                    out.v[c * out.length + x] = s;
                }
            break;
        }
        case LayerKind::Dense: {
            std::size_t in_dim = bl.in_channels * bl.in_length;
            std::size_t width = bl.spec.width;
            bool is_maxout = bl.spec.activation == Activation::Maxout;
            std::size_t pieces = is_maxout ? bl.spec.pieces : 1;
            std::size_t per_piece = width * in_dim + width;
            for (std::size_t g = 0; g < width; ++g) {
                double best = -std::numeric_limits<double>::infinity();
                for (std::size_t w = 0; w < pieces; ++w) {
                    const double* weights = p.data() + w * per_piece;
                    const double* bias = weights + width * in_dim;
                    double s = bias[g];
                    for (std::size_t t = 0; t < in_dim; ++t)
                        s += weights[g * in_dim + t] * in.v[t];
                    best = std::max(best, s);
                }
                if (bl.spec.activation == Activation::Relu && best < 0.0) best = 0.0;
                out.v[g] = best;
            }
            break;
        }
    }
    return out;
}

std::vector<double> softmax(std::vector<double> logits) {
    double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (auto& v : logits) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (auto& v : logits) v /= sum;
    return logits;
}

double record_error(const ClassifierNetwork& net, std::span<const double> psi,
                    std::span<const double> rec, int label) {
    auto scores = forward(net, psi, rec);
    double err = 0.0;
    for (std::size_t k = 0; k < scores.size(); ++k) {
        double target = (static_cast<int>(k) == label) ? 1.0 : 0.0;
        double d = target - scores[k];
        err += d * d;
    }
    return err;
}

}  // namespace

std::vector<double> forward(const ClassifierNetwork& network, std::span<const double> psi,
                            std::span<const double> record) {
    if (record.size() != network.input_dim)
        throw std::invalid_argument("record width mismatch");
    if (psi.size() != network.psi_dim)
        throw std::invalid_argument("weight vector length mismatch");
    Act x;
    x.channels = 1;
    x.length = network.input_dim;
    x.v.assign(record.begin(), record.end());
    for (const auto& bl : network.layers) x = apply_layer(bl, x, psi);
    return softmax(std::move(x.v));
}

double fitness(std::span<const double> psi, const FitnessContext& context) {
    if (!context.network) throw std::invalid_argument("fitness context lacks a network");
    std::size_t a = context.features.rows();
    if (a == 0) throw std::invalid_argument("empty fitness context");
    if (context.labels.size() != a)
        throw std::invalid_argument("labels/features length mismatch");
    std::vector<double> errs(a);
    const auto& net = *context.network;
    if (context.threads == 1) {
        for (std::size_t i = 0; i < a; ++i)
            errs[i] = record_error(net, psi, context.features.row(i), context.labels[i]);
    } else {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(a); ++i)
            errs[i] = record_error(net, psi, context.features.row(i), context.labels[i]);
    }
    double sum = 0.0;  // serial reduction keeps results thread-count independent
    for (double e : errs) sum += e;
    return sum / static_cast<double>(a);
}

namespace reference {
double fitness_serial(std::span<const double> psi, const FitnessContext& context) {
    if (!context.network) throw std::invalid_argument("fitness context lacks a network");
    std::size_t a = context.features.rows();
    if (a == 0) throw std::invalid_argument("empty fitness context");
    double sum = 0.0;
    for (std::size_t i = 0; i < a; ++i)
        sum += record_error(*context.network, psi, context.features.row(i),
                            context.labels[i]);
    return sum / static_cast<double>(a);
}
}  // namespace reference

WeightVector train_classifier(const ClassifierNetwork& network, const FitnessContext& context,
                              const optim::PtsoConfig& ptso_config,
                              const optim::Bounds& bounds) {
    if (bounds.dim() != network.psi_dim)
        throw std::invalid_argument("bounds dimension must equal trainable parameter count");
    optim::Objective objective = [&](std::span<const double> psi) {
        return fitness(psi, context);
    };
    auto result = optim::run_ptso(objective, ptso_config, bounds);
    WeightVector w;
    w.psi = result.best_position;
    w.profile_hash = network.profile.hash();
    return w;
}

LabelVector predict(const ClassifierNetwork& network, std::span<const double> psi,
                    const FeatureMatrix& matrix) {
    LabelVector out(matrix.rows());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(matrix.rows()); ++i) {
        auto scores = forward(network, psi, matrix.row(i));
        std::size_t best = 0;  // ties go to the lower class id
        for (std::size_t k = 1; k < scores.size(); ++k)
            if (scores[k] > scores[best]) best = k;
        out[i] = static_cast<int>(best);
    }
    return out;
}

void save_weights(const std::string& path, const WeightVector& weights) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write weights to '" + path + "'");
    f << "thalw " << weights.psi.size() << " " << weights.profile_hash << "\n";
    f.precision(17);
    for (double v : weights.psi) f << v << "\n";
    if (!f) throw std::runtime_error("write failure on '" + path + "'");
}

WeightVector load_weights(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open weights '" + path + "'");
    std::string magic;
    std::size_t dim = 0;
    WeightVector w;
    f >> magic >> dim >> w.profile_hash;
    if (magic != "thalw") throw std::runtime_error("bad weights header in '" + path + "'");
    w.psi.resize(dim);
    for (auto& v : w.psi)
        if (!(f >> v)) throw std::runtime_error("truncated weights file '" + path + "'");
    return w;
}

}  // namespace thal::model
