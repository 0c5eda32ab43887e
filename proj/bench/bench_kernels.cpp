// Timing harness comparing the OpenMP kernels with their serial reference
// implementations. Each section asserts result parity before reporting.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <random>

#include "thal/augment.hpp"
#include "thal/fusion.hpp"
#include "thal/optim.hpp"
#include "thal/qnorm.hpp"
#include "thal/rng.hpp"

using namespace thal;
using Clock = std::chrono::steady_clock;

namespace {

template <typename F>
double time_ms(F&& fn, int repeats = 5) {
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
        auto start = Clock::now();
        fn();
        best = std::min(best, std::chrono::duration<double, std::milli>(Clock::now() - start)
                                  .count());
    }
    return best;
}

FeatureMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    auto rng = make_stream(seed);
    std::uniform_real_distribution<double> unif(-5.0, 5.0);
    FeatureMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m.at(i, j) = unif(rng);
    return m;
}

void require(bool ok, const char* what) {
    if (!ok) {
        std::cerr << "parity check failed: " << what << "\n";
        std::exit(1);
    }
}

void row(const char* name, double serial_ms, double parallel_ms) {
    std::cout << name << ": serial " << serial_ms << " ms, parallel " << parallel_ms
              << " ms, speedup " << serial_ms / parallel_ms << "x\n";
}

}  // namespace

int main() {
    {
        auto m = random_matrix(2000, 64, 1);
        FeatureMatrix serial_out(0, 0), parallel_out(0, 0);
        double s = time_ms([&] { serial_out = qnorm::reference::normalize_group_serial(m); });
        double p = time_ms([&] { parallel_out = qnorm::quantile_normalize(m, {}); });
        bool same = serial_out.rows() == parallel_out.rows();
        for (std::size_t i = 0; same && i < serial_out.rows(); ++i)
            for (std::size_t j = 0; j < serial_out.cols(); ++j)
                if (serial_out.at(i, j) != parallel_out.at(i, j)) same = false;
        require(same, "quantile normalization");
        row("quantile normalization 2000x64", s, p);
    }

    {
        auto net = fusion::DmnNetwork::make(32, 3, 32, 3, 2);
        auto m = random_matrix(4000, 32, 3);
        std::vector<double> serial_out, parallel_out;
        double s = time_ms([&] {
            serial_out = fusion::reference::dmn_forward_batch_serial(net, m);
        });
        double p = time_ms([&] { parallel_out = fusion::dmn_forward_batch(net, m); });
        require(serial_out == parallel_out, "maxout batch forward");
        row("maxout batch forward 4000x32", s, p);
    }

    {
        auto m = random_matrix(1500, 16, 4);
        std::vector<std::vector<std::size_t>> serial_out, parallel_out;
        double s = time_ms([&] {
            serial_out = augment::reference::knn_minority_serial(m, 5);
        });
        double p = time_ms([&] { parallel_out = augment::knn_minority(m, 5); });
        require(serial_out == parallel_out, "nearest neighbours");
        row("nearest neighbours 1500x16 k=5", s, p);
    }

    {
        // population evaluation dominates the optimizer; threads=1 forces the
        // serial path of the same loop
        auto objective = optim::benchmark_objective("rastrigin", 40);
        auto bounds = optim::Bounds::uniform(40, -5.12, 5.12);
        optim::PtsoConfig cfg;
        cfg.population_size = 60;
        cfg.max_evaluations = 12000;
        cfg.seed = 5;
        optim::OptimizationResult serial_out, parallel_out;
        cfg.threads = 1;
        double s = time_ms([&] { serial_out = optim::run_ptso(objective, cfg, bounds); }, 3);
        cfg.threads = 0;
        double p = time_ms([&] { parallel_out = optim::run_ptso(objective, cfg, bounds); }, 3);
        require(serial_out.best_position == parallel_out.best_position &&
                    serial_out.history == parallel_out.history,
                "optimizer population evaluation");
        row("optimizer run 60x12000 evals", s, p);
    }

    return 0;
}
