#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace thal::optim {

struct Bounds {
    std::vector<double> lower;
    std::vector<double> upper;

    Bounds() = default;
    Bounds(std::vector<double> lo, std::vector<double> hi);
    static Bounds uniform(std::size_t dim, double lo, double hi);
    std::size_t dim() const { return lower.size(); }
};

struct SearchAgent {
    std::vector<double> position;
    std::vector<double> previous_position;
    double fitness = 0.0;
};

using Population = std::vector<SearchAgent>;
using Objective = std::function<double(std::span<const double>)>;

enum class Algo { Ptso, Tsa, Po };

struct PtsoConfig {
    std::size_t population_size = 30;
    std::size_t max_evaluations = 5000;
    double p_switch = 0.5;
    double p_esc = 0.3;
    double p_replace = 0.3;           // must stay below 0.5
    double worst_replace_prob = 0.01;
    double step_initial = 1.0;        // decays linearly to 0 over the run
    std::uint64_t seed = 0;
    Algo algo = Algo::Ptso;
    int threads = 0;  // objective evaluations per sweep; 0 = runtime default, 1 = serial
};

struct OptimizationResult {
    std::vector<double> best_position;
    double best_fitness = 0.0;
    std::size_t evaluations_used = 0;
    std::vector<double> history;  // best fitness after each sweep, non-increasing
};

// --- deterministic stream discipline -------------------------------------
// Every random decision draws from a stream derived from (seed, role, ids),
// in a fixed order, so runs are bit-identical regardless of thread count and
// a test can re-step the loop:
//   init stream  : make_stream(seed, kInitStream)            — l*M uniforms
//   agent stream : make_stream(seed, kAgentStream, q, m)     — per agent, per sweep:
//       u_switch; then either [R; tangent draws; M replace draws] or
//       [per-coordinate u, tangent draws]; then restore draws
//   sweep stream : make_stream(seed, kSweepStream, q)        — escape + worst-replace
inline constexpr std::uint64_t kInitStream = 1;
inline constexpr std::uint64_t kAgentStream = 2;
inline constexpr std::uint64_t kSweepStream = 3;

inline constexpr double kDenominatorEps = 1e-9;
inline constexpr double kTanClamp = 1e3;

// theta = u*pi with |cos(theta)| >= 1e-6 enforced by rejection; returns
// step * tan(theta) with |tan| clamped to kTanClamp.
double sample_tangent(std::mt19937_64& rng, double step);

Population init_population(const Bounds& bounds, std::size_t l, std::uint64_t seed);

// Eq-30-style hybrid step; empty when the denominator R-1-s*tan(theta) is
// within kDenominatorEps of zero (caller resamples theta).
std::optional<std::vector<double>> ptso_update(std::span<const double> prev,
                                               std::span<const double> opt_u, double R,
                                               double s_tan_theta);

// Tangent-search intensification step (local walk toward the incumbent).
std::vector<double> tsa_update(std::span<const double> current,
                               std::span<const double> opt_u, double s_tan_theta);

// Recent-past interpolation prev + R*(current - prev).
std::vector<double> po_update(std::span<const double> prev,
                              std::span<const double> current, double R);

// Each coordinate independently copied from opt_u with probability p_replace,
// stopping once (M-1)/2 coordinates have been replaced so the copied share
// stays strictly below half.
std::vector<double> replace_dimensions(std::span<const double> candidate,
                                       std::span<const double> opt_u, double p_replace,
                                       std::mt19937_64& rng);

// Out-of-range coordinates reset to u*(upper-lower)+lower with fresh u.
std::vector<double> restore_bounds(std::span<const double> position, const Bounds& bounds,
                                   std::mt19937_64& rng);

// Each coordinate perturbed by step*tan(theta) with probability 1/M.
std::vector<double> explore(std::span<const double> position, double step,
                            std::mt19937_64& rng, std::size_t dim);

// With equal probability: T + K*(optU - R*(optU - T)) with fresh K, R, or
// T + tan(theta)*(upper-lower); then restored to bounds.
std::vector<double> escape_local(std::span<const double> position,
                                 std::span<const double> opt_u, std::mt19937_64& rng,
                                 const Bounds& bounds);

OptimizationResult run_ptso(const Objective& objective, const PtsoConfig& config,
                            const Bounds& bounds);
OptimizationResult run_tsa(const Objective& objective, PtsoConfig config,
                           const Bounds& bounds);
OptimizationResult run_po(const Objective& objective, PtsoConfig config,
                          const Bounds& bounds);

// name in {sphere, rosenbrock, rastrigin}; global minimum 0 at the canonical
// optimum.
Objective benchmark_objective(const std::string& name, std::size_t dim);

}  // namespace thal::optim
