#include "thal/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "thal/rng.hpp"

namespace thal::optim {

Bounds::Bounds(std::vector<double> lo, std::vector<double> hi)
    : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.size() != upper.size() || lower.empty())
        throw std::invalid_argument("bounds dimension mismatch");
    for (std::size_t i = 0; i < lower.size(); ++i)
        if (!(lower[i] < upper[i]))
            throw std::invalid_argument("lower bound must be strictly below upper");
}

Bounds Bounds::uniform(std::size_t dim, double lo, double hi) {
    return Bounds(std::vector<double>(dim, lo), std::vector<double>(dim, hi));
}

double sample_tangent(std::mt19937_64& rng, double step) {
    double theta;
    do {
        theta = uniform01(rng) * std::numbers::pi;
    } while (std::abs(std::cos(theta)) < 1e-6);
    double t = std::tan(theta);
    t = std::clamp(t, -kTanClamp, kTanClamp);
    return step * t;
}

Population init_population(const Bounds& bounds, std::size_t l, std::uint64_t seed) {
    if (l < 1) throw std::invalid_argument("population size must be >= 1");
    auto rng = make_stream(seed, kInitStream);
    Population pop(l);
    for (auto& agent : pop) {
        agent.position.resize(bounds.dim());
        for (std::size_t t = 0; t < bounds.dim(); ++t)
            agent.position[t] =
                bounds.lower[t] + uniform01(rng) * (bounds.upper[t] - bounds.lower[t]);
        agent.previous_position = agent.position;
    }
    return pop;
}

std::optional<std::vector<double>> ptso_update(std::span<const double> prev,
                                               std::span<const double> opt_u, double R,
                                               double s_tan_theta) {
    if (prev.size() != opt_u.size()) throw std::invalid_argument("dimension mismatch");
    double denom = R - 1.0 - s_tan_theta;
    if (std::abs(denom) < kDenominatorEps) return std::nullopt;
    std::vector<double> out(prev.size());
    for (std::size_t t = 0; t < prev.size(); ++t)
        out[t] = (prev[t] * (R - 1.0) * (1.0 + s_tan_theta) +
                  R * s_tan_theta * opt_u[t]) /
                 denom;
    return out;
}

std::vector<double> tsa_update(std::span<const double> current,
                               std::span<const double> opt_u, double s_tan_theta) {
    if (current.size() != opt_u.size()) throw std::invalid_argument("dimension mismatch");
    std::vector<double> out(current.size());
    for (std::size_t t = 0; t < current.size(); ++t)
        out[t] = current[t] * (1.0 + s_tan_theta) - s_tan_theta * opt_u[t];
    return out;
}

std::vector<double> po_update(std::span<const double> prev,
                              std::span<const double> current, double R) {
    if (prev.size() != current.size()) throw std::invalid_argument("dimension mismatch");
    std::vector<double> out(prev.size());
    for (std::size_t t = 0; t < prev.size(); ++t)
        out[t] = prev[t] + R * (current[t] - prev[t]);
    return out;
}

std::vector<double> replace_dimensions(std::span<const double> candidate,
                                       std::span<const double> opt_u, double p_replace,
                                       std::mt19937_64& rng) {
    if (candidate.size() != opt_u.size()) throw std::invalid_argument("dimension mismatch");
    if (!(p_replace < 0.5)) throw std::invalid_argument("p_replace must be below 0.5");
    std::size_t dim = candidate.size();
    std::size_t cap = dim == 0 ? 0 : (dim - 1) / 2;  // replaced count stays < dim/2
    std::vector<double> out(candidate.begin(), candidate.end());
    std::size_t replaced = 0;
    for (std::size_t t = 0; t < dim; ++t) {
        double u = uniform01(rng);
        if (u < p_replace && replaced < cap) {
            out[t] = opt_u[t];
            ++replaced;
        }
    }
    return out;
}

std::vector<double> restore_bounds(std::span<const double> position, const Bounds& bounds,
                                   std::mt19937_64& rng) {
    std::vector<double> out(position.begin(), position.end());
    for (std::size_t t = 0; t < out.size(); ++t) {
        if (out[t] < bounds.lower[t] || out[t] > bounds.upper[t])
            out[t] = uniform01(rng) * (bounds.upper[t] - bounds.lower[t]) + bounds.lower[t];
    }
    return out;
}

std::vector<double> explore(std::span<const double> position, double step,
                            std::mt19937_64& rng, std::size_t dim) {
    if (dim < 1) throw std::invalid_argument("dimension must be >= 1");
    std::vector<double> out(position.begin(), position.end());
    double p = 1.0 / static_cast<double>(dim);
    for (std::size_t t = 0; t < out.size(); ++t) {
        if (uniform01(rng) < p) out[t] += sample_tangent(rng, step);
    }
    return out;
}

std::vector<double> escape_local(std::span<const double> position,
                                 std::span<const double> opt_u, std::mt19937_64& rng,
                                 const Bounds& bounds) {
    std::vector<double> out(position.begin(), position.end());
    if (uniform01(rng) < 0.5) {
        double K = uniform01(rng);
        double R = uniform01(rng);
        for (std::size_t t = 0; t < out.size(); ++t)
            out[t] = out[t] + K * (opt_u[t] - R * (opt_u[t] - out[t]));
    } else {
        double tan_theta = sample_tangent(rng, 1.0);
        for (std::size_t t = 0; t < out.size(); ++t)
            out[t] = out[t] + tan_theta * (bounds.upper[t] - bounds.lower[t]);
    }
    return restore_bounds(out, bounds, rng);
}

namespace {

// Draws theta until the hybrid step's denominator is safe; after repeated
// failures R itself is redrawn (s = 0 with R near 1 cannot be fixed by theta).
std::vector<double> intensify(Algo algo, const SearchAgent& agent,
                              std::span<const double> opt_u, double step,
                              std::mt19937_64& rng) {
    double R = uniform01(rng);
    switch (algo) {
        case Algo::Ptso: {
            for (int attempt = 0;; ++attempt) {
                double st = sample_tangent(rng, step);
                if (auto cand = ptso_update(agent.previous_position, opt_u, R, st))
                    return *cand;
                if (attempt > 0 && attempt % 64 == 0) R = uniform01(rng);
            }
        }
        case Algo::Tsa: {
            double st = sample_tangent(rng, step);
            return tsa_update(agent.position, opt_u, st);
        }
        case Algo::Po:
            return po_update(agent.previous_position, agent.position, R);
    }
    throw std::logic_error("unreachable");
}

void evaluate_batch(const Objective& objective,
                    const std::vector<std::vector<double>>& candidates,
                    std::vector<double>& fitnesses, std::size_t count, int threads) {
    fitnesses.resize(count);
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) fitnesses[i] = objective(candidates[i]);
        return;
    }
#ifdef _OPENMP
    if (threads > 0) {
#pragma omp parallel for schedule(dynamic) num_threads(threads)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(count); ++i)
            fitnesses[i] = objective(candidates[i]);
    } else {
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(count); ++i)
            fitnesses[i] = objective(candidates[i]);
    }
#else
    for (std::size_t i = 0; i < count; ++i) fitnesses[i] = objective(candidates[i]);
#endif
}

OptimizationResult run_loop(const Objective& objective, const PtsoConfig& config,
                            const Bounds& bounds) {
    if (config.max_evaluations < config.population_size)
        throw std::invalid_argument("evaluation budget below one sweep");
    if (!(config.p_replace < 0.5)) throw std::invalid_argument("p_replace must be below 0.5");
    if (config.p_switch < 0.0 || config.p_switch > 1.0 || config.p_esc < 0.0 ||
        config.p_esc > 1.0)
        throw std::invalid_argument("probability outside [0,1]");

    std::size_t l = config.population_size;
    std::size_t dim = bounds.dim();
    Population pop = init_population(bounds, l, config.seed);

    OptimizationResult result;
    result.evaluations_used = 0;

    std::vector<std::vector<double>> initial(l);
    for (std::size_t m = 0; m < l; ++m) initial[m] = pop[m].position;
    std::vector<double> init_fit;
    evaluate_batch(objective, initial, init_fit, l, config.threads);
    result.evaluations_used += l;
    for (std::size_t m = 0; m < l; ++m) pop[m].fitness = init_fit[m];

    std::size_t best_idx = 0;
    for (std::size_t m = 1; m < l; ++m)
        if (pop[m].fitness < pop[best_idx].fitness) best_idx = m;
    result.best_position = pop[best_idx].position;
    result.best_fitness = pop[best_idx].fitness;

    std::size_t q_max = std::max<std::size_t>(1, (config.max_evaluations - l) / l);
    std::uint64_t q = 0;
    while (result.evaluations_used < config.max_evaluations) {
        ++q;
        double frac = std::min(1.0, static_cast<double>(q - 1) / static_cast<double>(q_max));
        double step = config.step_initial * (1.0 - frac);

        // Candidate generation is serial per agent stream; only objective
        // evaluation fans out, so thread count never changes results.
        std::vector<std::vector<double>> candidates(l);
        for (std::size_t m = 0; m < l; ++m) {
            auto rng = make_stream(config.seed, kAgentStream, q, m);
            double u_switch = uniform01(rng);
            std::vector<double> cand;
            if (u_switch < config.p_switch) {
                cand = intensify(config.algo, pop[m], result.best_position, step, rng);
                cand = replace_dimensions(cand, result.best_position, config.p_replace, rng);
            } else {
                cand = explore(pop[m].position, step, rng, dim);
            }
            candidates[m] = restore_bounds(cand, bounds, rng);
        }

        std::size_t budget = config.max_evaluations - result.evaluations_used;
        std::size_t count = std::min(budget, l);
        std::vector<double> fit;
        evaluate_batch(objective, candidates, fit, count, config.threads);
        result.evaluations_used += count;

        for (std::size_t m = 0; m < count; ++m) {
            pop[m].previous_position = pop[m].position;
            if (fit[m] < pop[m].fitness) {  // greedy acceptance
                pop[m].position = candidates[m];
                pop[m].fitness = fit[m];
            }
            if (pop[m].fitness < result.best_fitness) {
                result.best_fitness = pop[m].fitness;
                result.best_position = pop[m].position;
            }
        }

        auto sweep_rng = make_stream(config.seed, kSweepStream, q);
        if (uniform01(sweep_rng) < config.p_esc &&
            result.evaluations_used < config.max_evaluations) {
            std::size_t m = std::uniform_int_distribution<std::size_t>(0, l - 1)(sweep_rng);
            auto cand = escape_local(pop[m].position, result.best_position, sweep_rng, bounds);
            double f = objective(cand);
            ++result.evaluations_used;
            pop[m].previous_position = pop[m].position;
            if (f < pop[m].fitness) {
                pop[m].position = cand;
                pop[m].fitness = f;
            }
            if (pop[m].fitness < result.best_fitness) {
                result.best_fitness = pop[m].fitness;
                result.best_position = pop[m].position;
            }
        }
        if (uniform01(sweep_rng) < config.worst_replace_prob &&
            result.evaluations_used < config.max_evaluations) {
            std::size_t worst = 0;
            for (std::size_t m = 1; m < l; ++m)
                if (pop[m].fitness > pop[worst].fitness) worst = m;
            std::vector<double> fresh(dim);
            for (std::size_t t = 0; t < dim; ++t)
                fresh[t] = bounds.lower[t] +
                           uniform01(sweep_rng) * (bounds.upper[t] - bounds.lower[t]);
            double f = objective(fresh);
            ++result.evaluations_used;
            pop[worst].previous_position = pop[worst].position;
            pop[worst].position = fresh;
            pop[worst].fitness = f;
            if (f < result.best_fitness) {
                result.best_fitness = f;
                result.best_position = fresh;
            }
        }

        result.history.push_back(result.best_fitness);
    }
    return result;
}

}  // namespace

OptimizationResult run_ptso(const Objective& objective, const PtsoConfig& config,
                            const Bounds& bounds) {
    return run_loop(objective, config, bounds);
}

OptimizationResult run_tsa(const Objective& objective, PtsoConfig config,
                           const Bounds& bounds) {
    config.algo = Algo::Tsa;
    return run_loop(objective, config, bounds);
}

OptimizationResult run_po(const Objective& objective, PtsoConfig config,
                          const Bounds& bounds) {
    config.algo = Algo::Po;
    return run_loop(objective, config, bounds);
}

Objective benchmark_objective(const std::string& name, std::size_t dim) {
    if (dim < 1) throw std::invalid_argument("dimension must be >= 1");
    if (name == "sphere") {
        return [](std::span<const double> x) {
            double s = 0.0;
            for (double v : x) s += v * v;
            return s;
        };
    }
    if (name == "rosenbrock") {
        return [](std::span<const double> x) {
            double s = 0.0;
            for (std::size_t i = 0; i + 1 < x.size(); ++i) {
                double a = x[i + 1] - x[i] * x[i];
                double b = 1.0 - x[i];
                s += 100.0 * a * a + b * b;
            }
            return s;
        };
    }
    if (name == "rastrigin") {
        return [](std::span<const double> x) {
            double s = 10.0 * static_cast<double>(x.size());
            for (double v : x) s += v * v - 10.0 * std::cos(2.0 * std::numbers::pi * v);
            return s;
        };
    }
    throw std::invalid_argument("unknown objective '" + name + "'");
}

}  // namespace thal::optim
