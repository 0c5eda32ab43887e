#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "thal/optim.hpp"
#include "thal/rng.hpp"

using namespace thal;
using namespace thal::optim;

namespace {

// Independent route for the hybrid step: the interpolation solved for the
// current position and fed into the tangent walk toward the incumbent gives
// an affine fixed point x = a*x + b, solved generically as b/(1-a) instead of
// through the closed form.
double substitution_oracle(double prev, double opt_u, double R, double st) {
    double a = (1.0 + st) / R;
    double b = -(prev * (1.0 - R) * (1.0 + st)) / R + st * opt_u;
    return b / (1.0 - a);
}

}  // namespace

TEST_CASE("bounds validation") {
    CHECK_THROWS(Bounds({0.0}, {0.0}));
    CHECK_THROWS(Bounds({0.0, 1.0}, {1.0}));
    auto b = Bounds::uniform(3, -5.0, 5.0);
    CHECK(b.dim() == 3);
}

TEST_CASE("init_population range and determinism") {
    auto bounds = Bounds::uniform(2, 0.0, 1.0);
    auto pop = init_population(bounds, 3, 7);
    REQUIRE(pop.size() == 3);
    for (const auto& agent : pop) {
        for (double v : agent.position) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        CHECK(agent.previous_position == agent.position);
    }
    auto again = init_population(bounds, 3, 7);
    for (std::size_t m = 0; m < 3; ++m) CHECK(again[m].position == pop[m].position);
    CHECK_THROWS(init_population(bounds, 0, 7));
}

TEST_CASE("ptso_update frozen example and zero-step collapse") {
    std::vector<double> prev{1.0}, opt{2.0};
    auto out = ptso_update(prev, opt, 0.5, 0.2);
    REQUIRE(out.has_value());
    CHECK((*out)[0] == doctest::Approx((-0.6 + 0.2) / -0.7));
    CHECK((*out)[0] == doctest::Approx(0.5714).epsilon(1e-3));

    auto collapse = ptso_update(prev, opt, 0.37, 0.0);
    REQUIRE(collapse.has_value());
    CHECK((*collapse)[0] == doctest::Approx(1.0));

    // denominator near zero signals a resample
    CHECK_FALSE(ptso_update(prev, opt, 0.5, -0.5).has_value());
}

TEST_CASE("ptso_update equals the substitution oracle over 1e5 draws") {
    auto rng = make_stream(314);
    std::uniform_real_distribution<double> ru(0.01, 0.99), su(-2.0, 2.0), xu(-10.0, 10.0);
    std::size_t checked = 0;
    while (checked < 100000) {
        double R = ru(rng), st = su(rng);
        if (std::abs(R - 1.0 - st) < 5e-2) continue;  // stay off the singularity
        double prev = xu(rng), opt = xu(rng);
        auto out = ptso_update(std::vector<double>{prev}, std::vector<double>{opt}, R, st);
        REQUIRE(out.has_value());
        CHECK(std::abs((*out)[0] - substitution_oracle(prev, opt, R, st)) < 1e-10);
        ++checked;
    }
}

TEST_CASE("po_update interpolation") {
    std::vector<double> prev{0.0}, cur{2.0};
    CHECK(po_update(prev, cur, 0.0) == prev);
    CHECK(po_update(prev, cur, 1.0) == cur);
    CHECK(po_update(prev, cur, 0.25) == std::vector<double>{0.5});
}

TEST_CASE("replace_dimensions cap keeps copied share below half") {
    std::vector<double> cand(10, 0.0), opt(10, 1.0);
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        auto rng = make_stream(seed);
        auto out = replace_dimensions(cand, opt, 0.3, rng);
        auto copied = std::count(out.begin(), out.end(), 1.0);
        CHECK(copied < 5);
    }
    // p_replace -> 0 leaves the candidate alone
    auto rng = make_stream(1);
    CHECK(replace_dimensions(cand, opt, 1e-12, rng) == cand);
    // candidate already equal to the incumbent is a fixed point
    auto rng2 = make_stream(2);
    CHECK(replace_dimensions(opt, opt, 0.4, rng2) == opt);
    CHECK_THROWS(replace_dimensions(cand, opt, 0.6, rng));
}

TEST_CASE("restore_bounds") {
    auto bounds = Bounds::uniform(3, -1.0, 1.0);
    auto rng = make_stream(3);
    std::vector<double> in{0.5, -0.25, 0.0};
    CHECK(restore_bounds(in, bounds, rng) == in);
    std::vector<double> out_of_range{-3.0, 0.0, 7.0};
    auto restored = restore_bounds(out_of_range, bounds, rng);
    CHECK(restored[1] == 0.0);
    CHECK(restored[0] >= -1.0);
    CHECK(restored[0] <= 1.0);
    CHECK(restored[2] >= -1.0);
    CHECK(restored[2] <= 1.0);
}

TEST_CASE("explore perturbation rate is about 1/M") {
    std::vector<double> pos(4, 0.0);
    auto rng = make_stream(12);
    std::size_t perturbed = 0, trials = 10000;
    for (std::size_t i = 0; i < trials; ++i) {
        auto out = explore(pos, 1.0, rng, 4);
        for (double v : out) perturbed += v != 0.0;
    }
    double per_trial = static_cast<double>(perturbed) / static_cast<double>(trials);
    CHECK(per_trial == doctest::Approx(1.0).epsilon(0.05));

    // zero step leaves the position unchanged
    auto out = explore(pos, 0.0, rng, 4);
    CHECK(out == pos);

    // dimension one always perturbs the single coordinate
    std::vector<double> single{0.0};
    std::size_t moved = 0;
    for (int i = 0; i < 100; ++i) {
        auto o = explore(single, 1.0, rng, 1);
        moved += o[0] != 0.0;
    }
    CHECK(moved == 100);
}

TEST_CASE("escape_local stays within bounds") {
    auto bounds = Bounds::uniform(4, -2.0, 2.0);
    std::vector<double> pos{1.0, -1.0, 0.0, 1.5}, opt{0.0, 0.0, 0.0, 0.0};
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        auto rng = make_stream(seed, 55);
        auto out = escape_local(pos, opt, rng, bounds);
        for (std::size_t t = 0; t < 4; ++t) {
            CHECK(out[t] >= bounds.lower[t]);
            CHECK(out[t] <= bounds.upper[t]);
        }
    }
}

TEST_CASE("benchmark objectives") {
    auto sphere = benchmark_objective("sphere", 2);
    CHECK(sphere(std::vector<double>{0.0, 0.0}) == 0.0);
    CHECK(sphere(std::vector<double>{1.0, 2.0}) == doctest::Approx(5.0));
    auto rastrigin = benchmark_objective("rastrigin", 3);
    CHECK(rastrigin(std::vector<double>{0.0, 0.0, 0.0}) == doctest::Approx(0.0));
    auto rosen = benchmark_objective("rosenbrock", 2);
    CHECK(rosen(std::vector<double>{1.0, 1.0}) == doctest::Approx(0.0));
    CHECK_THROWS(benchmark_objective("nope", 2));
}

TEST_CASE("run_ptso constant objective gives a flat history") {
    Objective constant = [](std::span<const double>) { return 4.25; };
    PtsoConfig cfg;
    cfg.population_size = 5;
    cfg.max_evaluations = 100;
    cfg.seed = 9;
    auto result = run_ptso(constant, cfg, Bounds::uniform(3, -1.0, 1.0));
    CHECK(result.best_fitness == 4.25);
    for (double h : result.history) CHECK(h == 4.25);
}

TEST_CASE("run_ptso history is non-increasing and deterministic") {
    auto objective = benchmark_objective("sphere", 5);
    PtsoConfig cfg;
    cfg.population_size = 10;
    cfg.max_evaluations = 600;
    cfg.seed = 42;
    auto bounds = Bounds::uniform(5, -5.0, 5.0);
    auto a = run_ptso(objective, cfg, bounds);
    for (std::size_t i = 1; i < a.history.size(); ++i)
        CHECK(a.history[i] <= a.history[i - 1]);
    CHECK(a.evaluations_used == 600);

    auto b = run_ptso(objective, cfg, bounds);
    CHECK(a.best_position == b.best_position);
    CHECK(a.best_fitness == b.best_fitness);
    CHECK(a.history == b.history);

    // thread count must not change anything
    cfg.threads = 4;
    auto c = run_ptso(objective, cfg, bounds);
    CHECK(a.best_position == c.best_position);
    CHECK(a.history == c.history);

    cfg.threads = 1;
    auto d = run_ptso(objective, cfg, bounds);
    CHECK(a.best_position == d.best_position);

    CHECK_THROWS(run_ptso(objective, PtsoConfig{.population_size = 50, .max_evaluations = 10},
                          bounds));
}

TEST_CASE("single-agent trajectory matches a hand-stepped oracle") {
    auto objective = benchmark_objective("sphere", 2);
    auto bounds = Bounds::uniform(2, -5.0, 5.0);
    PtsoConfig cfg;
    cfg.population_size = 1;
    cfg.max_evaluations = 4;  // init + 3 sweeps
    cfg.p_switch = 1.0;
    cfg.p_esc = 0.0;
    cfg.worst_replace_prob = 0.0;
    cfg.seed = 77;

    auto result = run_ptso(objective, cfg, bounds);

    // oracle: re-step the documented stream discipline by hand
    auto init_rng = make_stream(cfg.seed, kInitStream);
    std::vector<double> pos(2), prev(2);
    for (auto& v : pos) v = -5.0 + uniform01(init_rng) * 10.0;
    prev = pos;
    double fit = objective(pos);
    std::vector<double> best = pos;
    double best_fit = fit;
    std::size_t evals = 1;
    std::size_t q_max = (cfg.max_evaluations - 1) / 1;
    std::uint64_t q = 0;
    while (evals < cfg.max_evaluations) {
        ++q;
        double step = 1.0 * (1.0 - std::min(1.0, double(q - 1) / double(q_max)));
        auto rng = make_stream(cfg.seed, kAgentStream, q, 0);
        (void)uniform01(rng);  // switch draw; p_switch = 1 forces intensification
        double R = uniform01(rng);
        std::optional<std::vector<double>> cand;
        for (int attempt = 0;; ++attempt) {
            double st = sample_tangent(rng, step);
            cand = ptso_update(prev, best, R, st);
            if (cand) break;
            if (attempt > 0 && attempt % 64 == 0) R = uniform01(rng);
        }
        auto replaced = replace_dimensions(*cand, best, cfg.p_replace, rng);
        auto candidate = restore_bounds(replaced, bounds, rng);
        double f = objective(candidate);
        ++evals;
        prev = pos;
        if (f < fit) {
            pos = candidate;
            fit = f;
        }
        if (fit < best_fit) {
            best_fit = fit;
            best = pos;
        }
        auto sweep_rng = make_stream(cfg.seed, kSweepStream, q);
        (void)uniform01(sweep_rng);
        (void)uniform01(sweep_rng);
    }

    CHECK(result.best_fitness == best_fit);
    REQUIRE(result.best_position.size() == 2);
    CHECK(result.best_position[0] == best[0]);
    CHECK(result.best_position[1] == best[1]);
    CHECK(result.evaluations_used == evals);
}

TEST_CASE("agents stay within bounds through a run") {
    // exercised indirectly: the best position of every run must be in range
    auto objective = benchmark_objective("rastrigin", 4);
    auto bounds = Bounds::uniform(4, -5.12, 5.12);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        PtsoConfig cfg;
        cfg.population_size = 8;
        cfg.max_evaluations = 400;
        cfg.seed = seed;
        auto r = run_ptso(objective, cfg, bounds);
        for (double v : r.best_position) {
            CHECK(v >= -5.12);
            CHECK(v <= 5.12);
        }
    }
}

TEST_CASE("tsa and po ablations run and descend") {
    auto objective = benchmark_objective("sphere", 2);
    auto bounds = Bounds::uniform(2, -5.0, 5.0);
    PtsoConfig cfg;
    cfg.population_size = 10;
    cfg.max_evaluations = 500;
    cfg.seed = 3;
    auto tsa = run_tsa(objective, cfg, bounds);
    for (std::size_t i = 1; i < tsa.history.size(); ++i)
        CHECK(tsa.history[i] <= tsa.history[i - 1]);
    auto tsa2 = run_tsa(objective, cfg, bounds);
    CHECK(tsa.best_fitness == tsa2.best_fitness);

    Objective constant = [](std::span<const double>) { return 1.0; };
    auto flat = run_tsa(constant, cfg, bounds);
    for (double h : flat.history) CHECK(h == 1.0);

    auto po = run_po(objective, cfg, bounds);
    CHECK(po.best_fitness <= po.history.front());
}
