#include "apxtune/controller.hpp"

#include "apxtune/error.hpp"
#include "apxtune/reference.hpp"
#include "apxtune/synthbench.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace apxtune;
using testutil::FnCostModel;
using testutil::FnFitnessModel;
using testutil::make_space;

namespace {

// Four settings A..D on one knob with fixed (fitness, cost) pairs.
struct FourSettings {
    KnobSpace space = make_space({4});
    FnFitnessModel fitness{[](double, const KnobSetting& s) {
        static const double f[] = {0.9, 0.8, 0.6, 1.0};
        return f[s.levels[0]];
    }};
    FnCostModel cost{[](const InputFeatures&, const KnobSetting& s) {
        static const double c[] = {10.0, 4.0, 2.0, 12.0};
        return c[s.levels[0]];
    }};
};

FnFitnessModel always_feasible() {
    return FnFitnessModel{[](double, const KnobSetting&) { return 1.0; }};
}

} // namespace

TEST_SUITE("controller") {

TEST_CASE("exhaustive search picks the cheapest feasible setting") {
    FourSettings fx;
    const auto [decision, stats] =
        control_exhaustive(fx.cost, fx.fitness, InputFeatures{}, Constraint{0.5, 0.7}, fx.space);
    REQUIRE(decision.feasible);
    CHECK(decision.setting->levels == std::vector<std::int32_t>{1}); // B
    CHECK(*decision.predicted_cost == 4.0);
    CHECK(*decision.predicted_fitness == 0.8);
    CHECK(stats.settings_evaluated == 4);
    CHECK(stats.fitness_queries == 4);
    CHECK(stats.cost_queries == 3); // A, B, D feasible
}

TEST_CASE("an unreachable probability bound yields NA") {
    FourSettings fx;
    const FnFitnessModel capped{[](double, const KnobSetting& s) {
        static const double f[] = {0.9, 0.8, 0.6, 0.85};
        return f[s.levels[0]];
    }};
    const auto [decision, stats] =
        control_exhaustive(fx.cost, capped, InputFeatures{}, Constraint{0.5, 0.99}, fx.space);
    CHECK_FALSE(decision.feasible);
    CHECK_FALSE(decision.setting.has_value());
    CHECK(stats.cost_queries == 0);
}

TEST_CASE("a tiny probability bound frees the global cost minimum") {
    FourSettings fx;
    const auto [decision, stats] =
        control_exhaustive(fx.cost, fx.fitness, InputFeatures{}, Constraint{0.5, 0.01}, fx.space);
    REQUIRE(decision.feasible);
    CHECK(decision.setting->levels == std::vector<std::int32_t>{2}); // C
    CHECK(*decision.predicted_cost == 2.0);
}

TEST_CASE("cost ties break toward the lexicographically smallest setting") {
    const KnobSpace space = make_space({3, 3});
    const FnCostModel flat{[](const InputFeatures&, const KnobSetting&) { return 5.0; }};
    const auto fitness = always_feasible();
    const auto [decision, stats] = control_exhaustive(flat, fitness, InputFeatures{}, Constraint{0.5, 0.5}, space);
    REQUIRE(decision.feasible);
    CHECK(decision.setting->levels == std::vector<std::int32_t>{0, 0});
}

TEST_CASE("parallel exhaustive sweeps match the serial reference exactly") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<int> levels;
        const int knobs = 1 + static_cast<int>(rng() % 4);
        for (int k = 0; k < knobs; ++k)
            levels.push_back(2 + static_cast<int>(rng() % 9));
        const KnobSpace space = make_space(levels);
        const std::uint64_t salt = rng();

        // Quantized costs force ties; step fitness keeps feasibility varied.
        const FnCostModel cost{[salt, &space](const InputFeatures&, const KnobSetting& s) {
            return 1.0 + static_cast<double>(mix_u64(salt, 1, setting_rank(space, s)) % 16) / 4.0;
        }};
        const FnFitnessModel fitness{[salt, &space](double eps, const KnobSetting& s) {
            const double knee =
                static_cast<double>(mix_u64(salt, 2, setting_rank(space, s)) % 100) / 100.0;
            return eps >= knee ? 1.0 : static_cast<double>(mix_u64(salt, 3, setting_rank(space, s)) % 80) / 100.0;
        }};
        const Constraint c{static_cast<double>(rng() % 101) / 100.0,
                           std::max(0.05, static_cast<double>(rng() % 100) / 100.0)};

        const ControlResult ours = control_exhaustive(cost, fitness, InputFeatures{}, c, space, true);
        const ControlResult ref = reference::control_exhaustive(cost, fitness, InputFeatures{}, c, space);
        CHECK(ours.decision.feasible == ref.decision.feasible);
        if (ours.decision.feasible) {
            CHECK(*ours.decision.setting == *ref.decision.setting);
            CHECK(*ours.decision.predicted_cost == *ref.decision.predicted_cost);
            CHECK(*ours.decision.predicted_fitness == *ref.decision.predicted_fitness);
        }
        CHECK(ours.stats.settings_evaluated == ref.stats.settings_evaluated);
        CHECK(ours.stats.fitness_queries == ref.stats.fitness_queries);
        CHECK(ours.stats.cost_queries == ref.stats.cost_queries);
    }
}

TEST_CASE("quality steps honor each knob's orientation") {
    KnobSpace space = make_space({4, 4});
    space.knobs[1].accurate_level = 0; // low value = high quality
    KnobSetting s = accurate_setting(space);
    CHECK(s.levels == std::vector<std::int32_t>{3, 0});

    CHECK(lower_one_step(space, s, 0));
    CHECK(s.levels == std::vector<std::int32_t>{2, 0});
    CHECK(lower_one_step(space, s, 1));
    CHECK(s.levels == std::vector<std::int32_t>{2, 1});

    s.levels = {0, 3};
    CHECK_FALSE(lower_one_step(space, s, 0)); // exhausted downward
    CHECK_FALSE(lower_one_step(space, s, 1)); // exhausted upward
}

TEST_CASE("on a monotone surface the descent reaches the exhaustive optimum") {
    const KnobSpace space = make_space({5, 4, 3});
    const auto fitness = always_feasible();
    const FnCostModel cost{[&space](const InputFeatures&, const KnobSetting& s) {
        const auto v = setting_values(space, s);
        return 1.0 + 2.0 * v[0] + 1.0 * v[1] + 3.0 * v[2];
    }};
    const auto exhaustive = control_exhaustive(cost, fitness, InputFeatures{}, Constraint{0.5, 0.5}, space);
    const auto descent = control_precimonious(cost, fitness, InputFeatures{}, Constraint{0.5, 0.5}, space);
    REQUIRE(descent.decision.feasible);
    CHECK(*descent.decision.setting == *exhaustive.decision.setting);
    CHECK(*descent.decision.predicted_cost == *exhaustive.decision.predicted_cost);
    CHECK(descent.stats.settings_evaluated < exhaustive.stats.settings_evaluated);
}

TEST_CASE("an infeasible accurate setting aborts the descent immediately") {
    const KnobSpace space = make_space({3, 3});
    const FnFitnessModel never{[](double, const KnobSetting&) { return 0.2; }};
    const FnCostModel cost{[](const InputFeatures&, const KnobSetting&) { return 1.0; }};
    const auto [decision, stats] = control_precimonious(cost, never, InputFeatures{}, Constraint{0.5, 0.9}, space);
    CHECK_FALSE(decision.feasible);
    CHECK(stats.settings_evaluated == 1);
}

TEST_CASE("a cost ridge leaves the descent at a feasible local minimum") {
    const KnobSpace space = make_space({3, 3});
    const auto fitness = always_feasible();
    // accurate corner (2,2) costs 10; every single/double lowering from it is
    // costlier; the global optimum sits at (0,0).
    const FnCostModel cost{[](const InputFeatures&, const KnobSetting& s) {
        const int i = s.levels[0], j = s.levels[1];
        if (i == 2 && j == 2)
            return 10.0;
        if (i == 0 && j == 0)
            return 1.0;
        return 11.0 + static_cast<double>(i + j);
    }};
    const Constraint c{0.5, 0.5};
    const auto exhaustive = control_exhaustive(cost, fitness, InputFeatures{}, c, space);
    const auto descent = control_precimonious(cost, fitness, InputFeatures{}, c, space);
    REQUIRE(descent.decision.feasible);
    CHECK(descent.decision.setting->levels == std::vector<std::int32_t>{2, 2}); // stuck on the ridge
    CHECK(*descent.decision.predicted_cost >= *exhaustive.decision.predicted_cost);
    CHECK(*exhaustive.decision.predicted_cost == 1.0);
    CHECK(descent.stats.settings_evaluated < exhaustive.stats.settings_evaluated);
}

TEST_CASE("descent decisions always satisfy the fitness constraint and never beat exhaustive") {
    std::mt19937_64 rng(88);
    for (int trial = 0; trial < 30; ++trial) {
        const KnobSpace space = make_space({3 + static_cast<int>(rng() % 3), 3, 4});
        const std::uint64_t salt = rng();
        const FnCostModel cost{[salt, &space](const InputFeatures&, const KnobSetting& s) {
            return 1.0 + static_cast<double>(mix_u64(salt, 5, setting_rank(space, s)) % 1000) / 100.0;
        }};
        const FnFitnessModel fitness{[salt, &space](double eps, const KnobSetting& s) {
            const double base = static_cast<double>(mix_u64(salt, 6, setting_rank(space, s)) % 101) / 100.0;
            return std::min(1.0, base + eps); // monotone in eps
        }};
        const Constraint c{static_cast<double>(rng() % 80) / 100.0, 0.6};
        const auto descent = control_precimonious(cost, fitness, InputFeatures{}, c, space);
        const auto exhaustive = control_exhaustive(cost, fitness, InputFeatures{}, c, space);
        if (!descent.decision.feasible)
            continue;
        CHECK(fitness.fitness(c.epsilon, *descent.decision.setting) >= c.pi);
        CHECK(*descent.decision.predicted_cost >= *exhaustive.decision.predicted_cost);
    }
}

TEST_CASE("the oracle is forced to the accurate setting when only it is exact") {
    const KnobSpace space = make_space({3});
    // only the accurate setting (rank 2) has error 0 for every input
    const Dataset test = testutil::dataset_from_errors(
        space, {{"a", {{0, 0.5}, {1, 0.2}, {2, 0.0}}}, {"b", {{0, 0.7}, {1, 0.4}, {2, 0.0}}}}, 3.0);
    const ControlDecision d = control_oracle(test, "a", Constraint{0.0, 1.0});
    REQUIRE(d.feasible);
    CHECK(*d.setting == accurate_setting(space));
}

TEST_CASE("oracle cost never rises as the error bound relaxes") {
    const KnobSpace space = make_space({6, 4});
    const SurfaceSpec surface = default_surface(space, 2, 0.8, 0.0, 9);
    const Dataset test = normalize_errors(generate_dataset(surface, 6));
    for (const auto& input : test.inputs) {
        double prev = std::numeric_limits<double>::infinity();
        for (double eps = 0.0; eps <= 1.0; eps += 0.1) {
            const ControlDecision d = control_oracle(test, input, Constraint{eps, 0.7});
            if (!d.feasible)
                continue;
            CHECK(*d.predicted_cost <= prev);
            prev = *d.predicted_cost;
        }
    }
}

TEST_CASE("the oracle lower-bounds any controller judged by the same fitness") {
    const KnobSpace space = make_space({5, 5});
    const SurfaceSpec surface = default_surface(space, 0, 0.9, 0.0, 13);
    const Dataset test = normalize_errors(generate_dataset(surface, 8));
    const AggregatedRuns agg = aggregate(test);
    const FitnessTable table = train_fitness_table(test, {0.0, 0.2, 0.4, 0.6, 0.8, 1.0});

    // Exact-fit cost model: looks up the measured mean cost for the probed input.
    for (std::size_t i = 0; i < agg.inputs.size(); ++i) {
        const FnCostModel lookup{[&, i](const InputFeatures&, const KnobSetting& s) {
            const auto* cell = agg.cell(static_cast<int>(i), setting_rank(space, s));
            return cell ? cell->mean_cost() : 1e9;
        }};
        for (double eps : {0.2, 0.4, 0.8}) {
            const Constraint c{eps, 0.5};
            const auto controller = control_exhaustive(lookup, table, agg.features[i], c, space);
            const ControlDecision oracle = control_oracle(test, agg.inputs[i], c);
            REQUIRE(controller.decision.feasible == oracle.feasible);
            if (!oracle.feasible)
                continue;
            const auto* chosen = agg.cell(static_cast<int>(i), setting_rank(space, *controller.decision.setting));
            REQUIRE(chosen != nullptr);
            CHECK(*oracle.predicted_cost <= chosen->mean_cost());
        }
    }
}

TEST_CASE("asking the oracle about an unknown input is an error") {
    const KnobSpace space = make_space({2});
    const Dataset test = testutil::dataset_from_errors(space, {{"a", {{0, 0.1}, {1, 0.0}}}});
    CHECK_THROWS_AS(control_oracle(test, "zz", Constraint{0.5, 0.5}), Error);
}

TEST_CASE("the per-input oracle mode constrains on the input's own error") {
    const KnobSpace space = make_space({2});
    // input a meets eps=0.3 only at setting 1; input b at both
    const Dataset test = testutil::dataset_from_errors(
        space, {{"a", {{0, 0.8}, {1, 0.0}}}, {"b", {{0, 0.2}, {1, 0.05}}}}, 2.0);
    Dataset priced = test;
    for (auto& r : priced.records)
        r.cost = r.setting.levels[0] == 0 ? 1.0 : 5.0; // setting 0 is cheaper
    finalize(priced);

    // Fitness mode: mass(setting 0, eps 0.3) = 0.5 < 0.6 -> must take setting 1.
    const ControlDecision fitness_mode = control_oracle(priced, "b", Constraint{0.3, 0.6}, OracleMode::fitness);
    REQUIRE(fitness_mode.feasible);
    CHECK(fitness_mode.setting->levels == std::vector<std::int32_t>{1});

    // Per-input mode: b's own error at setting 0 is 0.2 <= 0.3, so the cheap
    // setting is allowed.
    const ControlDecision per_input = control_oracle(priced, "b", Constraint{0.3, 0.6}, OracleMode::per_input);
    REQUIRE(per_input.feasible);
    CHECK(per_input.setting->levels == std::vector<std::int32_t>{0});
}

TEST_CASE("decisions are deterministic functions of their inputs") {
    FourSettings fx;
    const Constraint c{0.5, 0.7};
    const auto a = control_exhaustive(fx.cost, fx.fitness, InputFeatures{}, c, fx.space);
    const auto b = control_exhaustive(fx.cost, fx.fitness, InputFeatures{}, c, fx.space);
    CHECK(*a.decision.setting == *b.decision.setting);
    const auto p1 = control_precimonious(fx.cost, fx.fitness, InputFeatures{}, c, fx.space);
    const auto p2 = control_precimonious(fx.cost, fx.fitness, InputFeatures{}, c, fx.space);
    CHECK(p1.decision.feasible == p2.decision.feasible);
    CHECK(*p1.decision.setting == *p2.decision.setting);
}

} // TEST_SUITE
