#include "apxtune/models.hpp"

#include "apxtune/error.hpp"
#include "apxtune/reference.hpp"
#include "apxtune/synthbench.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace apxtune;
using testutil::make_space;

namespace {

// Random dataset with pre-set normalized errors; some (input, setting) pairs
// may be left unprofiled and inputs may carry weights.
Dataset random_error_dataset(std::mt19937_64& rng, int knobs, int max_levels, int n_inputs, bool with_missing,
                             bool with_weights) {
    std::vector<int> levels;
    for (int k = 0; k < knobs; ++k)
        levels.push_back(2 + static_cast<int>(rng() % static_cast<unsigned>(max_levels - 1)));
    const KnobSpace space = make_space(levels);

    Dataset ds;
    ds.space = space;
    for (int i = 0; i < n_inputs; ++i) {
        const std::string id = "in" + std::to_string(100 + i);
        for (std::size_t r = 0; r < setting_count(space); ++r) {
            if (with_missing && rng() % 5 == 0)
                continue;
            RunRecord rec;
            rec.input_id = id;
            rec.setting = setting_at(space, r);
            rec.error = static_cast<double>(rng() % 101) / 100.0;
            rec.distance = *rec.error;
            rec.cost = 1.0 + static_cast<double>(rng() % 20);
            ds.records.push_back(std::move(rec));
        }
        if (with_weights)
            ds.input_weights[id] = 1.0 + static_cast<double>(rng() % 5);
    }
    finalize(ds);
    return ds;
}

std::vector<double> coarse_grid() {
    return {0.0, 0.25, 0.5, 0.75, 1.0};
}

} // namespace

TEST_SUITE("models") {

TEST_CASE("fitness is the covered probability mass at the bound") {
    const KnobSpace space = make_space({1});
    const Dataset ds = testutil::dataset_from_errors(
        space, {{"a", {{0, 0.1}}}, {"b", {{0, 0.2}}}, {"c", {{0, 0.6}}}, {"d", {{0, 0.05}}}});
    const FitnessTable table = train_fitness_table(ds, {0.3, 1.0});
    CHECK(table.fitness(0.3, setting_at(space, 0)) == 0.75);
    CHECK(table.fitness(1.0, setting_at(space, 0)) == 1.0);
}

TEST_CASE("at epsilon 0 only exact reference inputs contribute") {
    const KnobSpace space = make_space({2});
    const Dataset ds = testutil::dataset_from_errors(space, {{"a", {{0, 0.0}, {1, 0.5}}},
                                                             {"b", {{0, 0.3}, {1, 0.0}}},
                                                             {"c", {{0, 0.2}, {1, 0.1}}},
                                                             {"d", {{0, 0.4}, {1, 0.6}}},
                                                             {"e", {{0, 0.9}, {1, 0.2}}}});
    const FitnessTable table = train_fitness_table(ds, {0.0, 1.0});
    CHECK(table.fitness(0.0, setting_at(space, 0)) == doctest::Approx(0.2));
    CHECK(table.fitness(0.0, setting_at(space, 1)) == doctest::Approx(0.2));
}

TEST_CASE("the table equals brute-force evaluation of the fitness sum exactly") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        const int knobs = 1 + static_cast<int>(rng() % 3);
        const int inputs = 2 + static_cast<int>(rng() % 19);
        const Dataset ds = random_error_dataset(rng, knobs, 5, inputs, trial % 2 == 1, trial % 3 == 2);
        const auto grid = coarse_grid();
        const FitnessTable table = train_fitness_table(ds, grid);
        const auto ref = reference::train_fitness_table(ds, grid);
        for (std::size_t r = 0; r < setting_count(ds.space); ++r) {
            CHECK(table.profiled(r) == !ref.rows[r].empty());
            if (!table.profiled(r))
                continue;
            for (std::size_t g = 0; g < grid.size(); ++g)
                CHECK(table.value(r, g) == ref.rows[r][g]); // bitwise
        }
    }
}

TEST_CASE("parallel and serial table training agree bitwise") {
    std::mt19937_64 rng(22);
    const Dataset ds = random_error_dataset(rng, 3, 5, 12, true, false);
    const auto grid = coarse_grid();
    const FitnessTable serial = train_fitness_table(ds, grid, false);
    const FitnessTable parallel = train_fitness_table(ds, grid, true);
    for (std::size_t r = 0; r < setting_count(ds.space); ++r)
        for (std::size_t g = 0; g < grid.size(); ++g)
            CHECK(serial.value(r, g) == parallel.value(r, g));
}

TEST_CASE("table rows are monotone and reach 1 when fully profiled") {
    std::mt19937_64 rng(23);
    const Dataset ds = random_error_dataset(rng, 2, 4, 10, false, false);
    const auto grid = coarse_grid();
    const FitnessTable table = train_fitness_table(ds, grid);
    for (std::size_t r = 0; r < setting_count(ds.space); ++r) {
        REQUIRE(table.profiled(r));
        for (std::size_t g = 1; g < grid.size(); ++g)
            CHECK(table.value(r, g) >= table.value(r, g - 1));
        CHECK(table.value(r, grid.size() - 1) == 1.0);
    }
}

TEST_CASE("queries floor to the nearest grid bin at or below epsilon") {
    const KnobSpace space = make_space({1});
    const Dataset ds = testutil::dataset_from_errors(space, {{"a", {{0, 0.3}}}, {"b", {{0, 0.6}}}});
    const FitnessTable table = train_fitness_table(ds, {0.25, 0.5, 1.0});
    const KnobSetting s = setting_at(space, 0);
    CHECK(table.fitness(0.49, s) == table.fitness(0.25, s)); // floors to 0.25
    CHECK(table.fitness(0.5, s) == 0.5);
    CHECK(table.fitness(0.1, s) == 0.0); // below the smallest bin
}

TEST_CASE("unprofiled settings report zero fitness and are counted") {
    const KnobSpace space = make_space({2});
    const Dataset ds = testutil::dataset_from_errors(space, {{"a", {{0, 0.1}}}, {"b", {{0, 0.2}, {1, 0.3}}}});
    const FitnessTable table = train_fitness_table(ds, {0.5, 1.0});
    CHECK(table.profiled(0));
    CHECK(table.profiled(1)); // only input b profiled it
    CHECK(table.fitness(1.0, setting_at(space, 1)) == 0.5);
    CHECK(table.missing_pairs() == 1);
}

TEST_CASE("the M5 fitness model reproduces table values exactly when grown to single points") {
    std::mt19937_64 rng(31);
    const Dataset ds = random_error_dataset(rng, 2, 4, 8, false, false);
    const auto grid = coarse_grid();
    const FitnessTable table = train_fitness_table(ds, grid);
    const TreeFitnessModel m5 = train_fitness_m5(table, TreeParams::exact_fit());
    for (std::size_t r = 0; r < setting_count(ds.space); ++r)
        for (std::size_t g = 0; g < grid.size(); ++g)
            CHECK(m5.fitness(grid[g], setting_at(ds.space, r)) ==
                  doctest::Approx(table.value(r, g)).epsilon(1e-9));
}

TEST_CASE("M5 fitness is monotone in epsilon by construction") {
    std::mt19937_64 rng(32);
    const Dataset ds = random_error_dataset(rng, 2, 5, 10, false, false);
    const auto grid = coarse_grid();
    const TreeFitnessModel m5 = train_fitness_m5(ds, grid); // default, pruned + smoothed
    for (std::size_t r = 0; r < setting_count(ds.space); ++r) {
        const KnobSetting s = setting_at(ds.space, r);
        double prev = 0.0;
        for (double eps : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
            const double f = m5.fitness(eps, s);
            CHECK(f >= prev);
            CHECK(f >= 0.0);
            CHECK(f <= 1.0);
            prev = f;
        }
    }
}

TEST_CASE("on synthetic data the M5 fitness stays near the exact table") {
    const KnobSpace space = make_space({10, 10});
    const SurfaceSpec surface = default_surface(space, 2, 0.6, 0.0, 5);
    const Dataset ds = normalize_errors(generate_dataset(surface, 16));
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i)
        grid.push_back(0.05 * i);
    const FitnessTable table = train_fitness_table(ds, grid);
    const TreeFitnessModel m5 = train_fitness_m5(table);
    double abs_dev = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < setting_count(space); ++r)
        for (std::size_t g = 0; g < grid.size(); ++g) {
            abs_dev += std::abs(m5.fitness(grid[g], setting_at(space, r)) - table.value(r, g));
            ++n;
        }
    CHECK(abs_dev / static_cast<double>(n) <= 0.1);
}

TEST_CASE("the linear baseline recovers an exactly linear cost surface") {
    const KnobSpace space = make_space({5, 4});
    Dataset ds;
    ds.space = space;
    ds.feature_names = {"size"};
    for (int i = 0; i < 6; ++i) {
        for (std::size_t r = 0; r < setting_count(space); ++r) {
            RunRecord rec;
            rec.input_id = "in" + std::to_string(i);
            rec.features.values = {static_cast<double>(10 + 3 * i)};
            rec.setting = setting_at(space, r);
            const auto v = setting_values(space, rec.setting);
            rec.cost = 4.0 + 0.5 * rec.features.values[0] + 2.0 * v[0] + 1.25 * v[1];
            rec.distance = 0.1;
            ds.records.push_back(std::move(rec));
        }
    }
    finalize(ds);
    const LinearCostModel lin = train_cost_linear(ds);
    const TreeCostModel tree = train_cost_tree(ds, TreeParams::exact_fit());
    for (const auto& rec : ds.records) {
        CHECK(lin.predict(rec.features, rec.setting) == doctest::Approx(rec.cost).epsilon(1e-6));
        CHECK(tree.predict(rec.features, rec.setting) == doctest::Approx(rec.cost).epsilon(1e-6));
        CHECK(std::abs(lin.predict(rec.features, rec.setting) - tree.predict(rec.features, rec.setting)) < 1e-6);
    }
}

TEST_CASE("constant costs degrade to an intercept-only baseline") {
    const KnobSpace space = make_space({3});
    Dataset ds;
    ds.space = space;
    for (std::size_t r = 0; r < 3; ++r) {
        RunRecord rec;
        rec.input_id = "a";
        rec.setting = setting_at(space, r);
        rec.distance = 0.0;
        rec.cost = 6.5;
        ds.records.push_back(std::move(rec));
    }
    finalize(ds);
    const LinearCostModel lin = train_cost_linear(ds);
    CHECK(lin.predict(InputFeatures{}, setting_at(space, 1)) == 6.5);
}

TEST_CASE("a model tree beats the global line on piecewise cost surfaces") {
    const KnobSpace space = make_space({12});
    Dataset train, held_out;
    train.space = held_out.space = space;
    const auto cost_of = [&](double v) { return v <= 6.0 ? 2.0 + 3.0 * v : 60.0 - 4.0 * v; };
    for (int i = 0; i < 4; ++i) {
        for (std::size_t r = 0; r < setting_count(space); ++r) {
            RunRecord rec;
            rec.input_id = "in" + std::to_string(i);
            rec.setting = setting_at(space, r);
            rec.distance = 0.1;
            rec.cost = cost_of(setting_values(space, rec.setting)[0]);
            ((r + static_cast<std::size_t>(i)) % 3 == 0 ? held_out : train).records.push_back(std::move(rec));
        }
    }
    finalize(train);
    finalize(held_out);

    const TreeCostModel tree = train_cost_tree(train, TreeParams::exact_fit());
    const LinearCostModel lin = train_cost_linear(train);
    const double tree_rmse = rmse(evaluate_cost_accuracy(tree, held_out));
    const double lin_rmse = rmse(evaluate_cost_accuracy(lin, held_out));
    CHECK(lin_rmse > tree_rmse);
    CHECK(lin_rmse >= 1.3 * tree_rmse);
}

TEST_CASE("cost accuracy pairs one point per test record") {
    std::mt19937_64 rng(41);
    const Dataset ds = random_error_dataset(rng, 2, 3, 5, false, false);
    const LinearCostModel lin = train_cost_linear(ds);
    const auto points = evaluate_cost_accuracy(lin, ds);
    CHECK(points.size() == ds.records.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        CHECK(points[i].measured == ds.records[i].cost);
}

TEST_CASE("a table evaluated on its own training inputs predicts measured fitness exactly") {
    std::mt19937_64 rng(42);
    const Dataset ds = random_error_dataset(rng, 2, 4, 8, false, false);
    const auto grid = coarse_grid();
    const FitnessTable table = train_fitness_table(ds, grid);
    const FitnessAccuracy acc = evaluate_fitness_accuracy(table, ds, grid);
    CHECK(acc.skipped_settings == 0);
    CHECK(acc.points.size() == setting_count(ds.space) * grid.size());
    for (const auto& p : acc.points)
        CHECK(p.predicted == p.measured);
    CHECK(under_prediction_fraction(acc.points) == 0.0);
}

TEST_CASE("measured fitness at epsilon 1 is always 1 and skipped settings are counted") {
    const KnobSpace space = make_space({2});
    const Dataset test = testutil::dataset_from_errors(space, {{"a", {{0, 0.5}}}, {"b", {{0, 0.7}}}});
    const FitnessTable table = train_fitness_table(test, {0.5, 1.0});
    const FitnessAccuracy acc = evaluate_fitness_accuracy(table, test, {0.5, 1.0});
    CHECK(acc.skipped_settings == 1); // setting 1 never profiled
    REQUIRE(acc.points.size() == 2);
    CHECK(acc.points[1].measured == 1.0);
}

TEST_CASE("under-prediction shows up as a conservative feasible region") {
    const KnobSpace space = make_space({1});
    const Dataset train = testutil::dataset_from_errors(space, {{"a", {{0, 0.9}}}, {"b", {{0, 0.9}}}});
    const Dataset test = testutil::dataset_from_errors(space, {{"c", {{0, 0.1}}}, {"d", {{0, 0.1}}}});
    const FitnessTable table = train_fitness_table(train, {0.5, 1.0});
    const FitnessAccuracy acc = evaluate_fitness_accuracy(table, test, {0.5, 1.0});
    // trained mass at 0.5 is 0, measured is 1: predicted < measured
    CHECK(under_prediction_fraction(acc.points) == 0.5);
}

TEST_CASE("on the synthetic benchmark the tree cost model correlates with measurements") {
    const KnobSpace space = make_space({10, 10});
    const SurfaceSpec surface = default_surface(space, 3, 0.7, 0.0, 12);
    const Dataset ds = normalize_errors(generate_dataset(surface, 16));
    const SplitDataset sd = split(ds, 0.75, 12);
    const TreeCostModel tree = train_cost_tree(sd.train);
    const auto points = evaluate_cost_accuracy(tree, sd.test);
    CHECK(pearson_correlation(points) >= 0.9);
}

TEST_CASE("every model kind persists and reloads with identical predictions") {
    std::mt19937_64 rng(51);
    const KnobSpace space = make_space({4, 3});
    const SurfaceSpec surface = default_surface(space, 2, 0.5, 0.0, 3);
    const Dataset ds = normalize_errors(generate_dataset(surface, 8));
    const auto grid = coarse_grid();

    const FitnessTable table = train_fitness_table(ds, grid);
    const TreeFitnessModel m5 = train_fitness_m5(table);
    const LinearFitnessModel lin_fit = train_fitness_linear(table);
    const TreeCostModel tree_cost = train_cost_tree(ds);
    const LinearCostModel lin_cost = train_cost_linear(ds);

    testutil::TempDir tmp("models");
    save_fitness_model(tmp.file("t.model"), table);
    save_fitness_model(tmp.file("m5.model"), m5);
    save_fitness_model(tmp.file("lf.model"), lin_fit);
    save_cost_model(tmp.file("tc.model"), tree_cost);
    save_cost_model(tmp.file("lc.model"), lin_cost);

    const auto table2 = load_fitness_model(tmp.file("t.model"));
    const auto m52 = load_fitness_model(tmp.file("m5.model"));
    const auto lf2 = load_fitness_model(tmp.file("lf.model"));
    const auto tc2 = load_cost_model(tmp.file("tc.model"));
    const auto lc2 = load_cost_model(tmp.file("lc.model"));
    CHECK(table2->kind() == "fitness_table");
    CHECK(m52->kind() == "fitness_tree");

    const AggregatedRuns agg = aggregate(ds);
    for (int probe = 0; probe < 100; ++probe) {
        const std::size_t rank = rng() % setting_count(space);
        const double eps = static_cast<double>(rng() % 101) / 100.0;
        const KnobSetting s = setting_at(space, rank);
        const InputFeatures& f = agg.features[rng() % agg.features.size()];
        CHECK(table2->fitness(eps, s) == table.fitness(eps, s));
        CHECK(m52->fitness(eps, s) == m5.fitness(eps, s));
        CHECK(lf2->fitness(eps, s) == lin_fit.fitness(eps, s));
        CHECK(tc2->predict(f, s) == tree_cost.predict(f, s));
        CHECK(lc2->predict(f, s) == lin_cost.predict(f, s));
    }

    CHECK_THROWS_AS(load_cost_model(tmp.file("t.model")), Error);
    CHECK_THROWS_AS(load_fitness_model(tmp.file("tc.model")), Error);
}

TEST_CASE("cost predictions are floored at a small positive value") {
    const KnobSpace space = make_space({2});
    Dataset ds;
    ds.space = space;
    for (std::size_t r = 0; r < 2; ++r) {
        RunRecord rec;
        rec.input_id = "a";
        rec.setting = setting_at(space, r);
        rec.distance = 0.0;
        rec.cost = r == 0 ? 10.0 : 0.001; // steep slope extrapolates negative
        ds.records.push_back(std::move(rec));
    }
    finalize(ds);
    Dataset big = ds;
    big.space = make_space({5});
    for (auto& r : big.records)
        r.setting = KnobSetting{{r.setting.levels[0]}};
    finalize(big);
    const LinearCostModel lin = train_cost_linear(big);
    CHECK(lin.predict(InputFeatures{}, setting_at(big.space, 4)) >= kMinPredictedCost);
    CHECK(lin.predict(InputFeatures{}, setting_at(big.space, 4)) < 0.001);
}

} // TEST_SUITE
