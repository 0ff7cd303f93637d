#include "apxtune/model_tree.hpp"

#include "apxtune/error.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace apxtune;

namespace {

// Two exact linear regimes split at x0 = 5.
double piecewise(double x) {
    return x <= 5.0 ? 2.0 + 3.0 * x : 50.0 - 2.0 * x;
}

std::pair<std::vector<std::vector<double>>, std::vector<double>> piecewise_points() {
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    for (double x = 0.0; x <= 10.0; x += 0.5) {
        xs.push_back({x});
        ys.push_back(piecewise(x));
    }
    return {xs, ys};
}

} // namespace

TEST_SUITE("model_tree") {

TEST_CASE("stddev reduction matches the hand-computed split quality") {
    const std::vector<double> targets = {1, 2, 3, 10, 11, 12};
    const std::vector<bool> left = {true, true, true, false, false, false};
    // population sd of all six is 4.5735, of each half 0.8165
    CHECK(stddev_reduction(targets, left) == doctest::Approx(3.757).epsilon(1e-3));
    CHECK(stddev_reduction(targets, left) == doctest::Approx(4.5735 - 0.8165).epsilon(1e-3));
}

TEST_CASE("splits never have negative stddev reduction") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> targets;
        std::vector<bool> left;
        const int n = 2 + static_cast<int>(rng() % 20);
        for (int i = 0; i < n; ++i) {
            targets.push_back(static_cast<double>(rng() % 100) / 10.0);
            left.push_back(rng() % 2 == 0);
        }
        if (std::find(left.begin(), left.end(), true) == left.end())
            left[0] = true;
        if (std::find(left.begin(), left.end(), false) == left.end())
            left[1 % n] = false;
        CHECK(stddev_reduction(targets, left) >= -1e-12);
    }
}

TEST_CASE("a single training point becomes a constant leaf") {
    TreeParams params = TreeParams::exact_fit();
    const ModelTree tree = ModelTree::train({{3.0, 4.0}}, {7.5}, params);
    CHECK(tree.leaf_count() == 1);
    CHECK(tree.predict(std::vector<double>{3.0, 4.0}) == 7.5);
    CHECK(tree.predict(std::vector<double>{-100.0, 9.0}) == 7.5);
}

TEST_CASE("identical targets give a single-leaf constant model") {
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    for (int i = 0; i < 8; ++i) {
        xs.push_back({static_cast<double>(i)});
        ys.push_back(4.25);
    }
    const ModelTree tree = ModelTree::train(xs, ys, {});
    CHECK(tree.leaf_count() == 1);
    CHECK(tree.predict(std::vector<double>{2.5}) == 4.25);
}

TEST_CASE("exact piecewise-linear data is reproduced on the training points") {
    auto [xs, ys] = piecewise_points();
    const ModelTree tree = ModelTree::train(xs, ys, TreeParams::exact_fit());
    for (std::size_t i = 0; i < xs.size(); ++i)
        CHECK(tree.predict(xs[i]) == doctest::Approx(ys[i]).epsilon(1e-6));
    CHECK(tree.leaf_count() >= 2);
}

TEST_CASE("exact fit also holds with a second, irrelevant dimension") {
    std::mt19937_64 rng(4);
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    for (double x = 0.0; x <= 10.0; x += 0.5) {
        xs.push_back({x, static_cast<double>(rng() % 7)});
        ys.push_back(piecewise(x));
    }
    const ModelTree tree = ModelTree::train(xs, ys, TreeParams::exact_fit());
    for (std::size_t i = 0; i < xs.size(); ++i)
        CHECK(tree.predict(xs[i]) == doctest::Approx(ys[i]).epsilon(1e-6));
}

TEST_CASE("with smoothing disabled the prediction is the raw leaf model output") {
    auto [xs, ys] = piecewise_points();
    TreeParams params;
    params.min_leaf = 4;
    params.smoothing = 0.0;
    params.prune = false;
    const ModelTree tree = ModelTree::train(xs, ys, params);
    REQUIRE(!tree.root()->is_leaf());
    const std::vector<double> probe = {1.25};
    const ModelTree::Node* node = tree.root();
    while (!node->is_leaf())
        node = probe[static_cast<std::size_t>(node->split_dim)] <= node->threshold ? node->left.get()
                                                                                   : node->right.get();
    CHECK(tree.predict(probe) == node->model.evaluate(probe));
}

TEST_CASE("smoothing blends the leaf prediction with ancestor models") {
    auto [xs, ys] = piecewise_points();
    TreeParams params;
    params.min_leaf = 8;
    params.smoothing = 15.0;
    params.prune = false;
    const ModelTree tree = ModelTree::train(xs, ys, params);
    REQUIRE(!tree.root()->is_leaf());
    REQUIRE(tree.root()->left->is_leaf());

    const std::vector<double> probe = {1.25};
    const ModelTree::Node* root = tree.root();
    const ModelTree::Node* leaf = probe[0] <= root->threshold ? root->left.get() : root->right.get();
    const double expected = (static_cast<double>(root->count) * leaf->model.evaluate(probe) +
                             15.0 * root->model.evaluate(probe)) /
                            (static_cast<double>(root->count) + 15.0);
    CHECK(tree.predict(probe) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("pruning collapses subtrees that only chase noise") {
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    for (int i = 0; i < 64; ++i) {
        xs.push_back({static_cast<double>(i) / 4.0});
        ys.push_back(3.0 * xs.back()[0] + ((i % 2 == 0) ? 1.0 : -1.0));
    }
    TreeParams no_prune;
    no_prune.min_leaf = 4;
    no_prune.sd_floor = 0.0;
    no_prune.prune = false;
    no_prune.smoothing = 0.0;
    TreeParams prune = no_prune;
    prune.prune = true;
    const ModelTree grown = ModelTree::train(xs, ys, no_prune);
    const ModelTree pruned = ModelTree::train(xs, ys, prune);
    CHECK(pruned.leaf_count() < grown.leaf_count());
    for (std::size_t i = 0; i < xs.size(); ++i)
        CHECK(std::abs(pruned.predict(xs[i]) - ys[i]) <= 1.5);
}

TEST_CASE("trees serialize and reload with bitwise-identical predictions") {
    std::mt19937_64 rng(6);
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    for (int i = 0; i < 200; ++i) {
        xs.push_back({static_cast<double>(rng() % 97) / 9.7, static_cast<double>(rng() % 31)});
        ys.push_back(std::sin(xs.back()[0]) * 10.0 + xs.back()[1]);
    }
    TreeParams params;
    params.smoothing = 15.0;
    const ModelTree tree = ModelTree::train(xs, ys, params);

    std::stringstream buffer;
    tree.save(buffer);
    const ModelTree back = ModelTree::load(buffer);
    CHECK(back.dimension() == tree.dimension());
    CHECK(back.leaf_count() == tree.leaf_count());
    for (int i = 0; i < 100; ++i) {
        const std::vector<double> probe = {static_cast<double>(rng() % 120) / 10.0,
                                           static_cast<double>(rng() % 40)};
        CHECK(back.predict(probe) == tree.predict(probe));
    }
}

TEST_CASE("parallel and sequential split search train identical trees") {
    std::mt19937_64 rng(9);
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    for (int i = 0; i < 3000; ++i) { // above the parallel-search node threshold
        std::vector<double> x = {static_cast<double>(rng() % 100), static_cast<double>(rng() % 100),
                                 static_cast<double>(rng() % 100), static_cast<double>(rng() % 100)};
        ys.push_back(x[0] * 2.0 + (x[1] > 50 ? 100.0 : 0.0) + x[2] * x[3] / 100.0);
        xs.push_back(std::move(x));
    }
    TreeParams serial;
    serial.parallel_split = false;
    TreeParams parallel;
    parallel.parallel_split = true;
    const ModelTree a = ModelTree::train(xs, ys, serial);
    const ModelTree b = ModelTree::train(xs, ys, parallel);
    CHECK(a.leaf_count() == b.leaf_count());
    for (int i = 0; i < 200; ++i) {
        const std::vector<double> probe = {static_cast<double>(rng() % 120), static_cast<double>(rng() % 120),
                                           static_cast<double>(rng() % 120), static_cast<double>(rng() % 120)};
        CHECK(a.predict(probe) == b.predict(probe));
    }
}

TEST_CASE("degenerate training inputs are rejected") {
    CHECK_THROWS_AS(ModelTree::train({}, {}, {}), Error);
    CHECK_THROWS_AS(ModelTree::train({{1.0}}, {1.0, 2.0}, {}), Error);
    CHECK_THROWS_AS(ModelTree::train({{1.0}, {2.0}}, {1.0, std::nan("")}, {}), Error);
    TreeParams params; // min_leaf 4 > 2 points
    CHECK_THROWS_AS(ModelTree::train({{1.0}, {2.0}}, {1.0, 2.0}, params), Error);
}

TEST_CASE("fit_linear recovers exact coefficients and falls back to the mean when singular") {
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    std::vector<std::uint32_t> idx;
    for (int i = 0; i < 12; ++i) {
        xs.push_back({static_cast<double>(i), static_cast<double>(i % 4)});
        ys.push_back(1.5 + 2.0 * xs.back()[0] - 3.0 * xs.back()[1]);
        idx.push_back(static_cast<std::uint32_t>(i));
    }
    const LinearModel m = fit_linear(xs, ys, idx, 2);
    CHECK(m.intercept == doctest::Approx(1.5).epsilon(1e-9));
    CHECK(m.coef[0] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(m.coef[1] == doctest::Approx(-3.0).epsilon(1e-9));

    // Perfectly collinear columns make the normal equations singular.
    std::vector<std::vector<double>> collinear;
    std::vector<double> ys2;
    std::vector<std::uint32_t> idx2;
    for (int i = 0; i < 6; ++i) {
        collinear.push_back({static_cast<double>(i), 2.0 * static_cast<double>(i)});
        ys2.push_back(static_cast<double>(i % 3));
        idx2.push_back(static_cast<std::uint32_t>(i));
    }
    const LinearModel fallback = fit_linear(collinear, ys2, idx2, 2);
    CHECK(fallback.coef == std::vector<double>{0.0, 0.0});
    CHECK(fallback.intercept == doctest::Approx(1.0)); // mean of 0,1,2,0,1,2
}

} // TEST_SUITE
