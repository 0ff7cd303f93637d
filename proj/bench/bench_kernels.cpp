// Times the OpenMP kernels against their serial reference implementations on
// a synthetic workload and checks that both sides produce identical results.

#include "apxtune/controller.hpp"
#include "apxtune/dataset.hpp"
#include "apxtune/eval.hpp"
#include "apxtune/models.hpp"
#include "apxtune/reference.hpp"
#include "apxtune/synthbench.hpp"

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace apxtune;

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

void report(const char* name, double serial_ms, double parallel_ms, bool match) {
    std::printf("%-28s %10.1f ms %10.1f ms   x%-5.2f %s\n", name, serial_ms, parallel_ms,
                parallel_ms > 0 ? serial_ms / parallel_ms : 0.0, match ? "results identical" : "MISMATCH");
}

KnobSpace make_space(std::size_t knobs, std::size_t levels) {
    KnobSpace space;
    for (std::size_t k = 0; k < knobs; ++k) {
        Knob knob;
        knob.name = "k" + std::to_string(k);
        for (std::size_t l = 1; l <= levels; ++l)
            knob.levels.push_back(static_cast<double>(l));
        knob.accurate_level = levels - 1;
        space.knobs.push_back(std::move(knob));
    }
    return space;
}

} // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP threads: %d\n\n", omp_get_max_threads());
#else
    std::printf("built without OpenMP; comparing identical serial paths\n\n");
#endif

    const KnobSpace space = make_space(4, 10); // 10^4 settings
    const SurfaceSpec surface = default_surface(space, 3, 0.7, 0.0, 7);
    const Dataset raw = generate_dataset(surface, 24);
    const Dataset data = normalize_errors(raw);
    const SplitDataset sd = split(data, 0.75, 7);

    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i)
        grid.push_back(0.05 * i);

    // Fitness table training: per-setting rows are independent.
    auto t0 = std::chrono::steady_clock::now();
    const FitnessTable table_serial = train_fitness_table(sd.train, grid, /*parallel=*/false);
    const double table_serial_ms = ms_since(t0);
    t0 = std::chrono::steady_clock::now();
    const FitnessTable table_parallel = train_fitness_table(sd.train, grid, /*parallel=*/true);
    const double table_parallel_ms = ms_since(t0);
    bool table_match = true;
    for (std::size_t r = 0; r < setting_count(space) && table_match; ++r)
        for (std::size_t g = 0; g < grid.size() && table_match; ++g)
            table_match = table_serial.value(r, g) == table_parallel.value(r, g);
    report("train_fitness_table", table_serial_ms, table_parallel_ms, table_match);

    // Exhaustive controller sweep.
    const TreeCostModel cost = train_cost_tree(sd.train);
    const AggregatedRuns agg = aggregate(sd.test);
    std::vector<std::pair<InputFeatures, Constraint>> queries;
    for (std::size_t i = 0; i < agg.inputs.size(); ++i)
        for (double eps : {0.1, 0.3, 0.5})
            queries.push_back({agg.features[i], Constraint{eps, 0.7}});

    t0 = std::chrono::steady_clock::now();
    std::vector<ControlDecision> serial_decisions;
    for (const auto& [features, c] : queries)
        serial_decisions.push_back(reference::control_exhaustive(cost, table_parallel, features, c, space).decision);
    const double sweep_serial_ms = ms_since(t0);

    t0 = std::chrono::steady_clock::now();
    std::vector<ControlDecision> parallel_decisions;
    for (const auto& [features, c] : queries)
        parallel_decisions.push_back(control_exhaustive(cost, table_parallel, features, c, space, true).decision);
    const double sweep_parallel_ms = ms_since(t0);

    bool sweep_match = true;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const auto& a = serial_decisions[i];
        const auto& b = parallel_decisions[i];
        sweep_match = sweep_match && a.feasible == b.feasible &&
                      (!a.feasible || (*a.setting == *b.setting && *a.predicted_cost == *b.predicted_cost));
    }
    report("control_exhaustive", sweep_serial_ms, sweep_parallel_ms, sweep_match);

    // Oracle speedup table: cells are independent.
    const ConstraintGrid cgrid = ConstraintGrid::make(grid, {1.0, 0.9, 0.8, 0.7, 0.6, 0.5});
    const Decider oracle = make_oracle_decider(sd.test);
    t0 = std::chrono::steady_clock::now();
    const SpeedupTable st_serial = speedup_table(sd.test, oracle, cgrid, /*parallel=*/false);
    const double st_serial_ms = ms_since(t0);
    t0 = std::chrono::steady_clock::now();
    const SpeedupTable st_parallel = speedup_table(sd.test, oracle, cgrid, /*parallel=*/true);
    const double st_parallel_ms = ms_since(t0);
    report("speedup_table (oracle)", st_serial_ms, st_parallel_ms, st_serial.values == st_parallel.values);

    // Model-tree split search across dimensions.
    auto [points, targets] = cost_training_points(sd.train);
    TreeParams serial_params;
    serial_params.parallel_split = false;
    t0 = std::chrono::steady_clock::now();
    const ModelTree tree_serial = ModelTree::train(points, targets, serial_params);
    const double tree_serial_ms = ms_since(t0);
    TreeParams parallel_params;
    parallel_params.parallel_split = true;
    t0 = std::chrono::steady_clock::now();
    const ModelTree tree_parallel = ModelTree::train(points, targets, parallel_params);
    const double tree_parallel_ms = ms_since(t0);
    bool tree_match = true;
    for (std::size_t i = 0; i < points.size() && tree_match; i += 7)
        tree_match = tree_serial.predict(points[i]) == tree_parallel.predict(points[i]);
    report("model tree training", tree_serial_ms, tree_parallel_ms, tree_match);

    return 0;
}
