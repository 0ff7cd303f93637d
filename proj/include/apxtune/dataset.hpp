#pragma once

#include "apxtune/config.hpp"
#include "apxtune/core.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace apxtune {

// A finalized collection of profiling runs over one knob space.
struct Dataset {
    KnobSpace space;
    std::vector<std::string> feature_names;
    std::vector<RunRecord> records;
    std::vector<std::string> inputs;              // sorted unique input ids
    std::set<std::string> degenerate_inputs;      // d_max == d_min, errors forced to 0
    std::map<std::string, double> input_weights;  // raw p(i); empty means uniform

    bool normalized() const;
};

// Validates records against the space/feature names and rebuilds `inputs`.
void finalize(Dataset& ds);

struct SplitDataset {
    Dataset train;
    Dataset test;
    double ratio = 0.0;
    std::uint64_t seed = 0;
};

// Per-input min-max error normalization. Degenerate inputs (one distinct
// distance) get error 0 everywhere and are flagged in degenerate_inputs.
Dataset normalize_errors(const Dataset& ds);

// Input-level split: an input's records land wholly in train or wholly in
// test. Deterministic for a fixed seed.
SplitDataset split(const Dataset& ds, double ratio, std::uint64_t seed);

// Records of the listed inputs only.
Dataset subset_inputs(const Dataset& ds, const std::vector<std::string>& ids);

struct ParetoPoint {
    double error = 0.0;
    double cost = 0.0;

    auto operator<=>(const ParetoPoint&) const = default;
};

// Non-dominated (error, cost) pairs of one input, ascending by error.
std::vector<ParetoPoint> per_input_pareto(const Dataset& ds, const std::string& input_id);

// Per-(input, setting) aggregation used by fitness training, the oracle, and
// speedup computation. Repeat runs are averaged.
struct AggregatedRuns {
    struct Cell {
        double error_sum = 0.0;
        double cost_sum = 0.0;
        int n = 0;

        double mean_error() const { return error_sum / n; }
        double mean_cost() const { return cost_sum / n; }
    };

    std::vector<std::string> inputs; // sorted, defines summation order
    // Raw per-input weights plus their total; probability masses are formed
    // as a partial sum divided by the total, so a full sum is exactly 1.
    std::vector<double> weights;
    double total_weight = 0.0;
    std::vector<InputFeatures> features;
    std::vector<std::unordered_map<std::size_t, Cell>> by_input; // setting rank -> cell

    int input_index(const std::string& id) const;
    const Cell* cell(int input_idx, std::size_t setting_rank) const;
};

AggregatedRuns aggregate(const Dataset& ds);

// Profile file IO. Columns are resolved by name from the header; the knob
// columns carry level values (not indices). Missing or non-finite cells are
// hard errors naming the line.
Dataset read_profile(const std::string& path, const KnobSpace& space, const Schema& schema);
std::string render_profile(const Dataset& ds, const Schema& schema);
void write_profile(const std::string& path, const Dataset& ds, const Schema& schema);

} // namespace apxtune
