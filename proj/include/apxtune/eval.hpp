#pragma once

#include "apxtune/config.hpp"
#include "apxtune/controller.hpp"
#include "apxtune/core.hpp"
#include "apxtune/dataset.hpp"
#include "apxtune/models.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace apxtune {

// Evaluation grid: epsilons ascending, pis descending — the row/column
// layout of the published tables. epsilon 0 is always part of the grid.
struct ConstraintGrid {
    std::vector<double> epsilons;
    std::vector<double> pis;

    static ConstraintGrid from_config(const AppConfig& cfg);
    static ConstraintGrid make(std::vector<double> epsilons, std::vector<double> pis);

    std::size_t cells() const { return epsilons.size() * pis.size(); }
    Constraint at(std::size_t pi_idx, std::size_t eps_idx) const {
        return Constraint{epsilons[eps_idx], pis[pi_idx]};
    }
};

// Adds epsilon 0 in front when the configured grid starts above it.
std::vector<double> evaluation_epsilons(const std::vector<double>& ebs);

// Picks a knob setting for one test input under one constraint.
using Decider = std::function<ControlDecision(const std::string& input_id, const Constraint& c)>;

Decider make_model_decider(const CostModel& cost, const FitnessModel& fit, const Dataset& test, bool precimonious);
Decider make_oracle_decider(const Dataset& test, OracleMode mode = OracleMode::fitness);

// Measured cost at the accurate setting over measured cost at the decision's
// setting; empty when the decision is infeasible or either measurement is
// missing.
std::optional<double> speedup(const Dataset& test, const ControlDecision& decision, const std::string& input_id);
std::optional<double> speedup(const AggregatedRuns& agg, const KnobSpace& space, const ControlDecision& decision,
                              const std::string& input_id);

struct SpeedupTable {
    ConstraintGrid grid;
    std::vector<std::optional<double>> values; // row-major: pis x epsilons
    std::size_t skipped_measurements = 0;      // feasible decisions without measured cost

    std::optional<double>& at(std::size_t pi_idx, std::size_t eps_idx) {
        return values[pi_idx * grid.epsilons.size() + eps_idx];
    }
    const std::optional<double>& at(std::size_t pi_idx, std::size_t eps_idx) const {
        return values[pi_idx * grid.epsilons.size() + eps_idx];
    }
};

// Average speedup over the test inputs with feasible decisions; NA cells when
// no input is feasible. Cells are independent and computed in parallel.
SpeedupTable speedup_table(const Dataset& test, const Decider& decide, const ConstraintGrid& grid,
                           bool parallel = true);

struct InversionCell {
    int comparisons = 0; // test inputs where at least one side was feasible
    int mismatches = 0;  // differing settings, or exactly one side feasible

    bool defined() const { return comparisons > 0; } // false renders NA
    bool inverted() const { return mismatches > 0; }
};

struct InversionTable {
    ConstraintGrid grid;
    std::vector<InversionCell> cells;

    const InversionCell& at(std::size_t pi_idx, std::size_t eps_idx) const {
        return cells[pi_idx * grid.epsilons.size() + eps_idx];
    }
};

// Per cell, compares the system's decision with the oracle's for every test
// input. Both-infeasible inputs agree; cells where every input has both sides
// infeasible are NA.
InversionTable inversion_table(const Dataset& test, const Decider& system, const Decider& oracle,
                               const ConstraintGrid& grid, bool parallel = true);

std::string render_speedup_table(const SpeedupTable& table);

// as_fraction renders mismatches/comparisons instead of T/F.
std::string render_inversion_table(const InversionTable& table, bool as_fraction = false);

std::string render_scatter(const std::vector<AccuracyPoint>& points, const std::string& x_name,
                           const std::string& y_name);
std::string render_pareto(const std::vector<ParetoPoint>& front);

// One line per (controller, input, constraint): the controller External
// Interface record.
struct DecisionRecord {
    std::string controller;
    std::string input_id;
    Constraint constraint;
    ControlDecision decision;
    SearchStats stats;
};

std::string render_decisions(const KnobSpace& space, const std::vector<DecisionRecord>& records);

// Report bundle written by the result task.
struct Reports {
    SpeedupTable speedups;     // exhaustive controller
    InversionTable inversions; // exhaustive vs oracle
    std::vector<AccuracyPoint> cost_scatter;
    std::vector<AccuracyPoint> fitness_scatter;
    std::map<std::string, std::vector<ParetoPoint>> pareto_fronts; // by input id
    std::vector<std::pair<std::string, std::string>> extra_files;  // name -> rendered content
};

// Writes speedups.tsv, inversions.tsv, cost_scatter.tsv, fitness_scatter.tsv
// and pareto_<input>.tsv under dir, plus any extra files.
void emit_reports(const std::string& dir, const Reports& reports);

} // namespace apxtune
