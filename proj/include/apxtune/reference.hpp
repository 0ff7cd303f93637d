#pragma once

#include "apxtune/controller.hpp"
#include "apxtune/core.hpp"
#include "apxtune/dataset.hpp"
#include "apxtune/models.hpp"

#include <vector>

// Straight-line serial implementations, written directly from the
// definitions. They cross-check the OpenMP kernels in the tests and serve as
// the baselines in the benchmark target. Deliberately simple; no sharing with
// the production code paths they validate.
namespace apxtune::reference {

// Brute-force argmin over every setting, identical tie-breaking.
ControlResult control_exhaustive(const CostModel& cost, const FitnessModel& fit, const InputFeatures& features,
                                 const Constraint& c, const KnobSpace& space);

// The fitness mass of a setting evaluated by direct enumeration over the raw
// records: per-input mean error at the setting, weights in ascending input
// order.
double problem2_fitness(const Dataset& ds, const KnobSetting& setting, double epsilon);

struct FitnessTableRef {
    std::vector<double> grid;
    std::vector<std::vector<double>> rows; // by setting rank; empty = unprofiled
};

FitnessTableRef train_fitness_table(const Dataset& train, const std::vector<double>& grid);

// Quadratic dominance filter, ascending by error.
std::vector<ParetoPoint> pareto_front(const std::vector<ParetoPoint>& points);

} // namespace apxtune::reference
