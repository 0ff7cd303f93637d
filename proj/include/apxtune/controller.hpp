#pragma once

#include "apxtune/config.hpp"
#include "apxtune/core.hpp"
#include "apxtune/dataset.hpp"
#include "apxtune/models.hpp"

#include <cstdint>
#include <string>
#include <utility>

namespace apxtune {

struct SearchStats {
    std::uint64_t settings_evaluated = 0;
    std::uint64_t fitness_queries = 0;
    std::uint64_t cost_queries = 0;
};

struct ControlResult {
    ControlDecision decision;
    SearchStats stats;
};

// Sweeps every knob setting: feasible = fitness(epsilon, k) >= pi, answer =
// cheapest feasible setting by predicted cost, ties broken by the
// lexicographically smallest setting. The sweep runs on OpenMP threads; the
// argmin reduction is order-independent.
ControlResult control_exhaustive(const CostModel& cost, const FitnessModel& fit, const InputFeatures& features,
                                 const Constraint& c, const KnobSpace& space, bool parallel = true);

// Delta-debugging descent from the accurate setting: propose lowering every
// knob of a group by one quality step, accept while feasible and not costlier,
// split groups when stuck. Feasible results may be local minima.
ControlResult control_precimonious(const CostModel& cost, const FitnessModel& fit, const InputFeatures& features,
                                   const Constraint& c, const KnobSpace& space);

// Reference controller on measured data: feasibility from the exact fitness
// mass over the test inputs (or the input's own error in per_input mode),
// objective = the input's measured cost.
ControlDecision control_oracle(const Dataset& test, const std::string& input_id, const Constraint& c,
                               OracleMode mode = OracleMode::fitness);
ControlDecision control_oracle(const AggregatedRuns& agg, const KnobSpace& space, const std::string& input_id,
                               const Constraint& c, OracleMode mode = OracleMode::fitness);

// One quality step down for knob `knob_idx`, honoring the knob's quality
// orientation; false when the knob is already at its lowest quality.
bool lower_one_step(const KnobSpace& space, KnobSetting& setting, std::size_t knob_idx);

} // namespace apxtune
