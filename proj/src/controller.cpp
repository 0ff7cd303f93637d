#include "apxtune/controller.hpp"

#include "apxtune/error.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace apxtune {

namespace {

struct BestSetting {
    bool found = false;
    double cost = 0.0;
    double fitness = 0.0;
    std::size_t rank = 0;
};

// Total order on candidates: cheaper wins, equal cost falls back to the
// lexicographically smaller setting (= smaller rank). Folding with this is
// order-independent, so the parallel reduction is deterministic.
bool better(const BestSetting& a, const BestSetting& b) {
    if (!a.found || !b.found)
        return a.found;
    if (a.cost != b.cost)
        return a.cost < b.cost;
    return a.rank < b.rank;
}

} // namespace

ControlResult control_exhaustive(const CostModel& cost, const FitnessModel& fit, const InputFeatures& features,
                                 const Constraint& c, const KnobSpace& space, bool parallel) {
    validate(space);
    validate(c);
    const std::size_t n = setting_count(space);

    BestSetting best;
    std::uint64_t fitness_queries = 0;
    std::uint64_t cost_queries = 0;

    const auto evaluate = [&](std::size_t rank, BestSetting& local, std::uint64_t& fq, std::uint64_t& cq) {
        const KnobSetting s = setting_at(space, rank);
        ++fq;
        const double f = fit.fitness(c.epsilon, s);
        if (f < c.pi)
            return;
        ++cq;
        BestSetting cand{true, cost.predict(features, s), f, rank};
        if (better(cand, local))
            local = cand;
    };

#ifdef _OPENMP
#pragma omp parallel if (parallel && n > 1)
    {
        BestSetting local;
        std::uint64_t fq = 0, cq = 0;
#pragma omp for schedule(static) nowait
        for (std::int64_t r = 0; r < static_cast<std::int64_t>(n); ++r)
            evaluate(static_cast<std::size_t>(r), local, fq, cq);
#pragma omp critical
        {
            if (better(local, best))
                best = local;
            fitness_queries += fq;
            cost_queries += cq;
        }
    }
#else
    (void)parallel;
    for (std::size_t r = 0; r < n; ++r)
        evaluate(r, best, fitness_queries, cost_queries);
#endif

    ControlResult out;
    out.stats = {n, fitness_queries, cost_queries};
    if (best.found)
        out.decision = feasible_decision(setting_at(space, best.rank), best.cost, best.fitness);
    else
        out.decision = infeasible_decision();
    return out;
}

bool lower_one_step(const KnobSpace& space, KnobSetting& setting, std::size_t knob_idx) {
    const Knob& k = space.knobs[knob_idx];
    auto& idx = setting.levels[knob_idx];
    // accurate_level == 0 means larger values are lower quality; otherwise
    // quality falls toward index 0.
    if (k.accurate_level == 0) {
        if (static_cast<std::size_t>(idx) + 1 >= k.levels.size())
            return false;
        ++idx;
    } else {
        if (idx == 0)
            return false;
        --idx;
    }
    return true;
}

ControlResult control_precimonious(const CostModel& cost, const FitnessModel& fit, const InputFeatures& features,
                                   const Constraint& c, const KnobSpace& space) {
    validate(space);
    validate(c);
    const std::size_t n_knobs = space.arity();

    SearchStats stats;
    KnobSetting cur = accurate_setting(space);
    stats.settings_evaluated = 1;
    ++stats.fitness_queries;
    double cur_fitness = fit.fitness(c.epsilon, cur);
    if (cur_fitness < c.pi)
        return {infeasible_decision(), stats};
    ++stats.cost_queries;
    double cur_cost = cost.predict(features, cur);

    std::size_t granularity = 1;
    while (true) {
        // Contiguous groups, sizes as equal as possible, the first
        // (n_knobs % granularity) groups one knob larger.
        bool accepted = false;
        const std::size_t base = n_knobs / granularity;
        const std::size_t extra = n_knobs % granularity;
        std::size_t begin = 0;
        for (std::size_t g = 0; g < granularity && !accepted; ++g) {
            const std::size_t size = base + (g < extra ? 1 : 0);
            const std::size_t end = begin + size;
            KnobSetting cand = cur;
            bool lowered = false;
            for (std::size_t k = begin; k < end; ++k)
                lowered = lower_one_step(space, cand, k) || lowered;
            begin = end;
            if (!lowered)
                continue;
            ++stats.settings_evaluated;
            ++stats.fitness_queries;
            const double f = fit.fitness(c.epsilon, cand);
            if (f < c.pi)
                continue;
            ++stats.cost_queries;
            const double cc = cost.predict(features, cand);
            if (cc <= cur_cost) {
                cur = std::move(cand);
                cur_cost = cc;
                cur_fitness = f;
                accepted = true;
            }
        }
        if (accepted) {
            granularity = 1; // retry the coarsest move from the new point
            continue;
        }
        if (granularity >= n_knobs)
            break;
        granularity = std::min(granularity * 2, n_knobs);
    }

    return {feasible_decision(std::move(cur), cur_cost, cur_fitness), stats};
}

ControlDecision control_oracle(const AggregatedRuns& agg, const KnobSpace& space, const std::string& input_id,
                               const Constraint& c, OracleMode mode) {
    validate(c);
    const int input_idx = agg.input_index(input_id);
    if (input_idx < 0)
        fail(ErrorCategory::data, "unknown input '" + input_id + "'");

    const std::size_t n = setting_count(space);
    BestSetting best;
    for (std::size_t rank = 0; rank < n; ++rank) {
        const auto* cell = agg.cell(input_idx, rank);
        const double mass = measured_fitness(agg, rank, c.epsilon);
        bool feasible = false;
        if (mode == OracleMode::fitness)
            feasible = mass >= c.pi;
        else
            feasible = cell != nullptr && cell->mean_error() <= c.epsilon;
        if (!feasible || cell == nullptr)
            continue; // a setting unmeasured for this input has no cost to rank
        BestSetting cand{true, cell->mean_cost(), mass, rank};
        if (better(cand, best))
            best = cand;
    }
    if (!best.found)
        return infeasible_decision();
    return feasible_decision(setting_at(space, best.rank), best.cost, best.fitness);
}

ControlDecision control_oracle(const Dataset& test, const std::string& input_id, const Constraint& c,
                               OracleMode mode) {
    if (!test.normalized())
        fail(ErrorCategory::data, "oracle requires a normalized dataset");
    return control_oracle(aggregate(test), test.space, input_id, c, mode);
}

} // namespace apxtune
