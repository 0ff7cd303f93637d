#include "apxtune/reference.hpp"

#include "apxtune/error.hpp"

#include <algorithm>

namespace apxtune::reference {

ControlResult control_exhaustive(const CostModel& cost, const FitnessModel& fit, const InputFeatures& features,
                                 const Constraint& c, const KnobSpace& space) {
    ControlResult out;
    bool found = false;
    double best_cost = 0.0;
    double best_fitness = 0.0;
    KnobSetting best_setting;

    for (const KnobSetting& s : enumerate_settings(space)) {
        ++out.stats.settings_evaluated;
        ++out.stats.fitness_queries;
        const double f = fit.fitness(c.epsilon, s);
        if (f < c.pi)
            continue;
        ++out.stats.cost_queries;
        const double predicted = cost.predict(features, s);
        if (!found || predicted < best_cost || (predicted == best_cost && s < best_setting)) {
            found = true;
            best_cost = predicted;
            best_fitness = f;
            best_setting = s;
        }
    }
    out.decision = found ? feasible_decision(best_setting, best_cost, best_fitness) : infeasible_decision();
    return out;
}

double problem2_fitness(const Dataset& ds, const KnobSetting& setting, double epsilon) {
    double total_weight = 0.0;
    double raw_mass = 0.0;
    for (const auto& id : ds.inputs) { // ascending, same summation order as the kernel
        const double weight = ds.input_weights.empty() ? 1.0 : ds.input_weights.at(id);
        total_weight += weight;
        double err_sum = 0.0;
        int n = 0;
        for (const auto& r : ds.records) {
            if (r.input_id != id || !(r.setting == setting))
                continue;
            if (!r.error)
                fail(ErrorCategory::data, "problem2_fitness requires a normalized dataset");
            err_sum += *r.error;
            ++n;
        }
        if (n > 0 && err_sum / n <= epsilon)
            raw_mass += weight;
    }
    return raw_mass / total_weight;
}

FitnessTableRef train_fitness_table(const Dataset& train, const std::vector<double>& grid) {
    FitnessTableRef table;
    table.grid = grid;
    table.rows.resize(setting_count(train.space));
    for (std::size_t rank = 0; rank < table.rows.size(); ++rank) {
        const KnobSetting s = setting_at(train.space, rank);
        bool profiled = false;
        for (const auto& r : train.records)
            if (r.setting == s) {
                profiled = true;
                break;
            }
        if (!profiled)
            continue;
        auto& row = table.rows[rank];
        row.reserve(grid.size());
        for (double eps : grid)
            row.push_back(problem2_fitness(train, s, eps));
    }
    return table;
}

std::vector<ParetoPoint> pareto_front(const std::vector<ParetoPoint>& points) {
    std::vector<ParetoPoint> front;
    for (const auto& p : points) {
        bool dominated = false;
        for (const auto& q : points)
            if (q.error <= p.error && q.cost <= p.cost && (q.error < p.error || q.cost < p.cost)) {
                dominated = true;
                break;
            }
        if (!dominated)
            front.push_back(p);
    }
    std::sort(front.begin(), front.end());
    return front;
}

} // namespace apxtune::reference
