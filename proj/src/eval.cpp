#include "apxtune/eval.hpp"

#include "apxtune/error.hpp"
#include "apxtune/tsv.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace apxtune {

std::vector<double> evaluation_epsilons(const std::vector<double>& ebs) {
    std::vector<double> out;
    if (ebs.empty() || ebs.front() > 1e-12)
        out.push_back(0.0);
    out.insert(out.end(), ebs.begin(), ebs.end());
    return out;
}

ConstraintGrid ConstraintGrid::make(std::vector<double> epsilons, std::vector<double> pis) {
    ConstraintGrid g;
    g.epsilons = std::move(epsilons);
    g.pis = std::move(pis);
    if (g.epsilons.empty() || g.pis.empty())
        fail(ErrorCategory::data, "constraint grid must have at least one epsilon and one pi");
    for (std::size_t i = 0; i < g.epsilons.size(); ++i) {
        if (!(g.epsilons[i] >= 0.0 && g.epsilons[i] <= 1.0 + 1e-12))
            fail(ErrorCategory::data, "grid epsilons must lie in [0, 1]");
        if (i && !(g.epsilons[i - 1] < g.epsilons[i]))
            fail(ErrorCategory::data, "grid epsilons must ascend");
    }
    for (std::size_t i = 0; i < g.pis.size(); ++i) {
        if (!(g.pis[i] > 0.0 && g.pis[i] <= 1.0))
            fail(ErrorCategory::data, "grid pis must lie in (0, 1]");
        if (i && !(g.pis[i - 1] > g.pis[i]))
            fail(ErrorCategory::data, "grid pis must descend");
    }
    return g;
}

ConstraintGrid ConstraintGrid::from_config(const AppConfig& cfg) {
    return make(evaluation_epsilons(cfg.ebs_values()), cfg.pbs_values());
}

Decider make_model_decider(const CostModel& cost, const FitnessModel& fit, const Dataset& test, bool precimonious) {
    const AggregatedRuns agg = aggregate(test);
    const KnobSpace space = test.space;
    return [&cost, &fit, agg, space, precimonious](const std::string& input_id, const Constraint& c) {
        const int idx = agg.input_index(input_id);
        if (idx < 0)
            fail(ErrorCategory::data, "unknown input '" + input_id + "'");
        const InputFeatures& features = agg.features[static_cast<std::size_t>(idx)];
        if (precimonious)
            return control_precimonious(cost, fit, features, c, space).decision;
        return control_exhaustive(cost, fit, features, c, space, /*parallel=*/false).decision;
    };
}

Decider make_oracle_decider(const Dataset& test, OracleMode mode) {
    if (!test.normalized())
        fail(ErrorCategory::data, "oracle requires a normalized dataset");
    AggregatedRuns agg = aggregate(test);
    const KnobSpace space = test.space;
    return [agg = std::move(agg), space, mode](const std::string& input_id, const Constraint& c) {
        return control_oracle(agg, space, input_id, c, mode);
    };
}

std::optional<double> speedup(const AggregatedRuns& agg, const KnobSpace& space, const ControlDecision& decision,
                              const std::string& input_id) {
    if (!decision.feasible || !decision.setting)
        return std::nullopt;
    const int idx = agg.input_index(input_id);
    if (idx < 0)
        return std::nullopt;
    const auto* accurate = agg.cell(idx, setting_rank(space, accurate_setting(space)));
    const auto* chosen = agg.cell(idx, setting_rank(space, *decision.setting));
    if (!accurate || !chosen)
        return std::nullopt;
    return accurate->mean_cost() / chosen->mean_cost();
}

std::optional<double> speedup(const Dataset& test, const ControlDecision& decision, const std::string& input_id) {
    return speedup(aggregate(test), test.space, decision, input_id);
}

SpeedupTable speedup_table(const Dataset& test, const Decider& decide, const ConstraintGrid& grid, bool parallel) {
    if (!test.normalized())
        fail(ErrorCategory::data, "speedup table requires a normalized dataset");
    const AggregatedRuns agg = aggregate(test);

    SpeedupTable table;
    table.grid = grid;
    table.values.assign(grid.cells(), std::nullopt);

    const auto n_eps = grid.epsilons.size();
    const auto total = static_cast<std::int64_t>(grid.cells());
    std::size_t skipped = 0;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) reduction(+ : skipped) if (parallel)
#endif
    for (std::int64_t cell = 0; cell < total; ++cell) {
        const std::size_t pi_idx = static_cast<std::size_t>(cell) / n_eps;
        const std::size_t eps_idx = static_cast<std::size_t>(cell) % n_eps;
        const Constraint c = grid.at(pi_idx, eps_idx);
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& input : test.inputs) {
            const ControlDecision decision = decide(input, c);
            if (!decision.feasible)
                continue;
            const auto s = speedup(agg, test.space, decision, input);
            if (!s) {
                ++skipped;
                continue;
            }
            sum += *s;
            ++count;
        }
        if (count > 0)
            table.values[static_cast<std::size_t>(cell)] = sum / static_cast<double>(count);
    }
    table.skipped_measurements = skipped;
    return table;
}

InversionTable inversion_table(const Dataset& test, const Decider& system, const Decider& oracle,
                               const ConstraintGrid& grid, bool parallel) {
    InversionTable table;
    table.grid = grid;
    table.cells.assign(grid.cells(), InversionCell{});

    const auto n_eps = grid.epsilons.size();
    const auto total = static_cast<std::int64_t>(grid.cells());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (parallel)
#endif
    for (std::int64_t cell = 0; cell < total; ++cell) {
        const std::size_t pi_idx = static_cast<std::size_t>(cell) / n_eps;
        const std::size_t eps_idx = static_cast<std::size_t>(cell) % n_eps;
        const Constraint c = grid.at(pi_idx, eps_idx);
        InversionCell& out = table.cells[static_cast<std::size_t>(cell)];
        for (const auto& input : test.inputs) {
            const ControlDecision sys = system(input, c);
            const ControlDecision orc = oracle(input, c);
            if (!sys.feasible && !orc.feasible)
                continue; // agreement on NA; contributes nothing
            ++out.comparisons;
            if (sys.feasible != orc.feasible || !(*sys.setting == *orc.setting))
                ++out.mismatches;
        }
    }
    return table;
}

namespace {

std::string render_grid_header(const ConstraintGrid& grid) {
    std::string out = "pi||eps";
    for (double e : grid.epsilons) {
        out += '\t';
        out += format_double(e);
    }
    out += '\n';
    return out;
}

} // namespace

std::string render_speedup_table(const SpeedupTable& table) {
    std::string out = render_grid_header(table.grid);
    for (std::size_t p = 0; p < table.grid.pis.size(); ++p) {
        out += format_double(table.grid.pis[p]);
        for (std::size_t e = 0; e < table.grid.epsilons.size(); ++e) {
            out += '\t';
            const auto& cell = table.at(p, e);
            out += cell ? format_double(*cell) : "NA";
        }
        out += '\n';
    }
    return out;
}

std::string render_inversion_table(const InversionTable& table, bool as_fraction) {
    std::string out = render_grid_header(table.grid);
    for (std::size_t p = 0; p < table.grid.pis.size(); ++p) {
        out += format_double(table.grid.pis[p]);
        for (std::size_t e = 0; e < table.grid.epsilons.size(); ++e) {
            out += '\t';
            const auto& cell = table.at(p, e);
            if (!cell.defined())
                out += "NA";
            else if (as_fraction)
                out += format_double(static_cast<double>(cell.mismatches) / static_cast<double>(cell.comparisons));
            else
                out += cell.inverted() ? "T" : "F";
        }
        out += '\n';
    }
    return out;
}

std::string render_scatter(const std::vector<AccuracyPoint>& points, const std::string& x_name,
                           const std::string& y_name) {
    std::string out = x_name + "\t" + y_name + "\n";
    for (const auto& p : points) {
        out += format_double(p.predicted);
        out += '\t';
        out += format_double(p.measured);
        out += '\n';
    }
    return out;
}

std::string render_pareto(const std::vector<ParetoPoint>& front) {
    std::string out = "error\tcost\n";
    for (const auto& p : front) {
        out += format_double(p.error);
        out += '\t';
        out += format_double(p.cost);
        out += '\n';
    }
    return out;
}

std::string render_decisions(const KnobSpace& space, const std::vector<DecisionRecord>& records) {
    std::string out = "controller\tinput_id\tepsilon\tpi\tfeasible\tsetting\tpredicted_cost\tpredicted_fitness\t"
                      "settings_evaluated\tfitness_queries\tcost_queries\n";
    for (const auto& r : records) {
        out += r.controller;
        out += '\t';
        out += r.input_id;
        out += '\t';
        out += format_double(r.constraint.epsilon);
        out += '\t';
        out += format_double(r.constraint.pi);
        out += '\t';
        out += r.decision.feasible ? "true" : "false";
        out += '\t';
        out += r.decision.setting ? format_setting(space, *r.decision.setting) : "NA";
        out += '\t';
        out += r.decision.predicted_cost ? format_double(*r.decision.predicted_cost) : "NA";
        out += '\t';
        out += r.decision.predicted_fitness ? format_double(*r.decision.predicted_fitness) : "NA";
        out += '\t';
        out += std::to_string(r.stats.settings_evaluated);
        out += '\t';
        out += std::to_string(r.stats.fitness_queries);
        out += '\t';
        out += std::to_string(r.stats.cost_queries);
        out += '\n';
    }
    return out;
}

void emit_reports(const std::string& dir, const Reports& reports) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        fail(ErrorCategory::io, "cannot create output directory '" + dir + "': " + ec.message());

    const auto path = [&dir](const std::string& name) { return dir + "/" + name; };
    tsv::write_text_file(path("speedups.tsv"), render_speedup_table(reports.speedups));
    tsv::write_text_file(path("inversions.tsv"), render_inversion_table(reports.inversions));
    tsv::write_text_file(path("cost_scatter.tsv"),
                         render_scatter(reports.cost_scatter, "predicted_cost", "measured_cost"));
    tsv::write_text_file(path("fitness_scatter.tsv"),
                         render_scatter(reports.fitness_scatter, "predicted_fitness", "measured_fitness"));
    for (const auto& [input, front] : reports.pareto_fronts)
        tsv::write_text_file(path("pareto_" + input + ".tsv"), render_pareto(front));
    for (const auto& [name, content] : reports.extra_files)
        tsv::write_text_file(path(name), content);
}

} // namespace apxtune
