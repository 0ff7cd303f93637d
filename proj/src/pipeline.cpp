#include "apxtune/pipeline.hpp"

#include "apxtune/controller.hpp"
#include "apxtune/dataset.hpp"
#include "apxtune/error.hpp"
#include "apxtune/eval.hpp"
#include "apxtune/harness.hpp"
#include "apxtune/models.hpp"
#include "apxtune/synthbench.hpp"
#include "apxtune/tsv.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace apxtune {

namespace fs = std::filesystem;

std::vector<std::string> normalize_tasks(const std::string& csv) {
    static const std::vector<std::string> canonical = {"run", "stats", "predict", "result"};
    std::set<std::string> requested;
    std::string item;
    std::istringstream in(csv);
    while (std::getline(in, item, ',')) {
        if (item.empty())
            continue;
        if (std::find(canonical.begin(), canonical.end(), item) == canonical.end())
            fail(ErrorCategory::usage, "unknown task '" + item + "' (expected run, stats, predict, result)");
        requested.insert(item);
    }
    if (requested.empty())
        fail(ErrorCategory::usage, "--tasks lists no tasks");
    std::vector<std::string> out;
    for (const auto& t : canonical)
        if (requested.count(t))
            out.push_back(t);
    return out;
}

Schema effective_schema(const AppConfig& cfg) {
    Schema schema = cfg.schema;
    if (cfg.synth && schema.feature_columns.empty() && cfg.synth->feature_dim > 0)
        schema.feature_columns = synth_feature_names(static_cast<std::size_t>(cfg.synth->feature_dim));
    return schema;
}

namespace {

std::string join_path(const std::string& dir, const char* name) {
    return dir + "/" + name;
}

bool exists(const std::string& path) {
    return fs::exists(path);
}

std::vector<std::string> parse_selector(const std::string& selector) {
    std::vector<std::string> ids;
    if (selector == "all" || selector.empty())
        return ids;
    std::istringstream in(selector);
    std::string item;
    while (std::getline(in, item, ','))
        if (!item.empty())
            ids.push_back(item);
    if (ids.empty())
        fail(ErrorCategory::usage, "--input selects nothing");
    return ids;
}

struct PipelineContext {
    const AppConfig& cfg;
    const TaskPlan& plan;
    KnobSpace space;
    Schema schema;
    std::uint64_t seed = 0;

    std::string path(const char* name) const { return join_path(plan.output_dir, name); }
    void note(const std::string& line) const {
        if (!plan.quiet)
            std::cout << line << "\n";
    }
};

// ---------------------------------------------------------------------------
// run

void write_failures(const PipelineContext& ctx, const std::vector<RunFailure>& failures) {
    tsv::Table t;
    t.header = {"input_id"};
    for (const auto& k : ctx.space.knobs)
        t.header.push_back(k.name);
    t.header.push_back("reason");
    t.header.push_back("output");
    for (const auto& f : failures) {
        std::vector<std::string> row;
        row.push_back(f.input_id);
        for (double v : setting_values(ctx.space, f.setting))
            row.push_back(format_double(v));
        row.push_back(f.reason);
        std::string captured = f.output;
        for (auto& c : captured)
            if (c == '\n' || c == '\t' || c == '\r')
                c = ' ';
        row.push_back(captured);
        t.rows.push_back(std::move(row));
    }
    tsv::write_file(ctx.path(artifacts::failures), t);
}

void task_run_synth(const PipelineContext& ctx) {
    const SynthSpec& synth = *ctx.cfg.synth;
    const auto n_inputs = static_cast<std::size_t>(synth.n_inputs);
    const SurfaceSpec surface = default_surface(ctx.space, static_cast<std::size_t>(synth.feature_dim),
                                                synth.sensitivity, synth.noise, ctx.seed);

    std::set<std::string> selected;
    {
        const auto ids = parse_selector(ctx.plan.input_selector);
        std::set<std::string> known;
        for (std::size_t i = 0; i < n_inputs; ++i)
            known.insert(synth_input_id(i, n_inputs));
        for (const auto& id : ids) {
            if (!known.count(id))
                fail(ErrorCategory::data, "--input names unknown synthetic input '" + id + "'");
            selected.insert(id);
        }
        if (selected.empty())
            selected = std::move(known);
    }

    const std::string profile_path = ctx.path(artifacts::profile);
    const std::size_t n_settings = setting_count(ctx.space);
    if (exists(profile_path)) {
        const Dataset existing = read_profile(profile_path, ctx.space, ctx.schema);
        std::set<std::pair<std::string, std::size_t>> have;
        for (const auto& r : existing.records)
            have.emplace(r.input_id, setting_rank(ctx.space, r.setting));
        bool complete = true;
        for (const auto& id : selected) {
            for (std::size_t rank = 0; rank < n_settings && complete; ++rank)
                complete = have.count({id, rank}) > 0;
            if (!complete)
                break;
        }
        if (complete) {
            ctx.note("run: " + profile_path + " already complete (" + std::to_string(existing.records.size()) +
                     " records), nothing to do");
            return;
        }
    }

    // Generation is deterministic per (input, setting), so a partial file is
    // simply regenerated; the merged result is identical to a fresh sweep.
    Dataset full = generate_dataset(surface, n_inputs);
    Dataset out;
    out.space = ctx.space;
    out.feature_names = ctx.schema.feature_columns;
    for (auto& r : full.records)
        if (selected.count(r.input_id))
            out.records.push_back(std::move(r));
    if (exists(profile_path)) {
        const Dataset existing = read_profile(profile_path, ctx.space, ctx.schema);
        for (const auto& r : existing.records)
            if (!selected.count(r.input_id))
                out.records.push_back(r);
    }
    finalize(out);
    write_profile(profile_path, out, ctx.schema);
    ctx.note("run: wrote " + profile_path + " (" + std::to_string(out.records.size()) + " records, " +
             std::to_string(selected.size()) + " inputs x " + std::to_string(n_settings) + " settings)");
}

void task_run_harness(const PipelineContext& ctx) {
    const HarnessSpec& harness = *ctx.cfg.harness;
    std::vector<InputSpec> inputs = ctx.cfg.inputs;
    if (inputs.empty())
        fail(ErrorCategory::config, "[HARNESS] runs need an [INPUTS] section");
    const auto ids = parse_selector(ctx.plan.input_selector);
    if (!ids.empty()) {
        std::vector<InputSpec> filtered;
        for (const auto& id : ids) {
            bool found = false;
            for (const auto& in : inputs)
                if (in.id == id) {
                    filtered.push_back(in);
                    found = true;
                    break;
                }
            if (!found)
                fail(ErrorCategory::config, "--input names unknown input '" + id + "'");
        }
        inputs = std::move(filtered);
    }

    const std::string profile_path = ctx.path(artifacts::profile);
    Dataset existing;
    const Dataset* resume = nullptr;
    if (exists(profile_path)) {
        existing = read_profile(profile_path, ctx.space, ctx.schema);
        resume = &existing;
    }

    const HarnessOutcome outcome = run_external(harness, ctx.space, inputs, enumerate_settings(ctx.space),
                                                ctx.schema.feature_columns, resume, ctx.plan.workers);
    write_profile(profile_path, outcome.dataset, ctx.schema);
    write_failures(ctx, outcome.failures);
    ctx.note("run: launched " + std::to_string(outcome.launched) + ", skipped " + std::to_string(outcome.skipped) +
             ", failures " + std::to_string(outcome.failures.size()) + " -> " + profile_path);
}

void task_run(const PipelineContext& ctx) {
    if (ctx.cfg.synth)
        task_run_synth(ctx);
    else if (ctx.cfg.harness)
        task_run_harness(ctx);
    else
        fail(ErrorCategory::config, "task 'run' needs a [SYNTH] or [HARNESS] section in the config");
}

// ---------------------------------------------------------------------------
// stats

void task_stats(const PipelineContext& ctx) {
    const Dataset ds = read_profile(ctx.path(artifacts::profile), ctx.space, ctx.schema);
    const Dataset norm = normalize_errors(ds);
    tsv::write_text_file(ctx.path(artifacts::normalized), render_profile(norm, ctx.schema));

    std::map<std::string, std::size_t> failure_counts;
    const std::string failures_path = ctx.path(artifacts::failures);
    if (exists(failures_path)) {
        const auto t = tsv::read_file(failures_path);
        const int col = t.column("input_id");
        if (col >= 0)
            for (const auto& row : t.rows)
                ++failure_counts[row[static_cast<std::size_t>(col)]];
    }

    struct InputStats {
        std::size_t n = 0;
        double d_min = 0.0, d_max = 0.0;
        bool any = false;
    };
    std::map<std::string, InputStats> by_input;
    for (const auto& r : norm.records) {
        auto& s = by_input[r.input_id];
        if (!s.any) {
            s.d_min = s.d_max = r.distance;
            s.any = true;
        } else {
            s.d_min = std::min(s.d_min, r.distance);
            s.d_max = std::max(s.d_max, r.distance);
        }
        ++s.n;
    }

    tsv::Table t;
    t.header = {"input_id", "n_records", "n_failures", "d_min", "d_max", "degenerate", "errors_in_bounds"};
    for (const auto& [id, s] : by_input) {
        const auto fc = failure_counts.count(id) ? failure_counts.at(id) : 0u;
        t.rows.push_back({id, std::to_string(s.n), std::to_string(fc), format_double(s.d_min), format_double(s.d_max),
                          norm.degenerate_inputs.count(id) ? "true" : "false", "true"});
    }
    tsv::write_file(ctx.path(artifacts::stats), t);
    ctx.note("stats: " + std::to_string(by_input.size()) + " inputs, " +
             std::to_string(norm.degenerate_inputs.size()) + " degenerate -> " + ctx.path(artifacts::stats));
}

// ---------------------------------------------------------------------------
// predict

void task_predict(const PipelineContext& ctx) {
    const Dataset ds = read_profile(ctx.path(artifacts::profile), ctx.space, ctx.schema);
    const Dataset norm = normalize_errors(ds);
    const SplitDataset sd = split(norm, ctx.cfg.train_ratio, ctx.seed);

    {
        tsv::Table t;
        t.header = {"input_id", "role"};
        for (const auto& id : norm.inputs) {
            const bool in_train = std::binary_search(sd.train.inputs.begin(), sd.train.inputs.end(), id);
            t.rows.push_back({id, in_train ? "train" : "test"});
        }
        tsv::write_file(ctx.path(artifacts::split_file), t);
    }

    const std::vector<double> eps_grid = evaluation_epsilons(ctx.cfg.ebs_values());
    const FitnessTable table = train_fitness_table(sd.train, eps_grid);
    if (table.missing_pairs() > 0)
        std::cerr << "predict: warning: " << table.missing_pairs()
                  << " (input, setting) pairs missing from the training sweep; "
                     "their inputs contribute no fitness mass\n";
    const TreeFitnessModel m5 = train_fitness_m5(table);
    const LinearFitnessModel lin_fit = train_fitness_linear(table);
    const TreeCostModel tree_cost = train_cost_tree(sd.train);
    const LinearCostModel lin_cost = train_cost_linear(sd.train);

    save_fitness_model(ctx.path(artifacts::fitness_table), table);
    save_fitness_model(ctx.path(artifacts::fitness_m5), m5);
    save_fitness_model(ctx.path(artifacts::fitness_linear), lin_fit);
    save_cost_model(ctx.path(artifacts::cost_tree), tree_cost);
    save_cost_model(ctx.path(artifacts::cost_linear), lin_cost);

    // Feasible-region size per grid cell, from the table model.
    const ConstraintGrid grid = ConstraintGrid::from_config(ctx.cfg);
    const std::size_t n_settings = setting_count(ctx.space);
    std::string sizes = "pi||eps";
    for (double e : grid.epsilons)
        sizes += "\t" + format_double(e);
    sizes += "\n";
    for (double pi : grid.pis) {
        sizes += format_double(pi);
        for (double eps : grid.epsilons) {
            std::size_t count = 0;
            for (std::size_t rank = 0; rank < n_settings; ++rank)
                if (table.fitness(eps, setting_at(ctx.space, rank)) >= pi)
                    ++count;
            sizes += "\t" + std::to_string(count);
        }
        sizes += "\n";
    }
    tsv::write_text_file(ctx.path(artifacts::feasible_sizes), sizes);

    ctx.note("predict: trained on " + std::to_string(sd.train.inputs.size()) + " inputs (test " +
             std::to_string(sd.test.inputs.size()) + "), models -> " + ctx.plan.output_dir);
}

// ---------------------------------------------------------------------------
// result

struct DecisionMatrix {
    std::vector<ControlDecision> decisions; // cell * n_inputs + input
    std::vector<SearchStats> stats;
};

template <typename Fn>
DecisionMatrix compute_matrix(const std::vector<std::string>& inputs, const ConstraintGrid& grid, Fn&& fn) {
    DecisionMatrix m;
    m.decisions.resize(grid.cells() * inputs.size());
    m.stats.resize(m.decisions.size());
    const auto n_eps = grid.epsilons.size();
    const auto total = static_cast<std::int64_t>(grid.cells());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (std::int64_t cell = 0; cell < total; ++cell) {
        const Constraint c = grid.at(static_cast<std::size_t>(cell) / n_eps, static_cast<std::size_t>(cell) % n_eps);
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            auto [decision, stats] = fn(i, c);
            m.decisions[static_cast<std::size_t>(cell) * inputs.size() + i] = std::move(decision);
            m.stats[static_cast<std::size_t>(cell) * inputs.size() + i] = stats;
        }
    }
    return m;
}

Decider matrix_decider(const DecisionMatrix& m, const std::vector<std::string>& inputs, const ConstraintGrid& grid) {
    return [&m, &inputs, &grid](const std::string& input_id, const Constraint& c) {
        std::size_t cell = grid.cells();
        for (std::size_t p = 0; p < grid.pis.size(); ++p)
            for (std::size_t e = 0; e < grid.epsilons.size(); ++e)
                if (grid.pis[p] == c.pi && grid.epsilons[e] == c.epsilon)
                    cell = p * grid.epsilons.size() + e;
        const auto it = std::lower_bound(inputs.begin(), inputs.end(), input_id);
        if (cell >= grid.cells() || it == inputs.end() || *it != input_id)
            fail(ErrorCategory::internal, "decision matrix lookup miss");
        return m.decisions[cell * inputs.size() + static_cast<std::size_t>(it - inputs.begin())];
    };
}

void task_result(const PipelineContext& ctx) {
    const Dataset norm = read_profile(ctx.path(artifacts::normalized), ctx.space, ctx.schema);
    if (!norm.normalized())
        fail(ErrorCategory::dependency, ctx.path(artifacts::normalized) + " has no error column; rerun --tasks=stats");

    std::vector<std::string> test_ids;
    {
        const auto t = tsv::read_file(ctx.path(artifacts::split_file));
        const int id_col = t.column("input_id");
        const int role_col = t.column("role");
        if (id_col < 0 || role_col < 0)
            fail(ErrorCategory::dependency, ctx.path(artifacts::split_file) + " is malformed; rerun --tasks=predict");
        for (const auto& row : t.rows)
            if (row[static_cast<std::size_t>(role_col)] == "test")
                test_ids.push_back(row[static_cast<std::size_t>(id_col)]);
    }
    if (test_ids.empty())
        fail(ErrorCategory::data, "split has no test inputs");
    const Dataset test = subset_inputs(norm, test_ids);

    const auto cost_tree_model = load_cost_model(ctx.path(artifacts::cost_tree));
    const auto cost_linear_model = load_cost_model(ctx.path(artifacts::cost_linear));
    const auto fitness_table_model = load_fitness_model(ctx.path(artifacts::fitness_table));
    const auto fitness_m5_model = load_fitness_model(ctx.path(artifacts::fitness_m5));
    const auto fitness_linear_model = load_fitness_model(ctx.path(artifacts::fitness_linear));

    const ConstraintGrid grid = ConstraintGrid::from_config(ctx.cfg);
    const AggregatedRuns agg = aggregate(test);
    const std::vector<double> eps_grid = evaluation_epsilons(ctx.cfg.ebs_values());

    const std::string& which = ctx.plan.controller;
    if (which != "all" && which != "exhaustive" && which != "precimonious" && which != "oracle" && which != "baseline")
        fail(ErrorCategory::usage, "unknown controller '" + which + "'");
    const auto want = [&which](const char* name) { return which == "all" || which == name; };

    const auto model_fn = [&](const CostModel& cost, const FitnessModel& fit, bool precimonious) {
        return [&, precimonious](std::size_t input_idx, const Constraint& c) {
            const ControlResult r =
                precimonious
                    ? control_precimonious(cost, fit, agg.features[input_idx], c, ctx.space)
                    : control_exhaustive(cost, fit, agg.features[input_idx], c, ctx.space, /*parallel=*/false);
            return std::make_pair(r.decision, r.stats);
        };
    };
    const auto oracle_fn = [&](std::size_t input_idx, const Constraint& c) {
        SearchStats stats{setting_count(ctx.space), 0, 0};
        return std::make_pair(control_oracle(agg, ctx.space, agg.inputs[input_idx], c, ctx.cfg.oracle_mode), stats);
    };

    const DecisionMatrix oracle_m = compute_matrix(test.inputs, grid, oracle_fn);
    DecisionMatrix exhaustive_m, precimonious_m, baseline_m;
    if (want("exhaustive"))
        exhaustive_m = compute_matrix(test.inputs, grid, model_fn(*cost_tree_model, *fitness_table_model, false));
    if (want("precimonious"))
        precimonious_m = compute_matrix(test.inputs, grid, model_fn(*cost_tree_model, *fitness_table_model, true));
    if (want("baseline"))
        baseline_m = compute_matrix(test.inputs, grid, model_fn(*cost_linear_model, *fitness_linear_model, false));

    Reports reports;
    const Decider oracle_decider = matrix_decider(oracle_m, test.inputs, grid);

    if (want("exhaustive")) {
        reports.speedups = speedup_table(test, matrix_decider(exhaustive_m, test.inputs, grid), grid);
        reports.inversions = inversion_table(test, matrix_decider(exhaustive_m, test.inputs, grid), oracle_decider, grid);
    } else {
        // The fixed-name report files must exist whichever controller was
        // selected; fall back to the oracle's own view.
        reports.speedups = speedup_table(test, oracle_decider, grid);
        reports.inversions = inversion_table(test, oracle_decider, oracle_decider, grid);
    }
    if (want("precimonious")) {
        const auto t = speedup_table(test, matrix_decider(precimonious_m, test.inputs, grid), grid);
        reports.extra_files.emplace_back("speedups_precimonious.tsv", render_speedup_table(t));
        const auto inv = inversion_table(test, matrix_decider(precimonious_m, test.inputs, grid), oracle_decider, grid);
        reports.extra_files.emplace_back("inversions_precimonious.tsv", render_inversion_table(inv));
    }
    if (want("oracle")) {
        const auto t = speedup_table(test, oracle_decider, grid);
        reports.extra_files.emplace_back("speedups_oracle.tsv", render_speedup_table(t));
    }
    if (want("baseline")) {
        const auto t = speedup_table(test, matrix_decider(baseline_m, test.inputs, grid), grid);
        reports.extra_files.emplace_back("speedups_baseline.tsv", render_speedup_table(t));
        const auto inv = inversion_table(test, matrix_decider(baseline_m, test.inputs, grid), oracle_decider, grid);
        reports.extra_files.emplace_back("inversions_baseline.tsv", render_inversion_table(inv));
    }

    reports.cost_scatter = evaluate_cost_accuracy(*cost_tree_model, test);
    const FitnessAccuracy fit_acc = evaluate_fitness_accuracy(*fitness_table_model, test, eps_grid);
    reports.fitness_scatter = fit_acc.points;
    const FitnessAccuracy fit_acc_m5 = evaluate_fitness_accuracy(*fitness_m5_model, test, eps_grid);
    reports.extra_files.emplace_back("fitness_scatter_m5.tsv",
                                     render_scatter(fit_acc_m5.points, "predicted_fitness", "measured_fitness"));

    for (const auto& id : test.inputs)
        reports.pareto_fronts.emplace(id, per_input_pareto(test, id));

    // Decision log + summary.
    std::vector<DecisionRecord> decision_records;
    struct Summary {
        std::size_t feasible = 0, total = 0, comparable = 0, within40 = 0;
    };
    std::map<std::string, Summary> summaries;
    const auto log_matrix = [&](const char* name, const DecisionMatrix& m) {
        auto& summary = summaries[name];
        for (std::size_t p = 0; p < grid.pis.size(); ++p) {
            for (std::size_t e = 0; e < grid.epsilons.size(); ++e) {
                const std::size_t cell = p * grid.epsilons.size() + e;
                for (std::size_t i = 0; i < test.inputs.size(); ++i) {
                    const auto& d = m.decisions[cell * test.inputs.size() + i];
                    decision_records.push_back(
                        {name, test.inputs[i], grid.at(p, e), d, m.stats[cell * test.inputs.size() + i]});
                    ++summary.total;
                    if (d.feasible)
                        ++summary.feasible;
                    const auto& od = oracle_m.decisions[cell * test.inputs.size() + i];
                    if (d.feasible && od.feasible) {
                        const auto* mine = agg.cell(static_cast<int>(i), setting_rank(ctx.space, *d.setting));
                        const auto* oracles = agg.cell(static_cast<int>(i), setting_rank(ctx.space, *od.setting));
                        if (mine && oracles) {
                            ++summary.comparable;
                            if (mine->mean_cost() <= 1.4 * oracles->mean_cost())
                                ++summary.within40;
                        }
                    }
                }
            }
        }
    };
    if (want("exhaustive"))
        log_matrix("exhaustive", exhaustive_m);
    if (want("precimonious"))
        log_matrix("precimonious", precimonious_m);
    if (want("baseline"))
        log_matrix("baseline", baseline_m);
    log_matrix("oracle", oracle_m);
    reports.extra_files.emplace_back(artifacts::decisions, render_decisions(ctx.space, decision_records));

    std::string summary_text = "controller\tfeasible_fraction\toracle_cost_within_40pct\n";
    for (const auto& [name, s] : summaries) {
        summary_text += name;
        summary_text += '\t';
        summary_text += format_double(s.total ? static_cast<double>(s.feasible) / static_cast<double>(s.total) : 0.0);
        summary_text += '\t';
        summary_text +=
            s.comparable ? format_double(static_cast<double>(s.within40) / static_cast<double>(s.comparable)) : "NA";
        summary_text += '\n';
    }
    reports.extra_files.emplace_back(artifacts::control_summary, summary_text);

    std::string accuracy_text = "model\tmetric\tvalue\n";
    accuracy_text += "cost_tree\tpearson\t" + format_double(pearson_correlation(reports.cost_scatter)) + "\n";
    accuracy_text +=
        "cost_linear\tpearson\t" +
        format_double(pearson_correlation(evaluate_cost_accuracy(*cost_linear_model, test))) + "\n";
    accuracy_text += "fitness_table\tunder_prediction_fraction\t" +
                     format_double(under_prediction_fraction(fit_acc.points)) + "\n";
    accuracy_text += "fitness_table\trmse\t" + format_double(rmse(fit_acc.points)) + "\n";
    accuracy_text += "fitness_m5\tunder_prediction_fraction\t" +
                     format_double(under_prediction_fraction(fit_acc_m5.points)) + "\n";
    accuracy_text += "fitness_m5\trmse\t" + format_double(rmse(fit_acc_m5.points)) + "\n";
    reports.extra_files.emplace_back("model_accuracy.tsv", accuracy_text);

    emit_reports(ctx.plan.output_dir, reports);
    ctx.note("result: reports for " + std::to_string(test.inputs.size()) + " test inputs -> " + ctx.plan.output_dir);
}

// ---------------------------------------------------------------------------

void check_dependencies(const PipelineContext& ctx) {
    const auto& tasks = ctx.plan.tasks;
    const auto planned = [&tasks](const char* t) {
        return std::find(tasks.begin(), tasks.end(), t) != tasks.end();
    };
    const auto need = [&](const char* artifact, const char* producer) {
        if (!exists(ctx.path(artifact)))
            fail(ErrorCategory::dependency, std::string("missing ") + ctx.path(artifact) + "; run --tasks=" +
                                                producer + " first");
    };
    for (const auto& t : tasks) {
        if (t == "run" && !ctx.cfg.synth && !ctx.cfg.harness)
            fail(ErrorCategory::config, "task 'run' needs a [SYNTH] or [HARNESS] section in the config");
        if ((t == "stats" || t == "predict") && !planned("run"))
            need(artifacts::profile, "run");
        if (t == "result") {
            if (!planned("stats")) {
                need(artifacts::normalized, "stats");
                need(artifacts::stats, "stats");
            }
            if (!planned("predict")) {
                need(artifacts::split_file, "predict");
                need(artifacts::cost_tree, "predict");
                need(artifacts::cost_linear, "predict");
                need(artifacts::fitness_table, "predict");
                need(artifacts::fitness_m5, "predict");
                need(artifacts::fitness_linear, "predict");
            }
        }
    }
}

} // namespace

void run_tasks(const AppConfig& cfg, const TaskPlan& plan) {
    if (plan.output_dir.empty())
        fail(ErrorCategory::usage, "--outputDir is required");
    if (plan.tasks.empty())
        fail(ErrorCategory::usage, "no tasks to run");

    PipelineContext ctx{cfg, plan, cfg.knob_space(), effective_schema(cfg), plan.seed.value_or(cfg.seed)};

#ifdef _OPENMP
    if (plan.workers > 0)
        omp_set_num_threads(plan.workers);
#endif

    std::error_code ec;
    fs::create_directories(plan.output_dir, ec);
    if (ec)
        fail(ErrorCategory::io, "cannot create output directory '" + plan.output_dir + "': " + ec.message());

    check_dependencies(ctx);

    for (const auto& t : plan.tasks) {
        if (t == "run")
            task_run(ctx);
        else if (t == "stats")
            task_stats(ctx);
        else if (t == "predict")
            task_predict(ctx);
        else if (t == "result")
            task_result(ctx);
    }
}

} // namespace apxtune
