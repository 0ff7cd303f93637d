#pragma once

#include "apxtune/config.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace apxtune {

// Fixed artifact names under the output directory; each task is independently
// re-runnable from these files.
namespace artifacts {
inline constexpr const char* profile = "profile.tsv";
inline constexpr const char* failures = "failures.tsv";
inline constexpr const char* stats = "stats.tsv";
inline constexpr const char* normalized = "normalized.tsv";
inline constexpr const char* split_file = "split.tsv";
inline constexpr const char* cost_tree = "cost_tree.model";
inline constexpr const char* cost_linear = "cost_linear.model";
inline constexpr const char* fitness_table = "fitness_table.model";
inline constexpr const char* fitness_m5 = "fitness_m5.model";
inline constexpr const char* fitness_linear = "fitness_linear.model";
inline constexpr const char* feasible_sizes = "feasible_sizes.tsv";
inline constexpr const char* speedups = "speedups.tsv";
inline constexpr const char* inversions = "inversions.tsv";
inline constexpr const char* cost_scatter = "cost_scatter.tsv";
inline constexpr const char* fitness_scatter = "fitness_scatter.tsv";
inline constexpr const char* decisions = "decisions.tsv";
inline constexpr const char* control_summary = "control_summary.tsv";
} // namespace artifacts

struct TaskPlan {
    std::vector<std::string> tasks; // canonical dependency order
    std::string bench;
    std::string input_selector = "all"; // "all" or comma-separated ids
    std::string output_dir;
    std::optional<std::uint64_t> seed; // overrides the config seed
    int workers = 0;                   // 0 = hardware default
    std::string controller = "all";    // all|exhaustive|precimonious|oracle|baseline
    bool quiet = false;
};

// Parses a --tasks list, validates names, returns them in dependency order.
std::vector<std::string> normalize_tasks(const std::string& csv);

// Validates the plan's dependencies against artifacts on disk, then runs the
// tasks in order. Throws Error on any failure.
void run_tasks(const AppConfig& cfg, const TaskPlan& plan);

// The schema used for profile files of this config; synthetic benches get
// generated feature columns when the config declares none.
Schema effective_schema(const AppConfig& cfg);

} // namespace apxtune
