#pragma once

#include "apxtune/core.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace apxtune {

// "(start;stop;step)" — inclusive arithmetic grid. Both ends are part of the
// grid when step divides the span; elements are generated as start + i*step.
struct RangeSpec {
    double start = 0.0;
    double stop = 0.0;
    double step = 0.0;

    bool operator==(const RangeSpec&) const = default;
};

std::vector<double> expand_range(const RangeSpec& r);

// Parses "(start;stop;step)". `where` names the config line for error messages.
RangeSpec parse_range(std::string_view spec, const std::string& where = "range");
std::vector<double> parse_range_values(std::string_view spec, const std::string& where = "range");

// Column layout of a profile data file.
struct Schema {
    std::string input_column = "input_id";
    std::vector<std::string> feature_columns;
    std::string distance_column = "distance";
    std::string cost_column = "cost";
    std::optional<std::string> weight_column;

    bool operator==(const Schema&) const = default;
};

// Command template for profiling an external tunable program.
struct HarnessSpec {
    std::string command;                      // {input} and {knob:NAME} placeholders
    std::string distance_prefix = "DISTANCE "; // line prefix the distance is parsed from
    std::string cost_prefix = "COST ";
    double timeout_s = 60.0;
    int repeats = 1; // records per (input, setting); averaged on ingest

    bool operator==(const HarnessSpec&) const = default;
};

// Shape parameters of the bundled synthetic tunable benchmark.
struct SynthSpec {
    int n_inputs = 20;
    int feature_dim = 3;
    double sensitivity = 0.5; // 0 => all inputs share one surface
    double noise = 0.0;

    bool operator==(const SynthSpec&) const = default;
};

struct InputSpec {
    std::string id;
    std::string token; // substituted for {input} in the harness command
    std::vector<double> features;

    bool operator==(const InputSpec&) const = default;
};

enum class OracleMode { fitness, per_input };

struct AppConfig {
    RangeSpec pbs;
    RangeSpec ebs;
    double train_ratio = 0.75;
    std::uint64_t seed = 42;
    OracleMode oracle_mode = OracleMode::fitness;
    std::vector<std::pair<std::string, double>> accurate_knobs; // declaration order
    std::vector<std::pair<std::string, RangeSpec>> knobs;       // declaration order
    Schema schema;
    std::optional<HarnessSpec> harness;
    std::optional<SynthSpec> synth;
    std::vector<InputSpec> inputs;

    bool operator==(const AppConfig&) const = default;

    std::vector<double> pbs_values() const { return expand_range(pbs); }
    std::vector<double> ebs_values() const { return expand_range(ebs); }

    // Knob space with levels ascending and accurate_level resolved from
    // ACCURATE_KNOBS (by name; positionally when the config uses aliases).
    KnobSpace knob_space() const;
};

AppConfig parse_config(std::string_view text, const std::string& source_name = "<config>");
AppConfig load_config(const std::string& path);
std::string serialize_config(const AppConfig& cfg);

// Shortest round-trip decimal rendering, used by every text artifact.
std::string format_double(double v);

} // namespace apxtune
