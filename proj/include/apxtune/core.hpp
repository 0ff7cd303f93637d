#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace apxtune {

// A discrete tuning parameter. Levels are the raw values the program accepts,
// stored ascending; accurate_level is the index of the maximum-quality value
// (not necessarily the largest one, e.g. decimation ratios).
struct Knob {
    std::string name;
    std::vector<double> levels;
    std::size_t accurate_level = 0;
};

struct KnobSpace {
    std::vector<Knob> knobs;

    std::size_t arity() const { return knobs.size(); }
};

// One point of the search lattice: a level index per knob, in KnobSpace order.
// Ordering is lexicographic on indices and is used for tie-breaking everywhere.
struct KnobSetting {
    std::vector<std::int32_t> levels;

    auto operator<=>(const KnobSetting&) const = default;
};

struct KnobSettingHash {
    std::size_t operator()(const KnobSetting& s) const {
        std::size_t h = 1469598103934665603ull;
        for (auto v : s.levels) {
            h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ull;
            h *= 1099511628211ull;
        }
        return h;
    }
};

struct Constraint {
    double epsilon = 0.0; // normalized error bound, in [0, 1]
    double pi = 1.0;      // probability the bound must hold with, in (0, 1]
};

struct InputFeatures {
    std::vector<double> values; // names and order fixed per application; may be empty

    auto operator<=>(const InputFeatures&) const = default;
};

// One profiled execution.
struct RunRecord {
    std::string input_id;
    InputFeatures features;
    KnobSetting setting;
    double distance = 0.0;             // raw, application-specific units, >= 0
    std::optional<double> error;       // normalized to [0,1]; unset before normalization
    double cost = 0.0;                 // seconds, joules, ... ; > 0
};

// The controller's answer. feasible == false iff setting is absent (an "NA").
struct ControlDecision {
    std::optional<KnobSetting> setting;
    std::optional<double> predicted_cost;
    std::optional<double> predicted_fitness;
    bool feasible = false;
};

void validate(const Knob& k);
void validate(const KnobSpace& space);
void validate(const KnobSpace& space, const KnobSetting& s);
void validate(const Constraint& c);

// Number of settings in the lattice (product of per-knob level counts).
std::size_t setting_count(const KnobSpace& space);

// Lexicographic rank <-> setting. Rank 0 is all-zero indices; the last knob
// varies fastest.
KnobSetting setting_at(const KnobSpace& space, std::size_t rank);
std::size_t setting_rank(const KnobSpace& space, const KnobSetting& s);

// All settings, exactly once, in lexicographic index order.
std::vector<KnobSetting> enumerate_settings(const KnobSpace& space);

// Every knob at its accurate_level.
KnobSetting accurate_setting(const KnobSpace& space);

// Raw level values selected by a setting, in knob order.
std::vector<double> setting_values(const KnobSpace& space, const KnobSetting& s);

ControlDecision infeasible_decision();
ControlDecision feasible_decision(KnobSetting setting, double predicted_cost, double predicted_fitness);

// Render "3,40" style value lists for reports and error messages.
std::string format_setting(const KnobSpace& space, const KnobSetting& s);

} // namespace apxtune
