#include "apxtune/core.hpp"

#include "apxtune/error.hpp"

#include <charconv>
#include <unordered_set>

namespace apxtune {

const char* to_string(ErrorCategory c) {
    switch (c) {
    case ErrorCategory::usage: return "usage";
    case ErrorCategory::config: return "config";
    case ErrorCategory::io: return "io";
    case ErrorCategory::data: return "data";
    case ErrorCategory::dependency: return "dependency";
    case ErrorCategory::internal: return "internal";
    }
    return "internal";
}

void validate(const Knob& k) {
    if (k.name.empty())
        fail(ErrorCategory::data, "knob with empty name");
    if (k.levels.empty())
        fail(ErrorCategory::data, "knob '" + k.name + "' has no levels");
    for (std::size_t i = 1; i < k.levels.size(); ++i)
        if (!(k.levels[i - 1] < k.levels[i]))
            fail(ErrorCategory::data, "knob '" + k.name + "' levels not strictly ascending");
    if (k.accurate_level >= k.levels.size())
        fail(ErrorCategory::data, "knob '" + k.name + "' accurate_level out of range");
}

void validate(const KnobSpace& space) {
    if (space.knobs.empty())
        fail(ErrorCategory::data, "knob space has no knobs");
    std::unordered_set<std::string> names;
    for (const auto& k : space.knobs) {
        validate(k);
        if (!names.insert(k.name).second)
            fail(ErrorCategory::data, "duplicate knob name '" + k.name + "'");
    }
}

void validate(const KnobSpace& space, const KnobSetting& s) {
    if (s.levels.size() != space.arity())
        fail(ErrorCategory::data, "setting arity does not match knob space");
    for (std::size_t i = 0; i < s.levels.size(); ++i)
        if (s.levels[i] < 0 || static_cast<std::size_t>(s.levels[i]) >= space.knobs[i].levels.size())
            fail(ErrorCategory::data, "level index out of range for knob '" + space.knobs[i].name + "'");
}

void validate(const Constraint& c) {
    if (!(c.epsilon >= 0.0 && c.epsilon <= 1.0))
        fail(ErrorCategory::data, "epsilon must lie in [0, 1]");
    if (!(c.pi > 0.0 && c.pi <= 1.0))
        fail(ErrorCategory::data, "pi must lie in (0, 1]");
}

std::size_t setting_count(const KnobSpace& space) {
    std::size_t n = 1;
    for (const auto& k : space.knobs) {
        if (n > SIZE_MAX / k.levels.size())
            fail(ErrorCategory::data, "knob space size overflows");
        n *= k.levels.size();
    }
    return n;
}

KnobSetting setting_at(const KnobSpace& space, std::size_t rank) {
    KnobSetting s;
    s.levels.resize(space.arity());
    for (std::size_t i = space.arity(); i-- > 0;) {
        const std::size_t m = space.knobs[i].levels.size();
        s.levels[i] = static_cast<std::int32_t>(rank % m);
        rank /= m;
    }
    if (rank != 0)
        fail(ErrorCategory::data, "setting rank out of range");
    return s;
}

std::size_t setting_rank(const KnobSpace& space, const KnobSetting& s) {
    validate(space, s);
    std::size_t rank = 0;
    for (std::size_t i = 0; i < space.arity(); ++i)
        rank = rank * space.knobs[i].levels.size() + static_cast<std::size_t>(s.levels[i]);
    return rank;
}

std::vector<KnobSetting> enumerate_settings(const KnobSpace& space) {
    const std::size_t n = setting_count(space);
    std::vector<KnobSetting> out;
    out.reserve(n);
    for (std::size_t r = 0; r < n; ++r)
        out.push_back(setting_at(space, r));
    return out;
}

KnobSetting accurate_setting(const KnobSpace& space) {
    KnobSetting s;
    s.levels.reserve(space.arity());
    for (const auto& k : space.knobs)
        s.levels.push_back(static_cast<std::int32_t>(k.accurate_level));
    return s;
}

std::vector<double> setting_values(const KnobSpace& space, const KnobSetting& s) {
    validate(space, s);
    std::vector<double> v;
    v.reserve(space.arity());
    for (std::size_t i = 0; i < space.arity(); ++i)
        v.push_back(space.knobs[i].levels[static_cast<std::size_t>(s.levels[i])]);
    return v;
}

ControlDecision infeasible_decision() {
    return ControlDecision{};
}

ControlDecision feasible_decision(KnobSetting setting, double predicted_cost, double predicted_fitness) {
    ControlDecision d;
    d.setting = std::move(setting);
    d.predicted_cost = predicted_cost;
    d.predicted_fitness = predicted_fitness;
    d.feasible = true;
    return d;
}

std::string format_setting(const KnobSpace& space, const KnobSetting& s) {
    const auto values = setting_values(space, s);
    std::string out;
    char buf[32];
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i)
            out += ',';
        auto res = std::to_chars(buf, buf + sizeof(buf), values[i]);
        out.append(buf, res.ptr);
    }
    return out;
}

} // namespace apxtune
