#include "apxtune/config.hpp"

#include "apxtune/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace apxtune {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::vector<double> expand_range(const RangeSpec& r) {
    if (r.step == 0.0) {
        if (r.start != r.stop)
            fail(ErrorCategory::config, "range with zero step");
        return {r.start};
    }
    const double span = (r.stop - r.start) / r.step;
    const auto count = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
    std::vector<double> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        out.push_back(r.start + static_cast<double>(i) * r.step);
    return out;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

double parse_number(std::string_view s, const std::string& where) {
    s = trim(s);
    if (!s.empty() && s.front() == '+')
        s.remove_prefix(1);
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        fail(ErrorCategory::config, where + ": expected a number, got '" + std::string(s) + "'");
    return v;
}

std::uint64_t parse_u64(std::string_view s, const std::string& where) {
    s = trim(s);
    std::uint64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        fail(ErrorCategory::config, where + ": expected a non-negative integer, got '" + std::string(s) + "'");
    return v;
}

} // namespace

RangeSpec parse_range(std::string_view spec, const std::string& where) {
    const std::string_view s = trim(spec);
    if (s.size() < 2 || s.front() != '(' || s.back() != ')')
        fail(ErrorCategory::config, where + ": range must look like (start;stop;step), got '" + std::string(s) + "'");
    const std::string_view body = s.substr(1, s.size() - 2);
    const auto semi1 = body.find(';');
    const auto semi2 = semi1 == std::string_view::npos ? std::string_view::npos : body.find(';', semi1 + 1);
    if (semi1 == std::string_view::npos || semi2 == std::string_view::npos || body.find(';', semi2 + 1) != std::string_view::npos)
        fail(ErrorCategory::config, where + ": range needs exactly three ';'-separated fields");
    RangeSpec r;
    r.start = parse_number(body.substr(0, semi1), where + " (start, position 1)");
    r.stop = parse_number(body.substr(semi1 + 1, semi2 - semi1 - 1), where + " (stop, position 2)");
    r.step = parse_number(body.substr(semi2 + 1), where + " (step, position 3)");
    if (r.step == 0.0 && r.start != r.stop)
        fail(ErrorCategory::config, where + " (step, position 3): step must be nonzero");
    if (r.start != r.stop) {
        if ((r.stop - r.start) * r.step < 0.0)
            fail(ErrorCategory::config, where + " (step, position 3): step sign must point from start toward stop");
    }
    return r;
}

std::vector<double> parse_range_values(std::string_view spec, const std::string& where) {
    return expand_range(parse_range(spec, where));
}

namespace {

// Strips a trailing '#' comment, honoring single/double quotes.
std::string_view strip_comment(std::string_view line) {
    bool in_single = false, in_double = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (c == '\'' && !in_double)
            in_single = !in_single;
        else if (c == '"' && !in_single)
            in_double = !in_double;
        else if (c == '#' && !in_single && !in_double)
            return line.substr(0, i);
    }
    return line;
}

std::string unquote(std::string_view v) {
    if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') || (v.front() == '\'' && v.back() == '\'')))
        return std::string(v.substr(1, v.size() - 2));
    return std::string(v);
}

// {'iter1': '40', 'iter2': '40'}
std::vector<std::pair<std::string, double>> parse_knob_dict(std::string_view v, const std::string& where) {
    v = trim(v);
    if (v.size() < 2 || v.front() != '{' || v.back() != '}')
        fail(ErrorCategory::config, where + ": expected {'name': 'value', ...}");
    std::string_view body = trim(v.substr(1, v.size() - 2));
    std::vector<std::pair<std::string, double>> out;
    while (!body.empty()) {
        auto comma = body.find(',');
        std::string_view entry = comma == std::string_view::npos ? body : body.substr(0, comma);
        body = comma == std::string_view::npos ? std::string_view{} : trim(body.substr(comma + 1));
        auto colon = entry.find(':');
        if (colon == std::string_view::npos)
            fail(ErrorCategory::config, where + ": entry '" + std::string(entry) + "' lacks ':'");
        std::string name = unquote(trim(entry.substr(0, colon)));
        std::string value = unquote(trim(entry.substr(colon + 1)));
        if (name.empty())
            fail(ErrorCategory::config, where + ": empty knob name");
        out.emplace_back(std::move(name), parse_number(value, where));
    }
    if (out.empty())
        fail(ErrorCategory::config, where + ": empty knob dict");
    return out;
}

std::vector<std::string> split_list(std::string_view v, char sep) {
    std::vector<std::string> out;
    while (true) {
        auto p = v.find(sep);
        std::string_view item = trim(p == std::string_view::npos ? v : v.substr(0, p));
        if (!item.empty())
            out.emplace_back(item);
        if (p == std::string_view::npos)
            break;
        v = v.substr(p + 1);
    }
    return out;
}

struct ParsedLine {
    std::string key;
    std::string value;
    int line_no = 0;
};

} // namespace

AppConfig parse_config(std::string_view text, const std::string& source_name) {
    AppConfig cfg;
    bool saw_pbs = false, saw_ebs = false, saw_ratio = false, saw_accurate = false;
    bool saw_schema = false, saw_harness = false, saw_synth = false;
    int accurate_line = 0;
    Schema schema;
    HarnessSpec harness;
    SynthSpec synth;

    std::string section;
    int line_no = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    const auto where = [&](int ln) { return source_name + ":" + std::to_string(ln); };

    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = trim(strip_comment(raw));
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                fail(ErrorCategory::config, where(line_no) + ": malformed section header '" + std::string(line) + "'");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            static const std::unordered_set<std::string> known = {"FIXED", "KNOBS", "SCHEMA", "HARNESS", "SYNTH", "INPUTS"};
            if (!known.count(section))
                fail(ErrorCategory::config, where(line_no) + ": unknown section '" + section + "'");
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string_view::npos)
            fail(ErrorCategory::config, where(line_no) + ": expected KEY = value");
        const std::string key{trim(line.substr(0, eq))};
        const std::string value{trim(line.substr(eq + 1))};
        if (key.empty())
            fail(ErrorCategory::config, where(line_no) + ": empty key");
        if (section.empty())
            fail(ErrorCategory::config, where(line_no) + ": key '" + key + "' outside any section");

        const std::string ctx = where(line_no) + " (" + key + ")";
        if (section == "FIXED") {
            if (key == "PBS") {
                cfg.pbs = parse_range(value, ctx);
                saw_pbs = true;
            } else if (key == "EBS") {
                cfg.ebs = parse_range(value, ctx);
                saw_ebs = true;
            } else if (key == "TRAIN_RATIO") {
                cfg.train_ratio = parse_number(value, ctx);
                saw_ratio = true;
            } else if (key == "ACCURATE_KNOBS") {
                cfg.accurate_knobs = parse_knob_dict(value, ctx);
                saw_accurate = true;
                accurate_line = line_no;
            } else if (key == "SEED") {
                cfg.seed = parse_u64(value, ctx);
            } else if (key == "ORACLE_MODE") {
                if (value == "fitness")
                    cfg.oracle_mode = OracleMode::fitness;
                else if (value == "per_input")
                    cfg.oracle_mode = OracleMode::per_input;
                else
                    fail(ErrorCategory::config, ctx + ": expected 'fitness' or 'per_input'");
            } else {
                fail(ErrorCategory::config, ctx + ": unknown key '" + key + "' in [FIXED]");
            }
        } else if (section == "KNOBS") {
            for (const auto& [name, r] : cfg.knobs)
                if (name == key)
                    fail(ErrorCategory::config, ctx + ": duplicate knob '" + key + "'");
            cfg.knobs.emplace_back(key, parse_range(value, ctx));
        } else if (section == "SCHEMA") {
            saw_schema = true;
            if (key == "INPUT_COLUMN")
                schema.input_column = unquote(value);
            else if (key == "FEATURES")
                schema.feature_columns = split_list(value, ',');
            else if (key == "DISTANCE_COLUMN")
                schema.distance_column = unquote(value);
            else if (key == "COST_COLUMN")
                schema.cost_column = unquote(value);
            else if (key == "WEIGHT_COLUMN")
                schema.weight_column = unquote(value);
            else
                fail(ErrorCategory::config, ctx + ": unknown key '" + key + "' in [SCHEMA]");
        } else if (section == "HARNESS") {
            saw_harness = true;
            if (key == "COMMAND")
                harness.command = unquote(value);
            else if (key == "DISTANCE_PREFIX")
                harness.distance_prefix = unquote(value);
            else if (key == "COST_PREFIX")
                harness.cost_prefix = unquote(value);
            else if (key == "TIMEOUT_S")
                harness.timeout_s = parse_number(value, ctx);
            else if (key == "REPEATS")
                harness.repeats = static_cast<int>(parse_u64(value, ctx));
            else
                fail(ErrorCategory::config, ctx + ": unknown key '" + key + "' in [HARNESS]");
        } else if (section == "SYNTH") {
            saw_synth = true;
            if (key == "N_INPUTS")
                synth.n_inputs = static_cast<int>(parse_u64(value, ctx));
            else if (key == "FEATURE_DIM")
                synth.feature_dim = static_cast<int>(parse_u64(value, ctx));
            else if (key == "SENSITIVITY")
                synth.sensitivity = parse_number(value, ctx);
            else if (key == "NOISE")
                synth.noise = parse_number(value, ctx);
            else
                fail(ErrorCategory::config, ctx + ": unknown key '" + key + "' in [SYNTH]");
        } else if (section == "INPUTS") {
            InputSpec spec;
            spec.id = key;
            auto bar = value.find('|');
            spec.token = std::string(trim(bar == std::string::npos ? std::string_view(value) : std::string_view(value).substr(0, bar)));
            if (bar != std::string::npos)
                for (const auto& f : split_list(std::string_view(value).substr(bar + 1), ' '))
                    spec.features.push_back(parse_number(f, ctx));
            for (const auto& other : cfg.inputs)
                if (other.id == spec.id)
                    fail(ErrorCategory::config, ctx + ": duplicate input id '" + spec.id + "'");
            cfg.inputs.push_back(std::move(spec));
        }
    }

    if (!saw_pbs)
        fail(ErrorCategory::config, source_name + ": missing required key PBS");
    if (!saw_ebs)
        fail(ErrorCategory::config, source_name + ": missing required key EBS");
    if (!saw_ratio)
        fail(ErrorCategory::config, source_name + ": missing required key TRAIN_RATIO");
    if (!saw_accurate)
        fail(ErrorCategory::config, source_name + ": missing required key ACCURATE_KNOBS");
    if (cfg.knobs.empty())
        fail(ErrorCategory::config, source_name + ": [KNOBS] section declares no knobs");
    if (!(cfg.train_ratio > 0.0 && cfg.train_ratio < 1.0))
        fail(ErrorCategory::config, source_name + ": TRAIN_RATIO must lie strictly between 0 and 1");
    for (double p : cfg.pbs_values())
        if (!(p > 0.0 && p <= 1.0))
            fail(ErrorCategory::config, source_name + ": PBS values must lie in (0, 1]");
    for (double e : cfg.ebs_values())
        if (!(e >= 0.0 && e <= 1.0 + 1e-12))
            fail(ErrorCategory::config, source_name + ": EBS values must lie in [0, 1]");
    if (saw_schema)
        cfg.schema = schema;
    if (saw_harness) {
        if (harness.command.empty())
            fail(ErrorCategory::config, source_name + ": [HARNESS] requires COMMAND");
        if (harness.repeats < 1)
            fail(ErrorCategory::config, source_name + ": [HARNESS] REPEATS must be >= 1");
        cfg.harness = harness;
    }
    if (saw_synth) {
        if (synth.n_inputs < 2)
            fail(ErrorCategory::config, source_name + ": [SYNTH] N_INPUTS must be >= 2");
        if (synth.feature_dim < 0 || synth.noise < 0 || synth.sensitivity < 0)
            fail(ErrorCategory::config, source_name + ": [SYNTH] values must be non-negative");
        cfg.synth = synth;
    }

    // Resolve the accurate setting now so bad configs fail at load time.
    try {
        (void)cfg.knob_space();
    } catch (const Error& e) {
        fail(ErrorCategory::config, source_name + ":" + std::to_string(accurate_line) + " (ACCURATE_KNOBS): " + e.what());
    }
    return cfg;
}

KnobSpace AppConfig::knob_space() const {
    KnobSpace space;
    for (const auto& [name, range] : knobs) {
        Knob k;
        k.name = name;
        k.levels = expand_range(range);
        if (range.step < 0.0)
            std::reverse(k.levels.begin(), k.levels.end());
        space.knobs.push_back(std::move(k));
    }

    // Map ACCURATE_KNOBS entries onto knobs. The classic configs alias knob
    // names in the dict (e.g. 'iter1' for NUM_FIRST_ITER), so when no key
    // matches any declared name and the counts agree, fall back to
    // declaration order.
    std::size_t matched = 0;
    for (const auto& [name, value] : accurate_knobs)
        for (const auto& k : space.knobs)
            if (k.name == name)
                ++matched;
    const bool positional = matched == 0 && accurate_knobs.size() == space.knobs.size();
    if (!positional && matched != accurate_knobs.size())
        fail(ErrorCategory::config, "ACCURATE_KNOBS names do not match [KNOBS] declarations");
    if (positional && accurate_knobs.size() != space.knobs.size())
        fail(ErrorCategory::config, "ACCURATE_KNOBS entry count does not match [KNOBS]");

    const auto level_index = [](const Knob& k, double value) -> std::size_t {
        for (std::size_t i = 0; i < k.levels.size(); ++i)
            if (std::abs(k.levels[i] - value) <= 1e-9 * std::max(1.0, std::abs(k.levels[i])))
                return i;
        fail(ErrorCategory::config, "ACCURATE_KNOBS value " + format_double(value) + " is not a level of knob '" + k.name + "'");
    };

    if (positional) {
        for (std::size_t i = 0; i < space.knobs.size(); ++i)
            space.knobs[i].accurate_level = level_index(space.knobs[i], accurate_knobs[i].second);
    } else {
        for (const auto& [name, value] : accurate_knobs) {
            bool found = false;
            for (auto& k : space.knobs) {
                if (k.name == name) {
                    k.accurate_level = level_index(k, value);
                    found = true;
                    break;
                }
            }
            if (!found)
                fail(ErrorCategory::config, "ACCURATE_KNOBS names unknown knob '" + name + "'");
        }
    }
    validate(space);
    return space;
}

AppConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(ErrorCategory::io, "cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path);
}

namespace {

std::string format_range(const RangeSpec& r) {
    return "(" + format_double(r.start) + ";" + format_double(r.stop) + ";" + format_double(r.step) + ")";
}

} // namespace

std::string serialize_config(const AppConfig& cfg) {
    std::ostringstream out;
    out << "[FIXED]\n";
    out << "PBS = " << format_range(cfg.pbs) << "\n";
    out << "EBS = " << format_range(cfg.ebs) << "\n";
    out << "TRAIN_RATIO = " << format_double(cfg.train_ratio) << "\n";
    out << "ACCURATE_KNOBS = {";
    for (std::size_t i = 0; i < cfg.accurate_knobs.size(); ++i) {
        if (i)
            out << ", ";
        out << "'" << cfg.accurate_knobs[i].first << "': '" << format_double(cfg.accurate_knobs[i].second) << "'";
    }
    out << "}\n";
    out << "SEED = " << cfg.seed << "\n";
    out << "ORACLE_MODE = " << (cfg.oracle_mode == OracleMode::fitness ? "fitness" : "per_input") << "\n";

    out << "\n[KNOBS]\n";
    for (const auto& [name, r] : cfg.knobs)
        out << name << " = " << format_range(r) << "\n";

    if (!(cfg.schema == Schema{})) {
        out << "\n[SCHEMA]\n";
        out << "INPUT_COLUMN = " << cfg.schema.input_column << "\n";
        if (!cfg.schema.feature_columns.empty()) {
            out << "FEATURES = ";
            for (std::size_t i = 0; i < cfg.schema.feature_columns.size(); ++i)
                out << (i ? "," : "") << cfg.schema.feature_columns[i];
            out << "\n";
        }
        out << "DISTANCE_COLUMN = " << cfg.schema.distance_column << "\n";
        out << "COST_COLUMN = " << cfg.schema.cost_column << "\n";
        if (cfg.schema.weight_column)
            out << "WEIGHT_COLUMN = " << *cfg.schema.weight_column << "\n";
    }
    if (cfg.harness) {
        out << "\n[HARNESS]\n";
        out << "COMMAND = \"" << cfg.harness->command << "\"\n";
        out << "DISTANCE_PREFIX = \"" << cfg.harness->distance_prefix << "\"\n";
        out << "COST_PREFIX = \"" << cfg.harness->cost_prefix << "\"\n";
        out << "TIMEOUT_S = " << format_double(cfg.harness->timeout_s) << "\n";
        out << "REPEATS = " << cfg.harness->repeats << "\n";
    }
    if (cfg.synth) {
        out << "\n[SYNTH]\n";
        out << "N_INPUTS = " << cfg.synth->n_inputs << "\n";
        out << "FEATURE_DIM = " << cfg.synth->feature_dim << "\n";
        out << "SENSITIVITY = " << format_double(cfg.synth->sensitivity) << "\n";
        out << "NOISE = " << format_double(cfg.synth->noise) << "\n";
    }
    if (!cfg.inputs.empty()) {
        out << "\n[INPUTS]\n";
        for (const auto& spec : cfg.inputs) {
            out << spec.id << " = " << spec.token;
            if (!spec.features.empty()) {
                out << " |";
                for (double f : spec.features)
                    out << " " << format_double(f);
            }
            out << "\n";
        }
    }
    return out.str();
}

} // namespace apxtune
