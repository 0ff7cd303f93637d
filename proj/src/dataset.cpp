#include "apxtune/dataset.hpp"

#include "apxtune/error.hpp"
#include "apxtune/tsv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <unordered_map>

namespace apxtune {

bool Dataset::normalized() const {
    if (records.empty())
        return false;
    for (const auto& r : records)
        if (!r.error)
            return false;
    return true;
}

void finalize(Dataset& ds) {
    validate(ds.space);
    std::unordered_map<std::string, const InputFeatures*> seen;
    for (const auto& r : ds.records) {
        validate(ds.space, r.setting);
        if (r.input_id.empty())
            fail(ErrorCategory::data, "record with empty input id");
        if (r.features.values.size() != ds.feature_names.size())
            fail(ErrorCategory::data, "record for input '" + r.input_id + "' has " +
                                          std::to_string(r.features.values.size()) + " features, expected " +
                                          std::to_string(ds.feature_names.size()));
        for (double v : r.features.values)
            if (!std::isfinite(v))
                fail(ErrorCategory::data, "non-finite feature for input '" + r.input_id + "'");
        if (!(std::isfinite(r.distance) && r.distance >= 0.0))
            fail(ErrorCategory::data, "distance must be finite and >= 0 (input '" + r.input_id + "')");
        if (!(std::isfinite(r.cost) && r.cost > 0.0))
            fail(ErrorCategory::data, "cost must be finite and > 0 (input '" + r.input_id + "')");
        if (r.error && !(*r.error >= 0.0 && *r.error <= 1.0))
            fail(ErrorCategory::data, "normalized error outside [0, 1] (input '" + r.input_id + "')");
        auto [it, inserted] = seen.emplace(r.input_id, &r.features);
        if (!inserted && !(it->second->values == r.features.values))
            fail(ErrorCategory::data, "input '" + r.input_id + "' appears with inconsistent features");
    }
    ds.inputs.clear();
    ds.inputs.reserve(seen.size());
    for (const auto& [id, _] : seen)
        ds.inputs.push_back(id);
    std::sort(ds.inputs.begin(), ds.inputs.end());
    for (const auto& [id, w] : ds.input_weights)
        if (!(std::isfinite(w) && w > 0.0))
            fail(ErrorCategory::data, "input weight for '" + id + "' must be finite and > 0");
}

Dataset normalize_errors(const Dataset& ds) {
    Dataset out = ds;
    struct MinMax {
        double lo = 0.0, hi = 0.0;
        bool any = false;
    };
    std::unordered_map<std::string, MinMax> ranges;
    for (const auto& r : out.records) {
        auto& mm = ranges[r.input_id];
        if (!mm.any) {
            mm.lo = mm.hi = r.distance;
            mm.any = true;
        } else {
            mm.lo = std::min(mm.lo, r.distance);
            mm.hi = std::max(mm.hi, r.distance);
        }
    }
    out.degenerate_inputs.clear();
    for (auto& r : out.records) {
        const auto& mm = ranges.at(r.input_id);
        if (mm.hi == mm.lo) {
            r.error = 0.0;
            out.degenerate_inputs.insert(r.input_id);
        } else {
            r.error = (r.distance - mm.lo) / (mm.hi - mm.lo);
        }
    }
    finalize(out);
    return out;
}

Dataset subset_inputs(const Dataset& ds, const std::vector<std::string>& ids) {
    std::set<std::string> keep(ids.begin(), ids.end());
    Dataset out;
    out.space = ds.space;
    out.feature_names = ds.feature_names;
    for (const auto& r : ds.records)
        if (keep.count(r.input_id))
            out.records.push_back(r);
    for (const auto& id : ds.degenerate_inputs)
        if (keep.count(id))
            out.degenerate_inputs.insert(id);
    for (const auto& [id, w] : ds.input_weights)
        if (keep.count(id))
            out.input_weights.emplace(id, w);
    finalize(out);
    return out;
}

SplitDataset split(const Dataset& ds, double ratio, std::uint64_t seed) {
    if (ds.inputs.size() < 2)
        fail(ErrorCategory::data, "split requires at least 2 inputs");
    if (!(ratio > 0.0 && ratio < 1.0))
        fail(ErrorCategory::data, "split ratio must lie strictly between 0 and 1");

    std::vector<std::string> order = ds.inputs;
    std::mt19937_64 rng(seed);
    for (std::size_t i = order.size() - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
        std::swap(order[i], order[j]);
    }

    const auto n = static_cast<double>(order.size());
    const auto train_count = static_cast<std::size_t>(std::ceil(ratio * n - 1e-9));
    if (train_count == 0 || train_count >= order.size())
        fail(ErrorCategory::data, "split ratio " + format_double(ratio) + " leaves train or test empty for " +
                                      std::to_string(order.size()) + " inputs");

    SplitDataset out;
    out.ratio = ratio;
    out.seed = seed;
    out.train = subset_inputs(ds, {order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_count)});
    out.test = subset_inputs(ds, {order.begin() + static_cast<std::ptrdiff_t>(train_count), order.end()});
    return out;
}

std::vector<ParetoPoint> per_input_pareto(const Dataset& ds, const std::string& input_id) {
    if (!std::binary_search(ds.inputs.begin(), ds.inputs.end(), input_id))
        fail(ErrorCategory::data, "unknown input '" + input_id + "'");
    std::vector<ParetoPoint> pts;
    for (const auto& r : ds.records) {
        if (r.input_id != input_id)
            continue;
        if (!r.error)
            fail(ErrorCategory::data, "per_input_pareto requires a normalized dataset");
        pts.push_back({*r.error, r.cost});
    }
    std::vector<ParetoPoint> front;
    for (const auto& p : pts) {
        bool dominated = false;
        for (const auto& q : pts) {
            if (q.error <= p.error && q.cost <= p.cost && (q.error < p.error || q.cost < p.cost)) {
                dominated = true;
                break;
            }
        }
        if (!dominated)
            front.push_back(p);
    }
    std::sort(front.begin(), front.end());
    return front;
}

int AggregatedRuns::input_index(const std::string& id) const {
    auto it = std::lower_bound(inputs.begin(), inputs.end(), id);
    if (it == inputs.end() || *it != id)
        return -1;
    return static_cast<int>(it - inputs.begin());
}

const AggregatedRuns::Cell* AggregatedRuns::cell(int input_idx, std::size_t setting_rank) const {
    if (input_idx < 0 || static_cast<std::size_t>(input_idx) >= by_input.size())
        return nullptr;
    auto it = by_input[static_cast<std::size_t>(input_idx)].find(setting_rank);
    return it == by_input[static_cast<std::size_t>(input_idx)].end() ? nullptr : &it->second;
}

AggregatedRuns aggregate(const Dataset& ds) {
    AggregatedRuns agg;
    agg.inputs = ds.inputs;
    agg.by_input.resize(agg.inputs.size());
    agg.features.resize(agg.inputs.size());

    for (const auto& r : ds.records) {
        const int idx = agg.input_index(r.input_id);
        agg.features[static_cast<std::size_t>(idx)] = r.features;
        auto& cell = agg.by_input[static_cast<std::size_t>(idx)][setting_rank(ds.space, r.setting)];
        if (r.error)
            cell.error_sum += *r.error;
        cell.cost_sum += r.cost;
        ++cell.n;
    }

    agg.weights.assign(agg.inputs.size(), 1.0);
    if (!ds.input_weights.empty()) {
        for (std::size_t i = 0; i < agg.inputs.size(); ++i) {
            auto it = ds.input_weights.find(agg.inputs[i]);
            if (it == ds.input_weights.end())
                fail(ErrorCategory::data, "missing weight for input '" + agg.inputs[i] + "'");
            agg.weights[i] = it->second;
        }
    }
    agg.total_weight = 0.0;
    for (double w : agg.weights)
        agg.total_weight += w;
    return agg;
}

namespace {

double parse_cell(const std::string& cell, const std::string& where) {
    if (cell.empty())
        fail(ErrorCategory::data, where + ": missing cell");
    double v = 0.0;
    auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
        fail(ErrorCategory::data, where + ": cannot parse '" + cell + "' as a number");
    if (!std::isfinite(v))
        fail(ErrorCategory::data, where + ": non-finite value '" + cell + "'");
    return v;
}

std::int32_t level_index_for_value(const Knob& k, double value, const std::string& where) {
    for (std::size_t i = 0; i < k.levels.size(); ++i)
        if (std::abs(k.levels[i] - value) <= 1e-9 * std::max(1.0, std::abs(k.levels[i])))
            return static_cast<std::int32_t>(i);
    fail(ErrorCategory::data, where + ": value " + format_double(value) + " is not a level of knob '" + k.name + "'");
}

} // namespace

Dataset read_profile(const std::string& path, const KnobSpace& space, const Schema& schema) {
    const auto table = tsv::read_file(path);

    const int input_col = table.column(schema.input_column);
    if (input_col < 0)
        fail(ErrorCategory::data, path + ": missing column '" + schema.input_column + "'");
    std::vector<int> feature_cols;
    for (const auto& name : schema.feature_columns) {
        const int c = table.column(name);
        if (c < 0)
            fail(ErrorCategory::data, path + ": missing feature column '" + name + "'");
        feature_cols.push_back(c);
    }
    std::vector<int> knob_cols;
    for (const auto& k : space.knobs) {
        const int c = table.column(k.name);
        if (c < 0)
            fail(ErrorCategory::data, path + ": missing knob column '" + k.name + "'");
        knob_cols.push_back(c);
    }
    const int distance_col = table.column(schema.distance_column);
    if (distance_col < 0)
        fail(ErrorCategory::data, path + ": missing column '" + schema.distance_column + "'");
    const int cost_col = table.column(schema.cost_column);
    if (cost_col < 0)
        fail(ErrorCategory::data, path + ": missing column '" + schema.cost_column + "'");
    const int weight_col = schema.weight_column ? table.column(*schema.weight_column) : -1;
    if (schema.weight_column && weight_col < 0)
        fail(ErrorCategory::data, path + ": missing column '" + *schema.weight_column + "'");
    const int error_col = table.column("error");

    // Reject columns the schema does not name; silent extras hide typos.
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        const int ci = static_cast<int>(c);
        bool known = ci == input_col || ci == distance_col || ci == cost_col || ci == weight_col || ci == error_col;
        for (int fc : feature_cols)
            known = known || ci == fc;
        for (int kc : knob_cols)
            known = known || ci == kc;
        if (!known)
            fail(ErrorCategory::data, path + ": unexpected column '" + table.header[c] + "'");
    }

    Dataset ds;
    ds.space = space;
    ds.feature_names = schema.feature_columns;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const std::string where = path + ":" + std::to_string(table.line_numbers[i]);
        RunRecord r;
        r.input_id = row[static_cast<std::size_t>(input_col)];
        if (r.input_id.empty())
            fail(ErrorCategory::data, where + ": missing cell");
        for (int fc : feature_cols)
            r.features.values.push_back(parse_cell(row[static_cast<std::size_t>(fc)], where));
        for (std::size_t k = 0; k < knob_cols.size(); ++k) {
            const double v = parse_cell(row[static_cast<std::size_t>(knob_cols[k])], where);
            r.setting.levels.push_back(level_index_for_value(space.knobs[k], v, where));
        }
        r.distance = parse_cell(row[static_cast<std::size_t>(distance_col)], where);
        r.cost = parse_cell(row[static_cast<std::size_t>(cost_col)], where);
        if (error_col >= 0)
            r.error = parse_cell(row[static_cast<std::size_t>(error_col)], where);
        if (weight_col >= 0) {
            const double w = parse_cell(row[static_cast<std::size_t>(weight_col)], where);
            auto it = ds.input_weights.find(r.input_id);
            if (it == ds.input_weights.end())
                ds.input_weights.emplace(r.input_id, w);
            else if (it->second != w)
                fail(ErrorCategory::data, where + ": conflicting weights for input '" + r.input_id + "'");
        }
        ds.records.push_back(std::move(r));
    }
    finalize(ds);
    return ds;
}

std::string render_profile(const Dataset& ds, const Schema& schema) {
    tsv::Table t;
    t.header.push_back(schema.input_column);
    for (const auto& f : ds.feature_names)
        t.header.push_back(f);
    for (const auto& k : ds.space.knobs)
        t.header.push_back(k.name);
    t.header.push_back(schema.distance_column);
    t.header.push_back(schema.cost_column);
    const bool with_weight = !ds.input_weights.empty();
    if (with_weight)
        t.header.push_back(schema.weight_column.value_or("weight"));
    const bool with_error = ds.normalized();
    if (with_error)
        t.header.push_back("error");

    std::vector<std::size_t> order(ds.records.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ra = ds.records[a];
        const auto& rb = ds.records[b];
        if (ra.input_id != rb.input_id)
            return ra.input_id < rb.input_id;
        return ra.setting < rb.setting;
    });

    for (std::size_t i : order) {
        const auto& r = ds.records[i];
        std::vector<std::string> row;
        row.push_back(r.input_id);
        for (double v : r.features.values)
            row.push_back(format_double(v));
        const auto values = setting_values(ds.space, r.setting);
        for (double v : values)
            row.push_back(format_double(v));
        row.push_back(format_double(r.distance));
        row.push_back(format_double(r.cost));
        if (with_weight)
            row.push_back(format_double(ds.input_weights.at(r.input_id)));
        if (with_error)
            row.push_back(format_double(*r.error));
        t.rows.push_back(std::move(row));
    }
    return tsv::render(t);
}

void write_profile(const std::string& path, const Dataset& ds, const Schema& schema) {
    tsv::write_text_file(path, render_profile(ds, schema));
}

} // namespace apxtune
