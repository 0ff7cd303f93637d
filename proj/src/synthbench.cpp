#include "apxtune/synthbench.hpp"

#include "apxtune/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace apxtune {

std::uint64_t mix_u64(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t x = a * 0x9e3779b97f4a7c15ull + b * 0xbf58476d1ce4e5b9ull + c * 0x94d049bb133111ebull + 0x2545f4914f6cdd1dull;
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
}

double unit_from_hash(std::uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

namespace {

constexpr std::uint64_t kFeatureStream = 0xF0;
constexpr std::uint64_t kModulationStream = 0xE0;
constexpr std::uint64_t kNoiseStream = 0xC0;
constexpr std::uint64_t kSampleStream = 0xA0;

void validate_spec(const SurfaceSpec& spec) {
    validate(spec.space);
    const std::size_t n = spec.space.arity();
    if (spec.error_form.knob_weight.size() != n || spec.error_form.knob_exponent.size() != n)
        fail(ErrorCategory::data, "error form does not cover every knob");
    if (spec.cost_form.lo.knob_coef.size() != n || spec.cost_form.hi.knob_coef.size() != n)
        fail(ErrorCategory::data, "cost form does not cover every knob");
    if (spec.cost_form.lo.feature_coef.size() != spec.feature_dim ||
        spec.cost_form.hi.feature_coef.size() != spec.feature_dim)
        fail(ErrorCategory::data, "cost form does not cover every feature");
    if (spec.cost_form.regime_knob >= n)
        fail(ErrorCategory::data, "cost form regime knob out of range");
    if (spec.noise < 0.0 || spec.sensitivity < 0.0)
        fail(ErrorCategory::data, "noise and sensitivity must be non-negative");
}

} // namespace

SurfaceSpec default_surface(const KnobSpace& space, std::size_t feature_dim, double sensitivity, double noise,
                            std::uint64_t seed) {
    validate(space);
    SurfaceSpec spec;
    spec.space = space;
    spec.feature_dim = feature_dim;
    spec.sensitivity = sensitivity;
    spec.noise = noise;
    spec.seed = seed;

    const std::size_t n = space.arity();
    spec.error_form.knob_weight.resize(n);
    spec.error_form.knob_exponent.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        spec.error_form.knob_weight[j] = 1.0 + 0.5 * static_cast<double>(j);
        spec.error_form.knob_exponent[j] = (j % 2 == 0) ? 1.0 : 2.0;
    }

    const Knob& pivot = space.knobs[0];
    spec.cost_form.regime_knob = 0;
    spec.cost_form.threshold = (pivot.levels.front() + pivot.levels.back()) / 2.0;
    spec.cost_form.lo.intercept = 5.0;
    spec.cost_form.hi.intercept = 25.0;
    spec.cost_form.lo.knob_coef.resize(n);
    spec.cost_form.hi.knob_coef.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        spec.cost_form.lo.knob_coef[j] = 1.0 + 0.7 * static_cast<double>(j);
        spec.cost_form.hi.knob_coef[j] = 1.5 + 0.7 * static_cast<double>(j);
    }
    spec.cost_form.lo.feature_coef.resize(feature_dim);
    spec.cost_form.hi.feature_coef.resize(feature_dim);
    for (std::size_t f = 0; f < feature_dim; ++f) {
        spec.cost_form.lo.feature_coef[f] = 0.3 + 0.1 * static_cast<double>(f);
        spec.cost_form.hi.feature_coef[f] = 0.3 + 0.1 * static_cast<double>(f);
    }
    return spec;
}

std::string synth_input_id(std::size_t input_idx, std::size_t n_inputs) {
    std::size_t width = 1;
    for (std::size_t v = n_inputs > 0 ? n_inputs - 1 : 0; v >= 10; v /= 10)
        ++width;
    std::string digits = std::to_string(input_idx);
    return "in" + std::string(width - std::min(width, digits.size()), '0') + digits;
}

InputFeatures synth_features(const SurfaceSpec& spec, std::size_t input_idx) {
    InputFeatures f;
    f.values.reserve(spec.feature_dim);
    for (std::size_t d = 0; d < spec.feature_dim; ++d)
        f.values.push_back(1.0 + 9.0 * unit_from_hash(mix_u64(spec.seed, kFeatureStream, input_idx * 131 + d)));
    return f;
}

double exact_distance(const SurfaceSpec& spec, std::size_t input_idx, const KnobSetting& setting) {
    const auto values = setting_values(spec.space, setting);
    double d = 0.0;
    for (std::size_t j = 0; j < spec.space.arity(); ++j) {
        const Knob& k = spec.space.knobs[j];
        const double accurate = k.levels[k.accurate_level];
        const double range = k.levels.back() - k.levels.front();
        const double q = range > 0.0 ? std::abs(values[j] - accurate) / range : 0.0;
        const double u = unit_from_hash(mix_u64(spec.seed, kModulationStream, input_idx * 131 + j));
        d += spec.error_form.knob_weight[j] * (1.0 + spec.sensitivity * u) *
             std::pow(q, spec.error_form.knob_exponent[j]);
    }
    return d;
}

double exact_cost(const SurfaceSpec& spec, std::size_t input_idx, const KnobSetting& setting) {
    const auto values = setting_values(spec.space, setting);
    const CostBlock& block =
        values[spec.cost_form.regime_knob] <= spec.cost_form.threshold ? spec.cost_form.lo : spec.cost_form.hi;
    double c = block.intercept;
    for (std::size_t j = 0; j < values.size(); ++j)
        c += block.knob_coef[j] * values[j];
    const InputFeatures f = synth_features(spec, input_idx);
    for (std::size_t d = 0; d < spec.feature_dim; ++d)
        c += spec.sensitivity * block.feature_coef[d] * f.values[d];
    return c;
}

namespace {

Dataset generate(const SurfaceSpec& spec, std::size_t n_inputs, const std::vector<std::size_t>& ranks) {
    validate_spec(spec);
    if (n_inputs == 0)
        fail(ErrorCategory::data, "synthetic dataset needs at least one input");

    Dataset ds;
    ds.space = spec.space;
    ds.feature_names = synth_feature_names(spec.feature_dim);
    ds.records.reserve(n_inputs * ranks.size());
    const std::size_t total = setting_count(spec.space);

    for (std::size_t i = 0; i < n_inputs; ++i) {
        const std::string id = synth_input_id(i, n_inputs);
        const InputFeatures features = synth_features(spec, i);
        for (std::size_t rank : ranks) {
            RunRecord r;
            r.input_id = id;
            r.features = features;
            r.setting = setting_at(spec.space, rank);
            r.distance = exact_distance(spec, i, r.setting);
            r.cost = exact_cost(spec, i, r.setting);
            if (r.cost <= 0.0)
                fail(ErrorCategory::data, "cost form produced a non-positive cost");
            if (spec.noise > 0.0) {
                std::mt19937_64 rng(mix_u64(spec.seed, kNoiseStream, i * total + rank));
                std::normal_distribution<double> gauss(0.0, 1.0);
                r.cost *= std::exp(spec.noise * gauss(rng));
                r.distance = std::max(0.0, r.distance + spec.noise * gauss(rng));
            }
            ds.records.push_back(std::move(r));
        }
    }
    finalize(ds);
    return ds;
}

} // namespace

Dataset generate_dataset(const SurfaceSpec& spec, std::size_t n_inputs) {
    std::vector<std::size_t> ranks(setting_count(spec.space));
    for (std::size_t r = 0; r < ranks.size(); ++r)
        ranks[r] = r;
    return generate(spec, n_inputs, ranks);
}

Dataset generate_dataset(const SurfaceSpec& spec, std::size_t n_inputs, std::size_t sampled_settings) {
    const std::size_t total = setting_count(spec.space);
    if (sampled_settings == 0 || sampled_settings > total)
        fail(ErrorCategory::data, "sampled setting count must lie in [1, |space|]");
    std::vector<std::size_t> ranks(total);
    for (std::size_t r = 0; r < total; ++r)
        ranks[r] = r;
    // Deterministic partial Fisher-Yates, then canonical order.
    for (std::size_t i = 0; i < sampled_settings; ++i) {
        const std::size_t j = i + mix_u64(spec.seed, kSampleStream, i) % (total - i);
        std::swap(ranks[i], ranks[j]);
    }
    ranks.resize(sampled_settings);
    std::sort(ranks.begin(), ranks.end());
    return generate(spec, n_inputs, ranks);
}

std::vector<std::string> synth_feature_names(std::size_t feature_dim) {
    std::vector<std::string> names;
    names.reserve(feature_dim);
    for (std::size_t d = 0; d < feature_dim; ++d)
        names.push_back("f" + std::to_string(d));
    return names;
}

} // namespace apxtune
