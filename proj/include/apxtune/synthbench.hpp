#pragma once

#include "apxtune/config.hpp"
#include "apxtune/core.hpp"
#include "apxtune/dataset.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace apxtune {

// Piecewise-linear cost: one coefficient block on each side of a threshold on
// a single knob's value. Coefficients are over features and knob values.
struct CostBlock {
    double intercept = 0.0;
    std::vector<double> feature_coef;
    std::vector<double> knob_coef;
};

struct CostForm {
    std::size_t regime_knob = 0; // knob whose value selects the block
    double threshold = 0.0;
    CostBlock lo;
    CostBlock hi;
};

// Per-knob monotone response: distance contribution w * (1 + sens*u_ij) * q^e
// where q is the knob's normalized quality distance from its accurate level.
struct ErrorForm {
    std::vector<double> knob_weight;
    std::vector<double> knob_exponent;
};

// A synthetic tunable program with analytically known cost and error
// surfaces. With noise 0 everything downstream (Pareto fronts, fitness,
// oracle decisions) is exactly reproducible from this spec.
struct SurfaceSpec {
    KnobSpace space;
    std::size_t feature_dim = 0;
    CostForm cost_form;
    ErrorForm error_form;
    double sensitivity = 0.5; // 0 removes all input dependence
    double noise = 0.0;       // log-normal on cost, additive truncated at 0 on distance
    std::uint64_t seed = 42;
};

// Deterministic default surface for a space: costs strictly increasing in
// every knob value inside each regime, distances falling to 0 at the accurate
// setting.
SurfaceSpec default_surface(const KnobSpace& space, std::size_t feature_dim, double sensitivity, double noise,
                            std::uint64_t seed);

std::string synth_input_id(std::size_t input_idx, std::size_t n_inputs);
InputFeatures synth_features(const SurfaceSpec& spec, std::size_t input_idx);

// Noise-free closed forms.
double exact_distance(const SurfaceSpec& spec, std::size_t input_idx, const KnobSetting& setting);
double exact_cost(const SurfaceSpec& spec, std::size_t input_idx, const KnobSetting& setting);

// Full sweep over all settings for n_inputs inputs, canonical record order,
// byte-reproducible for a fixed spec.
Dataset generate_dataset(const SurfaceSpec& spec, std::size_t n_inputs);

// Deterministically sampled subset of settings (without replacement).
Dataset generate_dataset(const SurfaceSpec& spec, std::size_t n_inputs, std::size_t sampled_settings);

// Feature column names used by generated datasets: f0, f1, ...
std::vector<std::string> synth_feature_names(std::size_t feature_dim);

// splitmix64-style hash used for all per-record randomness.
std::uint64_t mix_u64(std::uint64_t a, std::uint64_t b, std::uint64_t c);
double unit_from_hash(std::uint64_t h); // uniform in [0, 1)

} // namespace apxtune
