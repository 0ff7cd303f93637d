#pragma once

#include "apxtune/core.hpp"
#include "apxtune/dataset.hpp"
#include "apxtune/model_tree.hpp"

#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace apxtune {

// Predictions are only used to rank settings, but they must stay positive.
inline constexpr double kMinPredictedCost = 1e-9;

class CostModel {
public:
    virtual ~CostModel() = default;
    virtual double predict(const InputFeatures& features, const KnobSetting& setting) const = 0;
    virtual std::string kind() const = 0;
    virtual void save(std::ostream& out) const = 0;
};

class FitnessModel {
public:
    virtual ~FitnessModel() = default;
    // Predicted probability mass of inputs whose error at `setting` is <= epsilon.
    virtual double fitness(double epsilon, const KnobSetting& setting) const = 0;
    virtual std::string kind() const = 0;
    virtual void save(std::ostream& out) const = 0;
};

// Exact empirical fitness over the training inputs, one row per knob setting
// and one column per epsilon bin. Rows of settings never profiled stay empty
// and report fitness 0. Queries between bins floor to the nearest bin at or
// below epsilon, so the table never over-states fitness.
class FitnessTable final : public FitnessModel {
public:
    FitnessTable() = default;
    FitnessTable(KnobSpace space, std::vector<double> epsilon_grid);

    double fitness(double epsilon, const KnobSetting& setting) const override;
    std::string kind() const override { return "fitness_table"; }
    void save(std::ostream& out) const override;
    static FitnessTable load(std::istream& in);

    const std::vector<double>& epsilon_grid() const { return grid_; }
    const KnobSpace& space() const { return space_; }
    bool profiled(std::size_t setting_rank) const;
    double value(std::size_t setting_rank, std::size_t grid_idx) const;
    std::size_t missing_pairs() const { return missing_pairs_; }
    const std::vector<std::pair<std::string, double>>& input_weights() const { return input_weights_; }

private:
    friend FitnessTable train_fitness_table(const Dataset&, const std::vector<double>&, bool);

    KnobSpace space_;
    std::vector<double> grid_;
    std::vector<std::vector<double>> rows_; // by setting rank; empty = unprofiled
    std::vector<std::pair<std::string, double>> input_weights_;
    std::size_t missing_pairs_ = 0;
};

// Problem-2 fitness mass: sum of p(j) over inputs whose measured error at the
// setting is <= epsilon, accumulated in ascending input order. Inputs without
// a record at the setting contribute nothing; `any_profiled` reports whether
// the setting was measured at all.
double measured_fitness(const AggregatedRuns& agg, std::size_t setting_rank, double epsilon, bool* any_profiled = nullptr);

FitnessTable train_fitness_table(const Dataset& train, const std::vector<double>& epsilon_grid, bool parallel = true);

// M5 model tree over (knob values, epsilon) fitted to the fitness table's
// entries. Queries clamp to [0,1] and apply a running maximum over the grid
// up to epsilon, which restores monotonicity in epsilon.
class TreeFitnessModel final : public FitnessModel {
public:
    TreeFitnessModel() = default;
    TreeFitnessModel(KnobSpace space, std::vector<double> epsilon_grid, ModelTree tree);

    double fitness(double epsilon, const KnobSetting& setting) const override;
    std::string kind() const override { return "fitness_tree"; }
    void save(std::ostream& out) const override;
    static TreeFitnessModel load(std::istream& in);

    const std::vector<double>& epsilon_grid() const { return grid_; }
    const ModelTree& tree() const { return tree_; }

private:
    KnobSpace space_;
    std::vector<double> grid_;
    ModelTree tree_;
};

TreeFitnessModel train_fitness_m5(const Dataset& train, const std::vector<double>& epsilon_grid,
                                  const TreeParams& params = {});
TreeFitnessModel train_fitness_m5(const FitnessTable& table, const TreeParams& params = {});

// Global linear fit of the fitness table's entries, clamped to [0,1]; the
// paper-style weak baseline.
class LinearFitnessModel final : public FitnessModel {
public:
    LinearFitnessModel() = default;
    LinearFitnessModel(KnobSpace space, LinearModel model);

    double fitness(double epsilon, const KnobSetting& setting) const override;
    std::string kind() const override { return "fitness_linear"; }
    void save(std::ostream& out) const override;
    static LinearFitnessModel load(std::istream& in);

private:
    KnobSpace space_;
    LinearModel model_;
};

LinearFitnessModel train_fitness_linear(const FitnessTable& table);

class TreeCostModel final : public CostModel {
public:
    TreeCostModel() = default;
    TreeCostModel(KnobSpace space, std::size_t feature_dim, ModelTree tree);

    double predict(const InputFeatures& features, const KnobSetting& setting) const override;
    std::string kind() const override { return "cost_tree"; }
    void save(std::ostream& out) const override;
    static TreeCostModel load(std::istream& in);

    const ModelTree& tree() const { return tree_; }

private:
    KnobSpace space_;
    std::size_t feature_dim_ = 0;
    ModelTree tree_;
};

TreeCostModel train_cost_tree(const Dataset& train, const TreeParams& params = {});

class LinearCostModel final : public CostModel {
public:
    LinearCostModel() = default;
    LinearCostModel(KnobSpace space, std::size_t feature_dim, LinearModel model);

    double predict(const InputFeatures& features, const KnobSetting& setting) const override;
    std::string kind() const override { return "cost_linear"; }
    void save(std::ostream& out) const override;
    static LinearCostModel load(std::istream& in);

private:
    KnobSpace space_;
    std::size_t feature_dim_ = 0;
    LinearModel model_;
};

LinearCostModel train_cost_linear(const Dataset& train);

// (features + knob values) -> cost training matrix, one row per record.
std::pair<std::vector<std::vector<double>>, std::vector<double>> cost_training_points(const Dataset& train);

struct AccuracyPoint {
    double predicted = 0.0;
    double measured = 0.0;
};

// One point per test record.
std::vector<AccuracyPoint> evaluate_cost_accuracy(const CostModel& model, const Dataset& test);

struct FitnessAccuracy {
    std::vector<AccuracyPoint> points; // one per (profiled setting, epsilon bin)
    std::size_t skipped_settings = 0;  // settings with no test records
};

FitnessAccuracy evaluate_fitness_accuracy(const FitnessModel& model, const Dataset& test,
                                          const std::vector<double>& epsilon_grid);

// Share of points where the model under-states the measured value.
double under_prediction_fraction(const std::vector<AccuracyPoint>& points);

double pearson_correlation(const std::vector<AccuracyPoint>& points);
double rmse(const std::vector<AccuracyPoint>& points);

// Versioned text persistence for every model kind.
void save_cost_model(const std::string& path, const CostModel& model);
void save_fitness_model(const std::string& path, const FitnessModel& model);
std::unique_ptr<CostModel> load_cost_model(const std::string& path);
std::unique_ptr<FitnessModel> load_fitness_model(const std::string& path);

} // namespace apxtune
