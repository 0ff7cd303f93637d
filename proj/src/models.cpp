#include "apxtune/models.hpp"

#include "apxtune/config.hpp"
#include "apxtune/error.hpp"
#include "apxtune/tsv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace apxtune {

namespace {

// The table model materializes one row per setting; refuse spaces where that
// clearly cannot work.
constexpr std::size_t kMaxTableSettings = 1u << 20;

int grid_floor_index(const std::vector<double>& grid, double eps) {
    int best = -1;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] <= eps + 1e-12)
            best = static_cast<int>(i);
        else
            break;
    }
    return best;
}

void check_grid(const std::vector<double>& grid) {
    if (grid.empty())
        fail(ErrorCategory::data, "epsilon grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0.0 && grid[i] <= 1.0 + 1e-12))
            fail(ErrorCategory::data, "epsilon grid values must lie in [0, 1]");
        if (i && !(grid[i - 1] < grid[i]))
            fail(ErrorCategory::data, "epsilon grid must be strictly ascending");
    }
}

double clamp01(double v) {
    return std::min(1.0, std::max(0.0, v));
}

void save_space(std::ostream& out, const KnobSpace& space) {
    out << "space " << space.knobs.size() << "\n";
    for (const auto& k : space.knobs) {
        out << "knob " << k.name << " " << k.accurate_level << " " << k.levels.size();
        for (double v : k.levels)
            out << " " << format_double(v);
        out << "\n";
    }
}

KnobSpace load_space(std::istream& in) {
    std::string tag;
    std::size_t n = 0;
    if (!(in >> tag >> n) || tag != "space")
        fail(ErrorCategory::data, "model file: expected knob space");
    KnobSpace space;
    for (std::size_t i = 0; i < n; ++i) {
        Knob k;
        std::size_t levels = 0;
        if (!(in >> tag >> k.name >> k.accurate_level >> levels) || tag != "knob")
            fail(ErrorCategory::data, "model file: malformed knob");
        k.levels.resize(levels);
        for (auto& v : k.levels)
            if (!(in >> v))
                fail(ErrorCategory::data, "model file: malformed knob levels");
        space.knobs.push_back(std::move(k));
    }
    validate(space);
    return space;
}

void save_grid(std::ostream& out, const std::vector<double>& grid) {
    out << "grid " << grid.size();
    for (double v : grid)
        out << " " << format_double(v);
    out << "\n";
}

std::vector<double> load_grid(std::istream& in) {
    std::string tag;
    std::size_t n = 0;
    if (!(in >> tag >> n) || tag != "grid")
        fail(ErrorCategory::data, "model file: expected epsilon grid");
    std::vector<double> grid(n);
    for (auto& v : grid)
        if (!(in >> v))
            fail(ErrorCategory::data, "model file: malformed grid");
    check_grid(grid);
    return grid;
}

void save_linear(std::ostream& out, const LinearModel& m) {
    out << "linear " << m.coef.size() << " " << format_double(m.intercept);
    for (double c : m.coef)
        out << " " << format_double(c);
    out << "\n";
}

LinearModel load_linear(std::istream& in) {
    std::string tag;
    std::size_t n = 0;
    LinearModel m;
    if (!(in >> tag >> n >> m.intercept) || tag != "linear")
        fail(ErrorCategory::data, "model file: expected linear model");
    m.coef.resize(n);
    for (auto& c : m.coef)
        if (!(in >> c))
            fail(ErrorCategory::data, "model file: malformed linear model");
    return m;
}

std::vector<double> model_input(const KnobSpace& space, std::size_t feature_dim, const InputFeatures& features,
                                const KnobSetting& setting) {
    if (features.values.size() != feature_dim)
        fail(ErrorCategory::data, "feature vector has wrong dimensionality for this model");
    std::vector<double> x;
    x.reserve(feature_dim + space.arity());
    x.insert(x.end(), features.values.begin(), features.values.end());
    const auto values = setting_values(space, setting);
    x.insert(x.end(), values.begin(), values.end());
    return x;
}

} // namespace

// ---------------------------------------------------------------------------
// FitnessTable

FitnessTable::FitnessTable(KnobSpace space, std::vector<double> epsilon_grid)
    : space_(std::move(space)), grid_(std::move(epsilon_grid)) {
    validate(space_);
    check_grid(grid_);
    rows_.resize(setting_count(space_));
}

bool FitnessTable::profiled(std::size_t rank) const {
    return rank < rows_.size() && !rows_[rank].empty();
}

double FitnessTable::value(std::size_t rank, std::size_t grid_idx) const {
    if (!profiled(rank))
        return 0.0;
    return rows_[rank][grid_idx];
}

double FitnessTable::fitness(double epsilon, const KnobSetting& setting) const {
    const std::size_t rank = setting_rank(space_, setting);
    if (!profiled(rank))
        return 0.0;
    const int gi = grid_floor_index(grid_, epsilon);
    if (gi < 0)
        return 0.0;
    return rows_[rank][static_cast<std::size_t>(gi)];
}

double measured_fitness(const AggregatedRuns& agg, std::size_t setting_rank, double epsilon, bool* any_profiled) {
    double raw = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < agg.inputs.size(); ++i) {
        const auto* cell = agg.cell(static_cast<int>(i), setting_rank);
        if (!cell)
            continue;
        any = true;
        if (cell->mean_error() <= epsilon)
            raw += agg.weights[i];
    }
    if (any_profiled)
        *any_profiled = any;
    return raw / agg.total_weight; // a full sum divides to exactly 1
}

FitnessTable train_fitness_table(const Dataset& train, const std::vector<double>& epsilon_grid, bool parallel) {
    if (!train.normalized())
        fail(ErrorCategory::data, "fitness training requires a normalized dataset");
    check_grid(epsilon_grid);
    const std::size_t n_settings = setting_count(train.space);
    if (n_settings > kMaxTableSettings)
        fail(ErrorCategory::data, "knob space too large for the table fitness model (" + std::to_string(n_settings) +
                                      " settings)");

    FitnessTable table(train.space, epsilon_grid);
    const AggregatedRuns agg = aggregate(train);
    for (std::size_t i = 0; i < agg.inputs.size(); ++i)
        table.input_weights_.emplace_back(agg.inputs[i], agg.weights[i] / agg.total_weight);

    std::size_t missing = 0;
    const auto n = static_cast<std::int64_t>(n_settings);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 64) reduction(+ : missing) if (parallel)
#endif
    for (std::int64_t r = 0; r < n; ++r) {
        const auto rank = static_cast<std::size_t>(r);
        bool any = false;
        std::size_t present = 0;
        for (std::size_t i = 0; i < agg.inputs.size(); ++i)
            if (agg.cell(static_cast<int>(i), rank)) {
                any = true;
                ++present;
            }
        if (!any)
            continue;
        missing += agg.inputs.size() - present;
        auto& row = table.rows_[rank];
        row.resize(epsilon_grid.size());
        for (std::size_t g = 0; g < epsilon_grid.size(); ++g)
            row[g] = measured_fitness(agg, rank, epsilon_grid[g]);
    }
    table.missing_pairs_ = missing;
    return table;
}

void FitnessTable::save(std::ostream& out) const {
    save_space(out, space_);
    save_grid(out, grid_);
    out << "weights " << input_weights_.size();
    for (const auto& [id, w] : input_weights_)
        out << " " << id << " " << format_double(w);
    out << "\n";
    out << "missing " << missing_pairs_ << "\n";
    std::size_t profiled_count = 0;
    for (const auto& row : rows_)
        if (!row.empty())
            ++profiled_count;
    out << "rows " << rows_.size() << " " << profiled_count << "\n";
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        if (rows_[r].empty())
            continue;
        out << "row " << r;
        for (double v : rows_[r])
            out << " " << format_double(v);
        out << "\n";
    }
}

FitnessTable FitnessTable::load(std::istream& in) {
    KnobSpace space = load_space(in);            // sequenced before the grid;
    std::vector<double> grid = load_grid(in);    // argument order is unspecified
    FitnessTable t(std::move(space), std::move(grid));
    std::string tag;
    std::size_t n = 0;
    if (!(in >> tag >> n) || tag != "weights")
        fail(ErrorCategory::data, "model file: expected weights");
    t.input_weights_.resize(n);
    for (auto& [id, w] : t.input_weights_)
        if (!(in >> id >> w))
            fail(ErrorCategory::data, "model file: malformed weights");
    if (!(in >> tag >> t.missing_pairs_) || tag != "missing")
        fail(ErrorCategory::data, "model file: expected missing count");
    std::size_t total = 0, profiled_count = 0;
    if (!(in >> tag >> total >> profiled_count) || tag != "rows")
        fail(ErrorCategory::data, "model file: expected rows");
    if (total != t.rows_.size())
        fail(ErrorCategory::data, "model file: row count does not match knob space");
    for (std::size_t i = 0; i < profiled_count; ++i) {
        std::size_t rank = 0;
        if (!(in >> tag >> rank) || tag != "row" || rank >= total)
            fail(ErrorCategory::data, "model file: malformed row");
        auto& row = t.rows_[rank];
        row.resize(t.grid_.size());
        for (auto& v : row)
            if (!(in >> v))
                fail(ErrorCategory::data, "model file: malformed row values");
    }
    return t;
}

// ---------------------------------------------------------------------------
// Tree-based fitness

TreeFitnessModel::TreeFitnessModel(KnobSpace space, std::vector<double> epsilon_grid, ModelTree tree)
    : space_(std::move(space)), grid_(std::move(epsilon_grid)), tree_(std::move(tree)) {
    validate(space_);
    check_grid(grid_);
    if (tree_.dimension() != space_.arity() + 1)
        fail(ErrorCategory::data, "fitness tree dimensionality does not match knob space");
}

double TreeFitnessModel::fitness(double epsilon, const KnobSetting& setting) const {
    const int gi = grid_floor_index(grid_, epsilon);
    if (gi < 0)
        return 0.0;
    std::vector<double> x = setting_values(space_, setting);
    x.push_back(0.0);
    double best = 0.0;
    for (int g = 0; g <= gi; ++g) {
        x.back() = grid_[static_cast<std::size_t>(g)];
        best = std::max(best, clamp01(tree_.predict(x)));
    }
    return best;
}

TreeFitnessModel train_fitness_m5(const FitnessTable& table, const TreeParams& params) {
    std::vector<std::vector<double>> points;
    std::vector<double> targets;
    const auto& grid = table.epsilon_grid();
    const std::size_t n_settings = setting_count(table.space());
    for (std::size_t r = 0; r < n_settings; ++r) {
        if (!table.profiled(r))
            continue;
        std::vector<double> values = setting_values(table.space(), setting_at(table.space(), r));
        values.push_back(0.0);
        for (std::size_t g = 0; g < grid.size(); ++g) {
            values.back() = grid[g];
            points.push_back(values);
            targets.push_back(table.value(r, g));
        }
    }
    if (points.empty())
        fail(ErrorCategory::data, "fitness table has no profiled settings to fit");
    return TreeFitnessModel(table.space(), grid, ModelTree::train(points, targets, params));
}

TreeFitnessModel train_fitness_m5(const Dataset& train, const std::vector<double>& epsilon_grid,
                                  const TreeParams& params) {
    return train_fitness_m5(train_fitness_table(train, epsilon_grid), params);
}

void TreeFitnessModel::save(std::ostream& out) const {
    save_space(out, space_);
    save_grid(out, grid_);
    tree_.save(out);
}

TreeFitnessModel TreeFitnessModel::load(std::istream& in) {
    KnobSpace space = load_space(in);
    std::vector<double> grid = load_grid(in);
    return TreeFitnessModel(std::move(space), std::move(grid), ModelTree::load(in));
}

// ---------------------------------------------------------------------------
// Linear fitness baseline

LinearFitnessModel::LinearFitnessModel(KnobSpace space, LinearModel model)
    : space_(std::move(space)), model_(std::move(model)) {
    validate(space_);
}

double LinearFitnessModel::fitness(double epsilon, const KnobSetting& setting) const {
    std::vector<double> x = setting_values(space_, setting);
    x.push_back(epsilon);
    return clamp01(model_.evaluate(x));
}

LinearFitnessModel train_fitness_linear(const FitnessTable& table) {
    std::vector<std::vector<double>> points;
    std::vector<double> targets;
    const auto& grid = table.epsilon_grid();
    const std::size_t n_settings = setting_count(table.space());
    for (std::size_t r = 0; r < n_settings; ++r) {
        if (!table.profiled(r))
            continue;
        std::vector<double> values = setting_values(table.space(), setting_at(table.space(), r));
        values.push_back(0.0);
        for (std::size_t g = 0; g < grid.size(); ++g) {
            values.back() = grid[g];
            points.push_back(values);
            targets.push_back(table.value(r, g));
        }
    }
    if (points.empty())
        fail(ErrorCategory::data, "fitness table has no profiled settings to fit");
    std::vector<std::uint32_t> index(points.size());
    for (std::size_t i = 0; i < index.size(); ++i)
        index[i] = static_cast<std::uint32_t>(i);
    return LinearFitnessModel(table.space(), fit_linear(points, targets, index, points[0].size()));
}

void LinearFitnessModel::save(std::ostream& out) const {
    save_space(out, space_);
    save_linear(out, model_);
}

LinearFitnessModel LinearFitnessModel::load(std::istream& in) {
    KnobSpace space = load_space(in);
    return LinearFitnessModel(std::move(space), load_linear(in));
}

// ---------------------------------------------------------------------------
// Cost models

std::pair<std::vector<std::vector<double>>, std::vector<double>> cost_training_points(const Dataset& train) {
    std::vector<std::vector<double>> points;
    std::vector<double> targets;
    points.reserve(train.records.size());
    targets.reserve(train.records.size());
    for (const auto& r : train.records) {
        points.push_back(model_input(train.space, train.feature_names.size(), r.features, r.setting));
        targets.push_back(r.cost);
    }
    return {std::move(points), std::move(targets)};
}

TreeCostModel::TreeCostModel(KnobSpace space, std::size_t feature_dim, ModelTree tree)
    : space_(std::move(space)), feature_dim_(feature_dim), tree_(std::move(tree)) {
    validate(space_);
    if (tree_.dimension() != feature_dim_ + space_.arity())
        fail(ErrorCategory::data, "cost tree dimensionality does not match space and features");
}

double TreeCostModel::predict(const InputFeatures& features, const KnobSetting& setting) const {
    return std::max(kMinPredictedCost, tree_.predict(model_input(space_, feature_dim_, features, setting)));
}

TreeCostModel train_cost_tree(const Dataset& train, const TreeParams& params) {
    auto [points, targets] = cost_training_points(train);
    if (points.empty())
        fail(ErrorCategory::data, "cost training requires at least one record");
    return TreeCostModel(train.space, train.feature_names.size(), ModelTree::train(points, targets, params));
}

void TreeCostModel::save(std::ostream& out) const {
    save_space(out, space_);
    out << "features " << feature_dim_ << "\n";
    tree_.save(out);
}

TreeCostModel TreeCostModel::load(std::istream& in) {
    KnobSpace space = load_space(in);
    std::string tag;
    std::size_t fd = 0;
    if (!(in >> tag >> fd) || tag != "features")
        fail(ErrorCategory::data, "model file: expected feature count");
    return TreeCostModel(std::move(space), fd, ModelTree::load(in));
}

LinearCostModel::LinearCostModel(KnobSpace space, std::size_t feature_dim, LinearModel model)
    : space_(std::move(space)), feature_dim_(feature_dim), model_(std::move(model)) {
    validate(space_);
}

double LinearCostModel::predict(const InputFeatures& features, const KnobSetting& setting) const {
    return std::max(kMinPredictedCost, model_.evaluate(model_input(space_, feature_dim_, features, setting)));
}

LinearCostModel train_cost_linear(const Dataset& train) {
    auto [points, targets] = cost_training_points(train);
    if (points.empty())
        fail(ErrorCategory::data, "cost training requires at least one record");
    std::vector<std::uint32_t> index(points.size());
    for (std::size_t i = 0; i < index.size(); ++i)
        index[i] = static_cast<std::uint32_t>(i);
    return LinearCostModel(train.space, train.feature_names.size(),
                           fit_linear(points, targets, index, points[0].size()));
}

void LinearCostModel::save(std::ostream& out) const {
    save_space(out, space_);
    out << "features " << feature_dim_ << "\n";
    save_linear(out, model_);
}

LinearCostModel LinearCostModel::load(std::istream& in) {
    KnobSpace space = load_space(in);
    std::string tag;
    std::size_t fd = 0;
    if (!(in >> tag >> fd) || tag != "features")
        fail(ErrorCategory::data, "model file: expected feature count");
    return LinearCostModel(std::move(space), fd, load_linear(in));
}

// ---------------------------------------------------------------------------
// Accuracy evaluation

std::vector<AccuracyPoint> evaluate_cost_accuracy(const CostModel& model, const Dataset& test) {
    std::vector<AccuracyPoint> out;
    out.reserve(test.records.size());
    for (const auto& r : test.records)
        out.push_back({model.predict(r.features, r.setting), r.cost});
    return out;
}

FitnessAccuracy evaluate_fitness_accuracy(const FitnessModel& model, const Dataset& test,
                                          const std::vector<double>& epsilon_grid) {
    if (!test.normalized())
        fail(ErrorCategory::data, "fitness evaluation requires a normalized dataset");
    check_grid(epsilon_grid);
    const std::size_t n_settings = setting_count(test.space);
    if (n_settings > kMaxTableSettings)
        fail(ErrorCategory::data, "knob space too large to sweep for fitness evaluation");

    const AggregatedRuns agg = aggregate(test);
    FitnessAccuracy acc;
    for (std::size_t r = 0; r < n_settings; ++r) {
        bool any = false;
        (void)measured_fitness(agg, r, 1.0, &any);
        if (!any) {
            ++acc.skipped_settings;
            continue;
        }
        const KnobSetting setting = setting_at(test.space, r);
        for (double eps : epsilon_grid)
            acc.points.push_back({model.fitness(eps, setting), measured_fitness(agg, r, eps)});
    }
    return acc;
}

double under_prediction_fraction(const std::vector<AccuracyPoint>& points) {
    if (points.empty())
        return 0.0;
    std::size_t under = 0;
    for (const auto& p : points)
        if (p.predicted < p.measured)
            ++under;
    return static_cast<double>(under) / static_cast<double>(points.size());
}

double pearson_correlation(const std::vector<AccuracyPoint>& points) {
    const auto n = static_cast<double>(points.size());
    if (points.size() < 2)
        return 0.0;
    double sx = 0, sy = 0;
    for (const auto& p : points) {
        sx += p.predicted;
        sy += p.measured;
    }
    const double mx = sx / n, my = sy / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (const auto& p : points) {
        sxy += (p.predicted - mx) * (p.measured - my);
        sxx += (p.predicted - mx) * (p.predicted - mx);
        syy += (p.measured - my) * (p.measured - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

double rmse(const std::vector<AccuracyPoint>& points) {
    if (points.empty())
        return 0.0;
    double s = 0.0;
    for (const auto& p : points)
        s += (p.predicted - p.measured) * (p.predicted - p.measured);
    return std::sqrt(s / static_cast<double>(points.size()));
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

constexpr const char* kModelHeader = "apxtune-model";
constexpr const char* kModelVersion = "v1";

void save_header(std::ostream& out, const std::string& kind) {
    out << kModelHeader << " " << kModelVersion << "\n";
    out << "kind " << kind << "\n";
}

std::string load_header(std::istream& in, const std::string& path) {
    std::string magic, version, tag, kind;
    if (!(in >> magic >> version) || magic != kModelHeader)
        fail(ErrorCategory::data, path + ": not a model file");
    if (version != kModelVersion)
        fail(ErrorCategory::data, path + ": unsupported model version '" + version + "'");
    if (!(in >> tag >> kind) || tag != "kind")
        fail(ErrorCategory::data, path + ": missing model kind");
    return kind;
}

} // namespace

void save_cost_model(const std::string& path, const CostModel& model) {
    std::ostringstream out;
    save_header(out, model.kind());
    model.save(out);
    tsv::write_text_file(path, out.str());
}

void save_fitness_model(const std::string& path, const FitnessModel& model) {
    std::ostringstream out;
    save_header(out, model.kind());
    model.save(out);
    tsv::write_text_file(path, out.str());
}

std::unique_ptr<CostModel> load_cost_model(const std::string& path) {
    std::istringstream in(tsv::read_text_file(path));
    const std::string kind = load_header(in, path);
    if (kind == "cost_tree")
        return std::make_unique<TreeCostModel>(TreeCostModel::load(in));
    if (kind == "cost_linear")
        return std::make_unique<LinearCostModel>(LinearCostModel::load(in));
    fail(ErrorCategory::data, path + ": '" + kind + "' is not a cost model");
}

std::unique_ptr<FitnessModel> load_fitness_model(const std::string& path) {
    std::istringstream in(tsv::read_text_file(path));
    const std::string kind = load_header(in, path);
    if (kind == "fitness_table")
        return std::make_unique<FitnessTable>(FitnessTable::load(in));
    if (kind == "fitness_tree")
        return std::make_unique<TreeFitnessModel>(TreeFitnessModel::load(in));
    if (kind == "fitness_linear")
        return std::make_unique<LinearFitnessModel>(LinearFitnessModel::load(in));
    fail(ErrorCategory::data, path + ": '" + kind + "' is not a fitness model");
}

} // namespace apxtune
