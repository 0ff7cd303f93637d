#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

namespace apxtune {

struct LinearModel {
    double intercept = 0.0;
    std::vector<double> coef; // full input width; zero for dimensions not fitted

    double evaluate(std::span<const double> x) const;
};

// Least squares over the given points. Dimensions with no variation are
// dropped before solving; a singular system falls back to the mean model.
LinearModel fit_linear(const std::vector<std::vector<double>>& points, const std::vector<double>& targets,
                       const std::vector<std::uint32_t>& index, std::size_t dims);

struct TreeParams {
    int min_leaf = 4;
    double sd_floor = 0.05;  // stop splitting below this fraction of the root sd
    double smoothing = 15.0; // k_s; 0 returns the raw leaf model output
    bool prune = true;
    bool parallel_split = true; // evaluate candidate dimensions with OpenMP

    static TreeParams exact_fit() { return {1, 0.0, 0.0, false, true}; }
};

// M5-style regression tree: standard-deviation-reduction splits, linear
// models in the leaves, optional pruning against the node's own linear model
// and leaf-to-root smoothing at prediction time.
class ModelTree {
public:
    struct Node {
        int split_dim = -1; // -1 marks a leaf
        double threshold = 0.0;
        int count = 0;
        LinearModel model;
        std::unique_ptr<Node> left;
        std::unique_ptr<Node> right;

        bool is_leaf() const { return split_dim < 0; }
    };

    ModelTree() = default;

    static ModelTree train(const std::vector<std::vector<double>>& points, const std::vector<double>& targets,
                           const TreeParams& params);

    double predict(std::span<const double> x) const;

    std::size_t dimension() const { return dims_; }
    double smoothing() const { return smoothing_; }
    std::size_t leaf_count() const;
    const Node* root() const { return root_.get(); }

    void save(std::ostream& out) const;
    static ModelTree load(std::istream& in);

private:
    std::size_t dims_ = 0;
    double smoothing_ = 0.0;
    std::unique_ptr<Node> root_;
};

// Split quality: sd(S) - sum_i |S_i|/|S| * sd(S_i), population standard
// deviations. Exposed for tests.
double stddev_reduction(const std::vector<double>& targets, const std::vector<bool>& goes_left);

} // namespace apxtune
