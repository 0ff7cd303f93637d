#include "apxtune/model_tree.hpp"

#include "apxtune/config.hpp"
#include "apxtune/error.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace apxtune {

double LinearModel::evaluate(std::span<const double> x) const {
    double y = intercept;
    const std::size_t n = std::min(coef.size(), x.size());
    for (std::size_t i = 0; i < n; ++i)
        y += coef[i] * x[i];
    return y;
}

namespace {

double population_sd(double sum, double sum_sq, double n) {
    const double mean = sum / n;
    return std::sqrt(std::max(0.0, sum_sq / n - mean * mean));
}

// Gaussian elimination with partial pivoting; returns false when singular.
bool solve_inplace(std::vector<std::vector<double>>& a, std::vector<double>& b) {
    const std::size_t n = b.size();
    double scale = 0.0;
    for (const auto& row : a)
        for (double v : row)
            scale = std::max(scale, std::abs(v));
    const double tol = 1e-12 * std::max(1.0, scale);

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col]))
                pivot = r;
        if (std::abs(a[pivot][col]) <= tol)
            return false;
        std::swap(a[pivot], a[col]);
        std::swap(b[pivot], b[col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            if (f == 0.0)
                continue;
            for (std::size_t c = col; c < n; ++c)
                a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    for (std::size_t col = n; col-- > 0;) {
        double acc = b[col];
        for (std::size_t c = col + 1; c < n; ++c)
            acc -= a[col][c] * b[c];
        b[col] = acc / a[col][col];
    }
    return true;
}

LinearModel mean_model(const std::vector<double>& targets, const std::vector<std::uint32_t>& index, std::size_t dims) {
    double sum = 0.0;
    for (auto i : index)
        sum += targets[i];
    LinearModel m;
    m.intercept = sum / static_cast<double>(index.size());
    m.coef.assign(dims, 0.0);
    return m;
}

} // namespace

LinearModel fit_linear(const std::vector<std::vector<double>>& points, const std::vector<double>& targets,
                       const std::vector<std::uint32_t>& index, std::size_t dims) {
    // Dimensions constant across the subset cannot be identified; drop them.
    std::vector<std::size_t> active;
    for (std::size_t d = 0; d < dims; ++d) {
        const double first = points[index[0]][d];
        for (auto i : index) {
            if (points[i][d] != first) {
                active.push_back(d);
                break;
            }
        }
    }
    if (active.empty() || index.size() <= active.size())
        return mean_model(targets, index, dims);

    const std::size_t k = active.size() + 1; // + intercept
    std::vector<std::vector<double>> ata(k, std::vector<double>(k, 0.0));
    std::vector<double> atb(k, 0.0);
    std::vector<double> row(k, 0.0);
    for (auto i : index) {
        row[0] = 1.0;
        for (std::size_t j = 0; j < active.size(); ++j)
            row[j + 1] = points[i][active[j]];
        for (std::size_t r = 0; r < k; ++r) {
            for (std::size_t c = r; c < k; ++c)
                ata[r][c] += row[r] * row[c];
            atb[r] += row[r] * targets[i];
        }
    }
    for (std::size_t r = 0; r < k; ++r)
        for (std::size_t c = 0; c < r; ++c)
            ata[r][c] = ata[c][r];

    if (!solve_inplace(ata, atb))
        return mean_model(targets, index, dims);

    LinearModel m;
    m.intercept = atb[0];
    m.coef.assign(dims, 0.0);
    for (std::size_t j = 0; j < active.size(); ++j)
        m.coef[active[j]] = atb[j + 1];
    if (!std::isfinite(m.intercept))
        return mean_model(targets, index, dims);
    for (double c : m.coef)
        if (!std::isfinite(c))
            return mean_model(targets, index, dims);
    return m;
}

double stddev_reduction(const std::vector<double>& targets, const std::vector<bool>& goes_left) {
    double ls = 0, lq = 0, rs = 0, rq = 0;
    double ln = 0, rn = 0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (goes_left[i]) {
            ls += targets[i];
            lq += targets[i] * targets[i];
            ln += 1;
        } else {
            rs += targets[i];
            rq += targets[i] * targets[i];
            rn += 1;
        }
    }
    const double n = ln + rn;
    const double sd = population_sd(ls + rs, lq + rq, n);
    double child = 0.0;
    if (ln > 0)
        child += ln / n * population_sd(ls, lq, ln);
    if (rn > 0)
        child += rn / n * population_sd(rs, rq, rn);
    return sd - child;
}

namespace {

struct SplitChoice {
    bool found = false;
    int dim = -1;
    double threshold = 0.0;
    double sdr = -1.0;
};

// Better split: larger SDR; ties broken by lower dimension, then lower
// threshold, so parallel and sequential searches agree.
bool improves(const SplitChoice& cand, const SplitChoice& best) {
    if (!cand.found)
        return false;
    if (!best.found)
        return true;
    if (cand.sdr != best.sdr)
        return cand.sdr > best.sdr;
    if (cand.dim != best.dim)
        return cand.dim < best.dim;
    return cand.threshold < best.threshold;
}

struct Builder {
    const std::vector<std::vector<double>>& points;
    const std::vector<double>& targets;
    TreeParams params;
    std::size_t dims;
    double root_sd = 0.0;

    SplitChoice best_split_for_dim(const std::vector<std::uint32_t>& index, int dim) const {
        std::vector<std::uint32_t> order = index;
        std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
            if (points[a][static_cast<std::size_t>(dim)] != points[b][static_cast<std::size_t>(dim)])
                return points[a][static_cast<std::size_t>(dim)] < points[b][static_cast<std::size_t>(dim)];
            return a < b;
        });

        double total = 0.0, total_sq = 0.0;
        for (auto i : order) {
            total += targets[i];
            total_sq += targets[i] * targets[i];
        }
        const double n = static_cast<double>(order.size());
        const double sd = population_sd(total, total_sq, n);

        SplitChoice best;
        double left = 0.0, left_sq = 0.0;
        for (std::size_t cut = 1; cut < order.size(); ++cut) {
            const double y = targets[order[cut - 1]];
            left += y;
            left_sq += y * y;
            const double a = points[order[cut - 1]][static_cast<std::size_t>(dim)];
            const double b = points[order[cut]][static_cast<std::size_t>(dim)];
            if (a == b)
                continue; // not a boundary between distinct values
            if (cut < static_cast<std::size_t>(params.min_leaf) ||
                order.size() - cut < static_cast<std::size_t>(params.min_leaf))
                continue;
            const double ln = static_cast<double>(cut);
            const double rn = n - ln;
            const double child =
                ln / n * population_sd(left, left_sq, ln) + rn / n * population_sd(total - left, total_sq - left_sq, rn);
            SplitChoice cand;
            cand.found = true;
            cand.dim = dim;
            cand.threshold = a + (b - a) / 2.0;
            cand.sdr = sd - child;
            if (improves(cand, best))
                best = cand;
        }
        return best;
    }

    SplitChoice best_split(const std::vector<std::uint32_t>& index) const {
        std::vector<SplitChoice> per_dim(dims);
        // Thread startup dwarfs the per-dimension scan on small nodes.
        if (params.parallel_split && dims > 1 && index.size() >= 2048) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
            for (int d = 0; d < static_cast<int>(dims); ++d)
                per_dim[static_cast<std::size_t>(d)] = best_split_for_dim(index, d);
        } else {
            for (int d = 0; d < static_cast<int>(dims); ++d)
                per_dim[static_cast<std::size_t>(d)] = best_split_for_dim(index, d);
        }
        SplitChoice best;
        for (const auto& cand : per_dim)
            if (improves(cand, best))
                best = cand;
        return best;
    }

    // Mean absolute error of the node model, inflated by the (n+v)/(n-v)
    // parameter penalty.
    double adjusted_error(const LinearModel& m, const std::vector<std::uint32_t>& index) const {
        double mae = 0.0;
        for (auto i : index)
            mae += std::abs(targets[i] - m.evaluate(points[i]));
        mae /= static_cast<double>(index.size());
        if (mae == 0.0)
            return 0.0;
        double v = 1.0;
        for (double c : m.coef)
            if (c != 0.0)
                v += 1.0;
        const double n = static_cast<double>(index.size());
        if (n <= v)
            return std::numeric_limits<double>::infinity();
        return mae * (n + v) / (n - v);
    }

    struct Built {
        std::unique_ptr<ModelTree::Node> node;
        double adj_err = 0.0;
    };

    Built build(const std::vector<std::uint32_t>& index) const {
        auto node = std::make_unique<ModelTree::Node>();
        node->count = static_cast<int>(index.size());
        node->model = fit_linear(points, targets, index, dims);

        double sum = 0.0, sum_sq = 0.0;
        for (auto i : index) {
            sum += targets[i];
            sum_sq += targets[i] * targets[i];
        }
        const double sd = population_sd(sum, sum_sq, static_cast<double>(index.size()));

        const bool stop = index.size() < 2 * static_cast<std::size_t>(params.min_leaf) || sd == 0.0 ||
                          sd < params.sd_floor * root_sd;
        if (!stop) {
            const SplitChoice split = best_split(index);
            if (split.found) {
                std::vector<std::uint32_t> left, right;
                for (auto i : index) {
                    if (points[i][static_cast<std::size_t>(split.dim)] <= split.threshold)
                        left.push_back(i);
                    else
                        right.push_back(i);
                }
                Built lb = build(left);
                Built rb = build(right);
                const double own = adjusted_error(node->model, index);
                const double subtree = (static_cast<double>(left.size()) * lb.adj_err +
                                        static_cast<double>(right.size()) * rb.adj_err) /
                                       static_cast<double>(index.size());
                if (params.prune && subtree > own)
                    return {std::move(node), own}; // children discarded
                node->split_dim = split.dim;
                node->threshold = split.threshold;
                node->left = std::move(lb.node);
                node->right = std::move(rb.node);
                return {std::move(node), params.prune ? subtree : 0.0};
            }
        }
        const double adj = params.prune ? adjusted_error(node->model, index) : 0.0;
        return {std::move(node), adj};
    }
};

} // namespace

ModelTree ModelTree::train(const std::vector<std::vector<double>>& points, const std::vector<double>& targets,
                           const TreeParams& params) {
    if (points.empty() || points.size() != targets.size())
        fail(ErrorCategory::data, "model tree needs a non-empty point set with one target per point");
    if (points.size() < static_cast<std::size_t>(params.min_leaf))
        fail(ErrorCategory::data, "model tree needs at least min_leaf points");
    const std::size_t dims = points[0].size();
    for (const auto& p : points)
        if (p.size() != dims)
            fail(ErrorCategory::data, "model tree points have inconsistent dimensionality");
    for (double t : targets)
        if (!std::isfinite(t))
            fail(ErrorCategory::data, "model tree targets must be finite");

    std::vector<std::uint32_t> index(points.size());
    for (std::size_t i = 0; i < index.size(); ++i)
        index[i] = static_cast<std::uint32_t>(i);

    double sum = 0.0, sum_sq = 0.0;
    for (double t : targets) {
        sum += t;
        sum_sq += t * t;
    }

    Builder b{points, targets, params, dims, population_sd(sum, sum_sq, static_cast<double>(targets.size()))};
    ModelTree tree;
    tree.dims_ = dims;
    tree.smoothing_ = params.smoothing;
    tree.root_ = b.build(index).node;
    return tree;
}

double ModelTree::predict(std::span<const double> x) const {
    if (!root_)
        fail(ErrorCategory::internal, "predict on an untrained model tree");
    if (x.size() != dims_)
        fail(ErrorCategory::data, "predict input has wrong dimensionality");

    std::vector<const Node*> path;
    const Node* node = root_.get();
    while (!node->is_leaf()) {
        path.push_back(node);
        node = x[static_cast<std::size_t>(node->split_dim)] <= node->threshold ? node->left.get() : node->right.get();
    }
    double p = node->model.evaluate(x);
    if (smoothing_ > 0.0) {
        for (auto it = path.rbegin(); it != path.rend(); ++it) {
            const Node* anc = *it;
            p = (static_cast<double>(anc->count) * p + smoothing_ * anc->model.evaluate(x)) /
                (static_cast<double>(anc->count) + smoothing_);
        }
    }
    return p;
}

std::size_t ModelTree::leaf_count() const {
    std::size_t n = 0;
    const auto walk = [&n](const Node* node, const auto& self) -> void {
        if (!node)
            return;
        if (node->is_leaf()) {
            ++n;
            return;
        }
        self(node->left.get(), self);
        self(node->right.get(), self);
    };
    walk(root_.get(), walk);
    return n;
}

namespace {

void save_node(std::ostream& out, const ModelTree::Node* node) {
    out << (node->is_leaf() ? "leaf" : "split") << " " << node->count;
    if (!node->is_leaf())
        out << " " << node->split_dim << " " << format_double(node->threshold);
    out << " " << format_double(node->model.intercept);
    for (double c : node->model.coef)
        out << " " << format_double(c);
    out << "\n";
    if (!node->is_leaf()) {
        save_node(out, node->left.get());
        save_node(out, node->right.get());
    }
}

std::unique_ptr<ModelTree::Node> load_node(std::istream& in, std::size_t dims) {
    std::string tag;
    if (!(in >> tag))
        fail(ErrorCategory::data, "model tree file truncated");
    auto node = std::make_unique<ModelTree::Node>();
    if (!(in >> node->count))
        fail(ErrorCategory::data, "model tree file truncated");
    if (tag == "split") {
        if (!(in >> node->split_dim >> node->threshold))
            fail(ErrorCategory::data, "model tree file truncated");
    } else if (tag != "leaf") {
        fail(ErrorCategory::data, "model tree file: unexpected node tag '" + tag + "'");
    }
    if (!(in >> node->model.intercept))
        fail(ErrorCategory::data, "model tree file truncated");
    node->model.coef.resize(dims);
    for (auto& c : node->model.coef)
        if (!(in >> c))
            fail(ErrorCategory::data, "model tree file truncated");
    if (tag == "split") {
        node->left = load_node(in, dims);
        node->right = load_node(in, dims);
    }
    return node;
}

} // namespace

void ModelTree::save(std::ostream& out) const {
    out << "tree " << dims_ << " " << format_double(smoothing_) << "\n";
    save_node(out, root_.get());
}

ModelTree ModelTree::load(std::istream& in) {
    std::string tag;
    ModelTree t;
    if (!(in >> tag) || tag != "tree" || !(in >> t.dims_ >> t.smoothing_))
        fail(ErrorCategory::data, "not a model tree file");
    t.root_ = load_node(in, t.dims_);
    return t;
}

} // namespace apxtune
