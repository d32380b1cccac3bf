#include "dml/learners.hpp"
#include "dml/random.hpp"

#include <algorithm>
#include <numeric>

namespace dml {

namespace {

struct Node {
    Index feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

class Tree {
public:
    double predict(const double* row, Index stride) const {
        int k = 0;
        while (nodes_[static_cast<std::size_t>(k)].feature >= 0) {
            const Node& nd = nodes_[static_cast<std::size_t>(k)];
            k = row[nd.feature * stride] <= nd.threshold ? nd.left : nd.right;
        }
        return nodes_[static_cast<std::size_t>(k)].value;
    }

    std::vector<Node> nodes_;
};

// Grows one CART tree on a bootstrap sample. Splits maximize
// sum_L^2/n_L + sum_R^2/n_R, which is variance reduction for regression
// and Gini decrease for 0/1 targets.
class TreeBuilder {
public:
    TreeBuilder(const MatrixXd& x, const VectorXd& y, const RandomForestSpec& spec, Rng& rng)
        : x_(x), y_(y), spec_(spec), rng_(rng) {
        features_.resize(static_cast<std::size_t>(x.cols()));
        std::iota(features_.begin(), features_.end(), Index{0});
        mtry_ = spec.mtry > 0 ? std::min(spec.mtry, x.cols()) : x.cols();
    }

    Tree build(std::vector<Index> sample) {
        Tree tree;
        grow(tree, sample, 0);
        return tree;
    }

private:
    int grow(Tree& tree, std::vector<Index>& ids, int depth) {
        const int me = static_cast<int>(tree.nodes_.size());
        tree.nodes_.emplace_back();
        double sum = 0.0;
        for (Index i : ids) sum += y_(i);
        const double n = static_cast<double>(ids.size());
        tree.nodes_[static_cast<std::size_t>(me)].value = sum / n;

        const auto min_node = static_cast<std::size_t>(spec_.min_node_size);
        if (depth >= spec_.max_depth || ids.size() < 2 * min_node) return me;

        // Partial Fisher-Yates for mtry distinct features.
        for (Index k = 0; k < mtry_; ++k) {
            std::uniform_int_distribution<Index> pick(k, static_cast<Index>(features_.size()) - 1);
            std::swap(features_[static_cast<std::size_t>(k)], features_[static_cast<std::size_t>(pick(rng_))]);
        }

        const double parent = sum * sum / n;
        double best_gain = parent + 1e-12 * std::max(1.0, std::abs(parent));
        Index best_feature = -1;
        double best_threshold = 0.0;
        std::vector<std::pair<double, double>> col(ids.size());
        for (Index k = 0; k < mtry_; ++k) {
            const Index f = features_[static_cast<std::size_t>(k)];
            for (std::size_t t = 0; t < ids.size(); ++t) col[t] = {x_(ids[t], f), y_(ids[t])};
            std::sort(col.begin(), col.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            if (col.front().first == col.back().first) continue;
            double left = 0.0;
            for (std::size_t t = 0; t + 1 < col.size(); ++t) {
                left += col[t].second;
                const std::size_t nl = t + 1;
                const std::size_t nr = col.size() - nl;
                if (nl < min_node) continue;
                if (nr < min_node) break;
                if (col[t].first == col[t + 1].first) continue;
                const double right = sum - left;
                const double gain = left * left / static_cast<double>(nl) + right * right / static_cast<double>(nr);
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = f;
                    best_threshold = 0.5 * (col[t].first + col[t + 1].first);
                    if (best_threshold >= col[t + 1].first) best_threshold = col[t].first;
                }
            }
        }
        if (best_feature < 0) return me;

        std::vector<Index> left_ids, right_ids;
        for (Index i : ids) (x_(i, best_feature) <= best_threshold ? left_ids : right_ids).push_back(i);
        ids.clear();
        ids.shrink_to_fit();
        const int l = grow(tree, left_ids, depth + 1);
        const int r = grow(tree, right_ids, depth + 1);
        Node& nd = tree.nodes_[static_cast<std::size_t>(me)];
        nd.feature = best_feature;
        nd.threshold = best_threshold;
        nd.left = l;
        nd.right = r;
        return me;
    }

    const MatrixXd& x_;
    const VectorXd& y_;
    const RandomForestSpec& spec_;
    Rng& rng_;
    std::vector<Index> features_;
    Index mtry_ = 0;
};

class ForestPredictor final : public Predictor {
public:
    ForestPredictor(std::vector<Tree> trees, Index n_features, bool classification, double clip_eps)
        : trees_(std::move(trees)), n_features_(n_features), classification_(classification), clip_eps_(clip_eps) {}

    VectorXd predict(const MatrixXd& x) const override {
        if (x.cols() != n_features_) throw Error(ErrorCode::LengthMismatch, "feature count differs from fitted model");
        VectorXd out = VectorXd::Zero(x.rows());
        for (Index i = 0; i < x.rows(); ++i) {
            double s = 0.0;
            for (const Tree& t : trees_) s += t.predict(x.data() + i, x.rows());
            out(i) = s / static_cast<double>(trees_.size());
        }
        if (classification_) out = out.cwiseMax(clip_eps_).cwiseMin(1.0 - clip_eps_);
        return out;
    }

private:
    std::vector<Tree> trees_;
    Index n_features_;
    bool classification_;
    double clip_eps_;
};

}  // namespace

PredictorPtr fit_random_forest(const MatrixXd& x, const VectorXd& y, const RandomForestSpec& spec,
                               std::uint64_t seed, double clip_eps) {
    if (x.rows() != y.size()) throw Error(ErrorCode::LengthMismatch, "x and y row counts differ");
    if (x.rows() == 0) throw Error(ErrorCode::InvalidArgument, "cannot fit a forest on zero rows");
    if (spec.num_trees < 1 || spec.min_node_size < 1 || spec.max_depth < 1 || spec.mtry < 0 || spec.mtry > x.cols())
        throw Error(ErrorCode::InvalidArgument, "invalid random forest parameters");
    const bool classification = spec.task == ForestTask::Classification;
    if (classification)
        for (Index i = 0; i < y.size(); ++i)
            if (y(i) != 0.0 && y(i) != 1.0) throw Error(ErrorCode::InvalidArgument, "classification target must be 0/1");

    const Index n = x.rows();
    std::vector<Tree> trees;
    trees.reserve(static_cast<std::size_t>(spec.num_trees));
    for (int t = 0; t < spec.num_trees; ++t) {
        Rng rng = make_rng(seed, {0xf0e57, static_cast<std::uint64_t>(t)});
        std::uniform_int_distribution<Index> draw(0, n - 1);
        std::vector<Index> sample(static_cast<std::size_t>(n));
        for (auto& s : sample) s = draw(rng);
        TreeBuilder builder(x, y, spec, rng);
        trees.push_back(builder.build(std::move(sample)));
    }
    return std::make_shared<ForestPredictor>(std::move(trees), x.cols(), classification, clip_eps);
}

}  // namespace dml
