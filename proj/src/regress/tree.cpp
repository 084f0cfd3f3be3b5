#include "cctlab/regress.hpp"
#include "detail.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace cctlab {

namespace {

struct Builder {
    const Eigen::MatrixXd& z;
    const Eigen::VectorXd& t;
    TreeOptions options;
    int max_features;          // >= p means every feature, in column order
    std::mt19937_64* rng;      // only used when subsampling features
    std::vector<TreeNode> nodes;
    std::vector<Eigen::Index> scratch;

    std::vector<int> candidate_features() {
        const auto p = static_cast<int>(z.cols());
        std::vector<int> all(static_cast<std::size_t>(p));
        std::iota(all.begin(), all.end(), 0);
        if (max_features >= p) return all;
        // Partial Fisher-Yates, then column order so ties resolve the same way
        // as in a plain tree.
        for (int i = 0; i < max_features; ++i) {
            std::uniform_int_distribution<int> pick(i, p - 1);
            std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(pick(*rng))]);
        }
        all.resize(static_cast<std::size_t>(max_features));
        std::sort(all.begin(), all.end());
        return all;
    }

    int build(std::vector<Eigen::Index>& rows, int depth) {
        const int id = static_cast<int>(nodes.size());
        nodes.emplace_back();
        const auto n = rows.size();
        double sum = 0.0;
        for (auto r : rows) sum += t(r);
        nodes[static_cast<std::size_t>(id)].value = sum / static_cast<double>(n);
        nodes[static_cast<std::size_t>(id)].samples = static_cast<int>(n);

        const auto leaf = static_cast<std::size_t>(options.min_samples_leaf);
        if (depth >= options.max_depth || n < 2 * leaf) return id;

        // Maximizing sum_L^2/n_L + sum_R^2/n_R is the same as minimizing the
        // children's squared error.
        const double parent_score = sum * sum / static_cast<double>(n);
        double best_score = parent_score;
        int best_feature = -1;
        double best_threshold = 0.0;
        for (int f : candidate_features()) {
            scratch = rows;
            std::stable_sort(scratch.begin(), scratch.end(),
                             [&](Eigen::Index a, Eigen::Index b) { return z(a, f) < z(b, f); });
            double left = 0.0;
            for (std::size_t k = 0; k + 1 < n; ++k) {
                left += t(scratch[k]);
                const std::size_t nl = k + 1;
                if (nl < leaf || n - nl < leaf) continue;
                const double lo = z(scratch[k], f);
                const double hi = z(scratch[k + 1], f);
                if (!(lo < hi)) continue;
                const double right = sum - left;
                const double score =
                    left * left / static_cast<double>(nl) + right * right / static_cast<double>(n - nl);
                if (score > best_score + 1e-12 * std::abs(best_score)) {
                    best_score = score;
                    best_feature = f;
                    best_threshold = 0.5 * (lo + hi);
                    // Midpoint can round up to `hi` for adjacent doubles.
                    if (!(best_threshold < hi)) best_threshold = lo;
                }
            }
        }
        if (best_feature < 0) return id;

        std::vector<Eigen::Index> left_rows, right_rows;
        for (auto r : rows) (z(r, best_feature) <= best_threshold ? left_rows : right_rows).push_back(r);
        rows.clear();
        rows.shrink_to_fit();
        nodes[static_cast<std::size_t>(id)].feature = best_feature;
        nodes[static_cast<std::size_t>(id)].threshold = best_threshold;
        const int l = build(left_rows, depth + 1);
        const int r = build(right_rows, depth + 1);
        nodes[static_cast<std::size_t>(id)].left = l;
        nodes[static_cast<std::size_t>(id)].right = r;
        return id;
    }
};

std::vector<TreeNode> grow(const Eigen::MatrixXd& z, const Eigen::VectorXd& t, std::vector<Eigen::Index> rows,
                           const TreeOptions& options, int max_features, std::mt19937_64* rng) {
    if (options.min_samples_leaf < 1 || options.max_depth < 0) throw std::invalid_argument("invalid tree options");
    Builder b{z, t, options, max_features, rng, {}, {}};
    b.build(rows, 0);
    return std::move(b.nodes);
}

int leaf_of(const std::vector<TreeNode>& nodes, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    int k = 0;
    while (nodes[static_cast<std::size_t>(k)].feature >= 0) {
        const auto& node = nodes[static_cast<std::size_t>(k)];
        k = x(node.feature) <= node.threshold ? node.left : node.right;
    }
    return k;
}

nlohmann::json nodes_json(const std::vector<TreeNode>& nodes) {
    auto out = nlohmann::json::array();
    for (const auto& n : nodes) out.push_back({n.feature, n.threshold, n.left, n.right, n.value, n.samples});
    return out;
}

std::vector<TreeNode> nodes_from_json(const nlohmann::json& j) {
    std::vector<TreeNode> nodes;
    for (const auto& e : j) {
        nodes.push_back(TreeNode{e.at(0).get<int>(), e.at(1).get<double>(), e.at(2).get<int>(), e.at(3).get<int>(),
                                 e.at(4).get<double>(), e.at(5).get<int>()});
    }
    if (nodes.empty()) throw std::invalid_argument("tree without nodes in model file");
    return nodes;
}

std::vector<Eigen::Index> all_rows(Eigen::Index n) {
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), 0);
    return rows;
}

}  // namespace

void TreeRegressor::fit_standardized(const Eigen::MatrixXd& z, const Eigen::VectorXd& t) {
    nodes_ = grow(z, t, all_rows(z.rows()), spec_.tree, static_cast<int>(z.cols()), nullptr);
}

Eigen::VectorXd TreeRegressor::predict_standardized(const Eigen::MatrixXd& z) const {
    Eigen::VectorXd out(z.rows());
    for (Eigen::Index r = 0; r < z.rows(); ++r) out(r) = nodes_[static_cast<std::size_t>(leaf_of(nodes_, z.row(r)))].value;
    return out;
}

std::vector<int> TreeRegressor::apply(const Eigen::MatrixXd& x) const {
    const Eigen::MatrixXd z = x_scaler().transform(x);
    std::vector<int> out;
    for (Eigen::Index r = 0; r < z.rows(); ++r) out.push_back(leaf_of(nodes_, z.row(r)));
    return out;
}

nlohmann::json TreeRegressor::state_json() const { return {{"nodes", nodes_json(nodes_)}}; }

void TreeRegressor::load_state(const nlohmann::json& j) { nodes_ = nodes_from_json(j.at("nodes")); }

void ForestRegressor::fit_standardized(const Eigen::MatrixXd& z, const Eigen::VectorXd& t) {
    const auto& o = spec_.forest;
    if (o.trees < 1) throw std::invalid_argument("forest needs at least one tree");
    const auto p = static_cast<int>(z.cols());
    const int mtry = o.max_features > 0 ? std::min(o.max_features, p) : std::max(1, (p + 2) / 3);
    std::mt19937_64 rng(spec_.seed);
    const auto n = z.rows();
    trees_.clear();
    for (int k = 0; k < o.trees; ++k) {
        std::vector<Eigen::Index> rows;
        if (o.bootstrap) {
            std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
            rows.resize(static_cast<std::size_t>(n));
            for (auto& r : rows) r = pick(rng);
            std::sort(rows.begin(), rows.end());
        } else {
            rows = all_rows(n);
        }
        trees_.push_back(grow(z, t, std::move(rows), o.tree, mtry, &rng));
    }
}

Eigen::VectorXd ForestRegressor::predict_standardized(const Eigen::MatrixXd& z) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(z.rows());
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
        double acc = 0.0;
        for (const auto& tree : trees_) acc += tree[static_cast<std::size_t>(leaf_of(tree, z.row(r)))].value;
        out(r) = acc / static_cast<double>(trees_.size());
    }
    return out;
}

nlohmann::json ForestRegressor::state_json() const {
    auto trees = nlohmann::json::array();
    for (const auto& tree : trees_) trees.push_back(nodes_json(tree));
    return {{"trees", trees}};
}

void ForestRegressor::load_state(const nlohmann::json& j) {
    trees_.clear();
    for (const auto& tree : j.at("trees")) trees_.push_back(nodes_from_json(tree));
}

}  // namespace cctlab
