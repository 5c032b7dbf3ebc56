#include "ndtx/tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <json.hpp>

#include "ndtx/error.hpp"

namespace ndtx {

using nlohmann::json;

DecisionTree::DecisionTree(std::vector<TreeNode> nodes, std::size_t n_features, int class_count)
    : nodes_(std::move(nodes)), n_features_(n_features), class_count_(class_count) {
    if (nodes_.empty()) throw DataError("tree has no nodes");
    if (class_count_ < 1) throw DataError("tree class_count must be positive");
    std::vector<int> seen(nodes_.size(), 0);
    // (node, depth) stack walk from the root; every node must be reached exactly once.
    std::vector<std::pair<NodeId, int>> stack{{0, 0}};
    while (!stack.empty()) {
        auto [id, depth] = stack.back();
        stack.pop_back();
        if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
            throw DataError("tree child id out of range");
        if (seen[id]++) throw DataError("tree node " + std::to_string(id) + " reached twice");
        const TreeNode& n = nodes_[id];
        depth_ = std::max(depth_, depth);
        if (n.is_leaf) {
            ++leaf_count_;
            if (n.class_probs.size() != static_cast<std::size_t>(class_count_))
                throw DataError("leaf class distribution has wrong length");
            double sum = 0.0;
            for (double p : n.class_probs) {
                if (!(p >= 0.0) || !std::isfinite(p)) throw DataError("leaf probability not in [0,1]");
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-12) throw DataError("leaf distribution does not sum to 1");
        } else {
            if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= n_features_)
                throw DataError("split feature index out of range");
            if (!std::isfinite(n.threshold)) throw DataError("split threshold not finite");
            stack.emplace_back(n.right, depth + 1);
            stack.emplace_back(n.left, depth + 1);
        }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end())
        throw DataError("tree contains unreachable nodes");
}

namespace {

struct Builder {
    const DatasetView& view;
    TreeParams params;
    int n_classes;
    std::vector<TreeNode> nodes;

    std::vector<double> distribution(std::span<const std::size_t> rows) const {
        std::vector<double> probs(n_classes, 0.0);
        for (std::size_t k : rows) probs[view.label(k)] += 1.0;
        for (double& p : probs) p /= static_cast<double>(rows.size());
        return probs;
    }

    NodeId build(std::vector<std::size_t> rows, int depth) {
        const NodeId id = static_cast<NodeId>(nodes.size());
        nodes.emplace_back();
        nodes[id].class_probs = distribution(rows);
        nodes[id].sample_count = rows.size();

        const auto& probs = nodes[id].class_probs;
        const bool pure = std::count_if(probs.begin(), probs.end(), [](double p) { return p > 0.0; }) <= 1;
        const auto m = rows.size();
        if (depth >= params.max_depth || pure || m < 2 * static_cast<std::size_t>(params.min_leaf))
            return id;

        int best_feature = -1;
        double best_threshold = 0.0;
        double best_impurity = std::numeric_limits<double>::infinity();

        const std::size_t d = view.n_features();
        std::vector<std::size_t> order(m);
        std::vector<double> left(n_classes), right(n_classes);
        std::vector<double> total(n_classes, 0.0);
        for (std::size_t k : rows) total[view.label(k)] += 1.0;

        for (std::size_t f = 0; f < d; ++f) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            auto value = [&](std::size_t j) { return view.row(rows[j])[f]; };
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return value(a) < value(b); });
            std::fill(left.begin(), left.end(), 0.0);
            right = total;
            for (std::size_t j = 0; j + 1 < m; ++j) {
                const Label y = view.label(rows[order[j]]);
                left[y] += 1.0;
                right[y] -= 1.0;
                const double lo = value(order[j]);
                const double hi = value(order[j + 1]);
                if (!(lo < hi)) continue;
                const auto n_left = j + 1;
                const auto n_right = m - n_left;
                if (n_left < static_cast<std::size_t>(params.min_leaf) ||
                    n_right < static_cast<std::size_t>(params.min_leaf))
                    continue;
                // Weighted Gini, scaled by m: n_L - sum(l_c^2)/n_L + n_R - sum(r_c^2)/n_R.
                double sq_left = 0.0, sq_right = 0.0;
                for (int c = 0; c < n_classes; ++c) {
                    sq_left += left[c] * left[c];
                    sq_right += right[c] * right[c];
                }
                const double impurity = static_cast<double>(n_left) - sq_left / static_cast<double>(n_left) +
                                        static_cast<double>(n_right) - sq_right / static_cast<double>(n_right);
                if (impurity < best_impurity) {
                    best_impurity = impurity;
                    best_feature = static_cast<int>(f);
                    double mid = lo + (hi - lo) / 2.0;
                    if (!(mid < hi)) mid = lo;
                    best_threshold = mid;
                }
            }
        }
        if (best_feature < 0) return id;

        std::vector<std::size_t> left_rows, right_rows;
        for (std::size_t k : rows) {
            (view.row(k)[best_feature] <= best_threshold ? left_rows : right_rows).push_back(k);
        }
        nodes[id].is_leaf = false;
        nodes[id].feature = best_feature;
        nodes[id].threshold = best_threshold;
        const NodeId l = build(std::move(left_rows), depth + 1);
        nodes[id].left = l;
        const NodeId r = build(std::move(right_rows), depth + 1);
        nodes[id].right = r;
        return id;
    }
};

}  // namespace

DecisionTree fit_tree(const DatasetView& train, const TreeParams& params) {
    if (train.size() == 0) throw DataError("cannot fit a tree on an empty training view");
    if (params.max_depth < 1) throw ConfigError("max_depth must be >= 1");
    if (params.min_leaf < 1) throw ConfigError("min_leaf must be >= 1");
    Builder b{train, params, train.class_count(), {}};
    std::vector<std::size_t> rows(train.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    b.build(std::move(rows), 0);
    return DecisionTree(std::move(b.nodes), train.n_features(), train.class_count());
}

Label argmax_label(std::span<const double> probs) {
    Label best = 0;
    for (std::size_t c = 1; c < probs.size(); ++c) {
        if (probs[c] > probs[best]) best = static_cast<Label>(c);
    }
    return best;
}

TreePrediction predict_tree(const DecisionTree& t, std::span<const double> x) {
    if (x.size() != t.n_features())
        throw DataError("feature vector has " + std::to_string(x.size()) + " entries, tree expects " +
                        std::to_string(t.n_features()));
    NodeId id = t.root();
    while (!t.node(id).is_leaf) {
        const TreeNode& n = t.node(id);
        id = x[n.feature] <= n.threshold ? n.left : n.right;
    }
    return {argmax_label(t.node(id).class_probs), id};
}

std::vector<Label> predict_tree(const DecisionTree& t, const DatasetView& rows) {
    std::vector<Label> out;
    out.reserve(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) out.push_back(predict_tree(t, rows.row(k)).label);
    return out;
}

DepthSelection select_depth_cv(const Dataset& d, std::span<const int> depth_grid, int folds, Rng& rng,
                               int min_leaf) {
    if (folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
    if (depth_grid.empty()) throw ConfigError("depth grid is empty");
    if (d.size() < static_cast<std::size_t>(folds))
        throw DataError("dataset too small for " + std::to_string(folds) + "-fold cross-validation");

    // Stratified fold assignment: deal each shuffled class round-robin, continuing the
    // fold counter across classes so fold sizes differ by at most one.
    std::vector<int> fold_of(d.size());
    std::vector<std::vector<std::size_t>> by_class(d.class_count());
    for (std::size_t i = 0; i < d.size(); ++i) by_class[d.label(i)].push_back(i);
    std::size_t counter = 0;
    for (auto& members : by_class) {
        std::shuffle(members.begin(), members.end(), rng);
        for (std::size_t i : members) fold_of[i] = static_cast<int>(counter++ % folds);
    }

    DepthSelection sel{depth_grid.front(), {depth_grid.begin(), depth_grid.end()}, {}};
    double best = -1.0;
    for (int depth : depth_grid) {
        double acc_sum = 0.0;
        for (int k = 0; k < folds; ++k) {
            std::vector<std::size_t> train_rows, test_rows;
            for (std::size_t i = 0; i < d.size(); ++i) (fold_of[i] == k ? test_rows : train_rows).push_back(i);
            const auto tree = fit_tree({&d, train_rows}, {depth, min_leaf});
            std::size_t hits = 0;
            for (std::size_t i : test_rows) hits += predict_tree(tree, d.row(i)).label == d.label(i);
            acc_sum += static_cast<double>(hits) / static_cast<double>(test_rows.size());
        }
        const double mean = acc_sum / folds;
        sel.mean_accuracy.push_back(mean);
        if (mean > best) {
            best = mean;
            sel.depth = depth;
        }
    }
    return sel;
}

StructureIndex enumerate_structure(const DecisionTree& t) {
    if (t.degenerate())
        throw DegenerateError("tree has a single leaf; there are no splits to encode");
    StructureIndex s;
    s.inner_nodes.reserve(t.inner_count());
    s.leaves.reserve(t.leaf_count());
    std::vector<std::vector<std::pair<std::size_t, int>>> leaf_paths;

    std::vector<std::pair<std::size_t, int>> path;
    auto walk = [&](auto&& self, NodeId id) -> void {
        const TreeNode& n = t.node(id);
        if (n.is_leaf) {
            s.leaves.push_back(id);
            leaf_paths.push_back(path);
            return;
        }
        const std::size_t pos = s.inner_nodes.size();
        s.inner_nodes.push_back(id);
        path.emplace_back(pos, -1);
        self(self, n.left);
        path.back().second = +1;
        self(self, n.right);
        path.pop_back();
    };
    walk(walk, t.root());

    const std::size_t inner = s.inner_nodes.size();
    s.path.assign(s.leaves.size() * inner, 0);
    for (std::size_t l = 0; l < s.leaves.size(); ++l) {
        for (auto [k, sign] : leaf_paths[l]) s.path[l * inner + k] = sign;
        s.path_length.push_back(static_cast<int>(leaf_paths[l].size()));
    }
    return s;
}

namespace {

json tree_document(const DecisionTree& t) {
    json nodes = json::array();
    for (std::size_t i = 0; i < t.nodes().size(); ++i) {
        const TreeNode& n = t.nodes()[i];
        if (n.is_leaf) {
            nodes.push_back({{"id", i}, {"leaf", true}, {"class_probs", n.class_probs}, {"samples", n.sample_count}});
        } else {
            nodes.push_back({{"id", i},
                             {"feature", n.feature},
                             {"threshold", n.threshold},
                             {"left", n.left},
                             {"right", n.right},
                             {"class_probs", n.class_probs},
                             {"samples", n.sample_count}});
        }
    }
    return {{"format", "ndtx-tree"},
            {"version", 1},
            {"n_features", t.n_features()},
            {"class_count", t.class_count()},
            {"depth", t.depth()},
            {"leaves", t.leaf_count()},
            {"degenerate", t.degenerate()},
            {"nodes", std::move(nodes)}};
}

}  // namespace

std::string tree_to_json(const DecisionTree& t) { return tree_document(t).dump(2); }

DecisionTree tree_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("tree JSON does not parse: ") + e.what());
    }
    try {
        if (doc.value("format", "") != "ndtx-tree") throw DataError("not an ndtx-tree document");
        const auto n_features = doc.at("n_features").get<std::size_t>();
        const auto class_count = doc.at("class_count").get<int>();
        const auto& jnodes = doc.at("nodes");
        std::vector<TreeNode> nodes(jnodes.size());
        for (const auto& jn : jnodes) {
            const auto id = jn.at("id").get<std::size_t>();
            if (id >= nodes.size()) throw DataError("tree node id out of range");
            TreeNode& n = nodes[id];
            n.sample_count = jn.value("samples", std::size_t{0});
            if (jn.value("leaf", false)) {
                n.is_leaf = true;
                n.class_probs = jn.at("class_probs").get<std::vector<double>>();
            } else {
                n.is_leaf = false;
                if (jn.contains("class_probs")) n.class_probs = jn.at("class_probs").get<std::vector<double>>();
                n.feature = jn.at("feature").get<int>();
                n.threshold = jn.at("threshold").get<double>();
                n.left = jn.at("left").get<NodeId>();
                n.right = jn.at("right").get<NodeId>();
            }
        }
        return DecisionTree(std::move(nodes), n_features, class_count);
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed tree JSON: ") + e.what());
    }
}

std::string tree_hash(const DecisionTree& t) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(tree_document(t).dump())));
    return buf;
}

}  // namespace ndtx
