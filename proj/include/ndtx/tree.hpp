#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ndtx/dataset.hpp"
#include "ndtx/rng.hpp"

namespace ndtx {

using NodeId = int;

/// One node of a binary classification tree. Inner nodes route x[feature] <= threshold
/// to `left`, everything else to `right`. Every node keeps the class distribution of
/// the training rows that reached it; only leaves use it for prediction.
struct TreeNode {
    bool is_leaf = true;
    int feature = -1;
    double threshold = 0.0;
    NodeId left = -1;
    NodeId right = -1;
    std::vector<double> class_probs;
    std::size_t sample_count = 0;

    bool operator==(const TreeNode&) const = default;
};

class DecisionTree {
public:
    DecisionTree() = default;
    /// Validates structure: binary, reachable from root 0, probability vectors at leaves.
    DecisionTree(std::vector<TreeNode> nodes, std::size_t n_features, int class_count);

    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    const TreeNode& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
    NodeId root() const noexcept { return 0; }
    std::size_t n_features() const noexcept { return n_features_; }
    int class_count() const noexcept { return class_count_; }
    int depth() const noexcept { return depth_; }
    std::size_t leaf_count() const noexcept { return leaf_count_; }
    std::size_t inner_count() const noexcept { return nodes_.size() - leaf_count_; }
    bool degenerate() const noexcept { return leaf_count_ < 2; }

    bool operator==(const DecisionTree&) const = default;

private:
    std::vector<TreeNode> nodes_;
    std::size_t n_features_ = 0;
    int class_count_ = 0;
    int depth_ = 0;
    std::size_t leaf_count_ = 0;
};

struct TreeParams {
    int max_depth = 4;
    int min_leaf = 1;
};

/// Greedy CART with Gini impurity. Candidate thresholds are midpoints between
/// consecutive distinct sorted values; ties go to the lowest feature index, then
/// the lowest threshold.
DecisionTree fit_tree(const DatasetView& train, const TreeParams& params);

struct TreePrediction {
    Label label;
    NodeId leaf;
};

TreePrediction predict_tree(const DecisionTree& t, std::span<const double> x);
std::vector<Label> predict_tree(const DecisionTree& t, const DatasetView& rows);

/// Argmax with ties resolved toward the lower class id.
Label argmax_label(std::span<const double> probs);

/// Stratified k-fold CV accuracy of each depth; returns the best depth, ties
/// resolved toward the smaller depth.
struct DepthSelection {
    int depth;
    std::vector<int> grid;
    std::vector<double> mean_accuracy;
};
DepthSelection select_depth_cv(const Dataset& d, std::span<const int> depth_grid, int folds, Rng& rng,
                               int min_leaf = 1);

/// Root-to-leaf path encoding. Inner nodes are in preorder, leaves in left-to-right
/// order. path(l, k) is +1 when leaf l lies in the right subtree of inner node k,
/// -1 for the left subtree, 0 when k is not on the path to l.
struct StructureIndex {
    std::vector<NodeId> inner_nodes;
    std::vector<NodeId> leaves;
    std::vector<int> path;  // leaves.size() x inner_nodes.size(), row-major
    std::vector<int> path_length;

    int at(std::size_t leaf, std::size_t inner) const { return path[leaf * inner_nodes.size() + inner]; }
};

StructureIndex enumerate_structure(const DecisionTree& t);

/// Interchange JSON: {"format":"ndtx-tree", "n_features", "class_count", "depth",
/// "degenerate", "nodes":[{"id", "feature","threshold","left","right"} | {"id","leaf":true,
/// "class_probs","samples"}]}.
std::string tree_to_json(const DecisionTree& t);
DecisionTree tree_from_json(const std::string& text);

/// FNV-1a of the canonical JSON form, as 16 hex digits.
std::string tree_hash(const DecisionTree& t);

}  // namespace ndtx
