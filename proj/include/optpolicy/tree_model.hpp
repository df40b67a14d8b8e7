#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "optpolicy/score_data.hpp"
#include "optpolicy/search_config.hpp"

namespace optpolicy {

/// value <= threshold goes left.
struct Threshold {
    double value = 0.0;
    friend bool operator==(const Threshold&, const Threshold&) = default;
};

/// Category index in `left` goes left. `left` is sorted, non-empty and a
/// strict subset of the feature's categories.
struct CategorySet {
    std::vector<int> left;
    bool contains(int category) const;
    friend bool operator==(const CategorySet&, const CategorySet&) = default;
};

struct SplitRule {
    int feature = 0;
    std::variant<Threshold, CategorySet> test;

    friend bool operator==(const SplitRule&, const SplitRule&) = default;
};

struct TreeNode {
    std::optional<SplitRule> rule;  // empty for a leaf
    int left = -1;
    int right = -1;
    int treatment = -1;
    Eigen::Index n_train = 0;
    double train_share = 0.0;

    bool is_leaf() const noexcept { return !rule.has_value(); }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct TreeMetadata {
    SearchConfig config;
    /// Stage structure such as "2" or "2+1".
    std::string stages = "0";
    double welfare_total = 0.0;
    double welfare_mean = 0.0;
    Eigen::Index n_train = 0;
    /// Treatment costs subtracted from the scores during training; empty
    /// when the tree was trained on the raw scores.
    std::vector<double> costs;

    friend bool operator==(const TreeMetadata&, const TreeMetadata&) = default;
};

/// A policy tree. `nodes[0]` is the root; children are referenced by index.
struct PolicyTree {
    std::vector<TreeNode> nodes;
    std::vector<FeatureSpec> specs;
    std::vector<std::string> treatment_labels;
    TreeMetadata meta;

    static PolicyTree single_leaf(int treatment, std::vector<FeatureSpec> specs, std::vector<std::string> labels);

    /// Number of split levels on the longest root-to-leaf path.
    int depth() const;
    /// Leaf node indices in left-to-right order.
    std::vector<int> leaves() const;
    /// Replaces leaf `leaf` by the root of `sub` (same specs and labels).
    void graft(int leaf, const PolicyTree& sub);
    /// Rewrites `nodes` in preorder, so equal trees compare equal.
    void canonicalize();

    /// Throws MalformedTree on broken structure or rules that do not fit the specs.
    void validate() const;

    friend bool operator==(const PolicyTree&, const PolicyTree&) = default;
};

struct Assignment {
    Eigen::VectorXi treatments;
    Eigen::VectorXi leaves;
    /// Rows routed right because their category was unknown at training time.
    std::size_t unseen_category_rows = 0;
};

/// Throws SpecMismatch unless `specs` has the tree's feature names and kinds
/// and each categorical list starts with the tree's categories.
void check_specs(const PolicyTree& tree, const std::vector<FeatureSpec>& specs);

Assignment route(const PolicyTree& tree, const PolicyData& data);

inline Eigen::VectorXi assign(const PolicyTree& tree, const PolicyData& data) { return route(tree, data).treatments; }

std::string to_json(const PolicyTree& tree);
PolicyTree from_json(const std::string& text);

/// One line per leaf, left to right: the path conditions joined by ", ",
/// then the treatment label. With `data`, each line ends with the share of
/// rows routed to that leaf.
std::string render_rules(const PolicyTree& tree, const PolicyData* data_for_shares = nullptr);

std::string to_dot(const PolicyTree& tree);

/// Display form of a threshold: integers without decimals, otherwise three.
std::string format_threshold(double value);

}  // namespace optpolicy
