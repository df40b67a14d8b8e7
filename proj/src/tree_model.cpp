#include "optpolicy/tree_model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <json.hpp>
#include <sstream>

#include "numfmt.hpp"
#include "optpolicy/error.hpp"

namespace optpolicy {

using ordered_json = nlohmann::ordered_json;

void SearchConfig::validate() const {
    auto fail = [](const char* what) { throw Error(ErrorCode::InvalidConfig, what); };
    if (depth < 0) fail("depth must be >= 0");
    if (approx_points < 2) fail("approx_points must be >= 2");
    if (cat_combinations < 1) fail("cat_combinations must be >= 1");
    if (min_leaf_size && *min_leaf_size < 1) fail("min_leaf_size must be >= 1");
    if (!(gain_epsilon >= 0.0)) fail("gain_epsilon must be >= 0");
    if (threads < 1) fail("threads must be >= 1");
    if (!(time_limit_seconds >= 0.0)) fail("time_limit_seconds must be >= 0");
}

bool CategorySet::contains(int category) const { return std::binary_search(left.begin(), left.end(), category); }

// ---------------------------------------------------------------------------
// Structure

PolicyTree PolicyTree::single_leaf(int treatment, std::vector<FeatureSpec> specs, std::vector<std::string> labels) {
    PolicyTree tree;
    TreeNode leaf;
    leaf.treatment = treatment;
    tree.nodes.push_back(leaf);
    tree.specs = std::move(specs);
    tree.treatment_labels = std::move(labels);
    return tree;
}

int PolicyTree::depth() const {
    std::function<int(int)> walk = [&](int i) -> int {
        const auto& node = nodes[static_cast<std::size_t>(i)];
        if (node.is_leaf()) return 0;
        return 1 + std::max(walk(node.left), walk(node.right));
    };
    return nodes.empty() ? 0 : walk(0);
}

std::vector<int> PolicyTree::leaves() const {
    std::vector<int> out;
    std::function<void(int)> walk = [&](int i) {
        const auto& node = nodes[static_cast<std::size_t>(i)];
        if (node.is_leaf()) {
            out.push_back(i);
            return;
        }
        walk(node.left);
        walk(node.right);
    };
    if (!nodes.empty()) walk(0);
    return out;
}

void PolicyTree::graft(int leaf, const PolicyTree& sub) {
    if (leaf < 0 || leaf >= static_cast<int>(nodes.size()) || !nodes[leaf].is_leaf())
        throw Error(ErrorCode::MalformedTree, "graft target is not a leaf");
    if (sub.nodes.empty()) throw Error(ErrorCode::MalformedTree, "cannot graft an empty tree");
    const int offset = static_cast<int>(nodes.size()) - 1;
    // the sub-root replaces the leaf in place; the rest are appended
    auto remap = [&](int i) { return i == 0 ? leaf : i + offset; };
    for (std::size_t i = 0; i < sub.nodes.size(); ++i) {
        TreeNode node = sub.nodes[i];
        if (!node.is_leaf()) {
            node.left = remap(node.left);
            node.right = remap(node.right);
        }
        if (i == 0) nodes[static_cast<std::size_t>(leaf)] = node;
        else nodes.push_back(node);
    }
}

void PolicyTree::canonicalize() {
    std::vector<TreeNode> ordered;
    ordered.reserve(nodes.size());
    std::function<int(int)> copy = [&](int i) -> int {
        const int at = static_cast<int>(ordered.size());
        ordered.push_back(nodes[static_cast<std::size_t>(i)]);
        if (!ordered[at].is_leaf()) {
            const int l = copy(nodes[i].left);
            const int r = copy(nodes[i].right);
            ordered[at].left = l;
            ordered[at].right = r;
        }
        return at;
    };
    if (!nodes.empty()) copy(0);
    nodes = std::move(ordered);
}

namespace {

int nominal_depth(const std::string& stages) {
    int total = 0;
    std::stringstream ss(stages);
    std::string part;
    while (std::getline(ss, part, '+')) {
        auto v = detail::parse_int(part);
        if (!v || *v < 0) throw Error(ErrorCode::MalformedTree, "bad stage string '" + stages + "'");
        total += static_cast<int>(*v);
    }
    return total;
}

}  // namespace

void PolicyTree::validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::MalformedTree, what); };
    if (nodes.empty()) fail("tree has no nodes");
    if (treatment_labels.size() < 2) fail("tree needs at least two treatment labels");
    const int n_nodes = static_cast<int>(nodes.size());
    std::vector<int> visits(nodes.size(), 0);
    std::function<void(int)> walk = [&](int i) {
        if (i < 0 || i >= n_nodes) fail("child index out of range");
        if (++visits[i] > 1) fail("node reachable twice");
        const auto& node = nodes[i];
        if (node.is_leaf()) {
            if (node.treatment < 0 || node.treatment >= static_cast<int>(treatment_labels.size()))
                fail("leaf treatment out of range");
            return;
        }
        const auto& rule = *node.rule;
        if (rule.feature < 0 || rule.feature >= static_cast<int>(specs.size())) fail("split feature out of range");
        const auto& spec = specs[rule.feature];
        if (const auto* cats = std::get_if<CategorySet>(&rule.test)) {
            if (!spec.is_categorical()) fail("category split on ordered feature '" + spec.name + "'");
            if (cats->left.empty() || cats->left.size() >= spec.categories.size())
                fail("category set must be a non-empty strict subset");
            if (!std::is_sorted(cats->left.begin(), cats->left.end()) ||
                std::adjacent_find(cats->left.begin(), cats->left.end()) != cats->left.end())
                fail("category set must be sorted and distinct");
            if (cats->left.front() < 0 || cats->left.back() >= static_cast<int>(spec.categories.size()))
                fail("category index out of range");
        } else {
            if (spec.is_categorical()) fail("threshold split on categorical feature '" + spec.name + "'");
            if (!std::isfinite(std::get<Threshold>(rule.test).value)) fail("threshold must be finite");
        }
        walk(node.left);
        walk(node.right);
    };
    walk(0);
    if (depth() > nominal_depth(meta.stages)) fail("tree deeper than its stage structure");
}

// ---------------------------------------------------------------------------
// Routing

void check_specs(const PolicyTree& tree, const std::vector<FeatureSpec>& specs) {
    if (specs.size() != tree.specs.size())
        throw Error(ErrorCode::SpecMismatch, "tree expects " + std::to_string(tree.specs.size()) + " features, data has " +
                                                 std::to_string(specs.size()));
    for (std::size_t f = 0; f < specs.size(); ++f) {
        const auto& want = tree.specs[f];
        const auto& have = specs[f];
        if (want.name != have.name || want.kind != have.kind)
            throw Error(ErrorCode::SpecMismatch, "feature " + std::to_string(f) + " is '" + have.name + "' (" +
                                                     std::string(to_string(have.kind)) + "), tree expects '" +
                                                     want.name + "' (" + std::string(to_string(want.kind)) + ")");
        if (have.categories.size() < want.categories.size() ||
            !std::equal(want.categories.begin(), want.categories.end(), have.categories.begin()))
            throw Error(ErrorCode::SpecMismatch, "categories of '" + have.name + "' differ from training");
    }
}

Assignment route(const PolicyTree& tree, const PolicyData& data) {
    check_specs(tree, data.specs);
    Assignment out;
    const auto n = data.features.rows();
    out.treatments.resize(n);
    out.leaves.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        int at = 0;
        bool unseen = false;
        while (!tree.nodes[at].is_leaf()) {
            const auto& node = tree.nodes[at];
            const double value = data.features(i, node.rule->feature);
            bool left = false;
            if (const auto* cats = std::get_if<CategorySet>(&node.rule->test)) {
                const int category = static_cast<int>(value);
                if (category >= static_cast<int>(tree.specs[node.rule->feature].categories.size())) unseen = true;
                else left = cats->contains(category);
            } else {
                left = value <= std::get<Threshold>(node.rule->test).value;
            }
            at = left ? node.left : node.right;
        }
        out.treatments(i) = tree.nodes[at].treatment;
        out.leaves(i) = at;
        if (unseen) ++out.unseen_category_rows;
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

constexpr int kFormatVersion = 1;

ordered_json config_json(const SearchConfig& c) {
    ordered_json j;
    j["depth"] = c.depth;
    j["approx_points"] = c.approx_points;
    j["cat_combinations"] = c.cat_combinations;
    j["min_leaf_size"] = c.min_leaf_size ? ordered_json(*c.min_leaf_size) : ordered_json(nullptr);
    j["exact_mode"] = c.exact_mode;
    j["gain_epsilon"] = c.gain_epsilon;
    j["seed"] = c.seed;
    return j;
}

SearchConfig config_from(const ordered_json& j) {
    SearchConfig c;
    c.depth = j.at("depth").get<int>();
    c.approx_points = j.at("approx_points").get<int>();
    c.cat_combinations = j.at("cat_combinations").get<int>();
    if (!j.at("min_leaf_size").is_null()) c.min_leaf_size = j.at("min_leaf_size").get<int>();
    c.exact_mode = j.at("exact_mode").get<bool>();
    c.gain_epsilon = j.at("gain_epsilon").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

ordered_json node_json(const PolicyTree& tree, int i) {
    const auto& node = tree.nodes[static_cast<std::size_t>(i)];
    ordered_json j;
    if (node.is_leaf()) {
        j["treatment"] = node.treatment;
        j["label"] = tree.treatment_labels[static_cast<std::size_t>(node.treatment)];
        j["n_train"] = node.n_train;
        j["train_share"] = node.train_share;
        return j;
    }
    const auto& rule = *node.rule;
    j["feature"] = rule.feature;
    j["feature_name"] = tree.specs[static_cast<std::size_t>(rule.feature)].name;
    if (const auto* cats = std::get_if<CategorySet>(&rule.test)) j["left_categories"] = cats->left;
    else j["threshold"] = std::get<Threshold>(rule.test).value;
    j["left"] = node_json(tree, node.left);
    j["right"] = node_json(tree, node.right);
    return j;
}

int node_from(const ordered_json& j, PolicyTree& tree) {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::MalformedTree, what); };
    if (!j.is_object()) fail("node must be an object");
    const bool has_leaf = j.contains("treatment");
    const bool has_rule = j.contains("feature") || j.contains("threshold") || j.contains("left_categories") ||
                          j.contains("left") || j.contains("right");
    if (has_leaf && has_rule) fail("node has both a rule and a treatment");
    if (!has_leaf && !has_rule) fail("node has neither a rule nor a treatment");

    const int at = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (has_leaf) {
        TreeNode leaf;
        leaf.treatment = j.at("treatment").get<int>();
        leaf.n_train = j.value("n_train", Eigen::Index{0});
        leaf.train_share = j.value("train_share", 0.0);
        tree.nodes[at] = leaf;
        return at;
    }
    if (!j.contains("feature") || !j.contains("left") || !j.contains("right")) fail("split node is incomplete");
    if (j.contains("threshold") == j.contains("left_categories"))
        fail("split node needs exactly one of threshold / left_categories");
    SplitRule rule;
    rule.feature = j.at("feature").get<int>();
    if (j.contains("threshold")) rule.test = Threshold{j.at("threshold").get<double>()};
    else rule.test = CategorySet{j.at("left_categories").get<std::vector<int>>()};
    const int left = node_from(j.at("left"), tree);
    const int right = node_from(j.at("right"), tree);
    TreeNode& node = tree.nodes[at];
    node.rule = std::move(rule);
    node.left = left;
    node.right = right;
    return at;
}

}  // namespace

std::string to_json(const PolicyTree& tree) {
    ordered_json j;
    j["format_version"] = kFormatVersion;
    j["treatment_labels"] = tree.treatment_labels;
    ordered_json features = ordered_json::array();
    for (const auto& spec : tree.specs) {
        ordered_json f;
        f["name"] = spec.name;
        f["kind"] = std::string(to_string(spec.kind));
        if (spec.is_categorical()) f["categories"] = spec.categories;
        features.push_back(std::move(f));
    }
    j["features"] = std::move(features);
    j["stages"] = tree.meta.stages;
    j["config"] = config_json(tree.meta.config);
    j["n_train"] = tree.meta.n_train;
    j["welfare_total"] = tree.meta.welfare_total;
    j["welfare_mean"] = tree.meta.welfare_mean;
    if (!tree.meta.costs.empty()) j["costs"] = tree.meta.costs;
    j["root"] = node_json(tree, 0);
    return j.dump(2) + "\n";
}

PolicyTree from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedTree, e.what());
    }
    if (!j.is_object() || !j.contains("format_version")) throw Error(ErrorCode::MalformedTree, "missing format_version");
    if (!j["format_version"].is_number_integer() || j["format_version"].get<int>() != kFormatVersion)
        throw Error(ErrorCode::SchemaVersionUnsupported, "unsupported format_version " + j["format_version"].dump());

    PolicyTree tree;
    try {
        tree.treatment_labels = j.at("treatment_labels").get<std::vector<std::string>>();
        for (const auto& f : j.at("features")) {
            FeatureSpec spec;
            spec.name = f.at("name").get<std::string>();
            spec.kind = parse_feature_kind(f.at("kind").get<std::string>());
            if (f.contains("categories")) spec.categories = f.at("categories").get<std::vector<std::string>>();
            tree.specs.push_back(std::move(spec));
        }
        tree.meta.stages = j.at("stages").get<std::string>();
        tree.meta.config = config_from(j.at("config"));
        tree.meta.n_train = j.at("n_train").get<Eigen::Index>();
        tree.meta.welfare_total = j.at("welfare_total").get<double>();
        tree.meta.welfare_mean = j.at("welfare_mean").get<double>();
        if (j.contains("costs")) tree.meta.costs = j.at("costs").get<std::vector<double>>();
        node_from(j.at("root"), tree);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedTree, e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidSchema) throw Error(ErrorCode::MalformedTree, e.what());
        throw;
    }
    tree.validate();
    return tree;
}

// ---------------------------------------------------------------------------
// Rendering

std::string format_threshold(double value) {
    if (value == std::floor(value) && std::abs(value) < 1e15) return detail::format_fixed(value, 0);
    if (std::abs(value) < 1e-3) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", value);
        return buf;
    }
    return detail::format_fixed(value, 3);
}

namespace {

std::string category_list(const FeatureSpec& spec, const std::vector<int>& cats) {
    std::string out;
    for (std::size_t k = 0; k < cats.size(); ++k) {
        if (k) out += ' ';
        out += spec.categories[static_cast<std::size_t>(cats[k])];
    }
    return out;
}

std::string condition(const PolicyTree& tree, const SplitRule& rule, bool left) {
    const auto& spec = tree.specs[static_cast<std::size_t>(rule.feature)];
    if (const auto* cats = std::get_if<CategorySet>(&rule.test))
        return spec.name + (left ? " in: " : " not in: ") + category_list(spec, cats->left);
    return spec.name + (left ? " ≤ " : " > ") + format_threshold(std::get<Threshold>(rule.test).value);
}

std::string rule_label(const PolicyTree& tree, const SplitRule& rule) {
    const auto& spec = tree.specs[static_cast<std::size_t>(rule.feature)];
    if (const auto* cats = std::get_if<CategorySet>(&rule.test)) return spec.name + " in: " + category_list(spec, cats->left);
    return spec.name + " ≤ " + format_threshold(std::get<Threshold>(rule.test).value);
}

std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

}  // namespace

std::string render_rules(const PolicyTree& tree, const PolicyData* data_for_shares) {
    std::vector<double> shares;
    if (data_for_shares) {
        const auto routed = route(tree, *data_for_shares);
        shares.assign(tree.nodes.size(), 0.0);
        for (Eigen::Index i = 0; i < routed.leaves.size(); ++i) shares[static_cast<std::size_t>(routed.leaves(i))] += 1.0;
        for (double& s : shares) s /= static_cast<double>(std::max<Eigen::Index>(1, routed.leaves.size()));
    }

    std::ostringstream out;
    std::vector<std::string> path;
    std::function<void(int)> walk = [&](int i) {
        const auto& node = tree.nodes[static_cast<std::size_t>(i)];
        if (node.is_leaf()) {
            std::string line;
            if (path.empty()) line = "(all)";
            for (std::size_t k = 0; k < path.size(); ++k) line += (k ? ", " : "") + path[k];
            line += " → " + tree.treatment_labels[static_cast<std::size_t>(node.treatment)];
            if (data_for_shares) line += " (" + detail::format_fixed(100.0 * shares[static_cast<std::size_t>(i)], 2) + "%)";
            out << line << '\n';
            return;
        }
        path.push_back(condition(tree, *node.rule, true));
        walk(node.left);
        path.back() = condition(tree, *node.rule, false);
        walk(node.right);
        path.pop_back();
    };
    walk(0);
    return out.str();
}

std::string to_dot(const PolicyTree& tree) {
    std::ostringstream out;
    out << "digraph PolicyTree {\n";
    out << "  node [shape=box, fontname=\"Helvetica\"];\n";
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const auto& node = tree.nodes[i];
        out << "  n" << i << " [label=\"";
        if (node.is_leaf()) {
            out << dot_escape(tree.treatment_labels[static_cast<std::size_t>(node.treatment)]) << "\\n"
                << detail::format_fixed(100.0 * node.train_share, 2) << "%\", shape=ellipse";
        } else {
            out << dot_escape(rule_label(tree, *node.rule)) << "\"";
        }
        out << "];\n";
    }
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const auto& node = tree.nodes[i];
        if (node.is_leaf()) continue;
        out << "  n" << i << " -> n" << node.left << " [label=\"yes\"];\n";
        out << "  n" << i << " -> n" << node.right << " [label=\"no\"];\n";
    }
    out << "}\n";
    return out.str();
}

}  // namespace optpolicy
