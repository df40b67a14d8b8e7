#include <doctest.h>

#include <random>
#include <sstream>

#include "optpolicy/error.hpp"
#include "optpolicy/tree_model.hpp"
#include "support/instances.hpp"

using namespace optpolicy;

namespace {

PolicyData one_feature(std::vector<double> x, FeatureSpec spec = {"x", FeatureKind::Continuous, {}}) {
    PolicyData data;
    const auto n = static_cast<Eigen::Index>(x.size());
    data.features = Eigen::Map<Eigen::VectorXd>(x.data(), n);
    data.scores = ScoreMatrix::Zero(n, 2);
    data.specs = {std::move(spec)};
    data.treatment_labels = {"no RHC", "yes RHC"};
    for (Eigen::Index i = 0; i < n; ++i) data.row_ids.push_back(std::to_string(i));
    return data;
}

TreeNode leaf(int t) {
    TreeNode node;
    node.treatment = t;
    return node;
}

TreeNode split(int feature, std::variant<Threshold, CategorySet> test, int l, int r) {
    TreeNode node;
    node.rule = SplitRule{feature, std::move(test)};
    node.left = l;
    node.right = r;
    return node;
}

// age <= 65 then surv2md1 <= 0.480 / 0.402, treated on the low-survival side
PolicyTree rhc_tree() {
    PolicyTree tree;
    tree.specs = {{"age", FeatureKind::Continuous, {}}, {"surv2md1", FeatureKind::Continuous, {}}};
    tree.treatment_labels = {"no RHC", "yes RHC"};
    tree.nodes = {split(0, Threshold{65}, 1, 4), split(1, Threshold{0.48}, 2, 3), leaf(1), leaf(0),
                  split(1, Threshold{0.402}, 5, 6), leaf(1), leaf(0)};
    tree.meta.stages = "2";
    tree.meta.config.depth = 2;
    return tree;
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an optpolicy::Error");
    return ErrorCode::InvariantViolation;
}

}  // namespace

TEST_CASE("single leaf assigns everyone its treatment") {
    const auto data = one_feature({1, 2, 3});
    const auto tree = PolicyTree::single_leaf(1, data.specs, data.treatment_labels);
    CHECK(assign(tree, data) == Eigen::Vector3i(1, 1, 1));
    CHECK(tree.depth() == 0);
}

TEST_CASE("threshold routing sends ties left") {
    PolicyTree tree;
    tree.specs = {{"x", FeatureKind::Continuous, {}}};
    tree.treatment_labels = {"no RHC", "yes RHC"};
    tree.nodes = {split(0, Threshold{65}, 1, 2), leaf(1), leaf(0)};
    CHECK(assign(tree, one_feature({60, 70, 65})) == Eigen::Vector3i(1, 0, 1));
}

TEST_CASE("category sets route by membership; unseen categories go right") {
    const FeatureSpec spec{"f", FeatureKind::Categorical, {"0", "1", "2", "3"}};
    PolicyTree tree;
    tree.specs = {spec};
    tree.treatment_labels = {"a", "b"};
    tree.nodes = {split(0, CategorySet{{0, 2}}, 1, 2), leaf(0), leaf(1)};
    CHECK(assign(tree, one_feature({0, 1, 2, 3}, spec)) == Eigen::Vector4i(0, 1, 0, 1));

    FeatureSpec wider = spec;
    wider.categories.push_back("4");
    const auto routed = route(tree, one_feature({4, 0}, wider));
    CHECK(routed.treatments == Eigen::Vector2i(1, 0));
    CHECK(routed.unseen_category_rows == 1);
}

TEST_CASE("spec mismatches are rejected") {
    const auto tree = rhc_tree();
    PolicyData data = one_feature({1});
    CHECK(code_of([&] { assign(tree, data); }) == ErrorCode::SpecMismatch);
    data.features = Eigen::MatrixXd::Zero(1, 2);
    data.specs = {{"age", FeatureKind::Continuous, {}}, {"surv2md1", FeatureKind::Categorical, {"a", "b"}}};
    CHECK(code_of([&] { assign(tree, data); }) == ErrorCode::SpecMismatch);
}

TEST_CASE("rules render one line per leaf") {
    const std::string expected =
        "age ≤ 65, surv2md1 ≤ 0.480 → yes RHC\n"
        "age ≤ 65, surv2md1 > 0.480 → no RHC\n"
        "age > 65, surv2md1 ≤ 0.402 → yes RHC\n"
        "age > 65, surv2md1 > 0.402 → no RHC\n";
    CHECK(render_rules(rhc_tree()) == expected);

    const auto single = PolicyTree::single_leaf(1, {}, {"no RHC", "yes RHC"});
    CHECK(render_rules(single) == "(all) → yes RHC\n");

    PolicyTree cat;
    cat.specs = {{"f", FeatureKind::Categorical, {"0", "1", "2", "3"}}};
    cat.treatment_labels = {"a", "b"};
    cat.nodes = {split(0, CategorySet{{0, 2}}, 1, 2), leaf(0), leaf(1)};
    CHECK(render_rules(cat) == "f in: 0 2 → a\nf not in: 0 2 → b\n");
}

TEST_CASE("rules with data carry leaf shares") {
    PolicyData data = one_feature({60, 70, 50, 80});
    data.features.conservativeResize(4, 2);
    data.features.col(1) << 0.1, 0.9, 0.6, 0.3;
    data.specs = rhc_tree().specs;
    const std::string text = render_rules(rhc_tree(), &data);
    CHECK(text.find("age ≤ 65, surv2md1 ≤ 0.480 → yes RHC (25.00%)") != std::string::npos);
    CHECK(text.find("age > 65, surv2md1 > 0.402 → no RHC (25.00%)") != std::string::npos);
}

TEST_CASE("thresholds print like the rule tables") {
    CHECK(format_threshold(65) == "65");
    CHECK(format_threshold(0.48) == "0.480");
    CHECK(format_threshold(-2.5) == "-2.500");
    CHECK(format_threshold(0.0004) == "0.0004");
}

TEST_CASE("parsed rule lines reproduce assign") {
    std::mt19937_64 rng(5);
    const auto data = testing_support::mixed_instance(rng, 200, 3);
    PolicyTree tree;
    tree.specs = data.specs;
    tree.treatment_labels = data.treatment_labels;
    tree.nodes = {split(2, CategorySet{{1, 3}}, 1, 4), split(0, Threshold{0.425}, 2, 3), leaf(2), leaf(0),
                  split(1, Threshold{2.5}, 5, 6), leaf(1), leaf(2)};
    std::istringstream lines(render_rules(tree));
    std::vector<std::pair<std::vector<std::string>, std::string>> rules;
    for (std::string line; std::getline(lines, line);) {
        const auto arrow = line.find(" → ");
        std::vector<std::string> conds;
        std::string body = line.substr(0, arrow);
        for (std::size_t start = 0;;) {
            const auto comma = body.find(", ", start);
            conds.push_back(body.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 2;
        }
        rules.emplace_back(conds, line.substr(arrow + std::string(" → ").size()));
    }
    auto holds = [&](const std::string& cond, Eigen::Index i) {
        if (cond.rfind("x_cat not in: ", 0) == 0 || cond.rfind("x_cat in: ", 0) == 0) {
            const bool negate = cond.find("not in") != std::string::npos;
            const std::string label = data.specs[2].categories[static_cast<std::size_t>(data.features(i, 2))];
            std::istringstream members(cond.substr(cond.find(": ") + 2));
            bool found = false;
            for (std::string m; members >> m;) found = found || m == label;
            return found != negate;
        }
        const int f = cond.rfind("x_cont", 0) == 0 ? 0 : 1;
        const bool le = cond.find("≤") != std::string::npos;
        const double t = std::stod(cond.substr(cond.rfind(' ') + 1));
        return le ? data.features(i, f) <= t : data.features(i, f) > t;
    };
    const auto assigned = assign(tree, data);
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        int matches = 0;
        for (const auto& [conds, label] : rules) {
            if (std::all_of(conds.begin(), conds.end(), [&](const auto& c) { return holds(c, i); })) {
                ++matches;
                CHECK(label == data.treatment_labels[assigned(i)]);
            }
        }
        CHECK(matches == 1);
    }
}

TEST_CASE("DOT export shape") {
    const std::string dot = to_dot(rhc_tree());
    auto count = [&](const std::string& needle) {
        std::size_t k = 0;
        for (auto pos = dot.find(needle); pos != std::string::npos; pos = dot.find(needle, pos + 1)) ++k;
        return k;
    };
    CHECK(dot.rfind("digraph", 0) == 0);
    CHECK(count("->") == 6);
    CHECK(count("shape=ellipse") == 4);
    CHECK(count("[label=\"yes\"]") == 3);
    CHECK(count("[label=\"no\"]") == 3);
    CHECK(count("surv2md1 ≤ 0.480") == 1);

    const std::string single = to_dot(PolicyTree::single_leaf(0, {}, {"a", "b"}));
    CHECK(single.find("->") == std::string::npos);
    CHECK(single.find("n0 [label=\"a") != std::string::npos);
}

TEST_CASE("JSON round trip") {
    PolicyTree tree = rhc_tree();
    tree.nodes[1].rule->test = Threshold{0.1 + 0.2};
    tree.meta.welfare_total = 1.0 / 3.0;
    tree.meta.costs = {0.0, 0.25};
    tree.nodes[2].n_train = 7;
    tree.nodes[2].train_share = 0.7;
    const auto back = from_json(to_json(tree));
    CHECK(back == tree);
    CHECK(to_json(back) == to_json(tree));

    PolicyTree cat;
    cat.specs = {{"x", FeatureKind::Continuous, {}}, {"g", FeatureKind::Categorical, {"u", "v", "w"}}};
    cat.treatment_labels = {"a", "b"};
    cat.nodes = {split(1, CategorySet{{0, 2}}, 1, 2), leaf(0), split(0, Threshold{1.5}, 3, 4), leaf(1), leaf(0)};
    cat.meta.stages = "2";
    CHECK(from_json(to_json(cat)) == cat);
}

TEST_CASE("malformed JSON trees") {
    std::string text = to_json(rhc_tree());
    auto with = [&](const std::string& from, const std::string& to) {
        std::string copy = text;
        copy.replace(copy.find(from), from.size(), to);
        return copy;
    };
    CHECK(code_of([&] { from_json(with("\"format_version\": 1", "\"format_version\": 2")); }) ==
          ErrorCode::SchemaVersionUnsupported);
    CHECK(code_of([&] { from_json(with("\"threshold\": 65.0,", "\"threshold\": 65.0, \"treatment\": 1,")); }) ==
          ErrorCode::MalformedTree);
    CHECK(code_of([&] { from_json("{"); }) == ErrorCode::MalformedTree);
}
