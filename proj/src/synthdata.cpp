#include "optpolicy/synthdata.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>

#include "optpolicy/error.hpp"
#include "optpolicy/tree_search.hpp"

namespace optpolicy {

namespace {

// Region of feature space reachable at a node of the planted tree.
struct Region {
    std::vector<double> lo, hi;             // Continuous / OrderedDiscrete
    std::vector<std::vector<int>> allowed;  // Categorical
};

void check(const GeneratorSpec& spec) {
    auto fail = [](const char* what) { throw Error(ErrorCode::BadSpec, what); };
    if (spec.n < 1) fail("n must be >= 1");
    if (spec.treatments < 2) fail("need at least two treatments");
    if (spec.features.empty()) fail("need at least one feature");
    if (spec.rule_depth < 0) fail("rule depth must be >= 0");
    if (!(spec.signal >= 0.0) || !(spec.noise_sd >= 0.0) || !(spec.base_sd >= 0.0))
        fail("signal and spreads must be non-negative");
    for (const auto& f : spec.features) {
        if (f.kind != FeatureKind::Continuous && f.levels < 2) fail("discrete features need >= 2 levels");
    }
}

}  // namespace

GeneratedData generate(const GeneratorSpec& spec) {
    check(spec);
    std::mt19937_64 rng(spec.seed);
    const Eigen::Index n = spec.n;
    const auto p = static_cast<Eigen::Index>(spec.features.size());
    const int d = spec.treatments;

    GeneratedData out;
    PolicyData& data = out.data;
    data.features.resize(n, p);
    for (Eigen::Index f = 0; f < p; ++f) {
        const auto& fg = spec.features[static_cast<std::size_t>(f)];
        FeatureSpec fs{"x" + std::to_string(f), fg.kind, {}};
        if (fg.kind == FeatureKind::Categorical) {
            for (int c = 0; c < fg.levels; ++c) fs.categories.push_back(std::to_string(c));
        }
        data.specs.push_back(std::move(fs));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::uniform_int_distribution<int> level(0, std::max(fg.levels, 1) - 1);
        for (Eigen::Index i = 0; i < n; ++i)
            data.features(i, f) = fg.kind == FeatureKind::Continuous ? unit(rng) : static_cast<double>(level(rng));
    }
    for (int j = 0; j < d; ++j) data.treatment_labels.push_back("t" + std::to_string(j));
    for (Eigen::Index i = 0; i < n; ++i) data.row_ids.push_back(std::to_string(i));

    // planted rule
    PolicyTree& oracle = out.oracle;
    oracle.specs = data.specs;
    oracle.treatment_labels = data.treatment_labels;
    Region root;
    for (const auto& fg : spec.features) {
        root.lo.push_back(0.0);
        root.hi.push_back(fg.kind == FeatureKind::Continuous ? 1.0 : fg.levels - 1.0);
        std::vector<int> all(static_cast<std::size_t>(fg.kind == FeatureKind::Categorical ? fg.levels : 0));
        std::iota(all.begin(), all.end(), 0);
        root.allowed.push_back(std::move(all));
    }
    std::uniform_int_distribution<int> pick_treatment(0, d - 1);
    std::function<int(int, const Region&)> build = [&](int level, const Region& region) -> int {
        const int at = static_cast<int>(oracle.nodes.size());
        oracle.nodes.emplace_back();
        if (level > 0) {
            std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
            std::iota(order.begin(), order.end(), Eigen::Index{0});
            std::shuffle(order.begin(), order.end(), rng);
            for (Eigen::Index f : order) {
                const auto kind = spec.features[static_cast<std::size_t>(f)].kind;
                Region left = region, right = region;
                SplitRule rule;
                rule.feature = static_cast<int>(f);
                if (kind == FeatureKind::Categorical) {
                    auto cats = region.allowed[f];
                    if (cats.size() < 2) continue;
                    std::shuffle(cats.begin(), cats.end(), rng);
                    std::uniform_int_distribution<std::size_t> take(1, cats.size() - 1);
                    const std::size_t m = take(rng);
                    std::vector<int> l(cats.begin(), cats.begin() + static_cast<std::ptrdiff_t>(m));
                    std::vector<int> r(cats.begin() + static_cast<std::ptrdiff_t>(m), cats.end());
                    std::sort(l.begin(), l.end());
                    std::sort(r.begin(), r.end());
                    left.allowed[f] = l;
                    right.allowed[f] = r;
                    rule.test = CategorySet{l};
                } else if (kind == FeatureKind::OrderedDiscrete) {
                    const int lo = static_cast<int>(region.lo[f]);
                    const int hi = static_cast<int>(region.hi[f]);
                    if (hi <= lo) continue;
                    std::uniform_int_distribution<int> cut(lo, hi - 1);
                    const int k = cut(rng);
                    left.hi[f] = k;
                    right.lo[f] = k + 1;
                    rule.test = Threshold{k + 0.5};
                } else {
                    std::uniform_real_distribution<double> frac(0.3, 0.7);
                    const double t = region.lo[f] + (region.hi[f] - region.lo[f]) * frac(rng);
                    left.hi[f] = t;
                    right.lo[f] = t;
                    rule.test = Threshold{t};
                }
                const int l = build(level - 1, left);
                const int r = build(level - 1, right);
                TreeNode& node = oracle.nodes[static_cast<std::size_t>(at)];
                node.rule = std::move(rule);
                node.left = l;
                node.right = r;
                return at;
            }
        }
        oracle.nodes[static_cast<std::size_t>(at)].treatment = pick_treatment(rng);
        return at;
    };
    build(spec.rule_depth, root);
    // sibling leaves get different treatments so every planted split matters
    for (auto& node : oracle.nodes) {
        if (node.is_leaf()) continue;
        auto& l = oracle.nodes[static_cast<std::size_t>(node.left)];
        auto& r = oracle.nodes[static_cast<std::size_t>(node.right)];
        if (l.is_leaf() && r.is_leaf() && l.treatment == r.treatment) r.treatment = (r.treatment + 1) % d;
    }
    oracle.meta.stages = std::to_string(spec.rule_depth);
    oracle.meta.config.depth = spec.rule_depth;

    const Eigen::VectorXi planted = assign(oracle, data);
    std::normal_distribution<double> base(0.0, 1.0), noise(0.0, 1.0);
    out.mean_scores.resize(n, d);
    data.scores.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double b = spec.base_sd * base(rng);
        for (int j = 0; j < d; ++j) {
            out.mean_scores(i, j) = b + (planted(i) == j ? spec.signal : 0.0);
            data.scores(i, j) = out.mean_scores(i, j) + spec.noise_sd * noise(rng);
        }
    }

    Eigen::VectorXi observed(n);
    Eigen::VectorXd outcome(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        observed(i) = pick_treatment(rng);
        outcome(i) = out.mean_scores(i, observed(i)) + spec.noise_sd * noise(rng);
    }
    data.observed_treatment = std::move(observed);
    data.observed_outcome = std::move(outcome);

    annotate_training(oracle, data);
    validate(data);
    oracle.validate();
    return out;
}

}  // namespace optpolicy
