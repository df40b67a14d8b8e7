// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "optpolicy/cli.hpp"
#include "optpolicy/constraints.hpp"
#include "optpolicy/error.hpp"
#include "optpolicy/policies_eval.hpp"
#include "optpolicy/sequential.hpp"
#include "optpolicy/synthdata.hpp"
#include "optpolicy/tree_search.hpp"
#include "oracle/brute_force.hpp"
#include "support/instances.hpp"

#ifndef OPTPOLICY_TEST_DATA
#define OPTPOLICY_TEST_DATA "tests/data"
#endif

using namespace optpolicy;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
    bool pass;
    std::string detail;
};

SearchConfig exact(int depth) {
    SearchConfig config;
    config.depth = depth;
    config.exact_mode = true;
    config.min_leaf_size = 1;
    config.gain_epsilon = 0.0;
    return config;
}

bool close_rel(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Verdict oracle_optimality() {
    std::mt19937_64 rng(1001);
    int ok = 0;
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
        const auto data = testing_support::mixed_instance(rng, 30, 2 + k % 2);
        const double found = search(data, exact(2)).reward;
        const double brute = oracle::best_tree(data, 2);
        worst = std::max(worst, std::abs(found - brute) / std::max(1.0, std::abs(brute)));
        ok += close_rel(found, brute, 1e-9);
    }
    return {ok == 200, fmt("%d/200 match enumeration, worst rel diff %.2e", ok, worst)};
}

Verdict depth_zero() {
    std::mt19937_64 rng(1002);
    std::uniform_int_distribution<int> rows(1, 200), cols(2, 6);
    std::normal_distribution<double> normal(0.0, 3.0);
    int ok = 0;
    for (int k = 0; k < 1000; ++k) {
        const int n = rows(rng), d = cols(rng);
        PolicyData data;
        data.scores.resize(n, d);
        for (Eigen::Index i = 0; i < data.scores.size(); ++i) data.scores.data()[i] = normal(rng);
        data.features = Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);
        data.specs = {{"x", FeatureKind::Continuous, {}}};
        for (int j = 0; j < d; ++j) data.treatment_labels.push_back("t" + std::to_string(j));
        for (int i = 0; i < n; ++i) data.row_ids.push_back(std::to_string(i));
        double best = -INFINITY;
        for (int j = 0; j < d; ++j) {
            double sum = 0.0;
            for (int i = 0; i < n; ++i) sum += data.scores(i, j);
            best = std::max(best, sum);
        }
        SearchConfig config = exact(0);
        ok += search(data, config).reward == best;
    }
    return {ok == 1000, fmt("%d/1000 exactly equal to the max column sum", ok)};
}

Verdict depth_monotonicity() {
    std::mt19937_64 rng(1003);
    int ok = 0;
    for (int k = 0; k < 100; ++k) {
        const auto data = testing_support::mixed_instance(rng, 60, 2 + k % 3);
        const double r0 = search(data, exact(0)).reward;
        const double r1 = search(data, exact(1)).reward;
        const double r2 = search(data, exact(2)).reward;
        const double upper = per_row_max_total(data.scores);
        ok += r0 <= r1 + 1e-9 && r1 <= r2 + 1e-9 && r2 <= upper + 1e-9;
    }
    return {ok == 100, fmt("%d/100 satisfy r0 <= r1 <= r2 <= per-row max", ok)};
}

Verdict invariance() {
    std::mt19937_64 rng(1004);
    const std::array<std::pair<double, double>, 3> pairs{{{5.0, 0.5}, {-3.0, 2.0}, {10.0, 7.0}}};
    int ok = 0;
    for (int k = 0; k < 50; ++k) {
        const auto data = testing_support::mixed_instance(rng, 100, 2 + k % 2);
        SearchConfig config = exact(2);
        config.min_leaf_size.reset();
        config.gain_epsilon = 1e-12;
        const auto base = search(data, config);
        const Eigen::VectorXi base_assign = assign(base.tree, data);
        for (const auto& [c, lambda] : pairs) {
            auto moved = data;
            moved.scores = (data.scores.array() * lambda + c).matrix();
            const auto other = search(moved, config);
            bool same = other.tree.nodes.size() == base.tree.nodes.size();
            for (std::size_t i = 0; same && i < base.tree.nodes.size(); ++i)
                same = other.tree.nodes[i].rule == base.tree.nodes[i].rule &&
                       other.tree.nodes[i].treatment == base.tree.nodes[i].treatment;
            same = same && assign(other.tree, moved) == base_assign;
            const double expected = lambda * base.reward + c * static_cast<double>(data.rows());
            ok += same && close_rel(other.reward, expected, 1e-9);
        }
    }
    return {ok == 150, fmt("%d/150 (instance, shift, scale) cases identical with affine reward", ok)};
}

Verdict constraint_satisfaction() {
    std::mt19937_64 rng(1005);
    std::uniform_real_distribution<double> cap(0.3, 0.8);
    int converged = 0, respected = 0, dominated = 0;
    for (int k = 0; k < 100; ++k) {
        const int d = 2 + k % 2;
        auto data = testing_support::mixed_instance(rng, 400, d);
        // make the last treatment popular so that its cap binds
        data.scores.col(d - 1).array() += 0.8;
        ShareConstraint constraint;
        do {
            constraint.max_shares.clear();
            for (int j = 0; j < d; ++j) constraint.max_shares.push_back(cap(rng));
        } while (std::accumulate(constraint.max_shares.begin(), constraint.max_shares.end(), 0.0) < 1.0);
        const auto costs = adjust_costs_for_shares(data, constraint);
        if (!costs.converged || costs.iterations_used > 200) continue;
        ++converged;
        const ScoreMatrix adjusted = apply_costs(data.scores, costs);
        const Eigen::VectorXi best = row_argmax(adjusted);
        bool within = true;
        for (int j = 0; j < d; ++j) {
            const double share = static_cast<double>((best.array() == j).count()) / static_cast<double>(data.rows());
            within = within && share <= constraint.max_shares[j] + 0.005;
        }
        respected += within;
        SearchConfig config;
        config.depth = 2;
        config.exact_mode = true;
        auto constrained_data = data;
        constrained_data.scores = adjusted;
        const auto constrained = search(constrained_data, config).tree;
        const double free_welfare = search(data, config).reward;
        dominated += welfare_total(data.scores, assign(constrained, data)) <= free_welfare + 1e-9;
    }
    return {converged >= 95 && respected == converged && dominated == converged,
            fmt("%d/100 converged; caps respected on %d, constrained welfare <= unconstrained on %d", converged,
                respected, dominated)};
}

Verdict sequential_sandwich() {
    std::mt19937_64 rng(1006);
    int ok = 0;
    for (int k = 0; k < 100; ++k) {
        const auto data = testing_support::mixed_instance(rng, 24, 2 + k % 2);
        const double r2 = search(data, exact(2)).reward;
        const double r21 = search_sequential(data, 2, {1}, exact(2)).reward;
        const double r3 = oracle::best_tree(data, 3);
        ok += r2 <= r21 + 1e-9 && r21 <= r3 + 1e-9;
    }

    GeneratorSpec spec;
    spec.n = 5000;
    spec.treatments = 3;
    spec.features = {{FeatureKind::Continuous, 0}, {FeatureKind::Continuous, 0}, {FeatureKind::Continuous, 0},
                     {FeatureKind::OrderedDiscrete, 20}, {FeatureKind::Categorical, 5}};
    spec.seed = 66;
    const auto gen = generate(spec);
    SearchConfig config;
    config.depth = 2;
    config.approx_points = 100;
    auto t0 = Clock::now();
    search_sequential(gen.data, 2, {2}, config);
    const double sequential_s = std::chrono::duration<double>(Clock::now() - t0).count();
    // the optimal depth-4 search only has to run long enough to lose
    config.depth = 4;
    config.time_limit_seconds = std::max(30.0, 20.0 * sequential_s);
    t0 = Clock::now();
    bool timed_out = false;
    try {
        search(gen.data, config);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::SearchTimeout) throw;
        timed_out = true;
    }
    const double optimal_s = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool faster = sequential_s < optimal_s;
    return {ok == 100 && faster,
            fmt("%d/100 sandwiched; 2+2 took %.2f s, optimal 4 %s%.2f s", ok, sequential_s,
                timed_out ? "stopped unfinished after " : "took ", optimal_s)};
}

Verdict regret_recovery() {
    const auto t0 = Clock::now();
    double ratio_sum = 0.0, worst = 1.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        GeneratorSpec spec;
        spec.n = 5000;
        spec.treatments = 2;
        spec.features = {{FeatureKind::Continuous, 0}, {FeatureKind::Continuous, 0},
                         {FeatureKind::OrderedDiscrete, 10}, {FeatureKind::Categorical, 4}};
        spec.rule_depth = 2;
        spec.signal = 1.0;
        spec.noise_sd = 0.5;
        spec.seed = 500 + seed;
        const auto gen = generate(spec);
        SearchConfig config;
        config.depth = 2;
        config.exact_mode = true;
        config.threads = 1;
        const auto tree = search(gen.data, config).tree;
        const auto& truth = gen.mean_scores;
        const double learned = welfare_total(truth, assign(tree, gen.data));
        const double planted = welfare_total(truth, assign(gen.oracle, gen.data));
        double random = 0.0;
        for (Eigen::Index j = 0; j < truth.cols(); ++j) random += truth.col(j).sum() / static_cast<double>(truth.cols());
        const double ratio = (learned - random) / (planted - random);
        ratio_sum += ratio;
        worst = std::min(worst, ratio);
    }
    const double mean = ratio_sum / 20.0;
    const double seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return {mean >= 0.99 && seconds < 300.0,
            fmt("mean gain recovered %.4f (worst seed %.4f), %.1f s", mean, worst, seconds)};
}

Verdict thread_determinism() {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "optpolicy_acceptance_threads";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ostringstream sink;
    int ok = 0;
    for (int k = 0; k < 20; ++k) {
        const std::string sub = (dir / std::to_string(k)).string();
        const std::string features = k % 2 ? "continuous,categorical:12,ordered:8" : "categorical:5,continuous,continuous";
        optpolicy::cli::run({"simulate", "--n", "1500", "--treatments", std::to_string(2 + k % 3), "--features",
                             features, "--seed", std::to_string(k), "--out-dir", sub},
                            sink, sink);
        std::string json[2];
        const char* threads[2] = {"1", "8"};
        for (int t = 0; t < 2; ++t) {
            const std::string out = sub + "/tree" + threads[t] + ".json";
            optpolicy::cli::run({"train", "--data", sub + "/data.csv", "--schema", sub + "/schema.json", "--depth",
                                 "2", "--seed", std::to_string(k), "--threads", threads[t], "--out", out},
                                sink, sink);
            json[t] = slurp(out);
        }
        ok += !json[0].empty() && json[0] == json[1];
    }
    fs::remove_all(dir);
    return {ok == 20, fmt("%d/20 tree files byte-identical for 1 vs 8 threads", ok)};
}

Verdict candidate_schedule() {
    std::vector<double> values(1000);
    std::mt19937_64 rng(1009);
    std::uniform_real_distribution<double> unit(0.0, 1000.0);
    for (auto& v : values) v = unit(rng);
    SearchConfig config;
    config.depth = 4;
    config.approx_points = 100;
    int counts[4];
    for (int level = 4; level >= 1; --level)
        counts[4 - level] = static_cast<int>(candidate_thresholds(values, level, config).size());
    const bool ok = counts[0] == 12 && counts[1] == 25 && counts[2] == 50 && counts[3] == 100;
    return {ok, fmt("top to bottom %d/%d/%d/%d", counts[0], counts[1], counts[2], counts[3])};
}

Verdict rendering() {
    const std::filesystem::path dir(OPTPOLICY_TEST_DATA);
    const auto tree = from_json(slurp(dir / "rhc_depth2.json"));
    const std::string golden = slurp(dir / "rhc_depth2.rules");
    const std::string rendered = render_rules(tree);
    return {!golden.empty() && rendered == golden, rendered == golden ? "matches golden file" : "differs:\n" + rendered};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"1 oracle optimality", oracle_optimality},
        {"2 depth-0 base case", depth_zero},
        {"3 depth monotonicity", depth_monotonicity},
        {"4 shift/scale invariance", invariance},
        {"5 share constraints", constraint_satisfaction},
        {"6 sequential sandwich and speed", sequential_sandwich},
        {"7 regret recovery", regret_recovery},
        {"8 thread determinism", thread_determinism},
        {"9 candidate-count schedule", candidate_schedule},
        {"10 rule rendering", rendering},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        const auto start = Clock::now();
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(Clock::now() - start).count();
        std::cout << (v.pass ? "[PASS] " : "[FAIL] ") << name << ": " << v.detail << fmt(" (%.1f s)", secs) << std::endl;
        failed += !v.pass;
    }
    std::cout << (failed ? "acceptance: FAILED " + std::to_string(failed) + " of 10" : std::string("acceptance: all 10 passed"))
              << std::endl;
    return failed ? 1 : 0;
}
