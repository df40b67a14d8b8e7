#include "optpolicy/tree_search.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <thread>

#include "optpolicy/error.hpp"

namespace optpolicy {

int threshold_budget(int level_from_bottom, const SearchConfig& config) {
    const int shift = std::min(std::max(level_from_bottom - 1, 0), 30);
    return std::max(2, config.approx_points >> shift);
}

int category_budget(int level_from_bottom, const SearchConfig& config) {
    const int shift = std::min(std::max(level_from_bottom - 1, 0), 30);
    return std::max(1, config.cat_combinations >> shift);
}

std::vector<int> select_gaps(int n_gaps, int budget) {
    std::vector<int> gaps;
    if (n_gaps <= 0) return gaps;
    if (n_gaps <= budget) {
        gaps.resize(static_cast<std::size_t>(n_gaps));
        std::iota(gaps.begin(), gaps.end(), 0);
        return gaps;
    }
    // spacing n_gaps / budget > 1, so the picks are strictly increasing
    const double step = static_cast<double>(n_gaps) / budget;
    gaps.reserve(static_cast<std::size_t>(budget));
    for (int r = 0; r < budget; ++r) gaps.push_back(static_cast<int>(std::floor((r + 0.5) * step)));
    return gaps;
}

std::vector<double> candidate_thresholds(std::span<const double> values, int level_from_bottom,
                                         const SearchConfig& config) {
    std::vector<double> distinct(values.begin(), values.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    const int n_gaps = static_cast<int>(distinct.size()) - 1;
    const int budget = config.exact_mode ? std::numeric_limits<int>::max() : threshold_budget(level_from_bottom, config);
    std::vector<double> out;
    for (int g : select_gaps(n_gaps, budget)) out.push_back(std::midpoint(distinct[g], distinct[g + 1]));
    return out;
}

namespace {

constexpr int kMaxEnumeratedCategories = 20;
// Candidates closer than this (times rows in the node and the score spread)
// count as ties, so rounding noise never decides between them.
constexpr double kTieScale = 1e-12;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace

std::vector<CategorySet> candidate_category_splits(const FeatureSpec& feature, std::span<const int> present_categories,
                                                   const SearchConfig& config, int level_from_bottom,
                                                   std::uint64_t stream_seed) {
    (void)feature;
    std::vector<CategorySet> out;
    const int c = static_cast<int>(present_categories.size());
    if (c < 2) return out;
    const int pinned = present_categories.front();
    std::span<const int> rest = present_categories.subspan(1);
    const int budget = category_budget(level_from_bottom, config);

    const bool enumerate =
        (c - 1 < 31 && (1LL << (c - 1)) - 1 <= budget) || (config.exact_mode && c <= kMaxEnumeratedCategories);
    if (enumerate) {
        const std::uint64_t full = (std::uint64_t{1} << (c - 1)) - 1;
        for (std::uint64_t mask = 0; mask < full; ++mask) {
            CategorySet set;
            set.left.push_back(pinned);
            for (int k = 0; k < c - 1; ++k) {
                if (mask >> k & 1U) set.left.push_back(rest[k]);
            }
            out.push_back(std::move(set));
        }
        std::sort(out.begin(), out.end(), [](const CategorySet& a, const CategorySet& b) { return a.left < b.left; });
        return out;
    }

    std::mt19937_64 rng(stream_seed);
    std::set<std::vector<int>> chosen;
    const long max_attempts = 50L * budget + 100;
    std::vector<int> left;
    for (long attempt = 0; attempt < max_attempts && static_cast<int>(chosen.size()) < budget; ++attempt) {
        left.assign(1, pinned);
        std::uint64_t bits = 0;
        for (int k = 0; k < c - 1; ++k) {
            if (k % 64 == 0) bits = rng();
            if (bits >> (k % 64) & 1U) left.push_back(rest[k]);
        }
        if (static_cast<int>(left.size()) == c) continue;  // right side would be empty
        chosen.insert(left);
    }
    for (const auto& l : chosen) out.push_back(CategorySet{l});
    return out;
}

namespace {

using Plan = std::vector<TreeNode>;

struct RowSet {
    Eigen::Index size = 0;
    Eigen::Index cap = 0;
    std::vector<int> idx;  // feature f's sorted rows at [f * cap, f * cap + size)

    RowSet() = default;
    RowSet(Eigen::Index p, Eigen::Index capacity) : cap(capacity), idx(static_cast<std::size_t>(p * capacity)) {}

    int* list(Eigen::Index f) { return idx.data() + f * cap; }
    const int* list(Eigen::Index f) const { return idx.data() + f * cap; }
};

struct Candidate {
    int feature = 0;
    double threshold = 0.0;
    Eigen::Index n_left = 0;
    std::optional<CategorySet> categories;

    SplitRule rule() const {
        SplitRule r;
        r.feature = feature;
        if (categories) r.test = *categories;
        else r.test = Threshold{threshold};
        return r;
    }
};

struct Aborted {};

struct Workspace {
    std::vector<RowSet> left, right;  // indexed by the level of the node being split
    std::vector<char> mask;
    Eigen::RowVectorXd total, prefix;
    std::vector<int> gap_pos;
    std::vector<double> cat_sums;
    std::vector<Eigen::Index> cat_counts;
    std::vector<int> present, slot_of;
    std::uint64_t nodes = 0;

    Workspace(Eigen::Index n, Eigen::Index p, Eigen::Index d, int depth)
        : mask(static_cast<std::size_t>(n), 0), total(d), prefix(d) {
        for (int level = 0; level <= depth; ++level) {
            left.emplace_back(level >= 2 ? RowSet(p, n) : RowSet());
            right.emplace_back(level >= 2 ? RowSet(p, n) : RowSet());
        }
    }
};

Plan leaf_plan(int treatment) {
    TreeNode leaf;
    leaf.treatment = treatment;
    return {leaf};
}

Plan split_plan(SplitRule rule, const Plan& left, const Plan& right) {
    Plan out;
    out.reserve(1 + left.size() + right.size());
    TreeNode root;
    root.rule = std::move(rule);
    root.left = 1;
    root.right = static_cast<int>(1 + left.size());
    out.push_back(root);
    auto append = [&out](const Plan& sub) {
        const int offset = static_cast<int>(out.size());
        for (TreeNode node : sub) {
            if (!node.is_leaf()) {
                node.left += offset;
                node.right += offset;
            }
            out.push_back(std::move(node));
        }
    };
    append(left);
    append(right);
    return out;
}

class Searcher {
public:
    Searcher(const PolicyData& data, const SearchConfig& config)
        : X_(data.features),
          S_(data.scores),
          specs_(data.specs),
          config_(config),
          n_(data.rows()),
          p_(data.feature_count()),
          d_(data.treatments()),
          min_leaf_(config.effective_min_leaf(data.treatments())) {
        rowmax_ = S_.rowwise().maxCoeff();
        const double mean = S_.mean();
        sigma_ = std::sqrt((S_.array() - mean).square().sum() / static_cast<double>(S_.size()));
        has_categorical_ = std::any_of(specs_.begin(), specs_.end(), [](const auto& s) { return s.is_categorical(); });
        if (has_categorical_) {
            row_key_.resize(static_cast<std::size_t>(n_));
            for (Eigen::Index i = 0; i < n_; ++i) row_key_[i] = splitmix64(static_cast<std::uint64_t>(i) ^ config.seed);
        }
        if (config.time_limit_seconds > 0) {
            deadline_ = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(config.time_limit_seconds));
        }

        root_ = RowSet(p_, n_);
        root_.size = n_;
        std::vector<int> order(static_cast<std::size_t>(n_));
        for (Eigen::Index f = 0; f < p_; ++f) {
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return X_(a, f) < X_(b, f); });
            std::copy(order.begin(), order.end(), root_.list(f));
        }
    }

    Plan run(std::uint64_t& nodes_evaluated, bool& no_splittable) {
        Workspace ws(n_, p_, d_, config_.depth);
        Plan plan;
        if (config_.depth == 0) {
            ++ws.nodes;
            auto [t, r] = leaf_of(root_, ws);
            (void)r;
            plan = leaf_plan(t);
            no_splittable = false;
        } else if (config_.depth == 1) {
            solve_level1(root_, ws, &plan);
            no_splittable = !root_has_candidates_level1();
        } else {
            plan = solve_root(ws, no_splittable);
        }
        nodes_evaluated = ws.nodes + worker_nodes_;
        return plan;
    }

private:
    double tie_tol(Eigen::Index n) const { return kTieScale * static_cast<double>(n) * sigma_; }
    double gain_threshold(double leaf_reward) const {
        return leaf_reward + config_.gain_epsilon * (1.0 + std::abs(leaf_reward));
    }

    void check_time() const {
        if (abort_.load(std::memory_order_relaxed)) throw Aborted{};
        if (deadline_ && std::chrono::steady_clock::now() > *deadline_)
            throw Error(ErrorCode::SearchTimeout, "search exceeded its time limit");
    }

    // Totals into ws.total; returns the per-row-max bound of the node.
    double totals(const RowSet& rows, Workspace& ws) const {
        ws.total.setZero();
        double ub = 0.0;
        const int* list = rows.list(0);
        for (Eigen::Index k = 0; k < rows.size; ++k) {
            ws.total += S_.row(list[k]);
            ub += rowmax_(list[k]);
        }
        return ub;
    }

    std::pair<int, double> leaf_of(const RowSet& rows, Workspace& ws) const {
        totals(rows, ws);
        return best_of(ws.total);
    }

    template <typename Vec>
    static std::pair<int, double> best_of(const Vec& sums) {
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < sums.size(); ++j) {
            if (sums(j) > sums(best)) best = j;
        }
        return {static_cast<int>(best), sums(best)};
    }

    std::uint64_t node_hash(const RowSet& rows) const {
        std::uint64_t h = 0;
        const int* list = rows.list(0);
        for (Eigen::Index k = 0; k < rows.size; ++k) h += row_key_[static_cast<std::size_t>(list[k])];
        return h;
    }

    std::uint64_t stream_seed(std::uint64_t hash, Eigen::Index feature, int level) const {
        return splitmix64(config_.seed ^ splitmix64(hash + 0x632BE59BD9B4E019ULL * static_cast<std::uint64_t>(feature + 1) +
                                                    0x85157AF5ULL * static_cast<std::uint64_t>(level)));
    }

    int gap_budget(int level) const {
        return config_.exact_mode ? std::numeric_limits<int>::max() : threshold_budget(level, config_);
    }

    // Present categories (ascending) with per-category score sums and counts.
    void category_stats(const RowSet& rows, Eigen::Index f, Workspace& ws) const {
        ws.present.clear();
        ws.cat_counts.clear();
        ws.cat_sums.clear();
        const int* list = rows.list(f);
        int current = -1;
        for (Eigen::Index k = 0; k < rows.size; ++k) {
            const int i = list[k];
            const int cat = static_cast<int>(X_(i, f));
            if (cat != current) {
                current = cat;
                ws.present.push_back(cat);
                ws.cat_counts.push_back(0);
                ws.cat_sums.resize(ws.cat_sums.size() + static_cast<std::size_t>(d_), 0.0);
            }
            ++ws.cat_counts.back();
            double* sums = ws.cat_sums.data() + (ws.present.size() - 1) * static_cast<std::size_t>(d_);
            for (Eigen::Index j = 0; j < d_; ++j) sums[j] += S_(i, j);
        }
        const auto n_cats = specs_[static_cast<std::size_t>(f)].categories.size();
        ws.slot_of.assign(n_cats, -1);
        for (std::size_t s = 0; s < ws.present.size(); ++s) ws.slot_of[static_cast<std::size_t>(ws.present[s])] = static_cast<int>(s);
    }

    // Positions k where the sorted values change between k and k + 1.
    void value_gaps(const RowSet& rows, Eigen::Index f, Workspace& ws) const {
        ws.gap_pos.clear();
        const int* list = rows.list(f);
        for (Eigen::Index k = 0; k + 1 < rows.size; ++k) {
            if (X_(list[k], f) != X_(list[k + 1], f)) ws.gap_pos.push_back(static_cast<int>(k));
        }
    }

    bool admissible(Eigen::Index n_left, Eigen::Index n) const { return n_left >= min_leaf_ && n - n_left >= min_leaf_; }

    // Candidates of one feature at a node, in ascending threshold or
    // lexicographic category-set order.
    void feature_candidates(const RowSet& rows, Eigen::Index f, int level, std::uint64_t hash, Workspace& ws,
                            std::vector<Candidate>& out) const {
        const auto& spec = specs_[static_cast<std::size_t>(f)];
        const int* list = rows.list(f);
        if (spec.is_categorical()) {
            category_stats(rows, f, ws);
            auto sets = candidate_category_splits(spec, ws.present, config_, level, stream_seed(hash, f, level));
            for (auto& set : sets) {
                Eigen::Index n_left = 0;
                for (int cat : set.left) n_left += ws.cat_counts[static_cast<std::size_t>(ws.slot_of[cat])];
                if (!admissible(n_left, rows.size)) continue;
                Candidate c;
                c.feature = static_cast<int>(f);
                c.n_left = n_left;
                c.categories = std::move(set);
                out.push_back(std::move(c));
            }
            return;
        }
        value_gaps(rows, f, ws);
        for (int g : select_gaps(static_cast<int>(ws.gap_pos.size()), gap_budget(level))) {
            const int k = ws.gap_pos[static_cast<std::size_t>(g)];
            const Eigen::Index n_left = k + 1;
            if (!admissible(n_left, rows.size)) continue;
            Candidate c;
            c.feature = static_cast<int>(f);
            c.n_left = n_left;
            c.threshold = std::midpoint(X_(list[k], f), X_(list[k + 1], f));
            out.push_back(std::move(c));
        }
    }

    // Splits `rows` by `c` into the level's buffers; returns the per-row-max
    // bound of the right side.
    double partition(const RowSet& rows, const Candidate& c, int level, Workspace& ws) const {
        RowSet& left = ws.left[static_cast<std::size_t>(level)];
        RowSet& right = ws.right[static_cast<std::size_t>(level)];
        const int* by_split = rows.list(c.feature);
        double ub_right = 0.0;
        if (c.categories) {
            for (Eigen::Index k = 0; k < rows.size; ++k) {
                const int i = by_split[k];
                const bool l = c.categories->contains(static_cast<int>(X_(i, c.feature)));
                ws.mask[static_cast<std::size_t>(i)] = l;
                if (!l) ub_right += rowmax_(i);
            }
        } else {
            for (Eigen::Index k = 0; k < rows.size; ++k) {
                const int i = by_split[k];
                const bool l = k < c.n_left;
                ws.mask[static_cast<std::size_t>(i)] = l;
                if (!l) ub_right += rowmax_(i);
            }
        }
        left.size = c.n_left;
        right.size = rows.size - c.n_left;
        for (Eigen::Index g = 0; g < p_; ++g) {
            const int* src = rows.list(g);
            int* l = left.list(g);
            int* r = right.list(g);
            for (Eigen::Index k = 0; k < rows.size; ++k) {
                const int i = src[k];
                if (ws.mask[static_cast<std::size_t>(i)]) *l++ = i;
                else *r++ = i;
            }
        }
        return ub_right;
    }

    struct Level1Best {
        bool found = false;
        double reward = 0.0;
        Candidate candidate;
        int left_treatment = 0;
        int right_treatment = 0;
    };

    // Scores one split of a bottom-level node given the left-side sums.
    template <typename Vec>
    void offer(const Vec& left_sums, const Workspace& ws, double& beat, Eigen::Index n, Level1Best& best,
               const auto& make_candidate) const {
        auto [tl, rl] = best_of(left_sums);
        Eigen::Index tr = 0;
        double rr = ws.total(0) - left_sums(0);
        for (Eigen::Index j = 1; j < d_; ++j) {
            const double v = ws.total(j) - left_sums(j);
            if (v > rr) {
                rr = v;
                tr = j;
            }
        }
        const double reward = rl + rr;
        if (reward > beat) {
            best.found = true;
            best.reward = reward;
            best.candidate = make_candidate();
            best.left_treatment = tl;
            best.right_treatment = static_cast<int>(tr);
            beat = reward + tie_tol(n);
        }
    }

    // Bottom split level: every split is scored by a single sweep with
    // prefix sums, no child nodes are materialized.
    double solve_level1(const RowSet& rows, Workspace& ws, Plan* plan) const {
        ++ws.nodes;
        const Eigen::Index n = rows.size;
        const double ub = totals(rows, ws);
        auto [t0, r0] = best_of(ws.total);
        double beat = gain_threshold(r0);
        Level1Best best;

        if (n >= 2 * min_leaf_ && ub > beat) {
            const std::uint64_t hash = has_categorical_ ? node_hash(rows) : 0;
            for (Eigen::Index f = 0; f < p_ && beat < ub; ++f) {
                const auto& spec = specs_[static_cast<std::size_t>(f)];
                if (spec.is_categorical()) {
                    category_stats(rows, f, ws);
                    if (ws.present.size() < 2) continue;
                    auto sets = candidate_category_splits(spec, ws.present, config_, 1, stream_seed(hash, f, 1));
                    for (auto& set : sets) {
                        ws.prefix.setZero();
                        Eigen::Index n_left = 0;
                        for (int cat : set.left) {
                            const auto s = static_cast<std::size_t>(ws.slot_of[cat]);
                            n_left += ws.cat_counts[s];
                            ws.prefix += Eigen::Map<const Eigen::RowVectorXd>(ws.cat_sums.data() + s * d_, d_);
                        }
                        if (!admissible(n_left, n)) continue;
                        offer(ws.prefix, ws, beat, n, best, [&] {
                            Candidate c;
                            c.feature = static_cast<int>(f);
                            c.n_left = n_left;
                            c.categories = set;
                            return c;
                        });
                    }
                    continue;
                }

                value_gaps(rows, f, ws);
                const int n_gaps = static_cast<int>(ws.gap_pos.size());
                if (n_gaps == 0) continue;
                const std::vector<int> picks = select_gaps(n_gaps, gap_budget(1));
                const int* list = rows.list(f);
                ws.prefix.setZero();
                Eigen::Index k = 0;
                for (int g : picks) {
                    const int pos = ws.gap_pos[static_cast<std::size_t>(g)];
                    for (; k <= pos; ++k) ws.prefix += S_.row(list[k]);
                    const Eigen::Index n_left = pos + 1;
                    if (!admissible(n_left, n)) continue;
                    offer(ws.prefix, ws, beat, n, best, [&] {
                        Candidate c;
                        c.feature = static_cast<int>(f);
                        c.n_left = n_left;
                        c.threshold = std::midpoint(X_(list[pos], f), X_(list[pos + 1], f));
                        return c;
                    });
                }
            }
        }

        if (!best.found) {
            if (plan) *plan = leaf_plan(t0);
            return r0;
        }
        if (plan) *plan = split_plan(best.candidate.rule(), leaf_plan(best.left_treatment), leaf_plan(best.right_treatment));
        return best.reward;
    }

    double solve(const RowSet& rows, int level, Workspace& ws, Plan* plan) const {
        if (level == 1) return solve_level1(rows, ws, plan);
        if (level == 0) {
            ++ws.nodes;
            auto [t, r] = leaf_of(rows, ws);
            if (plan) *plan = leaf_plan(t);
            return r;
        }
        ++ws.nodes;
        const Eigen::Index n = rows.size;
        const double ub = totals(rows, ws);
        auto [t0, r0] = best_of(ws.total);
        double beat = gain_threshold(r0);
        std::optional<Candidate> best;
        double best_reward = r0;

        if (n >= 2 * min_leaf_ && ub > beat) {
            const std::uint64_t hash = has_categorical_ ? node_hash(rows) : 0;
            std::vector<Candidate> candidates;
            for (Eigen::Index f = 0; f < p_ && beat < ub; ++f) {
                candidates.clear();
                feature_candidates(rows, f, level, hash, ws, candidates);
                for (const auto& c : candidates) {
                    check_time();
                    const double ub_right = partition(rows, c, level, ws);
                    const double rl = solve(ws.left[static_cast<std::size_t>(level)], level - 1, ws, nullptr);
                    if (rl + ub_right <= beat) continue;
                    const double rr = solve(ws.right[static_cast<std::size_t>(level)], level - 1, ws, nullptr);
                    if (rl + rr > beat) {
                        best = c;
                        best_reward = rl + rr;
                        beat = best_reward + tie_tol(n);
                        if (beat >= ub) break;
                    }
                }
            }
        }

        if (!best) {
            if (plan) *plan = leaf_plan(t0);
            return r0;
        }
        if (plan) *plan = expand(rows, *best, level, ws);
        return best_reward;
    }

    // Re-solves the children of the winning split with plans attached.
    Plan expand(const RowSet& rows, const Candidate& c, int level, Workspace& ws) const {
        partition(rows, c, level, ws);
        Plan left, right;
        solve(ws.left[static_cast<std::size_t>(level)], level - 1, ws, &left);
        solve(ws.right[static_cast<std::size_t>(level)], level - 1, ws, &right);
        return split_plan(c.rule(), left, right);
    }

    bool root_has_candidates_level1() const {
        Workspace ws(n_, p_, d_, 0);
        std::vector<Candidate> candidates;
        for (Eigen::Index f = 0; f < p_; ++f) {
            feature_candidates(root_, f, 1, has_categorical_ ? node_hash(root_) : 0, ws, candidates);
            if (!candidates.empty()) return true;
        }
        return false;
    }

    // Root candidates are scored independently (in parallel when asked)
    // and reduced in canonical order, so the result does not depend on the
    // number of threads.
    Plan solve_root(Workspace& ws, bool& no_splittable) {
        const int level = config_.depth;
        ++ws.nodes;
        const double ub = totals(root_, ws);
        auto [t0, r0] = best_of(ws.total);
        const double beat0 = gain_threshold(r0);

        std::vector<Candidate> candidates;
        if (n_ >= 2 * min_leaf_) {
            const std::uint64_t hash = has_categorical_ ? node_hash(root_) : 0;
            for (Eigen::Index f = 0; f < p_; ++f) feature_candidates(root_, f, level, hash, ws, candidates);
        }
        no_splittable = candidates.empty();
        if (candidates.empty() || ub <= beat0) return leaf_plan(t0);

        std::vector<double> rewards(candidates.size(), -std::numeric_limits<double>::infinity());
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::atomic<std::uint64_t> nodes{0};

        auto worker = [&] {
            Workspace local(n_, p_, d_, config_.depth);
            try {
                for (std::size_t k = next++; k < candidates.size(); k = next++) {
                    check_time();
                    partition(root_, candidates[k], level, local);
                    const double rl = solve(local.left[static_cast<std::size_t>(level)], level - 1, local, nullptr);
                    const double rr = solve(local.right[static_cast<std::size_t>(level)], level - 1, local, nullptr);
                    rewards[k] = rl + rr;
                }
            } catch (const Aborted&) {
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                abort_.store(true);
            }
            nodes += local.nodes;
        };

        const int threads = std::max(1, std::min<int>(config_.threads, static_cast<int>(candidates.size())));
        if (threads == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
        }
        if (failure) std::rethrow_exception(failure);
        worker_nodes_ = nodes.load();

        std::optional<std::size_t> best;
        double beat = beat0;
        for (std::size_t k = 0; k < candidates.size(); ++k) {
            if (rewards[k] > beat) {
                best = k;
                beat = rewards[k] + tie_tol(n_);
            }
        }
        if (!best) return leaf_plan(t0);
        return expand(root_, candidates[*best], level, ws);
    }

    const FeatureMatrix& X_;
    const ScoreMatrix& S_;
    const std::vector<FeatureSpec>& specs_;
    SearchConfig config_;
    Eigen::Index n_, p_, d_;
    Eigen::Index min_leaf_;
    Eigen::VectorXd rowmax_;
    double sigma_ = 0.0;
    bool has_categorical_ = false;
    std::vector<std::uint64_t> row_key_;
    std::optional<std::chrono::steady_clock::time_point> deadline_;
    RowSet root_;
    mutable std::atomic<bool> abort_{false};
    std::uint64_t worker_nodes_ = 0;
};

}  // namespace

double annotate_training(PolicyTree& tree, const PolicyData& data) {
    const Assignment routed = route(tree, data);
    const auto n = data.rows();
    for (auto& node : tree.nodes) node.n_train = 0;
    for (Eigen::Index i = 0; i < n; ++i) ++tree.nodes[static_cast<std::size_t>(routed.leaves(i))].n_train;
    for (auto& node : tree.nodes) {
        node.train_share = node.is_leaf() ? static_cast<double>(node.n_train) / static_cast<double>(n) : 0.0;
        if (!node.is_leaf()) node.n_train = 0;
    }
    const double total = welfare_total(data.scores, routed.treatments);
    tree.meta.n_train = n;
    tree.meta.welfare_total = total;
    tree.meta.welfare_mean = total / static_cast<double>(n);
    return total;
}

SearchResult search(const PolicyData& data, const SearchConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    config.validate();
    validate(data);
    const int min_leaf = config.effective_min_leaf(data.treatments());
    if (data.rows() < min_leaf)
        throw Error(ErrorCode::TooFewRows, std::to_string(data.rows()) + " rows, minimum leaf size is " +
                                               std::to_string(min_leaf));

    SearchResult result;
    Searcher searcher(data, config);
    Plan plan = searcher.run(result.nodes_evaluated, result.no_splittable_feature);

    PolicyTree& tree = result.tree;
    tree.nodes = std::move(plan);
    tree.specs = data.specs;
    tree.treatment_labels = data.treatment_labels;
    tree.meta.config = config;
    tree.meta.config.threads = 1;
    tree.meta.config.time_limit_seconds = 0.0;
    tree.meta.stages = std::to_string(config.depth);

    result.reward = annotate_training(tree, data);
    result.wall_time = std::chrono::steady_clock::now() - start;
    return result;
}

}  // namespace optpolicy
