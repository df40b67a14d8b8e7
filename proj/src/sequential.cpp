#include "optpolicy/sequential.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

#include "optpolicy/error.hpp"

namespace optpolicy {

std::string stage_label(int first_depth, const std::vector<int>& extra_depths) {
    std::string out = std::to_string(first_depth);
    for (int e : extra_depths) out += "+" + std::to_string(e);
    return out;
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::size_t stage, std::size_t leaf) {
    std::uint64_t x = seed + 0x9E3779B97F4A7C15ULL * (stage + 1) + 0xD1B54A32D192ED03ULL * (leaf + 1);
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace

SearchResult search_sequential(const PolicyData& data, int first_depth, const std::vector<int>& extra_depths,
                               const SearchConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    if (extra_depths.empty()) {
        SearchConfig plain = config;
        plain.depth = first_depth;
        return search(data, plain);
    }
    if (first_depth < 1) throw Error(ErrorCode::InvalidConfig, "first stage depth must be >= 1");
    for (int e : extra_depths) {
        if (e < 1) throw Error(ErrorCode::InvalidConfig, "extra stage depths must be >= 1");
    }

    SearchConfig first = config;
    first.depth = first_depth;
    SearchResult result = search(data, first);
    PolicyTree& tree = result.tree;
    const int min_leaf = config.effective_min_leaf(data.treatments());

    for (std::size_t stage = 0; stage < extra_depths.size(); ++stage) {
        const Assignment routed = route(tree, data);
        const std::vector<int> leaves = tree.leaves();
        std::vector<std::vector<Eigen::Index>> strata(leaves.size());
        for (Eigen::Index i = 0; i < routed.leaves.size(); ++i) {
            const auto at = std::find(leaves.begin(), leaves.end(), routed.leaves(i)) - leaves.begin();
            strata[static_cast<std::size_t>(at)].push_back(i);
        }

        std::vector<std::size_t> jobs;
        for (std::size_t k = 0; k < leaves.size(); ++k) {
            if (static_cast<Eigen::Index>(strata[k].size()) >= 2 * static_cast<Eigen::Index>(min_leaf)) jobs.push_back(k);
        }

        std::vector<std::optional<SearchResult>> subs(leaves.size());
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        auto worker = [&] {
            try {
                for (std::size_t j = next++; j < jobs.size(); j = next++) {
                    const std::size_t k = jobs[j];
                    SearchConfig sub = config;
                    sub.depth = extra_depths[stage];
                    sub.seed = mix_seed(config.seed, stage, k);
                    sub.threads = 1;
                    subs[k] = search(subset(data, strata[k]), sub);
                }
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = jobs.size();
            }
        };
        const int threads = std::max(1, std::min<int>(config.threads, static_cast<int>(jobs.size())));
        if (threads == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
        }
        if (failure) std::rethrow_exception(failure);

        for (std::size_t k = 0; k < leaves.size(); ++k) {
            if (!subs[k]) continue;
            tree.graft(leaves[k], subs[k]->tree);
            result.nodes_evaluated += subs[k]->nodes_evaluated;
        }
        tree.canonicalize();
    }

    tree.meta.stages = stage_label(first_depth, extra_depths);
    result.reward = annotate_training(tree, data);
    tree.validate();
    result.no_splittable_feature = false;
    result.wall_time = std::chrono::steady_clock::now() - start;
    return result;
}

}  // namespace optpolicy
