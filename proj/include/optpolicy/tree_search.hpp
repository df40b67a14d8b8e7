#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <vector>

#include "optpolicy/score_data.hpp"
#include "optpolicy/search_config.hpp"
#include "optpolicy/tree_model.hpp"
#include "optpolicy/welfare.hpp"

namespace optpolicy {

struct SearchResult {
    PolicyTree tree;
    /// Sum over training rows of the score at the assigned treatment.
    double reward = 0.0;
    std::uint64_t nodes_evaluated = 0;
    std::chrono::duration<double> wall_time{0};
    /// Set when no feature offered a single admissible split at the root.
    bool no_splittable_feature = false;
};

/// Candidate budget at a split level: max(2, floor(A / 2^(level - 1))).
/// Level 1 is the bottom split level.
int threshold_budget(int level_from_bottom, const SearchConfig& config);
/// Same halving schedule for category subsets, floored at 1.
int category_budget(int level_from_bottom, const SearchConfig& config);

/// Indices of the gaps (between distinct sorted values g and g+1) used as
/// split points: all of them when `n_gaps <= budget`, otherwise `budget`
/// gaps at equally spaced rank positions.
std::vector<int> select_gaps(int n_gaps, int budget);

/// Midpoint thresholds for `values` (any order, duplicates allowed), sorted
/// ascending. Empty when all values coincide.
std::vector<double> candidate_thresholds(std::span<const double> values, int level_from_bottom,
                                         const SearchConfig& config);

/// Left category sets for a categorical split among `present_categories`
/// (sorted, distinct). The lowest present category is always on the left;
/// results are sorted lexicographically. Sampling is driven by `stream_seed`.
std::vector<CategorySet> candidate_category_splits(const FeatureSpec& feature, std::span<const int> present_categories,
                                                   const SearchConfig& config, int level_from_bottom = 1,
                                                   std::uint64_t stream_seed = 0);

/// Fills leaf row counts and shares from routing `data` through `tree`,
/// records the training welfare in the metadata and returns its total.
double annotate_training(PolicyTree& tree, const PolicyData& data);

/// Exhaustive depth-limited search for the tree maximizing the summed score
/// of the assigned treatments over the rows of `data`.
SearchResult search(const PolicyData& data, const SearchConfig& config);

}  // namespace optpolicy
