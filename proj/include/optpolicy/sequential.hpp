#pragma once

#include <string>
#include <vector>

#include "optpolicy/tree_search.hpp"

namespace optpolicy {

/// "3", "2+1", "2+1+1".
std::string stage_label(int first_depth, const std::vector<int>& extra_depths);

/// Optimal tree of `first_depth`, then for each entry of `extra_depths` an
/// optimal sub-tree of that depth grown inside every current leaf whose
/// stratum holds at least 2 * min_leaf_size rows. Smaller strata keep their
/// leaf. The reported reward is recomputed on the composite tree.
SearchResult search_sequential(const PolicyData& data, int first_depth, const std::vector<int>& extra_depths,
                               const SearchConfig& config);

}  // namespace optpolicy
