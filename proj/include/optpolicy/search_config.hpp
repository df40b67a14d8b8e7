#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>

namespace optpolicy {

/// Controls for the tree search. `depth` counts split levels: 0 is a single
/// leaf, 2 gives up to four leaves.
struct SearchConfig {
    int depth = 2;
    /// Threshold budget per feature at the bottom split level; halved per
    /// level towards the root.
    int approx_points = 100;
    /// Budget of sampled category subsets per categorical feature.
    int cat_combinations = 100;
    /// Unset means max(5, 3 * d).
    std::optional<int> min_leaf_size;
    /// All adjacent midpoints and (for up to 20 categories) all category
    /// subsets become candidates.
    bool exact_mode = false;
    double gain_epsilon = 1e-12;
    std::uint64_t seed = 0;
    int threads = 1;
    /// Wall-clock cap; 0 disables it. Exceeding it throws SearchTimeout.
    double time_limit_seconds = 0.0;

    int effective_min_leaf(long treatments) const {
        return min_leaf_size ? *min_leaf_size : std::max(5, 3 * static_cast<int>(treatments));
    }

    /// Throws InvalidConfig when a field is out of range.
    void validate() const;

    friend bool operator==(const SearchConfig&, const SearchConfig&) = default;
};

}  // namespace optpolicy
