#pragma once

// Plain enumeration of every tree up to a given depth, written without any
// of the search engine's machinery. Every threshold between adjacent
// distinct values and every category subset present in a node is tried.

#include <algorithm>
#include <limits>
#include <vector>

#include "optpolicy/score_data.hpp"

namespace oracle {

inline double best_leaf(const optpolicy::PolicyData& data, const std::vector<long>& rows) {
    double best = -std::numeric_limits<double>::infinity();
    for (long j = 0; j < data.scores.cols(); ++j) {
        double sum = 0.0;
        for (long i : rows) sum += data.scores(i, j);
        best = std::max(best, sum);
    }
    return best;
}

inline double best_tree(const optpolicy::PolicyData& data, const std::vector<long>& rows, int depth, long min_leaf) {
    double best = best_leaf(data, rows);
    if (depth == 0) return best;
    std::vector<long> left, right;
    auto consider = [&] {
        if (static_cast<long>(left.size()) < min_leaf || static_cast<long>(right.size()) < min_leaf) return;
        best = std::max(best, best_tree(data, left, depth - 1, min_leaf) + best_tree(data, right, depth - 1, min_leaf));
    };
    for (long f = 0; f < data.features.cols(); ++f) {
        std::vector<double> values;
        for (long i : rows) values.push_back(data.features(i, f));
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        if (data.specs[f].is_categorical()) {
            const auto c = values.size();
            if (c < 2 || c > 20) continue;
            for (unsigned long mask = 1; mask + 1 < (1UL << c); ++mask) {
                left.clear();
                right.clear();
                for (long i : rows) {
                    const auto pos = std::lower_bound(values.begin(), values.end(), data.features(i, f)) - values.begin();
                    ((mask >> pos) & 1UL ? left : right).push_back(i);
                }
                consider();
            }
        } else {
            for (std::size_t k = 0; k + 1 < values.size(); ++k) {
                left.clear();
                right.clear();
                for (long i : rows) (data.features(i, f) <= values[k] ? left : right).push_back(i);
                consider();
            }
        }
    }
    return best;
}

inline double best_tree(const optpolicy::PolicyData& data, int depth, long min_leaf = 1) {
    std::vector<long> rows(static_cast<std::size_t>(data.scores.rows()));
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<long>(i);
    return best_tree(data, rows, depth, min_leaf);
}

}  // namespace oracle
