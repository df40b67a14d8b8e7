#pragma once

#include <random>
#include <string>

#include "optpolicy/score_data.hpp"

namespace testing_support {

/// Random instance with one continuous, one ordered (0..5) and one
/// 4-category feature. Continuous values are rounded to a 0.05 grid so
/// that ties occur.
inline optpolicy::PolicyData mixed_instance(std::mt19937_64& rng, long n, int d) {
    using namespace optpolicy;
    PolicyData data;
    data.features.resize(n, 3);
    data.scores.resize(n, d);
    data.specs = {{"x_cont", FeatureKind::Continuous, {}},
                  {"x_ord", FeatureKind::OrderedDiscrete, {}},
                  {"x_cat", FeatureKind::Categorical, {"a", "b", "c", "d"}}};
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> ordered(0, 5), cat(0, 3);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (long i = 0; i < n; ++i) {
        data.features(i, 0) = std::round(unit(rng) * 20.0) / 20.0;
        data.features(i, 1) = ordered(rng);
        data.features(i, 2) = cat(rng);
        for (int j = 0; j < d; ++j) data.scores(i, j) = normal(rng);
        data.row_ids.push_back(std::to_string(i));
    }
    for (int j = 0; j < d; ++j) data.treatment_labels.push_back("t" + std::to_string(j));
    return data;
}

}  // namespace testing_support
