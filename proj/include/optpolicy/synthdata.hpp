#pragma once

#include <cstdint>
#include <vector>

#include "optpolicy/score_data.hpp"
#include "optpolicy/tree_model.hpp"

namespace optpolicy {

struct FeatureGen {
    FeatureKind kind = FeatureKind::Continuous;
    /// Distinct levels for OrderedDiscrete, categories for Categorical.
    int levels = 10;
};

struct GeneratorSpec {
    Eigen::Index n = 1000;
    int treatments = 2;
    std::vector<FeatureGen> features{{FeatureKind::Continuous, 0}, {FeatureKind::Continuous, 0}};
    int rule_depth = 2;
    double signal = 1.0;
    double noise_sd = 0.5;
    /// Spread of the per-row baseline shared by all treatments.
    double base_sd = 1.0;
    std::uint64_t seed = 0;
};

struct GeneratedData {
    PolicyData data;
    /// The planted policy.
    PolicyTree oracle;
    /// Noise-free scores: baseline + signal at the planted treatment.
    ScoreMatrix mean_scores;
};

/// Continuous features are U(0, 1), ordered ones uniform on 0..levels-1 and
/// categorical ones uniform over `levels` labels "0".."levels-1".
/// scores(i, j) = base_i + signal * [oracle(i) == j] + N(0, noise_sd^2).
/// The observed treatment is drawn uniformly. Throws BadSpec on invalid input.
GeneratedData generate(const GeneratorSpec& spec);

}  // namespace optpolicy
