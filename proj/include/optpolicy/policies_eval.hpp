#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "optpolicy/score_data.hpp"
#include "optpolicy/tree_model.hpp"
#include "optpolicy/welfare.hpp"

namespace optpolicy {

enum class AllocationSource { Tree, BestScore, Random, Observed };

struct Allocation {
    std::string policy_name;
    Eigen::VectorXi assignments;
    AllocationSource source = AllocationSource::Tree;
    std::uint64_t seed = 0;     // Random only
    std::vector<double> shares;  // Random only
};

template <typename Derived>
Allocation allocate_best_score(const Eigen::MatrixBase<Derived>& scores, std::string name = "Best score") {
    return {std::move(name), row_argmax(scores), AllocationSource::BestScore, 0, {}};
}

/// i.i.d. draws from `shares`. Throws BadShares unless the shares are
/// non-negative and sum to one within 1e-9.
Allocation allocate_random(Eigen::Index n, const std::vector<double>& shares, std::uint64_t seed,
                           std::string name = "Random");

/// Empty when the data carries no observed treatment.
std::optional<Allocation> allocate_observed(const PolicyData& data, std::string name = "Observed");

Allocation allocate_tree(const PolicyTree& tree, const PolicyData& data, std::string name);

struct ReportRow {
    std::string policy_name;
    double welfare_mean = 0.0;
    double welfare_total = 0.0;
    std::vector<double> shares;
    Eigen::Index n = 0;
};

struct EvaluationReport {
    std::vector<std::string> treatment_labels;
    std::vector<ReportRow> rows;
    std::vector<std::string> notices;
};

/// Welfare (mean and total of the assigned scores) and treatment shares per
/// allocation, in the given order.
EvaluationReport evaluate(const std::vector<Allocation>& allocations, const ScoreMatrix& scores,
                          const std::vector<std::string>& labels);

/// Aligned table: policy, welfare, one share column per treatment, n.
std::string format_text(const EvaluationReport& report);
/// policy,welfare_mean,share_0..share_{d-1},n with the same numbers as the text form.
std::string format_csv(const EvaluationReport& report);

}  // namespace optpolicy
