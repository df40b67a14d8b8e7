#pragma once

#include <Eigen/Dense>
#include <vector>

#include "optpolicy/error.hpp"
#include "optpolicy/score_data.hpp"

namespace optpolicy {

/// Upper bounds on the fraction of rows assigned to each treatment.
struct ShareConstraint {
    std::vector<double> max_shares;
    double tolerance = 0.005;
    int max_iterations = 200;
};

/// Treatment costs in outcome units, subtracted from the scores. The smallest
/// cost is always zero.
struct CostVector {
    Eigen::VectorXd costs;
    int iterations_used = 0;
    /// Best-score shares under the final costs.
    Eigen::VectorXd achieved_shares;
    bool converged = false;

    bool all_zero() const { return (costs.array() == 0.0).all(); }
};

/// Calibrates costs so that the per-row argmax of (scores - costs) respects
/// the caps. Over-capped treatments get their cost raised by
/// sd(scores) * (share - cap) per iteration. Throws Infeasible when the caps
/// sum to less than one; hitting the iteration cap only clears `converged`.
CostVector adjust_costs_for_shares(const ScoreMatrix& scores, const ShareConstraint& constraint);

inline CostVector adjust_costs_for_shares(const PolicyData& data, const ShareConstraint& constraint) {
    return adjust_costs_for_shares(data.scores, constraint);
}

template <typename Derived>
ScoreMatrixT<typename Derived::Scalar> apply_costs(const Eigen::MatrixBase<Derived>& scores,
                                                   const Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>& costs) {
    if (costs.size() != scores.cols())
        throw Error(ErrorCode::DimensionMismatch, "cost vector length " + std::to_string(costs.size()) +
                                                      " does not match " + std::to_string(scores.cols()) + " treatments");
    return scores.rowwise() - costs.transpose();
}

template <typename Derived>
ScoreMatrixT<typename Derived::Scalar> apply_costs(const Eigen::MatrixBase<Derived>& scores, const CostVector& costs) {
    return apply_costs(scores, Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>(costs.costs.template cast<typename Derived::Scalar>()));
}

}  // namespace optpolicy
