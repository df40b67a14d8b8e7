#include "optpolicy/constraints.hpp"

#include <cmath>

#include "optpolicy/welfare.hpp"

namespace optpolicy {

namespace {

Eigen::VectorXd best_score_shares(const ScoreMatrix& adjusted) {
    const Eigen::VectorXi alloc = row_argmax(adjusted);
    Eigen::VectorXd shares = Eigen::VectorXd::Zero(adjusted.cols());
    for (Eigen::Index i = 0; i < alloc.size(); ++i) shares(alloc(i)) += 1.0;
    return shares / static_cast<double>(adjusted.rows());
}

}  // namespace

CostVector adjust_costs_for_shares(const ScoreMatrix& scores, const ShareConstraint& constraint) {
    const Eigen::Index d = scores.cols();
    if (static_cast<Eigen::Index>(constraint.max_shares.size()) != d)
        throw Error(ErrorCode::DimensionMismatch, "need one cap per treatment");
    if (scores.rows() < 1) throw Error(ErrorCode::EmptyAfterCleaning, "no rows to calibrate on");
    if (constraint.max_iterations < 1) throw Error(ErrorCode::InvalidConfig, "max_iterations must be >= 1");
    if (!(constraint.tolerance >= 0.0)) throw Error(ErrorCode::InvalidConfig, "tolerance must be >= 0");
    const Eigen::Map<const Eigen::VectorXd> caps(constraint.max_shares.data(), d);
    if (!((caps.array() > 0.0).all() && (caps.array() <= 1.0).all()))
        throw Error(ErrorCode::InvalidConfig, "caps must lie in (0, 1]");
    if (caps.sum() < 1.0 - 1e-12) throw Error(ErrorCode::Infeasible, "caps sum to less than one");

    const double mean = scores.mean();
    double sigma = std::sqrt((scores.array() - mean).square().sum() / static_cast<double>(scores.size()));
    if (!(sigma > 0.0)) sigma = 1.0;

    CostVector out;
    out.costs = Eigen::VectorXd::Zero(d);
    for (int it = 1;; ++it) {
        out.iterations_used = it;
        out.achieved_shares = best_score_shares(apply_costs(scores, out.costs));
        const Eigen::ArrayXd excess = out.achieved_shares.array() - caps.array();
        if ((excess <= constraint.tolerance).all()) {
            out.converged = true;
            return out;
        }
        if (it == constraint.max_iterations) return out;
        for (Eigen::Index j = 0; j < d; ++j) {
            if (excess(j) > constraint.tolerance) out.costs(j) += sigma * excess(j);
        }
        out.costs.array() -= out.costs.minCoeff();
    }
}

}  // namespace optpolicy
