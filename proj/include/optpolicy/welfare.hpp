#pragma once

#include <Eigen/Dense>
#include <utility>

namespace optpolicy {

/// Treatment with the largest column sum and that sum. Columns are summed
/// row by row in order; ties go to the lowest index.
template <typename Derived>
std::pair<int, typename Derived::Scalar> best_single_treatment(const Eigen::MatrixBase<Derived>& scores) {
    using Scalar = typename Derived::Scalar;
    Eigen::Matrix<Scalar, 1, Eigen::Dynamic> sums = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>::Zero(scores.cols());
    for (Eigen::Index i = 0; i < scores.rows(); ++i) sums += scores.row(i);
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < sums.size(); ++j) {
        if (sums(j) > sums(best)) best = j;
    }
    return {static_cast<int>(best), sums(best)};
}

/// Per-row argmax, lowest index on ties.
template <typename Derived>
Eigen::VectorXi row_argmax(const Eigen::MatrixBase<Derived>& scores) {
    Eigen::VectorXi out(scores.rows());
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < scores.cols(); ++j) {
            if (scores(i, j) > scores(i, best)) best = j;
        }
        out(i) = static_cast<int>(best);
    }
    return out;
}

/// Sum over rows of the score at the assigned treatment, in row order.
template <typename Derived>
typename Derived::Scalar welfare_total(const Eigen::MatrixBase<Derived>& scores, const Eigen::VectorXi& assigned) {
    typename Derived::Scalar total(0);
    for (Eigen::Index i = 0; i < scores.rows(); ++i) total += scores(i, assigned(i));
    return total;
}

/// Sum over rows of the per-row maximum score: no allocation does better.
template <typename Derived>
typename Derived::Scalar per_row_max_total(const Eigen::MatrixBase<Derived>& scores) {
    typename Derived::Scalar total(0);
    for (Eigen::Index i = 0; i < scores.rows(); ++i) total += scores.row(i).maxCoeff();
    return total;
}

}  // namespace optpolicy
