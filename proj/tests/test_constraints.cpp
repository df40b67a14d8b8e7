#include <doctest.h>

#include <random>

#include "optpolicy/constraints.hpp"
#include "optpolicy/error.hpp"
#include "optpolicy/welfare.hpp"

using namespace optpolicy;

namespace {

Eigen::VectorXd shares_of(const ScoreMatrix& scores) {
    const Eigen::VectorXi a = row_argmax(scores);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(scores.cols());
    for (Eigen::Index i = 0; i < a.size(); ++i) out(a(i)) += 1.0;
    return out / static_cast<double>(scores.rows());
}

}  // namespace

TEST_CASE("apply_costs subtracts per column") {
    ScoreMatrix s(1, 2);
    s << 0.5, 0.7;
    const ScoreMatrix adjusted = apply_costs(s, Eigen::Vector2d(0.0, 0.3));
    CHECK(adjusted(0, 0) == 0.5);
    CHECK(adjusted(0, 1) == doctest::Approx(0.4));
    CHECK(apply_costs(s, Eigen::Vector2d::Zero()) == s);
    CHECK_THROWS_AS(apply_costs(s, Eigen::Vector3d::Zero()), Error);
}

TEST_CASE("caps of one leave costs at zero") {
    ScoreMatrix s = ScoreMatrix::Random(50, 3);
    const auto costs = adjust_costs_for_shares(s, {{1.0, 1.0, 1.0}});
    CHECK(costs.all_zero());
    CHECK(costs.iterations_used == 1);
    CHECK(costs.converged);
}

TEST_CASE("a 50% cap switches the rows with the smallest gaps") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> gap(0.1, 2.0);
    const int n = 400;
    ScoreMatrix s(n, 2);
    std::vector<double> gaps;
    for (int i = 0; i < n; ++i) {
        s(i, 0) = 0.0;
        s(i, 1) = gap(rng);
        gaps.push_back(s(i, 1));
    }
    const auto costs = adjust_costs_for_shares(s, {{1.0, 0.5}});
    REQUIRE(costs.converged);
    CHECK(costs.costs(0) == 0.0);
    CHECK(costs.achieved_shares(1) <= 0.5 + 0.005);
    std::sort(gaps.begin(), gaps.end());
    const double median = 0.5 * (gaps[n / 2 - 1] + gaps[n / 2]);
    // rows switch exactly when their gap is below the cost
    const Eigen::VectorXi after = row_argmax(apply_costs(s, costs));
    for (int i = 0; i < n; ++i) CHECK((after(i) == 0) == (s(i, 1) - costs.costs(1) <= 0.0));
    const auto rank = std::lower_bound(gaps.begin(), gaps.end(), costs.costs(1)) - gaps.begin();
    CHECK(std::abs(static_cast<double>(rank) / n - 0.5) <= 0.005 + 1.0 / n);
    CHECK(std::abs(costs.costs(1) - median) < 0.1);
}

TEST_CASE("symmetric scores with equal caps share evenly") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> normal;
    const int n = 100, d = 2;
    ScoreMatrix s(n, d);
    // the second column is the first one with an opposite ordering of rows
    std::vector<double> col(n);
    for (auto& v : col) v = normal(rng);
    for (int i = 0; i < n; ++i) {
        s(i, 0) = col[i] + 1.0;
        s(i, 1) = col[n - 1 - i];
    }
    const auto costs = adjust_costs_for_shares(s, {{0.5, 0.5}});
    REQUIRE(costs.converged);
    for (int j = 0; j < d; ++j) CHECK(std::abs(costs.achieved_shares(j) - 0.5) <= 0.005 + 1e-12);
    CHECK(shares_of(apply_costs(s, costs)).isApprox(costs.achieved_shares));
}

TEST_CASE("shifting scores leaves costs unchanged") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> normal;
    ScoreMatrix s(200, 3);
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = normal(rng);
    s.col(2).array() += 1.0;
    const auto a = adjust_costs_for_shares(s, {{0.4, 0.4, 0.4}});
    const ScoreMatrix shifted = (s.array() + 10.0).matrix();
    const auto b = adjust_costs_for_shares(shifted, {{0.4, 0.4, 0.4}});
    CHECK((a.costs - b.costs).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(row_argmax(apply_costs(s, a)) == row_argmax(apply_costs(shifted, b)));
}

TEST_CASE("invalid caps") {
    ScoreMatrix s = ScoreMatrix::Random(10, 2);
    auto code = [&](std::vector<double> caps) {
        try {
            adjust_costs_for_shares(s, {caps});
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::InvariantViolation;
    };
    CHECK(code({0.4, 0.4}) == ErrorCode::Infeasible);
    CHECK(code({0.0, 1.0}) == ErrorCode::InvalidConfig);
    CHECK(code({0.5, 0.5, 0.5}) == ErrorCode::DimensionMismatch);
}
