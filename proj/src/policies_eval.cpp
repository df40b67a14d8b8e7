#include "optpolicy/policies_eval.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "numfmt.hpp"
#include "optpolicy/csv.hpp"
#include "optpolicy/error.hpp"

namespace optpolicy {

Allocation allocate_random(Eigen::Index n, const std::vector<double>& shares, std::uint64_t seed, std::string name) {
    if (shares.size() < 2) throw Error(ErrorCode::BadShares, "need a share per treatment");
    double total = 0.0;
    for (double s : shares) {
        if (!(s >= 0.0) || !std::isfinite(s)) throw Error(ErrorCode::BadShares, "shares must be non-negative");
        total += s;
    }
    if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorCode::BadShares, "shares must sum to 1");

    std::mt19937_64 rng(seed);
    std::discrete_distribution<int> draw(shares.begin(), shares.end());
    Allocation out{std::move(name), Eigen::VectorXi(n), AllocationSource::Random, seed, shares};
    for (Eigen::Index i = 0; i < n; ++i) out.assignments(i) = draw(rng);
    return out;
}

std::optional<Allocation> allocate_observed(const PolicyData& data, std::string name) {
    if (!data.observed_treatment) return std::nullopt;
    return Allocation{std::move(name), *data.observed_treatment, AllocationSource::Observed, 0, {}};
}

Allocation allocate_tree(const PolicyTree& tree, const PolicyData& data, std::string name) {
    return {std::move(name), assign(tree, data), AllocationSource::Tree, 0, {}};
}

EvaluationReport evaluate(const std::vector<Allocation>& allocations, const ScoreMatrix& scores,
                          const std::vector<std::string>& labels) {
    const Eigen::Index n = scores.rows();
    const Eigen::Index d = scores.cols();
    if (static_cast<Eigen::Index>(labels.size()) != d)
        throw Error(ErrorCode::DimensionMismatch, "one label per treatment required");
    if (n < 1) throw Error(ErrorCode::EmptyAfterCleaning, "no rows to evaluate");

    EvaluationReport report;
    report.treatment_labels = labels;
    for (const auto& a : allocations) {
        if (a.assignments.size() != n)
            throw Error(ErrorCode::LengthMismatch, "allocation '" + a.policy_name + "' has " +
                                                       std::to_string(a.assignments.size()) + " rows, scores have " +
                                                       std::to_string(n));
        if ((a.assignments.array() < 0).any() || (a.assignments.array() >= d).any())
            throw Error(ErrorCode::DimensionMismatch, "allocation '" + a.policy_name + "' has an invalid treatment");
        ReportRow row;
        row.policy_name = a.policy_name;
        row.n = n;
        row.welfare_total = welfare_total(scores, a.assignments);
        row.welfare_mean = row.welfare_total / static_cast<double>(n);
        row.shares.assign(static_cast<std::size_t>(d), 0.0);
        for (Eigen::Index i = 0; i < n; ++i) row.shares[static_cast<std::size_t>(a.assignments(i))] += 1.0;
        for (double& s : row.shares) s /= static_cast<double>(n);
        report.rows.push_back(std::move(row));
    }
    return report;
}

namespace {

constexpr int kDigits = 6;

std::vector<std::vector<std::string>> cells(const EvaluationReport& report) {
    std::vector<std::vector<std::string>> out;
    for (const auto& row : report.rows) {
        std::vector<std::string> line{row.policy_name, detail::format_fixed(row.welfare_mean, kDigits)};
        for (double s : row.shares) line.push_back(detail::format_fixed(s, kDigits));
        line.push_back(std::to_string(row.n));
        out.push_back(std::move(line));
    }
    return out;
}

}  // namespace

std::string format_text(const EvaluationReport& report) {
    std::vector<std::string> header{"Policy", "Welfare"};
    for (const auto& l : report.treatment_labels) header.push_back(l);
    header.push_back("n");
    auto body = cells(report);

    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
    for (const auto& line : body)
        for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());

    std::ostringstream out;
    auto emit = [&](const std::vector<std::string>& line) {
        for (std::size_t c = 0; c < line.size(); ++c) {
            const std::string pad(width[c] - line[c].size(), ' ');
            if (c == 0) out << line[c] << pad;
            else out << "  " << pad << line[c];
        }
        out << '\n';
    };
    emit(header);
    for (const auto& line : body) emit(line);
    for (const auto& note : report.notices) out << "note: " << note << '\n';
    return out.str();
}

std::string format_csv(const EvaluationReport& report) {
    csv::Table table;
    table.header = {"policy", "welfare_mean"};
    for (std::size_t j = 0; j < report.treatment_labels.size(); ++j) table.header.push_back("share_" + std::to_string(j));
    table.header.push_back("n");
    table.rows = cells(report);
    std::ostringstream out;
    csv::write(out, table);
    return out.str();
}

}  // namespace optpolicy
