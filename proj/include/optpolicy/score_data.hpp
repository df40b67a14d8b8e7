#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "optpolicy/csv.hpp"

namespace optpolicy {

/// n x d policy scores, one row per individual. Row-major since the search
/// streams whole rows.
template <typename Scalar>
using ScoreMatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ScoreMatrix = ScoreMatrixT<double>;

/// n x p feature values, one column per feature. Categorical features hold
/// the category index as a double.
using FeatureMatrix = Eigen::MatrixXd;

enum class FeatureKind { Continuous, OrderedDiscrete, Categorical };

std::string_view to_string(FeatureKind kind) noexcept;
FeatureKind parse_feature_kind(std::string_view text);

struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::Continuous;
    std::vector<std::string> categories;  // Categorical only, index order

    bool is_categorical() const noexcept { return kind == FeatureKind::Categorical; }
    friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

struct PolicyData {
    FeatureMatrix features;
    ScoreMatrix scores;
    std::vector<FeatureSpec> specs;
    std::vector<std::string> treatment_labels;
    std::optional<Eigen::VectorXi> observed_treatment;
    std::optional<Eigen::VectorXd> observed_outcome;
    std::vector<std::string> row_ids;

    Eigen::Index rows() const noexcept { return scores.rows(); }
    Eigen::Index treatments() const noexcept { return scores.cols(); }
    Eigen::Index feature_count() const noexcept { return features.cols(); }
};

bool operator==(const PolicyData& a, const PolicyData& b);

/// Throws Error if any PolicyData invariant is violated.
void validate(const PolicyData& data);

/// Rows `indices` of `data`, in the given order.
PolicyData subset(const PolicyData& data, const std::vector<Eigen::Index>& indices);

/// Column-role mapping for CSV ingestion. Feature order is the order of
/// declaration and fixes the feature indices used by trees.
struct Schema {
    struct Feature {
        std::string column;
        FeatureKind kind = FeatureKind::Continuous;
        std::vector<std::string> categories;  // optional pre-declared labels
    };

    std::vector<std::string> scores;
    std::vector<std::string> treatment_labels;  // defaults to score column names
    std::vector<Feature> features;
    std::optional<std::string> treatment;
    std::optional<std::string> outcome;
    std::optional<std::string> id;

    static Schema parse(std::string_view json_text);
    static Schema read_file(const std::string& path);
    std::string dump() const;
};

struct LoadResult {
    PolicyData data;
    std::size_t dropped_rows = 0;
};

/// Ingests a parsed table. Rows with a missing or unparseable cell in any
/// mapped column are dropped and counted; a score cell that parses to a
/// non-finite value is an error.
LoadResult load_table(const csv::Table& table, const Schema& schema);
LoadResult load_csv(const std::string& path, const Schema& schema);

/// Table in the column layout named by `schema`; numbers use 17 significant
/// digits so that reloading reproduces the data exactly.
csv::Table to_table(const PolicyData& data, const Schema& schema);

struct DataSplit {
    PolicyData train_forest;
    PolicyData train_policy;
    PolicyData predict;
    std::uint64_t seed = 0;
};

/// Uniform random partition of positions 0..n-1. Part sizes are
/// round(n * f) for the first two parts and the remainder for the last;
/// each part lists its positions in ascending order.
std::array<std::vector<Eigen::Index>, 3> partition_indices(Eigen::Index n,
                                                           const std::array<double, 3>& proportions,
                                                           std::uint64_t seed);

DataSplit split_data(const PolicyData& data, const std::array<double, 3>& proportions = {0.4, 0.4, 0.2},
                     std::uint64_t seed = 0);

}  // namespace optpolicy
