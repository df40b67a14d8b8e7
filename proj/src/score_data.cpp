#include "optpolicy/score_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "numfmt.hpp"
#include "optpolicy/error.hpp"

namespace optpolicy {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(FeatureKind kind) noexcept {
    switch (kind) {
        case FeatureKind::Continuous: return "continuous";
        case FeatureKind::OrderedDiscrete: return "ordered";
        case FeatureKind::Categorical: return "categorical";
    }
    return "continuous";
}

FeatureKind parse_feature_kind(std::string_view text) {
    if (text == "continuous") return FeatureKind::Continuous;
    if (text == "ordered" || text == "ordered_discrete" || text == "discrete") return FeatureKind::OrderedDiscrete;
    if (text == "categorical" || text == "unordered") return FeatureKind::Categorical;
    throw Error(ErrorCode::InvalidSchema, "unknown feature kind '" + std::string(text) + "'");
}

bool operator==(const PolicyData& a, const PolicyData& b) {
    auto same_optional = [](const auto& x, const auto& y) {
        if (x.has_value() != y.has_value()) return false;
        return !x.has_value() || (x->size() == y->size() && *x == *y);
    };
    return a.features.rows() == b.features.rows() && a.features.cols() == b.features.cols() &&
           a.features == b.features && a.scores.rows() == b.scores.rows() &&
           a.scores.cols() == b.scores.cols() && a.scores == b.scores && a.specs == b.specs &&
           a.treatment_labels == b.treatment_labels &&
           same_optional(a.observed_treatment, b.observed_treatment) &&
           same_optional(a.observed_outcome, b.observed_outcome) && a.row_ids == b.row_ids;
}

void validate(const PolicyData& data) {
    const auto n = data.rows();
    const auto d = data.treatments();
    const auto p = data.feature_count();
    if (n < 1) throw Error(ErrorCode::EmptyAfterCleaning, "no rows");
    if (d < 2) throw Error(ErrorCode::NoTreatments, "need at least two treatments");
    if (p < 1) throw Error(ErrorCode::InvalidSchema, "need at least one feature");
    if (data.features.rows() != n) throw Error(ErrorCode::DimensionMismatch, "features/scores row counts differ");
    if (static_cast<Eigen::Index>(data.specs.size()) != p)
        throw Error(ErrorCode::DimensionMismatch, "one FeatureSpec per feature column required");
    if (static_cast<Eigen::Index>(data.treatment_labels.size()) != d)
        throw Error(ErrorCode::DimensionMismatch, "one label per treatment required");
    if (static_cast<Eigen::Index>(data.row_ids.size()) != n)
        throw Error(ErrorCode::DimensionMismatch, "one id per row required");
    if (!data.scores.allFinite()) throw Error(ErrorCode::NonFiniteScore, "scores must be finite");
    if (!data.features.allFinite()) throw Error(ErrorCode::InvalidSchema, "features must be finite");

    std::set<std::string> names;
    for (Eigen::Index f = 0; f < p; ++f) {
        const auto& spec = data.specs[f];
        if (!names.insert(spec.name).second)
            throw Error(ErrorCode::InvalidSchema, "duplicate feature name '" + spec.name + "'");
        if (!spec.is_categorical()) {
            if (!spec.categories.empty())
                throw Error(ErrorCode::InvalidSchema, "ordered feature '" + spec.name + "' lists categories");
            continue;
        }
        if (spec.categories.size() < 2)
            throw Error(ErrorCode::InvalidSchema, "categorical feature '" + spec.name + "' needs >= 2 categories");
        const double count = static_cast<double>(spec.categories.size());
        for (Eigen::Index i = 0; i < n; ++i) {
            const double v = data.features(i, f);
            if (v < 0 || v >= count || v != std::floor(v))
                throw Error(ErrorCode::InvalidSchema, "category index out of range in '" + spec.name + "'");
        }
    }
    if (data.observed_treatment) {
        if (data.observed_treatment->size() != n)
            throw Error(ErrorCode::DimensionMismatch, "observed treatment length differs from n");
        if ((data.observed_treatment->array() < 0).any() || (data.observed_treatment->array() >= d).any())
            throw Error(ErrorCode::InvalidSchema, "observed treatment index out of range");
    }
    if (data.observed_outcome && data.observed_outcome->size() != n)
        throw Error(ErrorCode::DimensionMismatch, "observed outcome length differs from n");
}

PolicyData subset(const PolicyData& data, const std::vector<Eigen::Index>& indices) {
    PolicyData out;
    out.features = data.features(indices, Eigen::all);
    out.scores = data.scores(indices, Eigen::all);
    out.specs = data.specs;
    out.treatment_labels = data.treatment_labels;
    if (data.observed_treatment) out.observed_treatment = (*data.observed_treatment)(indices);
    if (data.observed_outcome) out.observed_outcome = (*data.observed_outcome)(indices);
    out.row_ids.reserve(indices.size());
    for (auto i : indices) out.row_ids.push_back(data.row_ids[static_cast<std::size_t>(i)]);
    return out;
}

// ---------------------------------------------------------------------------
// Schema

namespace {

std::vector<std::string> string_list(const ordered_json& j, const char* what) {
    if (!j.is_array()) throw Error(ErrorCode::InvalidSchema, std::string(what) + " must be an array of strings");
    std::vector<std::string> out;
    for (const auto& e : j) {
        if (!e.is_string()) throw Error(ErrorCode::InvalidSchema, std::string(what) + " must be an array of strings");
        out.push_back(e.get<std::string>());
    }
    return out;
}

Schema::Feature parse_feature(const std::string& column, const ordered_json& value) {
    Schema::Feature feature;
    feature.column = column;
    if (value.is_string()) {
        feature.kind = parse_feature_kind(value.get<std::string>());
    } else if (value.is_object()) {
        if (!value.contains("kind") || !value["kind"].is_string())
            throw Error(ErrorCode::InvalidSchema, "feature '" + column + "' needs a kind");
        feature.kind = parse_feature_kind(value["kind"].get<std::string>());
        if (value.contains("categories")) feature.categories = string_list(value["categories"], "categories");
    } else {
        throw Error(ErrorCode::InvalidSchema, "feature '" + column + "' must map to a kind");
    }
    return feature;
}

std::optional<std::string> optional_string(const ordered_json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    if (!j[key].is_string()) throw Error(ErrorCode::InvalidSchema, std::string(key) + " must be a string");
    return j[key].get<std::string>();
}

}  // namespace

Schema Schema::parse(std::string_view json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidSchema, e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::InvalidSchema, "schema must be a JSON object");

    Schema schema;
    if (!j.contains("scores")) throw Error(ErrorCode::InvalidSchema, "schema needs a 'scores' list");
    schema.scores = string_list(j["scores"], "scores");
    if (j.contains("treatment_labels")) schema.treatment_labels = string_list(j["treatment_labels"], "treatment_labels");

    if (!j.contains("features")) throw Error(ErrorCode::InvalidSchema, "schema needs 'features'");
    const auto& features = j["features"];
    if (features.is_object()) {
        for (const auto& [column, value] : features.items()) schema.features.push_back(parse_feature(column, value));
    } else if (features.is_array()) {
        for (const auto& entry : features) {
            if (!entry.is_object() || !entry.contains("name") || !entry["name"].is_string())
                throw Error(ErrorCode::InvalidSchema, "feature entries need a 'name'");
            schema.features.push_back(parse_feature(entry["name"].get<std::string>(), entry));
        }
    } else {
        throw Error(ErrorCode::InvalidSchema, "'features' must be an object or an array");
    }

    schema.treatment = optional_string(j, "treatment");
    schema.outcome = optional_string(j, "outcome");
    schema.id = optional_string(j, "id");
    return schema;
}

Schema Schema::read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str());
}

std::string Schema::dump() const {
    ordered_json j;
    j["scores"] = scores;
    if (!treatment_labels.empty()) j["treatment_labels"] = treatment_labels;
    ordered_json feats = ordered_json::object();
    for (const auto& f : features) {
        if (f.categories.empty()) {
            feats[f.column] = std::string(to_string(f.kind));
        } else {
            feats[f.column] = {{"kind", std::string(to_string(f.kind))}, {"categories", f.categories}};
        }
    }
    j["features"] = feats;
    if (treatment) j["treatment"] = *treatment;
    if (outcome) j["outcome"] = *outcome;
    if (id) j["id"] = *id;
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// Ingestion

namespace {

bool is_missing(std::string_view cell) {
    cell = detail::trim(cell);
    return cell.empty() || cell == "NA" || cell == "N/A" || cell == "null" || cell == "NULL";
}

int require_column(const csv::Table& table, const std::string& name) {
    const int c = table.column(name);
    if (c < 0) throw Error(ErrorCode::MissingColumn, "column '" + name + "' not found");
    return c;
}

}  // namespace

LoadResult load_table(const csv::Table& table, const Schema& schema) {
    // without score columns only the features are loaded and scores stay zero
    const bool features_only = schema.scores.empty() && schema.treatment_labels.size() >= 2;
    if (!features_only && schema.scores.size() < 2)
        throw Error(ErrorCode::NoTreatments, "schema maps fewer than two score columns");
    if (schema.features.empty()) throw Error(ErrorCode::InvalidSchema, "schema maps no feature columns");
    if (!features_only && !schema.treatment_labels.empty() && schema.treatment_labels.size() != schema.scores.size())
        throw Error(ErrorCode::InvalidSchema, "treatment_labels must match the score columns");

    std::vector<int> score_cols;
    for (const auto& s : schema.scores) score_cols.push_back(require_column(table, s));
    std::vector<int> feature_cols;
    for (const auto& f : schema.features) feature_cols.push_back(require_column(table, f.column));
    const int treatment_col = schema.treatment ? require_column(table, *schema.treatment) : -1;
    const int outcome_col = schema.outcome ? require_column(table, *schema.outcome) : -1;
    const int id_col = schema.id ? require_column(table, *schema.id) : -1;

    const auto d = static_cast<Eigen::Index>(features_only ? schema.treatment_labels.size() : score_cols.size());
    const auto p = static_cast<Eigen::Index>(feature_cols.size());
    std::vector<std::string> labels = schema.treatment_labels.empty() ? schema.scores : schema.treatment_labels;

    std::vector<FeatureSpec> specs;
    std::vector<std::unordered_map<std::string, int>> category_index(feature_cols.size());
    for (std::size_t f = 0; f < schema.features.size(); ++f) {
        const auto& sf = schema.features[f];
        if (!sf.categories.empty() && sf.kind != FeatureKind::Categorical)
            throw Error(ErrorCode::InvalidSchema, "only categorical features may declare categories");
        specs.push_back({sf.column, sf.kind, sf.categories});
        for (std::size_t c = 0; c < sf.categories.size(); ++c) {
            if (!category_index[f].emplace(sf.categories[c], static_cast<int>(c)).second)
                throw Error(ErrorCode::InvalidSchema, "duplicate category in '" + sf.column + "'");
        }
    }

    auto cell_of = [](const std::vector<std::string>& row, int col) -> std::string_view {
        return col < static_cast<int>(row.size()) ? std::string_view(row[col]) : std::string_view();
    };

    std::vector<std::vector<double>> kept_scores, kept_features;
    std::vector<int> kept_treatment;
    std::vector<double> kept_outcome;
    std::vector<std::string> kept_ids;
    std::size_t dropped = 0;

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        bool ok = true;

        std::vector<double> scores(static_cast<std::size_t>(d), 0.0);
        for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(score_cols.size()) && ok; ++j) {
            auto cell = cell_of(row, score_cols[j]);
            if (is_missing(cell)) { ok = false; break; }
            auto v = detail::parse_double(cell);
            if (!v) { ok = false; break; }
            if (!std::isfinite(*v))
                throw Error(ErrorCode::NonFiniteScore, "non-finite score in row " + std::to_string(r + 1));
            scores[j] = *v;
        }

        std::vector<double> feats(static_cast<std::size_t>(p));
        std::vector<std::string_view> new_categories(static_cast<std::size_t>(p));
        for (Eigen::Index f = 0; f < p && ok; ++f) {
            auto cell = cell_of(row, feature_cols[f]);
            if (is_missing(cell)) { ok = false; break; }
            if (specs[f].is_categorical()) {
                auto label = detail::trim(cell);
                auto it = category_index[f].find(std::string(label));
                if (it != category_index[f].end()) {
                    feats[f] = it->second;
                } else {
                    feats[f] = -1;
                    new_categories[f] = label;
                }
            } else {
                auto v = detail::parse_double(cell);
                if (!v || !std::isfinite(*v)) { ok = false; break; }
                feats[f] = *v;
            }
        }

        int treatment = -1;
        if (ok && treatment_col >= 0) {
            auto cell = detail::trim(cell_of(row, treatment_col));
            auto it = std::find(labels.begin(), labels.end(), cell);
            if (it != labels.end()) {
                treatment = static_cast<int>(it - labels.begin());
            } else if (auto v = detail::parse_int(cell); v && *v >= 0 && *v < d) {
                treatment = static_cast<int>(*v);
            } else {
                ok = false;
            }
        }
        double outcome = 0.0;
        if (ok && outcome_col >= 0) {
            auto v = detail::parse_double(cell_of(row, outcome_col));
            if (!v || !std::isfinite(*v)) ok = false;
            else outcome = *v;
        }
        std::string id;
        if (ok) {
            if (id_col >= 0) {
                auto cell = detail::trim(cell_of(row, id_col));
                if (cell.empty()) ok = false;
                id = std::string(cell);
            } else {
                id = std::to_string(r);
            }
        }
        if (!ok) {
            ++dropped;
            continue;
        }

        // categories are registered only for kept rows, in first-appearance order
        for (Eigen::Index f = 0; f < p; ++f) {
            if (feats[f] >= 0 || !specs[f].is_categorical()) continue;
            std::string label(new_categories[f]);
            const int index = static_cast<int>(specs[f].categories.size());
            category_index[f].emplace(label, index);
            specs[f].categories.push_back(std::move(label));
            feats[f] = index;
        }

        kept_scores.push_back(std::move(scores));
        kept_features.push_back(std::move(feats));
        if (treatment_col >= 0) kept_treatment.push_back(treatment);
        if (outcome_col >= 0) kept_outcome.push_back(outcome);
        kept_ids.push_back(std::move(id));
    }

    const auto n = static_cast<Eigen::Index>(kept_scores.size());
    if (n == 0) throw Error(ErrorCode::EmptyAfterCleaning, "no rows left after dropping incomplete rows");

    LoadResult result;
    result.dropped_rows = dropped;
    PolicyData& data = result.data;
    data.scores.resize(n, d);
    data.features.resize(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) data.scores(i, j) = kept_scores[i][j];
        for (Eigen::Index f = 0; f < p; ++f) data.features(i, f) = kept_features[i][f];
    }
    data.specs = std::move(specs);
    data.treatment_labels = std::move(labels);
    if (treatment_col >= 0) data.observed_treatment = Eigen::Map<Eigen::VectorXi>(kept_treatment.data(), n);
    if (outcome_col >= 0) data.observed_outcome = Eigen::Map<Eigen::VectorXd>(kept_outcome.data(), n);
    data.row_ids = std::move(kept_ids);
    validate(data);
    return result;
}

LoadResult load_csv(const std::string& path, const Schema& schema) {
    return load_table(csv::read_file(path), schema);
}

csv::Table to_table(const PolicyData& data, const Schema& schema) {
    csv::Table table;
    const std::string id_name = schema.id.value_or("id");
    table.header.push_back(id_name);
    for (const auto& spec : data.specs) table.header.push_back(spec.name);
    for (const auto& s : schema.scores) table.header.push_back(s);
    if (data.observed_treatment) table.header.push_back(schema.treatment.value_or("treatment"));
    if (data.observed_outcome) table.header.push_back(schema.outcome.value_or("outcome"));
    if (static_cast<Eigen::Index>(schema.scores.size()) != data.treatments())
        throw Error(ErrorCode::DimensionMismatch, "schema score columns do not match the data");

    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        std::vector<std::string> row;
        row.push_back(data.row_ids[i]);
        for (Eigen::Index f = 0; f < data.feature_count(); ++f) {
            const auto& spec = data.specs[f];
            const double v = data.features(i, f);
            row.push_back(spec.is_categorical() ? spec.categories[static_cast<std::size_t>(v)] : detail::format_g17(v));
        }
        for (Eigen::Index j = 0; j < data.treatments(); ++j) row.push_back(detail::format_g17(data.scores(i, j)));
        if (data.observed_treatment) row.push_back(data.treatment_labels[(*data.observed_treatment)(i)]);
        if (data.observed_outcome) row.push_back(detail::format_g17((*data.observed_outcome)(i)));
        table.rows.push_back(std::move(row));
    }
    return table;
}

// ---------------------------------------------------------------------------
// Splitting

std::array<std::vector<Eigen::Index>, 3> partition_indices(Eigen::Index n, const std::array<double, 3>& proportions,
                                                           std::uint64_t seed) {
    double total = 0.0;
    for (double f : proportions) {
        if (!(f > 0.0) || !std::isfinite(f)) throw Error(ErrorCode::BadProportions, "fractions must be positive");
        total += f;
    }
    if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorCode::BadProportions, "fractions must sum to 1");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    std::array<std::vector<Eigen::Index>, 3> parts;
    std::size_t begin = 0;
    for (std::size_t k = 0; k < 3; ++k) {
        std::size_t size = order.size() - begin;
        if (k < 2) {
            auto want = static_cast<std::size_t>(std::llround(static_cast<double>(n) * proportions[k]));
            size = std::min(want, size);
        }
        parts[k].assign(order.begin() + static_cast<std::ptrdiff_t>(begin),
                        order.begin() + static_cast<std::ptrdiff_t>(begin + size));
        std::sort(parts[k].begin(), parts[k].end());
        begin += size;
    }
    return parts;
}

DataSplit split_data(const PolicyData& data, const std::array<double, 3>& proportions, std::uint64_t seed) {
    auto parts = partition_indices(data.rows(), proportions, seed);
    return {subset(data, parts[0]), subset(data, parts[1]), subset(data, parts[2]), seed};
}

}  // namespace optpolicy
