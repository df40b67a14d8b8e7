#include "optpolicy/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "numfmt.hpp"
#include "optpolicy/constraints.hpp"
#include "optpolicy/csv.hpp"
#include "optpolicy/error.hpp"
#include "optpolicy/policies_eval.hpp"
#include "optpolicy/score_data.hpp"
#include "optpolicy/sequential.hpp"
#include "optpolicy/synthdata.hpp"
#include "optpolicy/tree_model.hpp"
#include "optpolicy/tree_search.hpp"

namespace optpolicy::cli {

namespace {

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) out.emplace_back(detail::trim(part));
    return out;
}

std::vector<double> parse_doubles(const std::string& text, const char* flag) {
    std::vector<double> out;
    for (const auto& part : split_list(text)) {
        auto v = detail::parse_double(part);
        if (!v) throw Error(ErrorCode::InvalidConfig, std::string(flag) + ": '" + part + "' is not a number");
        out.push_back(*v);
    }
    return out;
}

std::vector<int> parse_ints(const std::string& text, const char* flag) {
    std::vector<int> out;
    for (const auto& part : split_list(text)) {
        auto v = detail::parse_int(part);
        if (!v) throw Error(ErrorCode::InvalidConfig, std::string(flag) + ": '" + part + "' is not an integer");
        out.push_back(static_cast<int>(*v));
    }
    return out;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
    out << text;
}

/// Seeds categorical feature columns with the tree's category order so that
/// labels map to the indices used at training time.
Schema align_schema(Schema schema, const PolicyTree& tree) {
    for (auto& feature : schema.features) {
        for (const auto& spec : tree.specs) {
            if (spec.name == feature.column && spec.is_categorical() && feature.kind == FeatureKind::Categorical)
                feature.categories = spec.categories;
        }
    }
    return schema;
}

std::string tree_row_name(const PolicyTree& tree) {
    return std::string(tree.meta.costs.empty() ? "" : "Constrained ") + "Policy Tree depth-" + tree.meta.stages;
}

// ---------------------------------------------------------------------------

struct SplitArgs {
    std::string data, out_dir, proportions = "0.4,0.4,0.2";
    std::uint64_t seed = 0;
};

int cmd_split(const SplitArgs& a, std::ostream& out) {
    const auto fractions = parse_doubles(a.proportions, "--proportions");
    if (fractions.size() != 3) throw Error(ErrorCode::BadProportions, "--proportions needs three fractions");
    const csv::Table table = csv::read_file(a.data);
    const auto parts = partition_indices(static_cast<Eigen::Index>(table.rows.size()),
                                         {fractions[0], fractions[1], fractions[2]}, a.seed);
    std::filesystem::create_directories(a.out_dir);
    const char* names[3] = {"train_forest.csv", "train_policy.csv", "predict.csv"};
    for (std::size_t k = 0; k < 3; ++k) {
        csv::Table part;
        part.header = table.header;
        for (auto i : parts[k]) part.rows.push_back(table.rows[static_cast<std::size_t>(i)]);
        const auto path = (std::filesystem::path(a.out_dir) / names[k]).string();
        csv::write_file(path, part);
        out << names[k] << ": " << part.rows.size() << " rows\n";
    }
    return kExitOk;
}

struct TrainArgs {
    std::string data, schema, out, report, extra_depths, max_shares;
    int depth = 2;
    std::optional<int> min_leaf;
    int approx = 100, cat_combinations = 100, threads = 1;
    bool exact = false;
    std::uint64_t seed = 0;
    double time_limit = 0.0;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
    const Schema schema = Schema::read_file(a.schema);
    const LoadResult loaded = load_csv(a.data, schema);
    const PolicyData& data = loaded.data;

    SearchConfig config;
    config.depth = a.depth;
    config.approx_points = a.approx;
    config.cat_combinations = a.cat_combinations;
    config.min_leaf_size = a.min_leaf;
    config.exact_mode = a.exact;
    config.seed = a.seed;
    config.threads = a.threads;
    config.time_limit_seconds = a.time_limit;
    config.validate();
    const std::vector<int> extras = a.extra_depths.empty() ? std::vector<int>{} : parse_ints(a.extra_depths, "--extra-depths");

    std::optional<CostVector> costs;
    PolicyData training = data;
    if (!a.max_shares.empty()) {
        ShareConstraint constraint;
        constraint.max_shares = parse_doubles(a.max_shares, "--max-shares");
        costs = adjust_costs_for_shares(data, constraint);
        if (!costs->converged)
            err << "warning: share calibration did not converge within " << constraint.max_iterations
                << " iterations\n";
        training.scores = apply_costs(data.scores, *costs);
    }

    SearchResult result = search_sequential(training, a.depth, extras, config);
    PolicyTree tree = result.tree;
    if (result.reward != welfare_total(training.scores, assign(tree, training)))
        throw Error(ErrorCode::InvariantViolation, "search reward differs from its recomputation");
    if (costs && !costs->all_zero()) tree.meta.costs.assign(costs->costs.data(), costs->costs.data() + costs->costs.size());
    annotate_training(tree, data);
    write_text(a.out, to_json(tree));

    std::ostringstream report;
    report << "rows: " << data.rows() << " (dropped " << loaded.dropped_rows << ")\n";
    report << "treatments: ";
    for (std::size_t j = 0; j < data.treatment_labels.size(); ++j) report << (j ? ", " : "") << data.treatment_labels[j];
    report << "\nstages: " << tree.meta.stages << "\n";
    if (costs) {
        report << "costs:";
        for (Eigen::Index j = 0; j < costs->costs.size(); ++j) report << ' ' << detail::format_fixed(costs->costs(j), 6);
        report << "\ncalibration: " << (costs->converged ? "converged" : "not converged") << " after "
               << costs->iterations_used << " iterations; best-score shares";
        for (Eigen::Index j = 0; j < costs->achieved_shares.size(); ++j)
            report << ' ' << detail::format_fixed(costs->achieved_shares(j), 4);
        report << "\n";
    }
    report << "training reward (search scores): " << detail::format_g17(result.reward) << "\n";
    report << "training welfare mean: " << detail::format_fixed(tree.meta.welfare_mean, 6) << "\n";
    report << "nodes evaluated: " << result.nodes_evaluated << "\n";
    report << "wall time: " << detail::format_fixed(result.wall_time.count(), 3) << " s\n";
    if (result.no_splittable_feature) report << "note: no admissible split at the root\n";
    report << "rules:\n" << render_rules(tree, &data);
    out << report.str();
    if (!a.report.empty()) write_text(a.report, report.str());
    return kExitOk;
}

struct AssignArgs {
    std::string tree, data, schema, out;
};

int cmd_assign(const AssignArgs& a, std::ostream& out, std::ostream& err) {
    const PolicyTree tree = from_json(read_text(a.tree));
    Schema schema = align_schema(Schema::read_file(a.schema), tree);
    schema.scores.clear();
    schema.treatment.reset();
    schema.outcome.reset();
    schema.treatment_labels = tree.treatment_labels;
    const LoadResult loaded = load_csv(a.data, schema);
    const Assignment routed = route(tree, loaded.data);

    csv::Table table;
    table.header = {"id", "treatment"};
    for (Eigen::Index i = 0; i < routed.treatments.size(); ++i)
        table.rows.push_back({loaded.data.row_ids[i], tree.treatment_labels[routed.treatments(i)]});
    if (a.out.empty()) csv::write(out, table);
    else csv::write_file(a.out, table);

    if (loaded.dropped_rows) err << "warning: dropped " << loaded.dropped_rows << " incomplete rows\n";
    if (routed.unseen_category_rows)
        err << "warning: " << routed.unseen_category_rows
            << " rows had a category unseen in training and were routed to the 'not in' branch\n";
    return kExitOk;
}

struct ReportArgs {
    std::string data, schema, random_shares, format = "text", out, csv_out;
    std::vector<std::string> trees;
    std::uint64_t seed = 0;
    bool no_best_score = false;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
    std::vector<std::pair<std::string, PolicyTree>> trees;
    for (const auto& spec : a.trees) {
        const auto eq = spec.find('=');
        std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
        PolicyTree tree = from_json(read_text(path));
        std::string name = eq == std::string::npos ? tree_row_name(tree) : spec.substr(0, eq);
        trees.emplace_back(std::move(name), std::move(tree));
    }
    Schema schema = Schema::read_file(a.schema);
    if (!trees.empty()) schema = align_schema(std::move(schema), trees.front().second);
    const PolicyData data = load_csv(a.data, schema).data;
    const auto d = data.treatments();

    std::vector<Allocation> allocations;
    std::vector<std::string> notices;
    auto observed = allocate_observed(data);
    if (observed) allocations.push_back(*observed);
    else notices.push_back("no observed treatment column; Observed row omitted");

    std::vector<double> shares;
    if (!a.random_shares.empty()) {
        shares = parse_doubles(a.random_shares, "--random-shares");
        if (static_cast<Eigen::Index>(shares.size()) != d) throw Error(ErrorCode::BadShares, "need one share per treatment");
    } else if (observed) {
        shares.assign(static_cast<std::size_t>(d), 0.0);
        for (Eigen::Index i = 0; i < observed->assignments.size(); ++i) shares[observed->assignments(i)] += 1.0;
        for (double& s : shares) s /= static_cast<double>(data.rows());
    } else {
        shares.assign(static_cast<std::size_t>(d), 1.0 / static_cast<double>(d));
    }
    allocations.push_back(allocate_random(data.rows(), shares, a.seed));
    if (!a.no_best_score) allocations.push_back(allocate_best_score(data.scores));
    for (const auto& [name, tree] : trees) allocations.push_back(allocate_tree(tree, data, name));

    EvaluationReport report = evaluate(allocations, data.scores, data.treatment_labels);
    report.notices = std::move(notices);
    const std::string text = format_text(report);
    const std::string table = format_csv(report);
    if (a.format == "csv") out << table;
    else out << text;
    if (!a.out.empty()) write_text(a.out, a.format == "csv" ? table : text);
    if (!a.csv_out.empty()) write_text(a.csv_out, table);
    return kExitOk;
}

struct ExportArgs {
    std::string tree, format = "rules", data, schema, out;
};

int cmd_export(const ExportArgs& a, std::ostream& out) {
    const PolicyTree tree = from_json(read_text(a.tree));
    std::string text;
    if (a.format == "dot") {
        text = to_dot(tree);
    } else if (!a.data.empty()) {
        if (a.schema.empty()) throw Error(ErrorCode::InvalidConfig, "--data needs --schema");
        const PolicyData data = load_csv(a.data, align_schema(Schema::read_file(a.schema), tree)).data;
        text = render_rules(tree, &data);
    } else {
        text = render_rules(tree);
    }
    if (a.out.empty()) out << text;
    else write_text(a.out, text);
    return kExitOk;
}

struct SimulateArgs {
    long n = 1000;
    int treatments = 2, rule_depth = 2;
    std::string features = "continuous,continuous,ordered:10,categorical:4", out_dir;
    double signal = 1.0, noise_sd = 0.5;
    std::uint64_t seed = 0;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    GeneratorSpec spec;
    spec.n = a.n;
    spec.treatments = a.treatments;
    spec.rule_depth = a.rule_depth;
    spec.signal = a.signal;
    spec.noise_sd = a.noise_sd;
    spec.seed = a.seed;
    spec.features.clear();
    for (const auto& item : split_list(a.features)) {
        const auto colon = item.find(':');
        FeatureGen fg;
        fg.kind = parse_feature_kind(item.substr(0, colon));
        if (colon != std::string::npos) {
            auto levels = detail::parse_int(item.substr(colon + 1));
            if (!levels) throw Error(ErrorCode::BadSpec, "bad level count in '" + item + "'");
            fg.levels = static_cast<int>(*levels);
        }
        spec.features.push_back(fg);
    }
    const GeneratedData generated = generate(spec);

    Schema schema;
    for (Eigen::Index j = 0; j < generated.data.treatments(); ++j) schema.scores.push_back("score_t" + std::to_string(j));
    schema.treatment_labels = generated.data.treatment_labels;
    for (const auto& fs : generated.data.specs) schema.features.push_back({fs.name, fs.kind, fs.categories});
    schema.treatment = "treatment";
    schema.outcome = "outcome";
    schema.id = "id";

    std::filesystem::create_directories(a.out_dir);
    const std::filesystem::path dir(a.out_dir);
    csv::write_file((dir / "data.csv").string(), to_table(generated.data, schema));
    write_text((dir / "schema.json").string(), schema.dump() + "\n");
    write_text((dir / "oracle_tree.json").string(), to_json(generated.oracle));
    out << "wrote " << generated.data.rows() << " rows to " << (dir / "data.csv").string() << "\n";
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Optimal policy trees for multi-treatment assignment", "optpolicy"};
    app.require_subcommand(1);

    SplitArgs split;
    auto* s = app.add_subcommand("split", "Split a CSV into train-forest / train-policy / predict parts");
    s->add_option("--data", split.data, "input CSV")->required();
    s->add_option("--out-dir", split.out_dir, "output directory")->required();
    s->add_option("--proportions", split.proportions, "three fractions summing to 1");
    s->add_option("--seed", split.seed);

    TrainArgs train;
    auto* t = app.add_subcommand("train", "Search for a welfare-maximizing policy tree");
    t->add_option("--data", train.data)->required();
    t->add_option("--schema", train.schema, "schema JSON sidecar")->required();
    t->add_option("--depth", train.depth, "split levels of the (first) optimal tree");
    t->add_option("--extra-depths", train.extra_depths, "sequential stage depths, e.g. 1 or 1,1");
    t->add_option("--max-shares", train.max_shares, "treatment share caps, e.g. 0.5,0.5");
    t->add_option("--min-leaf", train.min_leaf, "minimum rows per leaf (default max(5, 3d))");
    t->add_option("--approx", train.approx, "threshold budget A at the bottom split level");
    t->add_option("--cat-combinations", train.cat_combinations, "category subset budget");
    t->add_flag("--exact", train.exact, "all midpoints and all category subsets");
    t->add_option("--seed", train.seed);
    t->add_option("--threads", train.threads);
    t->add_option("--time-limit", train.time_limit, "seconds; 0 for none");
    t->add_option("--out", train.out, "tree JSON output")->required();
    t->add_option("--report", train.report, "also write the run report here");

    AssignArgs assign_args;
    auto* a = app.add_subcommand("assign", "Apply a stored tree to new data");
    a->add_option("--tree", assign_args.tree)->required();
    a->add_option("--data", assign_args.data)->required();
    a->add_option("--schema", assign_args.schema)->required();
    a->add_option("--out", assign_args.out, "CSV output (stdout when omitted)");

    ReportArgs report;
    auto* r = app.add_subcommand("report", "Welfare and treatment shares per policy");
    r->add_option("--data", report.data)->required();
    r->add_option("--schema", report.schema)->required();
    r->add_option("--tree", report.trees, "tree JSON, optionally NAME=PATH; repeatable");
    r->add_option("--random-shares", report.random_shares, "shares of the random policy (default: observed)");
    r->add_option("--seed", report.seed);
    r->add_flag("--no-best-score", report.no_best_score);
    r->add_option("--format", report.format)->check(CLI::IsMember({"text", "csv"}));
    r->add_option("--out", report.out);
    r->add_option("--csv-out", report.csv_out);

    ExportArgs exp;
    auto* e = app.add_subcommand("export", "Render a tree as rule text or DOT");
    e->add_option("--tree", exp.tree)->required();
    e->add_option("--format", exp.format)->check(CLI::IsMember({"rules", "dot"}));
    e->add_option("--data", exp.data, "data for leaf shares (rules only)");
    e->add_option("--schema", exp.schema);
    e->add_option("--out", exp.out);

    SimulateArgs sim;
    auto* m = app.add_subcommand("simulate", "Write a synthetic dataset with a planted policy");
    m->add_option("--n", sim.n);
    m->add_option("--treatments", sim.treatments);
    m->add_option("--features", sim.features, "e.g. continuous,ordered:10,categorical:4");
    m->add_option("--rule-depth", sim.rule_depth);
    m->add_option("--signal", sim.signal);
    m->add_option("--noise-sd", sim.noise_sd);
    m->add_option("--seed", sim.seed);
    m->add_option("--out-dir", sim.out_dir)->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& ex) {
        const int code = app.exit(ex, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (s->parsed()) return cmd_split(split, out);
        if (t->parsed()) return cmd_train(train, out, err);
        if (a->parsed()) return cmd_assign(assign_args, out, err);
        if (r->parsed()) return cmd_report(report, out);
        if (e->parsed()) return cmd_export(exp, out);
        if (m->parsed()) return cmd_simulate(sim, out);
    } catch (const Error& ex) {
        err << "error: " << ex.what() << "\n";
        return ex.code() == ErrorCode::InvariantViolation ? kExitInternal : kExitValidation;
    } catch (const std::exception& ex) {
        err << "error: Internal: " << ex.what() << "\n";
        return kExitInternal;
    }
    return kExitValidation;
}

}  // namespace optpolicy::cli
