#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "myomap/agreement.hpp"
#include "myomap/classifiers.hpp"
#include "myomap/cohort.hpp"
#include "myomap/csv.hpp"
#include "myomap/error.hpp"
#include "myomap/features.hpp"
#include "myomap/phantom.hpp"
#include "myomap/preprocess.hpp"
#include "myomap/roc.hpp"
#include "myomap/stats_eval.hpp"

namespace myomap::cli {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

// Bad flag values detected after parsing; reported as usage errors.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string manifest;
    std::string out;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    std::string subset;
    std::string source = "gt";
    std::vector<std::string> pairs;
    std::string classifier;
    std::vector<std::string> feature_specs;
    std::string grid = "default";
    std::string table;
    std::string table_b;
    std::string spec;
    std::vector<std::string> rules;
    std::string model;
    std::string report_a;
    std::string report_b;
    std::size_t index_a = 0;
    std::size_t index_b = 0;
    double level = 0.95;
    double spacing = 1.0;
    double crop_mm = 288.0;
    double p_low = 1.0;
    double p_high = 99.0;
};

// Files written by the current command, relative to --out.
class Outputs {
public:
    explicit Outputs(fs::path root) : root_(std::move(root)) {}

    fs::path path(const fs::path& rel) {
        const auto full = root_ / rel;
        if (full.has_parent_path()) {
            fs::create_directories(full.parent_path());
        }
        files_.insert(rel.generic_string());
        return full;
    }

    [[nodiscard]] const std::set<std::string>& files() const { return files_; }
    [[nodiscard]] const fs::path& root() const { return root_; }

private:
    fs::path root_;
    std::set<std::string> files_;
};

SubsetFilter parse_subset(const std::string& text, const SubsetFilter& fallback) {
    if (text.empty()) {
        return fallback;
    }
    try {
        return SubsetFilter::parse(text);
    } catch (const Error& e) {
        throw UsageError(std::string("--subset: ") + e.what());
    }
}

std::vector<std::string> split_commas(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

std::string join(const std::vector<std::string>& items, const std::string& sep) {
    std::string out;
    for (const auto& s : items) {
        out += (out.empty() ? "" : sep) + s;
    }
    return out;
}

// "all", "top<k>-per-modality", "top<k>-overall" or an explicit list.
std::vector<std::string> resolve_feature_spec(const std::string& spec, const features::FeatureTable& table) {
    const auto tv = SubsetFilter::train_validation();
    if (spec == "all") {
        return table.complete_features(tv);
    }
    for (const auto& [suffix, mode] : {std::pair{std::string("-per-modality"), roc::SelectorMode::TopPerModality},
                                       std::pair{std::string("-overall"), roc::SelectorMode::TopOverall}}) {
        if (spec.size() > 3 + suffix.size() && spec.rfind("top", 0) == 0 &&
            spec.compare(spec.size() - suffix.size(), suffix.size(), suffix) == 0) {
            const auto digits = spec.substr(3, spec.size() - 3 - suffix.size());
            if (digits.empty() || !std::all_of(digits.begin(), digits.end(), ::isdigit)) {
                break;
            }
            const auto ranking = roc::rank_features_by_auc(table, table.complete_features(tv), tv);
            return roc::select_top_features(ranking, mode, std::stoul(digits));
        }
    }
    auto names = split_commas(spec);
    if (names.empty()) {
        throw UsageError("--features: empty feature list");
    }
    for (const auto& n : names) {
        if (!features::is_feature_name(n)) {
            throw UsageError("--features: unknown feature '" + n + "'");
        }
    }
    return names;
}

classifiers::Grid load_grid(const std::string& spec, classifiers::Kind kind) {
    if (spec.empty() || spec == "default") {
        return classifiers::default_grid(kind);
    }
    std::ifstream in(spec);
    if (!in) {
        throw Error(ErrorCode::MissingFile, "cannot open grid file " + spec);
    }
    classifiers::Grid grid;
    try {
        const auto j = ojson::parse(in);
        for (const auto& [name, values] : j.items()) {
            classifiers::GridAxis axis{name, {}};
            if (values.is_array()) {
                for (const auto& v : values) {
                    axis.values.push_back(v.is_null() ? 0.0 : v.get<double>());
                }
            } else {
                axis.values.push_back(values.get<double>());
            }
            grid.push_back(std::move(axis));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaError, "grid file " + spec + ": " + e.what());
    }
    return grid;
}

ojson grid_json(const classifiers::Grid& grid) {
    ojson j = ojson::object();
    for (const auto& axis : grid) {
        j[axis.name] = axis.values;
    }
    return j;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    }
    out << text;
}

ojson option_values(const CLI::App& sub) {
    ojson cfg = ojson::object();
    for (const CLI::Option* opt : sub.get_options()) {
        const auto name = opt->get_single_name();
        if (name == "help" || name == "config" || name.empty()) {
            continue;
        }
        const bool multi = opt->get_expected_max() > 1;
        if (opt->count() > 0) {
            const auto& r = opt->results();
            cfg[name] = r.size() == 1 && !multi ? ojson(r.front()) : ojson(r);
        } else if (multi) {
            cfg[name] = ojson::array();
        } else if (!opt->get_default_str().empty()) {
            cfg[name] = opt->get_default_str();
        } else {
            cfg[name] = nullptr;
        }
    }
    return cfg;
}

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(4);
    ss << std::fixed << v;
    return ss.str();
}

// ---- commands ---------------------------------------------------------------------------

void cmd_synth(const Options& o, Outputs& files, std::ostream& out, ojson& extra) {
    auto spec = o.spec.empty() ? phantom::PhantomSpec{} : phantom::load_spec(o.spec);
    if (o.seed) {
        spec.seed = *o.seed;
    }
    spec.validate();
    const auto cohort = phantom::generate_cohort(spec, o.threads);
    const auto manifest = save_cohort(cohort, files.root());
    files.path(manifest.filename());
    for (const auto& subject : cohort.subjects) {
        for (const auto& entry : subject.maps) {
            files.path(fs::path("maps") / (entry.map.map_id + ".json"));
            for (const auto& m : entry.masks) {
                files.path(fs::path("masks") / (entry.map.map_id + "." + m.source + ".json"));
            }
        }
    }
    write_text(files.path("phantom_spec.json"), phantom::spec_to_json(spec) + "\n");
    extra["phantom_seed"] = spec.seed;
    std::size_t diseased = 0;
    for (const auto& s : cohort.subjects) {
        diseased += s.diseased() ? 1 : 0;
    }
    out << "generated " << cohort.subjects.size() << " subjects (" << diseased << " diseased), "
        << cohort.map_count() << " maps\n";
}

int cmd_validate(const Options& o, std::optional<Outputs>& files, std::ostream& out) {
    const auto cohort = load_cohort(o.manifest);
    const auto issues = validate_cohort(cohort);
    if (files) {
        csv::Table t;
        t.header = {"subject_id", "map_id", "rule"};
        for (const auto& i : issues) {
            t.rows.push_back({i.subject_id, i.map_id, i.rule});
        }
        csv::write(files->path("validation.csv"), t);
    }
    for (const auto& i : issues) {
        out << "subject " << (i.subject_id.empty() ? "-" : i.subject_id) << " map "
            << (i.map_id.empty() ? "-" : i.map_id) << ": " << i.rule << "\n";
    }
    out << cohort.subjects.size() << " subjects, " << cohort.map_count() << " maps, " << issues.size()
        << " issue(s)\n";
    return issues.empty() ? kExitOk : kExitDataError;
}

void cmd_preprocess(const Options& o, Outputs& files, std::ostream& out) {
    preprocess::PreprocessConfig cfg;
    cfg.target_spacing_mm = o.spacing;
    cfg.crop_size_mm = o.crop_mm;
    cfg.norm_p_low = o.p_low;
    cfg.norm_p_high = o.p_high;
    cfg.validate();
    const auto cohort = preprocess::preprocess_cohort(load_cohort(o.manifest), cfg, o.threads);
    const auto manifest = save_cohort(cohort, files.root());
    files.path(manifest.filename());
    out << "preprocessed " << cohort.map_count() << " maps\n";
}

void cmd_agree(const Options& o, Outputs& files, std::ostream& out) {
    if (o.pairs.empty()) {
        throw UsageError("agree: at least one --pair A:B is required");
    }
    const auto cohort = load_cohort(o.manifest);
    const auto subset = parse_subset(o.subset, SubsetFilter::all());
    std::vector<agreement::AgreementReport> reports;
    for (const auto& pair : o.pairs) {
        const auto colon = pair.find(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 == pair.size()) {
            throw UsageError("--pair must look like A:B, got '" + pair + "'");
        }
        reports.push_back(agreement::agreement_report(cohort, pair.substr(0, colon), pair.substr(colon + 1), subset));
    }
    agreement::write_agreement_json(files.path("agreement.json"), reports);
    agreement::write_agreement_csv(files.path("agreement.csv"), reports);
    for (const auto& r : reports) {
        out << r.source_a << " vs " << r.source_b << "\n";
        for (const auto& row : r.rows) {
            out << "  " << row.modality_group << ": n=" << row.n_images << " LV DICE " << fmt(row.lv_dice.mean)
                << " MYO DICE " << fmt(row.myo_dice.mean) << " MYO MAPE " << fmt(row.myo_mape_mean) << "%\n";
        }
    }
}

void cmd_features(const Options& o, Outputs& files, std::ostream& out) {
    const auto table = features::extract_features(load_cohort(o.manifest), o.source, o.threads);
    features::write_features_csv(files.path("features.csv"), table);
    out << "features for " << table.records.size() << " subjects from source '" << o.source << "'\n";
}

std::vector<std::string> feature_list(const Options& o, const features::FeatureTable& table) {
    if (o.feature_specs.empty()) {
        return resolve_feature_spec("all", table);
    }
    std::vector<std::string> names;
    for (const auto& spec : o.feature_specs) {
        for (const auto& n : resolve_feature_spec(spec, table)) {
            if (std::find(names.begin(), names.end(), n) == names.end()) {
                names.push_back(n);
            }
        }
    }
    return names;
}

void cmd_roc(const Options& o, Outputs& files, std::ostream& out) {
    const auto table = features::read_features_csv(o.table);
    const auto subset = parse_subset(o.subset, SubsetFilter::train_validation());
    const auto names = feature_list(o, table);
    const auto analysis = roc::analyze_features(table, names, subset, o.level, o.threads);
    std::vector<roc::SummaryRow> rows;
    for (const auto& e : analysis.entries) {
        rows.push_back({e.summary, e.rule});
        roc::write_roc_curve_csv(files.path(fs::path("roc_curves") / (e.feature + ".csv")), e.curve);
        roc::write_cutoff_rule(files.path(fs::path("cutoffs") / (e.feature + ".json")), e.rule);
    }
    roc::write_summary_csv(files.path("roc_summary.csv"), rows);
    roc::write_delong_csv(files.path("delong.csv"), analysis.comparisons);
    auto ranked = rows;
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const roc::SummaryRow& a, const roc::SummaryRow& b) { return a.summary.auc > b.summary.auc; });
    out << "ROC on " << analysis.subset << "\n";
    for (const auto& r : ranked) {
        out << "  " << r.summary.feature << ": AUC " << fmt(r.summary.auc) << " [" << fmt(r.summary.ci_lo) << ", "
            << fmt(r.summary.ci_hi) << "] cutoff " << csv::format(r.rule.cutoff) << "\n";
    }
}

void cmd_cutoff_classify(const Options& o, Outputs& files, std::ostream& out) {
    const auto table = features::read_features_csv(o.table);
    const auto subset = parse_subset(o.subset, SubsetFilter::only(Subset::Test));
    std::vector<roc::CutoffRule> rules;
    for (const auto& path : o.rules) {
        rules.push_back(roc::read_cutoff_rule(path));
    }
    if (!o.feature_specs.empty()) {
        // Rules derived on the fixed TRAIN+VALIDATION subset.
        const auto tv = SubsetFilter::train_validation();
        for (const auto& name : feature_list(o, table)) {
            const auto col = roc::feature_column(table, name, tv);
            rules.push_back(roc::youden_cutoff(col.values, col.labels, name));
        }
    }
    if (rules.empty()) {
        throw UsageError("cutoff-classify: give --rule files or --features");
    }
    std::vector<stats::ClassificationReport> reports;
    for (const auto& rule : rules) {
        auto outcomes = classifiers::apply_cutoff(table, rule, subset);
        reports.push_back(stats::make_report("cutoff", {rule.feature}, rule.cutoff, roc::cutoff_rule_json(rule),
                                             subset.to_string(), std::move(outcomes)));
        const auto& r = reports.back();
        out << rule.feature << " > " << csv::format(rule.cutoff) << ": F1 " << fmt(r.f1) << " precision "
            << fmt(r.precision) << " recall " << fmt(r.recall) << "\n";
    }
    stats::write_reports_json(files.path("cutoff_report.json"), reports);
}

void cmd_train(const Options& o, Outputs& files, std::ostream& out, ojson& extra) {
    if (o.classifier.empty()) {
        throw UsageError("train: --classifier is required");
    }
    classifiers::Kind kind;
    try {
        kind = classifiers::parse_kind(o.classifier);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    const auto table = features::read_features_csv(o.table);
    std::vector<std::vector<std::string>> sets;
    for (const auto& spec : o.feature_specs.empty() ? std::vector<std::string>{"all"} : o.feature_specs) {
        sets.push_back(resolve_feature_spec(spec, table));
    }
    const auto grid = load_grid(o.grid, kind);
    const std::uint64_t seed = o.seed.value_or(0);
    const auto result = classifiers::grid_search(kind, table, sets, grid, seed, o.threads);
    classifiers::save_model(files.path("model.json"), result.best);
    classifiers::write_search_log_csv(files.path("search_log.csv"), kind, result.log);
    extra["grid"] = grid_json(grid);
    ojson fsets = ojson::array();
    for (const auto& s : sets) {
        fsets.push_back(s);
    }
    extra["feature_sets"] = fsets;
    extra["standardized"] = result.best.standardized;
    extra["training_log"] = result.best.training_log;
    const auto& cell = result.log[result.best_cell];
    out << to_string(kind) << ": best of " << result.log.size() << " cells uses [" << join(cell.feature_set, ", ")
        << "] with " << classifiers::format_hyperparams(cell.hyperparams) << ", validation F1 " << fmt(cell.val_f1)
        << "\n";
}

void cmd_eval(const Options& o, Outputs& files, std::ostream& out) {
    if (o.model.empty()) {
        throw UsageError("eval: --model is required");
    }
    const auto table = features::read_features_csv(o.table);
    const auto model = classifiers::load_model(o.model);
    const auto subset = parse_subset(o.subset, SubsetFilter::only(Subset::Test));
    auto outcomes = classifiers::predict(model, table, subset);
    const auto report =
        stats::make_report(std::string(to_string(model.kind)), model.feature_names, std::nullopt,
                           fs::path(o.model).filename().string(), subset.to_string(), std::move(outcomes));
    stats::write_reports_json(files.path("eval_report.json"), {report});
    out << to_string(model.kind) << " on " << report.subset << ": F1 " << fmt(report.f1) << " precision "
        << fmt(report.precision) << " recall " << fmt(report.recall) << " (TP " << report.confusion.tp << " FP "
        << report.confusion.fp << " TN " << report.confusion.tn << " FN " << report.confusion.fn << ")\n";
}

void cmd_compare(const Options& o, Outputs& files, std::ostream& out) {
    if (o.report_a.empty() || o.report_b.empty()) {
        throw UsageError("compare: --report-a and --report-b are required");
    }
    const auto ra = stats::read_reports_json(o.report_a);
    const auto rb = stats::read_reports_json(o.report_b);
    if (o.index_a >= ra.size() || o.index_b >= rb.size()) {
        throw UsageError("compare: report index out of range");
    }
    const auto& a = ra[o.index_a];
    const auto& b = rb[o.index_b];
    auto label = [](const stats::ClassificationReport& r) { return r.approach + "[" + join(r.features, "+") + "]"; };
    stats::Comparison c{label(a), label(b), stats::compare_methods(a, b)};
    stats::write_comparisons_csv(files.path("comparison.csv"), {c});
    out << c.method_a << " vs " << c.method_b << ": W+ " << csv::format(c.result.statistic) << ", n "
        << c.result.n_effective << ", p " << csv::format(c.result.p_two_sided) << " (" << c.result.method << ")\n";
}

void cmd_bland_altman(const Options& o, Outputs& files, std::ostream& out) {
    if (o.table.empty() || o.table_b.empty()) {
        throw UsageError("bland-altman: --table and --table-b are required");
    }
    const auto ta = features::read_features_csv(o.table);
    const auto tb = features::read_features_csv(o.table_b);
    const auto subset = parse_subset(o.subset, SubsetFilter::all());
    std::map<std::string, const features::FeatureRecord*> by_id;
    for (const auto* r : tb.select(subset)) {
        by_id[r->features.subject_id] = r;
    }
    std::vector<std::string> names;
    if (o.feature_specs.empty()) {
        for (auto n : features::kFeatureNames) {
            names.emplace_back(n);
        }
    } else {
        for (const auto& spec : o.feature_specs) {
            for (const auto& n : split_commas(spec)) {
                if (!features::is_feature_name(n)) {
                    throw UsageError("--features: unknown feature '" + n + "'");
                }
                names.push_back(n);
            }
        }
    }
    csv::Table summary;
    summary.header = {"feature", "n", "bias", "sd_diff", "loa_low", "loa_high", "pearson_r", "pearson_p"};
    for (const auto& name : names) {
        std::vector<double> x;
        std::vector<double> y;
        std::vector<std::string> ids;
        for (const auto* ra : ta.select(subset)) {
            const auto it = by_id.find(ra->features.subject_id);
            if (it == by_id.end()) {
                continue;
            }
            const auto va = ra->features.get(name);
            const auto vb = it->second->features.get(name);
            if (va && vb) {
                x.push_back(*va);
                y.push_back(*vb);
                ids.push_back(ra->features.subject_id);
            }
        }
        if (x.size() < 3) {
            continue;
        }
        const auto ba = agreement::bland_altman(x, y);
        std::optional<agreement::Correlation> corr;
        try {
            corr = agreement::pearson(x, y);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ConstantInput) {
                throw;
            }
        }
        csv::Table points;
        points.header = {"subject_id", "mean", "difference"};
        for (std::size_t i = 0; i < ba.points.size(); ++i) {
            points.rows.push_back({ids[i], csv::format(ba.points[i].first), csv::format(ba.points[i].second)});
        }
        csv::write(files.path(fs::path("bland_altman") / (name + ".csv")), points);
        summary.rows.push_back({name, std::to_string(x.size()), csv::format(ba.bias), csv::format(ba.sd_diff),
                                csv::format(ba.loa_low), csv::format(ba.loa_high),
                                corr ? csv::format(corr->r) : "", corr ? csv::format(corr->p_two_sided) : ""});
        out << name << ": bias " << fmt(ba.bias) << " LoA [" << fmt(ba.loa_low) << ", " << fmt(ba.loa_high) << "]";
        if (corr) {
            out << " r " << fmt(corr->r);
        }
        out << "\n";
    }
    if (summary.rows.empty()) {
        throw Error(ErrorCode::InsufficientData, "no feature has three or more paired subjects");
    }
    csv::write(files.path("bland_altman_summary.csv"), summary);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Myocardial parametric-mapping analysis toolkit"};
    app.name("myomap");
    app.set_version_flag("--version", std::string(MYOMAP_VERSION));
    app.set_config("--config", "", "TOML/INI file with option values; command-line flags take precedence");
    app.require_subcommand(1, 1);
    app.option_defaults()->always_capture_default();

    Options o;
    std::uint64_t seed_value = 0;

    auto add_out = [&](CLI::App* sc, bool required = true) {
        auto* opt = sc->add_option("--out", o.out, "Output directory");
        if (required) {
            opt->required();
        }
    };
    auto add_threads = [&](CLI::App* sc) {
        sc->add_option("--threads", o.threads, "Worker threads")->check(CLI::Range(1u, 1024u));
    };
    auto add_seed = [&](CLI::App* sc) { return sc->add_option("--seed", seed_value, "Master seed"); };
    auto add_manifest = [&](CLI::App* sc) {
        sc->add_option("--manifest", o.manifest, "Cohort manifest")->required()->check(CLI::ExistingFile);
    };
    auto add_table = [&](CLI::App* sc) {
        sc->add_option("--table", o.table, "Features CSV")->required()->check(CLI::ExistingFile);
    };
    auto add_subset = [&](CLI::App* sc) {
        sc->add_option("--subset", o.subset, "train|validation|test|train+validation|all");
    };
    auto add_features = [&](CLI::App* sc) {
        sc->add_option("--features", o.feature_specs,
                       "f1,f2,... | all | top2-per-modality | top2-overall (repeatable)")
            ->default_str("");
    };

    std::map<std::string, CLI::Option*> seed_opts;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic phantom cohort");
    synth->add_option("--spec", o.spec, "Phantom spec JSON")->check(CLI::ExistingFile);
    seed_opts["synth"] = add_seed(synth);
    add_out(synth);
    add_threads(synth);

    auto* validate = app.add_subcommand("validate", "Check a cohort against the data-model rules");
    add_manifest(validate);
    add_out(validate, false);

    auto* prep = app.add_subcommand("preprocess", "Resample, normalize and crop every map");
    add_manifest(prep);
    add_out(prep);
    add_threads(prep);
    prep->add_option("--spacing", o.spacing, "Target spacing (mm)");
    prep->add_option("--crop-mm", o.crop_mm, "Crop size (mm)");
    prep->add_option("--p-low", o.p_low, "Lower normalization percentile");
    prep->add_option("--p-high", o.p_high, "Upper normalization percentile");

    auto* agree = app.add_subcommand("agree", "Segmentation agreement between mask sources");
    add_manifest(agree);
    add_out(agree);
    add_subset(agree);
    agree->add_option("--pair", o.pairs, "Source pair A:B (repeatable)")->default_str("");

    auto* feats = app.add_subcommand("features", "Extract per-patient T1/T2 features");
    add_manifest(feats);
    add_out(feats);
    add_threads(feats);
    feats->add_option("--source", o.source, "Mask source");

    auto* rocc = app.add_subcommand("roc", "ROC analysis, AUC confidence intervals and Youden cutoffs");
    add_table(rocc);
    add_out(rocc);
    add_subset(rocc);
    add_features(rocc);
    add_threads(rocc);
    rocc->add_option("--level", o.level, "Confidence level")->check(CLI::Range(0.0, 0.999999));

    auto* cutoff = app.add_subcommand("cutoff-classify", "Classify subjects with single-feature cutoff rules");
    add_table(cutoff);
    add_out(cutoff);
    add_subset(cutoff);
    add_features(cutoff);
    cutoff->add_option("--rule", o.rules, "Cutoff rule JSON (repeatable)")
        ->check(CLI::ExistingFile)
        ->default_str("");

    auto* trn = app.add_subcommand("train", "Grid-search a classifier on TRAIN, select on VALIDATION");
    add_table(trn);
    add_out(trn);
    add_features(trn);
    add_threads(trn);
    seed_opts["train"] = add_seed(trn);
    trn->add_option("--classifier", o.classifier, "logreg|knn|svm|rf|perceptron");
    trn->add_option("--grid", o.grid, "default or a JSON file of hyperparameter lists");

    auto* evl = app.add_subcommand("eval", "Evaluate a trained model");
    add_table(evl);
    add_out(evl);
    add_subset(evl);
    evl->add_option("--model", o.model, "Model JSON")->check(CLI::ExistingFile);

    auto* cmp = app.add_subcommand("compare", "Wilcoxon signed-rank comparison of two reports");
    add_out(cmp);
    cmp->add_option("--report-a", o.report_a, "First report JSON")->check(CLI::ExistingFile);
    cmp->add_option("--report-b", o.report_b, "Second report JSON")->check(CLI::ExistingFile);
    cmp->add_option("--index-a", o.index_a, "Report index within the first file");
    cmp->add_option("--index-b", o.index_b, "Report index within the second file");

    auto* ba = app.add_subcommand("bland-altman", "Bland-Altman agreement of two feature tables");
    add_table(ba);
    ba->add_option("--table-b", o.table_b, "Second features CSV")->required()->check(CLI::ExistingFile);
    add_out(ba);
    add_subset(ba);
    add_features(ba);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsageError;
    }

    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (const auto it = seed_opts.find(name); it != seed_opts.end() && it->second->count() > 0) {
        o.seed = seed_value;
    }

    std::optional<Outputs> files;
    if (!o.out.empty()) {
        files.emplace(o.out);
    }
    ojson extra = ojson::object();
    int code = kExitOk;
    std::string status = "ok";
    std::string message;
    try {
        if (files) {
            fs::create_directories(files->root());
        }
        if (name == "synth") {
            cmd_synth(o, *files, out, extra);
        } else if (name == "validate") {
            code = cmd_validate(o, files, out);
            status = code == kExitOk ? "ok" : "issues";
        } else if (name == "preprocess") {
            cmd_preprocess(o, *files, out);
        } else if (name == "agree") {
            cmd_agree(o, *files, out);
        } else if (name == "features") {
            cmd_features(o, *files, out);
        } else if (name == "roc") {
            cmd_roc(o, *files, out);
        } else if (name == "cutoff-classify") {
            cmd_cutoff_classify(o, *files, out);
        } else if (name == "train") {
            cmd_train(o, *files, out, extra);
        } else if (name == "eval") {
            cmd_eval(o, *files, out);
        } else if (name == "compare") {
            cmd_compare(o, *files, out);
        } else if (name == "bland-altman") {
            cmd_bland_altman(o, *files, out);
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        code = kExitUsageError;
        status = "usage_error";
        message = e.what();
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        code = kExitDataError;
        status = "error";
        message = e.what();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        code = kExitDataError;
        status = "error";
        message = e.what();
    }

    if (files) {
        ojson record;
        record["command"] = name;
        ojson args = ojson::array();
        for (int i = 1; i < argc; ++i) {
            args.push_back(argv[i]);
        }
        record["argv"] = args;
        record["config"] = option_values(*sub);
        record["seed"] = o.seed ? ojson(*o.seed) : ojson(nullptr);
        record["version"] = MYOMAP_VERSION;
        record["status"] = status;
        if (!message.empty()) {
            record["message"] = message;
        }
        for (const auto& [k, v] : extra.items()) {
            record[k] = v;
        }
        record["outputs"] = files->files();
        try {
            write_text(files->root() / "run_record.json", record.dump(2) + "\n");
        } catch (const std::exception& e) {
            err << "error: " << e.what() << "\n";
            if (code == kExitOk) {
                code = kExitDataError;
            }
        }
    }
    return code;
}

}  // namespace myomap::cli
