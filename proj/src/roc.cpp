#include "myomap/roc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "myomap/csv.hpp"
#include "myomap/distributions.hpp"
#include "myomap/error.hpp"
#include "myomap/parallel.hpp"

namespace myomap::roc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct ClassCounts {
    std::size_t pos = 0;
    std::size_t neg = 0;
};

ClassCounts check_inputs(std::span<const double> scores, const std::vector<bool>& labels) {
    if (scores.size() != labels.size()) {
        throw Error(ErrorCode::LengthMismatch, "scores and labels differ in length");
    }
    ClassCounts c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!std::isfinite(scores[i])) {
            throw Error(ErrorCode::InvalidArgument, "scores must be finite");
        }
        (labels[i] ? c.pos : c.neg) += 1;
    }
    if (c.pos == 0 || c.neg == 0) {
        throw Error(ErrorCode::SingleClass, "ROC analysis needs both classes");
    }
    return c;
}

// Distinct scores in descending order with the class counts at each value.
struct ScoreLevel {
    double score;
    std::size_t pos;
    std::size_t neg;
};

std::vector<ScoreLevel> score_levels(std::span<const double> scores, const std::vector<bool>& labels) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<ScoreLevel> levels;
    for (std::size_t idx : order) {
        if (levels.empty() || levels.back().score != scores[idx]) {
            levels.push_back({scores[idx], 0, 0});
        }
        (labels[idx] ? levels.back().pos : levels.back().neg) += 1;
    }
    return levels;
}

double midpoint(double upper, double lower) {
    const double t = lower + (upper - lower) / 2.0;
    return t >= upper ? lower : t;
}

// 1-based midranks of v.
std::vector<double> midranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) {
            ++j;
        }
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[order[k]] = r;
        }
        i = j + 1;
    }
    return ranks;
}

struct Placements {
    std::vector<double> v10;  // one per positive
    std::vector<double> v01;  // one per negative
    double auc = 0.0;
};

Placements placements(std::span<const double> scores, const std::vector<bool>& labels) {
    std::vector<double> pos;
    std::vector<double> neg;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        (labels[i] ? pos : neg).push_back(scores[i]);
    }
    const auto m = static_cast<double>(pos.size());
    const auto n = static_cast<double>(neg.size());
    const auto all = midranks(scores);
    const auto rank_pos = midranks(pos);
    const auto rank_neg = midranks(neg);
    Placements p;
    std::size_t ip = 0;
    std::size_t in = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i]) {
            p.v10.push_back((all[i] - rank_pos[ip++]) / n);
        } else {
            p.v01.push_back(1.0 - (all[i] - rank_neg[in++]) / m);
        }
    }
    double s = 0.0;
    for (double v : p.v10) {
        s += v;
    }
    p.auc = s / m;
    return p;
}

double sample_variance(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) {
        mean += x;
    }
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) {
        ss += (x - mean) * (x - mean);
    }
    return ss / static_cast<double>(v.size() - 1);
}

void require_two_per_class(const ClassCounts& c) {
    if (c.pos < 2 || c.neg < 2) {
        throw Error(ErrorCode::ClassTooSmall, "DeLong variance needs at least two subjects per class");
    }
}

std::string format_threshold(double t) {
    if (std::isinf(t)) {
        return t > 0 ? "inf" : "-inf";
    }
    return csv::format(t);
}

double parse_threshold(const std::string& s) {
    if (s == "inf") {
        return kInf;
    }
    if (s == "-inf") {
        return -kInf;
    }
    return csv::parse_double(s);
}

}  // namespace

RocCurve roc_curve(std::span<const double> scores, const std::vector<bool>& labels) {
    const auto counts = check_inputs(scores, labels);
    const auto levels = score_levels(scores, labels);
    RocCurve curve;
    curve.n_pos = counts.pos;
    curve.n_neg = counts.neg;
    const auto P = static_cast<double>(counts.pos);
    const auto N = static_cast<double>(counts.neg);
    curve.points.push_back({kInf, 0.0, 0.0});
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (std::size_t k = 0; k + 1 < levels.size(); ++k) {
        tp += levels[k].pos;
        fp += levels[k].neg;
        curve.points.push_back({midpoint(levels[k].score, levels[k + 1].score), static_cast<double>(fp) / N,
                                static_cast<double>(tp) / P});
    }
    curve.points.push_back({-kInf, 1.0, 1.0});
    return curve;
}

double trapezoid_area(const RocCurve& curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
    }
    return area;
}

double auc(std::span<const double> scores, const std::vector<bool>& labels) {
    return trapezoid_area(roc_curve(scores, labels));
}

CutoffRule youden_cutoff(std::span<const double> scores, const std::vector<bool>& labels, std::string feature) {
    const auto counts = check_inputs(scores, labels);
    const auto levels = score_levels(scores, labels);
    const auto P = static_cast<long long>(counts.pos);
    const auto N = static_cast<long long>(counts.neg);

    CutoffRule best{std::move(feature), levels.front().score, 0.0};
    if (levels.size() == 1) {
        return best;
    }
    // J·P·N = TP·N + TN·P - P·N, compared exactly in integers.
    long long best_num = std::numeric_limits<long long>::min();
    long long best_tp = -1;
    long long tp = 0;
    long long fp = 0;
    for (std::size_t k = 0; k + 1 < levels.size(); ++k) {
        tp += static_cast<long long>(levels[k].pos);
        fp += static_cast<long long>(levels[k].neg);
        const long long tn = N - fp;
        const long long num = tp * N + tn * P - P * N;
        const double threshold = midpoint(levels[k].score, levels[k + 1].score);
        // Thresholds decrease with k, so a later equal candidate is the lower one.
        const bool better = num > best_num || (num == best_num && tp >= best_tp);
        if (better) {
            best_num = num;
            best_tp = tp;
            best.cutoff = threshold;
        }
    }
    best.j_at_cutoff = static_cast<double>(best_num) / static_cast<double>(P * N);
    return best;
}

DelongEstimate delong_variance(std::span<const double> scores, const std::vector<bool>& labels) {
    const auto counts = check_inputs(scores, labels);
    require_two_per_class(counts);
    const auto p = placements(scores, labels);
    const double var = sample_variance(p.v10) / static_cast<double>(counts.pos) +
                       sample_variance(p.v01) / static_cast<double>(counts.neg);
    return {p.auc, std::sqrt(std::max(0.0, var))};
}

RocSummary auc_ci(std::span<const double> scores, const std::vector<bool>& labels, double level, std::string feature) {
    if (!(level >= 0.0 && level < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "confidence level must lie in [0,1)");
    }
    const double area = auc(scores, labels);
    const auto est = delong_variance(scores, labels);
    const double z = level == 0.0 ? 0.0 : dist::normal_quantile((1.0 + level) / 2.0);
    RocSummary s;
    s.feature = std::move(feature);
    s.auc = area;
    s.se = est.se;
    s.level = level;
    s.ci_lo = std::clamp(area - z * est.se, 0.0, 1.0);
    s.ci_hi = std::clamp(area + z * est.se, 0.0, 1.0);
    return s;
}

DelongComparison delong_test(std::span<const double> scores_a, std::span<const double> scores_b,
                             const std::vector<bool>& labels) {
    if (scores_a.size() != scores_b.size()) {
        throw Error(ErrorCode::LengthMismatch, "paired score vectors differ in length");
    }
    const auto counts = check_inputs(scores_a, labels);
    check_inputs(scores_b, labels);
    require_two_per_class(counts);
    const auto pa = placements(scores_a, labels);
    const auto pb = placements(scores_b, labels);
    std::vector<double> d10(pa.v10.size());
    std::vector<double> d01(pa.v01.size());
    for (std::size_t i = 0; i < d10.size(); ++i) {
        d10[i] = pa.v10[i] - pb.v10[i];
    }
    for (std::size_t j = 0; j < d01.size(); ++j) {
        d01[j] = pa.v01[j] - pb.v01[j];
    }
    // var(A) + var(B) - 2 cov(A,B) == var of the differenced structural components.
    const double var = sample_variance(d10) / static_cast<double>(counts.pos) +
                       sample_variance(d01) / static_cast<double>(counts.neg);
    DelongComparison out;
    out.delta_auc = pa.auc - pb.auc;
    if (!(var > 0.0)) {
        if (out.delta_auc == 0.0) {
            out.z = 0.0;
            out.p_two_sided = 1.0;
        } else {
            out.z = out.delta_auc > 0 ? kInf : -kInf;
            out.p_two_sided = 0.0;
        }
        return out;
    }
    out.z = out.delta_auc / std::sqrt(var);
    out.p_two_sided = dist::normal_two_sided_p(out.z);
    return out;
}

FeatureColumn feature_column(const features::FeatureTable& table, std::string_view feature,
                             const SubsetFilter& subset) {
    FeatureColumn col;
    for (const auto* rec : table.select(subset)) {
        const auto v = rec->features.get(feature);
        if (!v) {
            throw Error(ErrorCode::MissingFeature,
                        "subject " + rec->features.subject_id + " lacks feature " + std::string(feature));
        }
        col.values.push_back(*v);
        col.labels.push_back(rec->features.diseased);
        col.subject_ids.push_back(rec->features.subject_id);
    }
    return col;
}

std::vector<RankedFeature> rank_features_by_auc(const features::FeatureTable& table,
                                                const std::vector<std::string>& feature_names,
                                                const SubsetFilter& subset, double level) {
    if (feature_names.size() < 2) {
        throw Error(ErrorCode::InvalidArgument, "ranking needs at least two features");
    }
    std::vector<RankedFeature> out;
    for (const auto& name : feature_names) {
        const auto col = feature_column(table, name, subset);
        out.push_back({name, auc_ci(col.values, col.labels, level, name)});
    }
    std::stable_sort(out.begin(), out.end(), [](const RankedFeature& a, const RankedFeature& b) {
        if (a.summary.auc != b.summary.auc) {
            return a.summary.auc > b.summary.auc;
        }
        return a.feature < b.feature;
    });
    return out;
}

std::vector<std::string> select_top_features(const std::vector<RankedFeature>& ranking, SelectorMode mode,
                                             std::size_t k) {
    std::vector<std::string> chosen;
    if (mode == SelectorMode::TopOverall) {
        for (std::size_t i = 0; i < ranking.size() && i < k; ++i) {
            chosen.push_back(ranking[i].feature);
        }
    } else {
        for (const char* prefix : {"t1_", "t2_"}) {
            std::size_t taken = 0;
            for (const auto& r : ranking) {
                if (taken < k && r.feature.rfind(prefix, 0) == 0) {
                    chosen.push_back(r.feature);
                    ++taken;
                }
            }
        }
    }
    std::vector<std::string> ordered;
    for (auto name : features::kFeatureNames) {
        if (std::find(chosen.begin(), chosen.end(), name) != chosen.end()) {
            ordered.emplace_back(name);
        }
    }
    return ordered;
}

RocAnalysis analyze_features(const features::FeatureTable& table, const std::vector<std::string>& feature_names,
                             const SubsetFilter& subset, double level, unsigned threads) {
    if (subset.includes(Subset::Test)) {
        throw Error(ErrorCode::SubsetViolation,
                    "ROC analysis and cutoff selection must not see TEST subjects (subset '" + subset.to_string() + "')");
    }
    RocAnalysis out;
    out.subset = subset.to_string();
    out.entries.resize(feature_names.size());
    std::vector<FeatureColumn> columns(feature_names.size());
    parallel_for(feature_names.size(), threads, [&](std::size_t i) {
        const auto& name = feature_names[i];
        columns[i] = feature_column(table, name, subset);
        const auto& col = columns[i];
        out.entries[i] = {name, roc_curve(col.values, col.labels), auc_ci(col.values, col.labels, level, name),
                          youden_cutoff(col.values, col.labels, name)};
    });
    for (std::size_t i = 0; i < feature_names.size(); ++i) {
        for (std::size_t j = i + 1; j < feature_names.size(); ++j) {
            out.comparisons.push_back({feature_names[i], feature_names[j],
                                       delong_test(columns[i].values, columns[j].values, columns[i].labels)});
        }
    }
    return out;
}

void write_roc_curve_csv(const std::filesystem::path& path, const RocCurve& curve) {
    csv::Table t;
    t.header = {"threshold", "fpr", "tpr"};
    for (const auto& p : curve.points) {
        t.rows.push_back({format_threshold(p.threshold), csv::format(p.fpr), csv::format(p.tpr)});
    }
    csv::write(path, t);
}

RocCurve read_roc_curve_csv(const std::filesystem::path& path) {
    const auto t = csv::read(path);
    const auto ct = t.column("threshold");
    const auto cf = t.column("fpr");
    const auto cr = t.column("tpr");
    RocCurve curve;
    for (const auto& row : t.rows) {
        curve.points.push_back({parse_threshold(row[ct]), csv::parse_double(row[cf]), csv::parse_double(row[cr])});
    }
    return curve;
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows) {
    csv::Table t;
    t.header = {"feature", "auc", "se", "ci_lo", "ci_hi", "cutoff", "j"};
    for (const auto& r : rows) {
        t.rows.push_back({r.summary.feature, csv::format(r.summary.auc), csv::format(r.summary.se),
                          csv::format(r.summary.ci_lo), csv::format(r.summary.ci_hi), csv::format(r.rule.cutoff),
                          csv::format(r.rule.j_at_cutoff)});
    }
    csv::write(path, t);
}

std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path) {
    const auto t = csv::read(path);
    const auto c_feature = t.column("feature");
    const auto c_auc = t.column("auc");
    const auto c_se = t.column("se");
    const auto c_lo = t.column("ci_lo");
    const auto c_hi = t.column("ci_hi");
    const auto c_cut = t.column("cutoff");
    const auto c_j = t.column("j");
    std::vector<SummaryRow> out;
    for (const auto& row : t.rows) {
        SummaryRow r;
        r.summary.feature = row[c_feature];
        r.summary.auc = csv::parse_double(row[c_auc]);
        r.summary.se = csv::parse_double(row[c_se]);
        r.summary.ci_lo = csv::parse_double(row[c_lo]);
        r.summary.ci_hi = csv::parse_double(row[c_hi]);
        r.rule.feature = row[c_feature];
        r.rule.cutoff = csv::parse_double(row[c_cut]);
        r.rule.j_at_cutoff = csv::parse_double(row[c_j]);
        out.push_back(std::move(r));
    }
    return out;
}

std::string cutoff_rule_json(const CutoffRule& rule) {
    nlohmann::ordered_json j;
    j["feature"] = rule.feature;
    j["cutoff"] = rule.cutoff;
    j["j"] = rule.j_at_cutoff;
    return j.dump();
}

void write_cutoff_rule(const std::filesystem::path& path, const CutoffRule& rule) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    }
    out << cutoff_rule_json(rule) << '\n';
}

CutoffRule read_cutoff_rule(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
    }
    try {
        const auto j = nlohmann::json::parse(in);
        CutoffRule rule;
        rule.feature = j.at("feature").get<std::string>();
        rule.cutoff = j.at("cutoff").get<double>();
        rule.j_at_cutoff = j.value("j", std::numeric_limits<double>::quiet_NaN());
        return rule;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
    }
}

void write_delong_csv(const std::filesystem::path& path, const std::vector<RocAnalysis::Pair>& pairs) {
    csv::Table t;
    t.header = {"feature_a", "feature_b", "delta_auc", "z", "p"};
    for (const auto& p : pairs) {
        t.rows.push_back({p.feature_a, p.feature_b, csv::format(p.result.delta_auc), format_threshold(p.result.z),
                          csv::format(p.result.p_two_sided)});
    }
    csv::write(path, t);
}

}  // namespace myomap::roc
