#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "myomap/features.hpp"

namespace myomap::roc {

struct RocPoint {
    double threshold = 0.0;  ///< +/-infinity at the sentinels
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;  ///< decreasing threshold order, (0,0) first and (1,1) last
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
};

/// Candidate thresholds are midpoints between consecutive distinct scores plus
/// the two infinite sentinels; a subject is positive iff score > threshold.
/// Throws LengthMismatch or SingleClass.
RocCurve roc_curve(std::span<const double> scores, const std::vector<bool>& labels);

/// Trapezoidal area under roc_curve.
double auc(std::span<const double> scores, const std::vector<bool>& labels);
double trapezoid_area(const RocCurve& curve);

struct CutoffRule {
    std::string feature;
    double cutoff = 0.0;
    double j_at_cutoff = 0.0;

    /// Positive ("diseased") iff value > cutoff.
    [[nodiscard]] bool positive(double value) const { return value > cutoff; }
};

/// Maximizes Youden's J = sensitivity + specificity - 1 over the finite
/// midpoint thresholds. Ties prefer higher sensitivity, then the lower
/// threshold. With no finite candidate (all scores tied) the tied score is
/// returned, which classifies every subject negative.
CutoffRule youden_cutoff(std::span<const double> scores, const std::vector<bool>& labels,
                         std::string feature = {});

struct DelongEstimate {
    double auc = 0.0;
    double se = 0.0;
};

/// Midrank placement values; variance S10/n_pos + S01/n_neg. Throws ClassTooSmall (< 2 per class).
DelongEstimate delong_variance(std::span<const double> scores, const std::vector<bool>& labels);

struct RocSummary {
    std::string feature;
    double auc = 0.0;
    double se = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double level = 0.95;
};

/// Wald interval auc ± z_{(1+level)/2}·se clamped to [0,1].
RocSummary auc_ci(std::span<const double> scores, const std::vector<bool>& labels, double level = 0.95,
                  std::string feature = {});

struct DelongComparison {
    double delta_auc = 0.0;  ///< AUC(a) - AUC(b)
    double z = 0.0;
    double p_two_sided = 1.0;
};

/// Paired comparison of two AUCs on the same subjects.
DelongComparison delong_test(std::span<const double> scores_a, std::span<const double> scores_b,
                             const std::vector<bool>& labels);

// ---- feature-table level ----------------------------------------------------

struct FeatureColumn {
    std::vector<double> values;
    std::vector<bool> labels;
    std::vector<std::string> subject_ids;
};

/// Values of one feature over the filtered records. Throws MissingFeature
/// when a selected record lacks the feature.
FeatureColumn feature_column(const features::FeatureTable& table, std::string_view feature,
                             const SubsetFilter& subset);

struct RankedFeature {
    std::string feature;
    RocSummary summary;
};

/// Descending AUC, ties by feature name.
std::vector<RankedFeature> rank_features_by_auc(const features::FeatureTable& table,
                                                const std::vector<std::string>& feature_names,
                                                const SubsetFilter& subset, double level = 0.95);

enum class SelectorMode { TopPerModality, TopOverall };

/// Feature selection from a ranking: top-k within each modality (t1_*, t2_*)
/// or top-k overall. Result keeps canonical feature order.
std::vector<std::string> select_top_features(const std::vector<RankedFeature>& ranking, SelectorMode mode,
                                             std::size_t k);

/// Full ROC analysis of a feature set on a subset that must not include TEST.
struct RocAnalysis {
    struct Entry {
        std::string feature;
        RocCurve curve;
        RocSummary summary;
        CutoffRule rule;
    };
    std::vector<Entry> entries;  ///< input feature order
    struct Pair {
        std::string feature_a;
        std::string feature_b;
        DelongComparison result;
    };
    std::vector<Pair> comparisons;  ///< every unordered pair
    std::string subset;
};

/// Throws SubsetViolation if `subset` admits TEST subjects.
RocAnalysis analyze_features(const features::FeatureTable& table, const std::vector<std::string>& feature_names,
                             const SubsetFilter& subset, double level = 0.95, unsigned threads = 1);

// ---- files ------------------------------------------------------------------

void write_roc_curve_csv(const std::filesystem::path& path, const RocCurve& curve);
RocCurve read_roc_curve_csv(const std::filesystem::path& path);

struct SummaryRow {
    RocSummary summary;
    CutoffRule rule;
};

/// Columns feature,auc,se,ci_lo,ci_hi,cutoff,j.
void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path);

/// {"feature": ..., "cutoff": ..., "j": ...}; only feature and cutoff are required on read.
void write_cutoff_rule(const std::filesystem::path& path, const CutoffRule& rule);
CutoffRule read_cutoff_rule(const std::filesystem::path& path);
std::string cutoff_rule_json(const CutoffRule& rule);

void write_delong_csv(const std::filesystem::path& path, const std::vector<RocAnalysis::Pair>& pairs);

}  // namespace myomap::roc
