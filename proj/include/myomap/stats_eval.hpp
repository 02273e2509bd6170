#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace myomap::stats {

/// Positive class = diseased.
struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    [[nodiscard]] std::size_t total() const noexcept { return tp + fp + tn + fn; }
    bool operator==(const ConfusionCounts&) const = default;
};

/// Throws LengthMismatch (or EmptyInput for zero subjects).
ConfusionCounts confusion(const std::vector<bool>& predicted, const std::vector<bool>& truth);

struct PrecisionRecallF1 {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool precision_undefined = false;  ///< no positive predictions
    bool recall_undefined = false;     ///< no positive subjects
};

PrecisionRecallF1 precision_recall_f1(const ConfusionCounts& c);

/// Per-subject outcome kept with a report so methods can be paired later.
struct SubjectOutcome {
    std::string subject_id;
    bool predicted = false;
    bool truth = false;

    bool operator==(const SubjectOutcome&) const = default;
};

struct ClassificationReport {
    std::string approach;               ///< "cutoff", "logreg", "knn", ...
    std::vector<std::string> features;  ///< inputs used
    std::optional<double> cutoff;       ///< only for cutoff rules
    std::string model_ref;              ///< model file or rule description
    std::string subset;
    ConfusionCounts confusion;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::vector<SubjectOutcome> outcomes;

    bool operator==(const ClassificationReport&) const = default;
};

ClassificationReport make_report(std::string approach, std::vector<std::string> features, std::optional<double> cutoff,
                                 std::string model_ref, std::string subset, std::vector<SubjectOutcome> outcomes);

void write_reports_json(const std::filesystem::path& path, const std::vector<ClassificationReport>& reports);
std::vector<ClassificationReport> read_reports_json(const std::filesystem::path& path);

// ---- Wilcoxon signed-rank ---------------------------------------------------

enum class WilcoxonMethod { Auto, Exact, Normal };

/// Sample sizes up to this use the exact null distribution under Auto.
inline constexpr std::size_t kWilcoxonExactMaxN = 25;

struct StatTestResult {
    double statistic = 0.0;  ///< W+, sum of ranks of positive differences
    double p_two_sided = 1.0;
    std::size_t n_effective = 0;
    std::string method;  ///< "wilcoxon-exact" | "wilcoxon-normal"
    bool degenerate = false;  ///< every difference was zero

    bool operator==(const StatTestResult&) const = default;
};

/// Differences a - b; zeros dropped; |d| ranked with midranks. Exact p is the
/// two-sided tail of the permutation distribution conditioned on the observed
/// ties; the normal branch uses the tie-corrected variance and a 0.5
/// continuity correction. Throws LengthMismatch.
StatTestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                    WilcoxonMethod method = WilcoxonMethod::Auto);

/// Pairs per-subject correctness (1 correct / 0 wrong) of two reports by
/// subject_id and tests them. Throws SubjectMismatch.
StatTestResult compare_methods(const ClassificationReport& a, const ClassificationReport& b);

struct Comparison {
    std::string method_a;
    std::string method_b;
    StatTestResult result;

    bool operator==(const Comparison&) const = default;
};

/// CSV columns method_a,method_b,statistic,n_effective,p,method.
void write_comparisons_csv(const std::filesystem::path& path, const std::vector<Comparison>& rows);
std::vector<Comparison> read_comparisons_csv(const std::filesystem::path& path);

}  // namespace myomap::stats
