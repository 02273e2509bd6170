#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "myomap/cohort.hpp"

namespace myomap::agreement {

struct Overlap {
    double value = 0.0;
    bool both_empty = false;  ///< neither mask contains the class; value is then 1
};

/// 2|A∩B| / (|A|+|B|) for the pixels carrying `class_label`. Throws ShapeMismatch.
Overlap dice(const LabelMask& a, const LabelMask& b, std::uint8_t class_label);

struct IouResult {
    double iou = 0.0;
    double loss = 0.0;  ///< Jaccard loss, 1 - IoU
    bool both_empty = false;
};

IouResult iou_and_jaccard_loss(const LabelMask& a, const LabelMask& b, std::uint8_t class_label);

struct Mape {
    double signed_pct = 0.0;
    double abs_pct = 0.0;
};

/// (G - M) / G * 100 and its magnitude. Throws ZeroReference.
Mape mape(double reference_mean, double test_mean);

struct Correlation {
    double r = 0.0;
    double p_two_sided = 1.0;
};

/// Sample Pearson r with a Student-t (n-2 dof) two-sided p-value.
/// Throws LengthMismatch, InsufficientData (n < 3) or ConstantInput.
Correlation pearson(std::span<const double> x, std::span<const double> y);

inline constexpr double kLoaMultiplier = 1.96;

struct BlandAltman {
    double bias = 0.0;
    double sd_diff = 0.0;
    double loa_low = 0.0;
    double loa_high = 0.0;
    std::vector<std::pair<double, double>> points;  ///< (mean of pair, difference)
};

/// Differences are x - y; sd uses the n-1 denominator. Throws LengthMismatch or InsufficientData.
BlandAltman bland_altman(std::span<const double> x, std::span<const double> y);

struct SummaryStats {
    double mean = 0.0;
    double median = 0.0;
    double minimum = 0.0;

    // NaN compares equal to NaN so empty rows survive a round trip.
    bool operator==(const SummaryStats& o) const;
};

struct AgreementRow {
    std::string modality_group;  ///< "All", "T2", "T1 Pre", "T1 Post"
    std::size_t n_images = 0;
    SummaryStats lv_dice;
    SummaryStats myo_dice;
    SummaryStats lv_iou;
    SummaryStats myo_iou;
    double myo_mape_mean = 0.0;         ///< mean of absolute per-image MAPE
    double myo_mape_signed_mean = 0.0;  ///< mean of signed per-image MAPE
    std::vector<std::string> both_empty_maps;

    bool operator==(const AgreementRow& o) const;
};

struct AgreementReport {
    std::string source_a;
    std::string source_b;
    std::string subset;
    std::vector<AgreementRow> rows;

    bool operator==(const AgreementReport&) const = default;
};

/// Four rows (All, T2, T1 Pre, T1 Post) comparing two mask sources over the
/// selected maps. Source A is the reference for MAPE. Rows with no images
/// carry n_images = 0 and NaN statistics. Throws MissingSource.
AgreementReport agreement_report(const Cohort& cohort, const std::string& source_a, const std::string& source_b,
                                 const SubsetFilter& subset);

void write_agreement_json(const std::filesystem::path& path, const std::vector<AgreementReport>& reports);
std::vector<AgreementReport> read_agreement_json(const std::filesystem::path& path);
void write_agreement_csv(const std::filesystem::path& path, const std::vector<AgreementReport>& reports);

}  // namespace myomap::agreement
