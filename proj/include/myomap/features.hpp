#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "myomap/cohort.hpp"

namespace myomap::features {

/// Linear interpolation between closest ranks ("n-1 basis"):
/// h = (n-1)*q/100, result = v[floor h] + (h - floor h)*(v[floor h + 1] - v[floor h]).
/// Throws EmptyInput.
double percentile(std::span<const double> values, double q);

/// Same rule on data that is already sorted ascending.
double percentile_sorted(std::span<const double> sorted, double q);

struct SliceFeatures {
    std::string map_id;
    Modality modality = Modality::T1Native;
    double a = 0.0;   ///< arithmetic mean
    double lq = 0.0;  ///< 25th percentile
    double m = 0.0;   ///< median
    double uq = 0.0;  ///< 75th percentile
    std::size_t n_pixels = 0;
};

/// Values of map pixels labelled myocardium, row-major.
/// Throws ShapeMismatch or EmptyMyocardium.
std::vector<double> myocardial_pixels(const ParametricMap& map, const LabelMask& mask);

SliceFeatures slice_features(std::span<const double> values);

/// The four statistics of one modality.
struct FeatureBlock {
    double a = 0.0;
    double lq = 0.0;
    double m = 0.0;
    double uq = 0.0;

    bool operator==(const FeatureBlock&) const = default;
};

/// Canonical feature names in table order.
inline constexpr std::array<std::string_view, 8> kFeatureNames = {
    "t1_a", "t1_lq", "t1_m", "t1_uq", "t2_a", "t2_lq", "t2_m", "t2_uq"};

bool is_feature_name(std::string_view name);

struct FeatureVector {
    std::string subject_id;
    bool diseased = false;
    std::optional<FeatureBlock> t1;
    std::optional<FeatureBlock> t2;

    /// Throws MissingFeature for an unknown name; nullopt when the block is absent.
    [[nodiscard]] std::optional<double> get(std::string_view name) const;

    bool operator==(const FeatureVector&) const = default;
};

/// Per-patient features: each statistic is the unweighted mean over that
/// modality's slices. Post-contrast T1 maps are ignored.
/// Throws NoUsableMaps.
FeatureVector patient_features(const Subject& subject, std::string_view mask_source);

struct FeatureRecord {
    FeatureVector features;
    std::optional<Subset> split;

    bool operator==(const FeatureRecord&) const = default;
};

struct FeatureTable {
    std::vector<FeatureRecord> records;

    [[nodiscard]] std::vector<const FeatureRecord*> select(const SubsetFilter& filter) const;
    /// Feature names with a value for every record (canonical order).
    [[nodiscard]] std::vector<std::string> complete_features(const SubsetFilter& filter) const;

    bool operator==(const FeatureTable&) const = default;
};

FeatureTable extract_features(const Cohort& cohort, std::string_view mask_source, unsigned threads = 1);

/// CSV with header subject_id,split,diseased,t1_a,...,t2_uq; absent values are empty fields.
void write_features_csv(const std::filesystem::path& path, const FeatureTable& table);
FeatureTable read_features_csv(const std::filesystem::path& path);

}  // namespace myomap::features
