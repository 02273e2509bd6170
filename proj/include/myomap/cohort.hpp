#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace myomap {

enum class Modality { T1Native, T1Post, T2 };
enum class SliceLocation { Basal, Mid, Apical, Unknown };
enum class Diagnosis { Normal, Myocarditis, Sarcoidosis, Systemic };
enum class Subset { Train, Validation, Test };

inline constexpr Modality kAllModalities[] = {Modality::T1Native, Modality::T1Post, Modality::T2};
inline constexpr Diagnosis kAllDiagnoses[] = {Diagnosis::Normal, Diagnosis::Myocarditis,
                                              Diagnosis::Sarcoidosis, Diagnosis::Systemic};
inline constexpr Subset kAllSubsets[] = {Subset::Train, Subset::Validation, Subset::Test};

// Lower-case manifest spellings ("t1_native", "basal", "myocarditis", "train").
std::string_view to_string(Modality m);
std::string_view to_string(SliceLocation s);
std::string_view to_string(Diagnosis d);
std::string_view to_string(Subset s);
Modality parse_modality(std::string_view s);
SliceLocation parse_slice_location(std::string_view s);
Diagnosis parse_diagnosis(std::string_view s);
Subset parse_subset(std::string_view s);

namespace label {
inline constexpr std::uint8_t kBackground = 0;
inline constexpr std::uint8_t kBloodPool = 1;
inline constexpr std::uint8_t kMyocardium = 2;
}  // namespace label

struct Spacing {
    double row = 1.0;
    double col = 1.0;

    bool operator==(const Spacing&) const = default;
};

/// Row-major 2-D raster of relaxation times (ms) or normalized intensities.
struct PixelGrid {
    std::size_t rows = 0;
    std::size_t cols = 0;
    Spacing spacing_mm;
    std::vector<double> values;

    PixelGrid() = default;
    PixelGrid(std::size_t r, std::size_t c, Spacing s, double fill = 0.0)
        : rows(r), cols(c), spacing_mm(s), values(r * c, fill) {}

    [[nodiscard]] double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }

    /// Throws SchemaError / BadSpacing when an invariant is broken.
    void validate() const;

    bool operator==(const PixelGrid&) const = default;
};

/// Three-class segmentation raster co-registered with a map.
struct LabelMask {
    std::string source;
    std::size_t rows = 0;
    std::size_t cols = 0;
    Spacing spacing_mm;
    std::vector<std::uint8_t> labels;

    LabelMask() = default;
    LabelMask(std::string src, std::size_t r, std::size_t c, Spacing s)
        : source(std::move(src)), rows(r), cols(c), spacing_mm(s), labels(r * c, label::kBackground) {}

    [[nodiscard]] std::uint8_t at(std::size_t r, std::size_t c) const { return labels[r * cols + c]; }
    std::uint8_t& at(std::size_t r, std::size_t c) { return labels[r * cols + c]; }
    [[nodiscard]] std::size_t count(std::uint8_t value) const;
    [[nodiscard]] bool same_shape(const PixelGrid& g) const {
        return rows == g.rows && cols == g.cols && spacing_mm == g.spacing_mm;
    }
    [[nodiscard]] bool same_shape(const LabelMask& m) const {
        return rows == m.rows && cols == m.cols && spacing_mm == m.spacing_mm;
    }

    bool operator==(const LabelMask&) const = default;
};

struct ParametricMap {
    std::string map_id;
    std::string subject_id;
    Modality modality = Modality::T1Native;
    SliceLocation slice_location = SliceLocation::Unknown;
    PixelGrid grid;

    bool operator==(const ParametricMap&) const = default;
};

struct MapEntry {
    ParametricMap map;
    std::vector<LabelMask> masks;

    /// nullptr when no mask with that source exists.
    [[nodiscard]] const LabelMask* mask(std::string_view source) const;

    bool operator==(const MapEntry&) const = default;
};

struct Subject {
    std::string subject_id;
    Diagnosis diagnosis = Diagnosis::Normal;
    std::vector<MapEntry> maps;

    // Derived from the diagnosis, never stored separately.
    [[nodiscard]] bool diseased() const noexcept { return diagnosis != Diagnosis::Normal; }

    bool operator==(const Subject&) const = default;
};

struct Cohort {
    std::vector<Subject> subjects;
    std::map<std::string, Subset> split;

    [[nodiscard]] std::optional<Subset> subset_of(const std::string& subject_id) const;
    [[nodiscard]] std::size_t map_count() const;

    bool operator==(const Cohort&) const = default;
};

/// Set of subsets a command operates on; empty means "all subjects", including unsplit ones.
class SubsetFilter {
public:
    SubsetFilter() = default;
    explicit SubsetFilter(std::set<Subset> subsets) : subsets_(std::move(subsets)) {}

    static SubsetFilter all() { return {}; }
    static SubsetFilter only(Subset s) { return SubsetFilter({s}); }
    static SubsetFilter train_validation() { return SubsetFilter({Subset::Train, Subset::Validation}); }
    /// Accepts "all", "train", "validation", "test" and '+'-joined combinations.
    static SubsetFilter parse(std::string_view text);

    [[nodiscard]] bool accepts(std::optional<Subset> s) const;
    [[nodiscard]] bool includes(Subset s) const { return subsets_.empty() || subsets_.count(s) > 0; }
    [[nodiscard]] bool is_all() const { return subsets_.empty(); }
    [[nodiscard]] std::string to_string() const;

private:
    std::set<Subset> subsets_;
};

// ---- map / mask files -------------------------------------------------------

PixelGrid read_map_file(const std::filesystem::path& path);
LabelMask read_mask_file(const std::filesystem::path& path, std::string source);
void write_map_file(const std::filesystem::path& path, const PixelGrid& grid);
void write_mask_file(const std::filesystem::path& path, const LabelMask& mask);

// ---- manifest IO ------------------------------------------------------------

/// Loads a manifest and every file it references (paths resolved relative to
/// the manifest's directory).
///
/// Throws Error with MissingFile, SchemaError, ShapeMismatch or LabelError.
Cohort load_cohort(const std::filesystem::path& manifest_path);

/// Writes `manifest.json` plus `maps/` and `masks/` payloads under `dir`.
/// Returns the manifest path. Output is byte-identical for equal cohorts.
std::filesystem::path save_cohort(const Cohort& cohort, const std::filesystem::path& dir);

// ---- validation -------------------------------------------------------------

struct ValidationIssue {
    std::string subject_id;
    std::string map_id;
    std::string rule;

    bool operator==(const ValidationIssue&) const = default;
};

std::vector<ValidationIssue> validate_cohort(const Cohort& cohort);

// ---- splitting --------------------------------------------------------------

struct SplitFractions {
    double train = 0.0;
    double validation = 0.0;
    double test = 0.0;
};

/// Deterministic train/validation/test assignment. With `stratify`, per-class
/// subset counts come from largest-remainder rounding constrained so that the
/// overall subset totals also equal their own largest-remainder rounding.
///
/// Throws BadFractions or EmptyClass.
Cohort split_cohort(const Cohort& cohort, SplitFractions fractions, std::uint64_t seed, bool stratify);

/// Integer allocation of `total` items over `fractions` by largest remainder;
/// ties go to the earlier slot.
std::vector<std::size_t> largest_remainder(std::size_t total, const std::vector<double>& fractions);

}  // namespace myomap
