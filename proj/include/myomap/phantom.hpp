#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>

#include "myomap/cohort.hpp"

namespace myomap::phantom {

struct Intensity {
    double mean = 0.0;
    double sd = 0.0;
};

/// Intensity model of one modality, all in ms.
struct TissueModel {
    Intensity background;
    Intensity blood;
    Intensity myocardium;
    double subject_sd = 0.0;       ///< per-subject offset of the myocardial mean
    double lesion_shift = 0.0;     ///< mean lesion shift (negative for post-contrast T1)
    double lesion_shift_sd = 0.0;  ///< per-subject spread of the shift
};

/// Probability that a diseased subject's lesion is visible in T1 only, in T2
/// only, or in both. The remainder has no visible lesion.
struct Involvement {
    double t1_only = 0.0;
    double t2_only = 0.0;
    double both = 0.0;
};

struct ObserverJitter {
    double sd_mm = 1.2;                 ///< radial boundary displacement sd
    double correlation_length = 0.6;    ///< angular correlation length (radians)
    double bias_mm = 0.0;               ///< positive dilates the myocardium

    void validate() const;
};

struct PhantomSpec {
    std::size_t grid_size = 80;  ///< square, pixels
    double spacing_mm = 1.6;
    double blood_radius_mm = 24.0;
    double myo_inner_mm = 24.0;
    double myo_outer_mm = 32.0;

    TissueModel t1_native;
    TissueModel t1_post;
    TissueModel t2;

    double lesion_fraction = 0.3;   ///< angular wedge share of the annulus

    std::array<std::size_t, 4> class_counts{52, 49, 20, 23};  ///< normal, myocarditis, sarcoidosis, systemic
    std::array<Involvement, 4> involvement;                     ///< index 0 (normal) is ignored

    std::size_t slices_t1_native = 2;
    std::size_t slices_t1_post = 1;
    std::size_t slices_t2 = 2;

    SplitFractions split{100.0 / 144.0, 15.0 / 144.0, 29.0 / 144.0};

    ObserverJitter obs1{1.2, 0.6, 0.0};
    ObserverJitter obs2{1.2, 0.6, 0.3};
    ObserverJitter model{0.8, 0.4, -0.2};

    std::uint64_t seed = 1;

    PhantomSpec();

    [[nodiscard]] const TissueModel& tissue(Modality m) const;
    [[nodiscard]] std::size_t slices(Modality m) const;
    [[nodiscard]] std::size_t subject_count() const;

    /// Throws BadSpec.
    void validate() const;
};

std::string spec_to_json(const PhantomSpec& spec);
/// Missing keys keep their defaults. Throws BadSpec or SchemaError.
PhantomSpec spec_from_json(std::string_view text);
PhantomSpec load_spec(const std::filesystem::path& path);

/// Per-subject draws shared by all of the subject's slices.
struct SubjectTraits {
    std::string subject_id;
    Diagnosis diagnosis = Diagnosis::Normal;
    bool lesion_t1 = false;
    bool lesion_t2 = false;
    double offset_t1_native = 0.0;
    double offset_t1_post = 0.0;
    double offset_t2 = 0.0;
    double shift_t1_native = 0.0;
    double shift_t1_post = 0.0;
    double shift_t2 = 0.0;
    double lesion_angle = 0.0;  ///< wedge start, radians
};

/// Diagnoses in subject order; the class mix is shuffled with the spec seed.
std::vector<Diagnosis> subject_diagnoses(const PhantomSpec& spec);
std::string subject_id(const PhantomSpec& spec, std::size_t subject_index);
SubjectTraits subject_traits(const PhantomSpec& spec, std::size_t subject_index);

/// Ground-truth annulus geometry on the spec grid.
LabelMask phantom_mask(const PhantomSpec& spec);

/// One slice of one subject with its ground-truth ("gt") mask.
/// Throws BadSpec.
std::pair<ParametricMap, LabelMask> generate_phantom(const PhantomSpec& spec, std::size_t subject_index,
                                                     std::size_t slice_index, Modality modality);

/// Radially displaces the endocardial and epicardial contours by smooth
/// seeded angular noise plus a bias, then re-rasterizes the labels.
/// Throws EmptyMyocardium.
LabelMask perturb_mask(const LabelMask& mask, const ObserverJitter& jitter, std::uint64_t seed);

/// Full cohort with masks "gt", "obs1", "obs2", "model" and a stratified split.
Cohort generate_cohort(const PhantomSpec& spec, unsigned threads = 1);

}  // namespace myomap::phantom
