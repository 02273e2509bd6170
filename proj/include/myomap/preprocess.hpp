#pragma once

#include <cstdint>
#include <utility>

#include "myomap/cohort.hpp"

namespace myomap::preprocess {

enum class Interpolation { Bilinear, Nearest };

struct PreprocessConfig {
    double target_spacing_mm = 1.0;
    double crop_size_mm = 288.0;
    double norm_p_low = 1.0;
    double norm_p_high = 99.0;

    /// Throws InvalidArgument on an inconsistent configuration.
    void validate() const;
};

/// Geometric and intensity augmentation ranges. Defaults are toolkit choices.
struct AugmentConfig {
    double rotation_min_deg = -15.0;
    double rotation_max_deg = 15.0;
    double translation_min_mm = -10.0;
    double translation_max_mm = 10.0;
    double flip_horizontal_prob = 0.5;
    double flip_vertical_prob = 0.5;
    double contrast_gain_min = 0.8;
    double contrast_gain_max = 1.2;
    double gaussian_noise_sd = 0.02;

    void validate() const;

    /// All ranges collapsed to the identity transform.
    static AugmentConfig identity();
};

/*
 * Resampling uses pixel-center alignment: output pixel i covers
 * [i*target, (i+1)*target) mm and samples the source at continuous index
 * (i + 0.5) * target / spacing - 0.5, clamped to the border pixel.
 * Output dimensions are round(extent_mm / target), at least 1.
 */
PixelGrid resample(const PixelGrid& grid, double target_spacing_mm, Interpolation kind);

/// Label masks always use nearest-neighbour sampling.
LabelMask resample(const LabelMask& mask, double target_spacing_mm);

struct NormalizeResult {
    PixelGrid grid;
    double low = 0.0;
    double high = 0.0;
    bool degenerate = false;
};

/// clamp((v - P_low) / (P_high - P_low), 0, 1); a spread below 1e-9 yields zeros and sets `degenerate`.
NormalizeResult normalize_percentile(const PixelGrid& grid, double p_low, double p_high);

/// Centered square crop of round(crop_mm / spacing) pixels; requires isotropic spacing.
PixelGrid center_crop(const PixelGrid& grid, double crop_size_mm, double pad_value);
LabelMask center_crop(const LabelMask& mask, double crop_size_mm);

struct Augmented {
    PixelGrid map;
    LabelMask mask;
};

/// Draw order from the seeded stream: rotation, translation-row,
/// translation-col, flip-h, flip-v, contrast gain, noise field.
Augmented augment(const PixelGrid& map, const LabelMask& mask, const AugmentConfig& cfg, std::uint64_t seed);

/// Full chain for one map: resample, percentile-normalize, crop. Masks follow
/// the same geometry with nearest sampling.
struct Preprocessed {
    PixelGrid map;
    std::vector<LabelMask> masks;
    bool degenerate = false;
};

Preprocessed preprocess_map(const MapEntry& entry, const PreprocessConfig& cfg);

/// Applies preprocess_map to every map; subjects and split are carried over.
Cohort preprocess_cohort(const Cohort& cohort, const PreprocessConfig& cfg, unsigned threads = 1);

}  // namespace myomap::preprocess
