#include "myomap/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "myomap/error.hpp"
#include "myomap/features.hpp"
#include "myomap/parallel.hpp"
#include "myomap/random.hpp"

namespace myomap::preprocess {

namespace {

std::size_t resampled_extent(std::size_t n, double spacing, double target) {
    const double px = std::round(static_cast<double>(n) * spacing / target);
    return static_cast<std::size_t>(std::max(1.0, px));
}

double source_coord(std::size_t i, double spacing, double target, std::size_t n) {
    const double x = (static_cast<double>(i) + 0.5) * target / spacing - 0.5;
    return std::clamp(x, 0.0, static_cast<double>(n - 1));
}

// Bilinear lookup at a clamped continuous index.
double bilinear(const PixelGrid& g, double r, double c) {
    const auto r0 = static_cast<std::size_t>(std::floor(r));
    const auto c0 = static_cast<std::size_t>(std::floor(c));
    const double fr = r - static_cast<double>(r0);
    const double fc = c - static_cast<double>(c0);
    const std::size_t r1 = std::min(r0 + 1, g.rows - 1);
    const std::size_t c1 = std::min(c0 + 1, g.cols - 1);
    if (fr == 0.0 && fc == 0.0) {
        return g.at(r0, c0);
    }
    const double top = fc == 0.0 ? g.at(r0, c0) : g.at(r0, c0) + fc * (g.at(r0, c1) - g.at(r0, c0));
    if (fr == 0.0) {
        return top;
    }
    const double bottom = fc == 0.0 ? g.at(r1, c0) : g.at(r1, c0) + fc * (g.at(r1, c1) - g.at(r1, c0));
    return top + fr * (bottom - top);
}

std::size_t nearest_index(double x, std::size_t n) {
    const double r = std::floor(x + 0.5);
    return static_cast<std::size_t>(std::clamp(r, 0.0, static_cast<double>(n - 1)));
}

bool inside(double x, std::size_t n) {
    return x >= -0.5 && x < static_cast<double>(n) - 0.5;
}

void check_target(double target) {
    if (!(target > 0.0) || !std::isfinite(target)) {
        throw Error(ErrorCode::BadSpacing, "target spacing must be positive");
    }
}

double isotropic_spacing(Spacing s) {
    if (std::abs(s.row - s.col) > 1e-9 * std::max(s.row, s.col)) {
        throw Error(ErrorCode::BadSpacing, "center crop requires isotropic spacing");
    }
    return s.row;
}

std::ptrdiff_t crop_offset(std::size_t n, std::size_t out) {
    const auto diff = static_cast<std::ptrdiff_t>(n) - static_cast<std::ptrdiff_t>(out);
    return diff >= 0 ? diff / 2 : -((-diff + 1) / 2);
}

std::size_t crop_pixels(double crop_mm, double spacing) {
    if (!(crop_mm > 0.0) || !std::isfinite(crop_mm)) {
        throw Error(ErrorCode::BadSize, "crop size must be positive");
    }
    return static_cast<std::size_t>(std::max(1.0, std::round(crop_mm / spacing)));
}

std::pair<double, double> exact_cos_sin(double degrees) {
    const double quarter = degrees / 90.0;
    if (quarter == std::floor(quarter)) {
        switch (((static_cast<long long>(quarter) % 4) + 4) % 4) {
            case 0: return {1.0, 0.0};
            case 1: return {0.0, 1.0};
            case 2: return {-1.0, 0.0};
            default: return {0.0, -1.0};
        }
    }
    const double rad = degrees * std::numbers::pi / 180.0;
    return {std::cos(rad), std::sin(rad)};
}

}  // namespace

void PreprocessConfig::validate() const {
    if (!(target_spacing_mm > 0.0)) {
        throw Error(ErrorCode::BadSpacing, "target_spacing_mm must be positive");
    }
    if (!(crop_size_mm > 0.0)) {
        throw Error(ErrorCode::BadSize, "crop_size_mm must be positive");
    }
    if (!(norm_p_low >= 0.0 && norm_p_high <= 100.0 && norm_p_low < norm_p_high)) {
        throw Error(ErrorCode::InvalidArgument, "normalization percentiles must satisfy 0 <= low < high <= 100");
    }
}

void AugmentConfig::validate() const {
    auto ordered = [](double lo, double hi) { return lo <= hi; };
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!ordered(rotation_min_deg, rotation_max_deg) || !ordered(translation_min_mm, translation_max_mm) ||
        !ordered(contrast_gain_min, contrast_gain_max)) {
        throw Error(ErrorCode::InvalidArgument, "augmentation ranges must be ordered");
    }
    if (!prob(flip_horizontal_prob) || !prob(flip_vertical_prob)) {
        throw Error(ErrorCode::InvalidArgument, "flip probabilities must lie in [0,1]");
    }
    if (!(gaussian_noise_sd >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "noise sd must be non-negative");
    }
}

AugmentConfig AugmentConfig::identity() {
    AugmentConfig cfg;
    cfg.rotation_min_deg = cfg.rotation_max_deg = 0.0;
    cfg.translation_min_mm = cfg.translation_max_mm = 0.0;
    cfg.flip_horizontal_prob = cfg.flip_vertical_prob = 0.0;
    cfg.contrast_gain_min = cfg.contrast_gain_max = 1.0;
    cfg.gaussian_noise_sd = 0.0;
    return cfg;
}

PixelGrid resample(const PixelGrid& grid, double target, Interpolation kind) {
    check_target(target);
    grid.validate();
    const std::size_t rows = resampled_extent(grid.rows, grid.spacing_mm.row, target);
    const std::size_t cols = resampled_extent(grid.cols, grid.spacing_mm.col, target);
    PixelGrid out(rows, cols, {target, target});
    for (std::size_t r = 0; r < rows; ++r) {
        const double sr = source_coord(r, grid.spacing_mm.row, target, grid.rows);
        for (std::size_t c = 0; c < cols; ++c) {
            const double sc = source_coord(c, grid.spacing_mm.col, target, grid.cols);
            out.at(r, c) = kind == Interpolation::Bilinear
                               ? bilinear(grid, sr, sc)
                               : grid.at(nearest_index(sr, grid.rows), nearest_index(sc, grid.cols));
        }
    }
    return out;
}

LabelMask resample(const LabelMask& mask, double target) {
    check_target(target);
    const std::size_t rows = resampled_extent(mask.rows, mask.spacing_mm.row, target);
    const std::size_t cols = resampled_extent(mask.cols, mask.spacing_mm.col, target);
    LabelMask out(mask.source, rows, cols, {target, target});
    for (std::size_t r = 0; r < rows; ++r) {
        const auto sr = nearest_index(source_coord(r, mask.spacing_mm.row, target, mask.rows), mask.rows);
        for (std::size_t c = 0; c < cols; ++c) {
            const auto sc = nearest_index(source_coord(c, mask.spacing_mm.col, target, mask.cols), mask.cols);
            out.at(r, c) = mask.at(sr, sc);
        }
    }
    return out;
}

NormalizeResult normalize_percentile(const PixelGrid& grid, double p_low, double p_high) {
    if (grid.values.empty()) {
        throw Error(ErrorCode::EmptyInput, "cannot normalize an empty grid");
    }
    NormalizeResult result;
    result.low = features::percentile(grid.values, p_low);
    result.high = features::percentile(grid.values, p_high);
    result.grid = grid;
    const double spread = result.high - result.low;
    if (spread < 1e-9) {
        result.degenerate = true;
        std::fill(result.grid.values.begin(), result.grid.values.end(), 0.0);
        return result;
    }
    for (double& v : result.grid.values) {
        v = std::clamp((v - result.low) / spread, 0.0, 1.0);
    }
    return result;
}

PixelGrid center_crop(const PixelGrid& grid, double crop_mm, double pad_value) {
    const double spacing = isotropic_spacing(grid.spacing_mm);
    const std::size_t n = crop_pixels(crop_mm, spacing);
    const auto off_r = crop_offset(grid.rows, n);
    const auto off_c = crop_offset(grid.cols, n);
    PixelGrid out(n, n, grid.spacing_mm, pad_value);
    for (std::size_t r = 0; r < n; ++r) {
        const auto sr = static_cast<std::ptrdiff_t>(r) + off_r;
        if (sr < 0 || sr >= static_cast<std::ptrdiff_t>(grid.rows)) {
            continue;
        }
        for (std::size_t c = 0; c < n; ++c) {
            const auto sc = static_cast<std::ptrdiff_t>(c) + off_c;
            if (sc >= 0 && sc < static_cast<std::ptrdiff_t>(grid.cols)) {
                out.at(r, c) = grid.at(static_cast<std::size_t>(sr), static_cast<std::size_t>(sc));
            }
        }
    }
    return out;
}

LabelMask center_crop(const LabelMask& mask, double crop_mm) {
    const double spacing = isotropic_spacing(mask.spacing_mm);
    const std::size_t n = crop_pixels(crop_mm, spacing);
    const auto off_r = crop_offset(mask.rows, n);
    const auto off_c = crop_offset(mask.cols, n);
    LabelMask out(mask.source, n, n, mask.spacing_mm);
    for (std::size_t r = 0; r < n; ++r) {
        const auto sr = static_cast<std::ptrdiff_t>(r) + off_r;
        if (sr < 0 || sr >= static_cast<std::ptrdiff_t>(mask.rows)) {
            continue;
        }
        for (std::size_t c = 0; c < n; ++c) {
            const auto sc = static_cast<std::ptrdiff_t>(c) + off_c;
            if (sc >= 0 && sc < static_cast<std::ptrdiff_t>(mask.cols)) {
                out.at(r, c) = mask.at(static_cast<std::size_t>(sr), static_cast<std::size_t>(sc));
            }
        }
    }
    return out;
}

Augmented augment(const PixelGrid& map, const LabelMask& mask, const AugmentConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (!mask.same_shape(map)) {
        throw Error(ErrorCode::ShapeMismatch, "map and mask must be co-registered");
    }
    Rng rng(seed);
    const double angle = rng.uniform(cfg.rotation_min_deg, cfg.rotation_max_deg);
    const double shift_row = rng.uniform(cfg.translation_min_mm, cfg.translation_max_mm) / map.spacing_mm.row;
    const double shift_col = rng.uniform(cfg.translation_min_mm, cfg.translation_max_mm) / map.spacing_mm.col;
    const bool flip_h = rng.uniform() < cfg.flip_horizontal_prob;
    const bool flip_v = rng.uniform() < cfg.flip_vertical_prob;
    const double gain = rng.uniform(cfg.contrast_gain_min, cfg.contrast_gain_max);

    const auto [cos_a, sin_a] = exact_cos_sin(angle);
    const double center_r = (static_cast<double>(map.rows) - 1.0) / 2.0;
    const double center_c = (static_cast<double>(map.cols) - 1.0) / 2.0;

    Augmented out{PixelGrid(map.rows, map.cols, map.spacing_mm, 0.0),
                  LabelMask(mask.source, mask.rows, mask.cols, mask.spacing_mm)};
    // Inverse mapping: output pixel -> undo translation -> undo rotation -> undo flips.
    for (std::size_t r = 0; r < map.rows; ++r) {
        for (std::size_t c = 0; c < map.cols; ++c) {
            const double dy = static_cast<double>(r) - shift_row - center_r;
            const double dx = static_cast<double>(c) - shift_col - center_c;
            double sr = center_r + cos_a * dy + sin_a * dx;
            double sc = center_c + cos_a * dx - sin_a * dy;
            if (flip_v) {
                sr = static_cast<double>(map.rows) - 1.0 - sr;
            }
            if (flip_h) {
                sc = static_cast<double>(map.cols) - 1.0 - sc;
            }
            if (!inside(sr, map.rows) || !inside(sc, map.cols)) {
                continue;
            }
            const double cr = std::clamp(sr, 0.0, static_cast<double>(map.rows - 1));
            const double cc = std::clamp(sc, 0.0, static_cast<double>(map.cols - 1));
            out.map.at(r, c) = bilinear(map, cr, cc);
            out.mask.at(r, c) = mask.at(nearest_index(sr, mask.rows), nearest_index(sc, mask.cols));
        }
    }

    if (gain != 1.0) {
        for (double& v : out.map.values) {
            v = std::clamp(gain * (v - 0.5) + 0.5, 0.0, 1.0);
        }
    }
    if (cfg.gaussian_noise_sd > 0.0) {
        for (double& v : out.map.values) {
            v = std::clamp(v + rng.normal(0.0, cfg.gaussian_noise_sd), 0.0, 1.0);
        }
    }
    return out;
}

Preprocessed preprocess_map(const MapEntry& entry, const PreprocessConfig& cfg) {
    cfg.validate();
    Preprocessed out;
    const PixelGrid resampled = resample(entry.map.grid, cfg.target_spacing_mm, Interpolation::Bilinear);
    auto normalized = normalize_percentile(resampled, cfg.norm_p_low, cfg.norm_p_high);
    out.degenerate = normalized.degenerate;
    out.map = center_crop(normalized.grid, cfg.crop_size_mm, 0.0);
    for (const auto& mask : entry.masks) {
        out.masks.push_back(center_crop(resample(mask, cfg.target_spacing_mm), cfg.crop_size_mm));
    }
    return out;
}

Cohort preprocess_cohort(const Cohort& cohort, const PreprocessConfig& cfg, unsigned threads) {
    cfg.validate();
    Cohort out = cohort;
    std::vector<MapEntry*> entries;
    for (auto& subject : out.subjects) {
        for (auto& entry : subject.maps) {
            entries.push_back(&entry);
        }
    }
    parallel_for(entries.size(), threads, [&](std::size_t i) {
        auto processed = preprocess_map(*entries[i], cfg);
        entries[i]->map.grid = std::move(processed.map);
        entries[i]->masks = std::move(processed.masks);
    });
    return out;
}

}  // namespace myomap::preprocess
