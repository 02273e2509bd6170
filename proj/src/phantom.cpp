#include "myomap/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "myomap/error.hpp"
#include "myomap/parallel.hpp"
#include "myomap/random.hpp"

namespace myomap::phantom {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t diagnosis_index(Diagnosis d) {
    return static_cast<std::size_t>(d);
}

void bad_spec(const std::string& what) {
    throw Error(ErrorCode::BadSpec, what);
}

void check_intensity(const Intensity& v, const std::string& name) {
    if (!std::isfinite(v.mean) || !std::isfinite(v.sd) || v.sd < 0.0) {
        bad_spec(name + ": mean must be finite and sd >= 0");
    }
}

void check_tissue(const TissueModel& t, const std::string& name) {
    check_intensity(t.background, name + ".background");
    check_intensity(t.blood, name + ".blood");
    check_intensity(t.myocardium, name + ".myocardium");
    if (!(t.subject_sd >= 0.0) || !(t.lesion_shift_sd >= 0.0) || !std::isfinite(t.lesion_shift)) {
        bad_spec(name + ": sds must be >= 0 and the lesion shift finite");
    }
}

}  // namespace

void ObserverJitter::validate() const {
    if (!(sd_mm >= 0.0) || !std::isfinite(sd_mm)) {
        bad_spec("jitter sd must be >= 0");
    }
    if (!(correlation_length > 0.0) || !std::isfinite(correlation_length)) {
        bad_spec("jitter correlation length must be > 0");
    }
    if (!std::isfinite(bias_mm)) {
        bad_spec("jitter bias must be finite");
    }
}

PhantomSpec::PhantomSpec() {
    t1_native = {{100, 10}, {1550, 40}, {950, 30}, 15, 150, 15};
    t1_post = {{100, 10}, {300, 20}, {450, 25}, 15, -100, 10};
    t2 = {{30, 3}, {220, 15}, {48, 3}, 1.0, 12, 1.5};
    involvement[diagnosis_index(Diagnosis::Myocarditis)] = {0.4, 0.6, 0.0};
    involvement[diagnosis_index(Diagnosis::Sarcoidosis)] = {0.8, 0.2, 0.0};
    involvement[diagnosis_index(Diagnosis::Systemic)] = {0.55, 0.45, 0.0};
}

const TissueModel& PhantomSpec::tissue(Modality m) const {
    switch (m) {
        case Modality::T1Native: return t1_native;
        case Modality::T1Post: return t1_post;
        case Modality::T2: return t2;
    }
    return t1_native;
}

std::size_t PhantomSpec::slices(Modality m) const {
    switch (m) {
        case Modality::T1Native: return slices_t1_native;
        case Modality::T1Post: return slices_t1_post;
        case Modality::T2: return slices_t2;
    }
    return 0;
}

std::size_t PhantomSpec::subject_count() const {
    std::size_t n = 0;
    for (auto c : class_counts) {
        n += c;
    }
    return n;
}

void PhantomSpec::validate() const {
    if (grid_size == 0) {
        bad_spec("grid size must be positive");
    }
    if (!(spacing_mm > 0.0) || !std::isfinite(spacing_mm)) {
        bad_spec("spacing must be positive");
    }
    if (!(blood_radius_mm > 0.0) || blood_radius_mm > myo_inner_mm) {
        bad_spec("blood-pool radius must be positive and not exceed the inner myocardial radius");
    }
    if (!(myo_inner_mm < myo_outer_mm)) {
        bad_spec("inner radius must be smaller than outer radius");
    }
    if (myo_outer_mm >= 0.5 * static_cast<double>(grid_size) * spacing_mm) {
        bad_spec("annulus does not fit in the field of view");
    }
    check_tissue(t1_native, "t1_native");
    check_tissue(t1_post, "t1_post");
    check_tissue(t2, "t2");
    if (!(lesion_fraction >= 0.0 && lesion_fraction <= 1.0)) {
        bad_spec("lesion fraction must lie in [0, 1]");
    }
    for (std::size_t d = 1; d < involvement.size(); ++d) {
        const auto& inv = involvement[d];
        if (!(inv.t1_only >= 0.0 && inv.t2_only >= 0.0 && inv.both >= 0.0) ||
            inv.t1_only + inv.t2_only + inv.both > 1.0 + 1e-12) {
            bad_spec("involvement probabilities must be >= 0 and sum to at most 1");
        }
    }
    if (subject_count() == 0) {
        bad_spec("class mix is empty");
    }
    if (slices_t1_native + slices_t2 == 0) {
        bad_spec("every subject needs at least one native T1 or T2 slice");
    }
    const double fsum = split.train + split.validation + split.test;
    if (!(split.train >= 0 && split.validation >= 0 && split.test >= 0) || std::abs(fsum - 1.0) > 1e-9) {
        bad_spec("split fractions must be >= 0 and sum to 1");
    }
    obs1.validate();
    obs2.validate();
    model.validate();
}

// ---- JSON ---------------------------------------------------------------------------

namespace {

using ojson = nlohmann::ordered_json;

constexpr std::array<std::string_view, 4> kDiagnosisKeys = {"normal", "myocarditis", "sarcoidosis", "systemic"};

ojson intensity_json(const Intensity& v) {
    return {{"mean", v.mean}, {"sd", v.sd}};
}

ojson tissue_json(const TissueModel& t) {
    return {{"background", intensity_json(t.background)},
            {"blood", intensity_json(t.blood)},
            {"myocardium", intensity_json(t.myocardium)},
            {"subject_sd", t.subject_sd},
            {"lesion_shift", t.lesion_shift},
            {"lesion_shift_sd", t.lesion_shift_sd}};
}

ojson jitter_json(const ObserverJitter& j) {
    return {{"sd_mm", j.sd_mm}, {"correlation_length", j.correlation_length}, {"bias_mm", j.bias_mm}};
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) {
        out = j.at(key).get<T>();
    }
}

void read_intensity(const nlohmann::json& j, const char* key, Intensity& v) {
    if (j.contains(key)) {
        read_opt(j.at(key), "mean", v.mean);
        read_opt(j.at(key), "sd", v.sd);
    }
}

void read_tissue(const nlohmann::json& j, const char* key, TissueModel& t) {
    if (!j.contains(key)) {
        return;
    }
    const auto& o = j.at(key);
    read_intensity(o, "background", t.background);
    read_intensity(o, "blood", t.blood);
    read_intensity(o, "myocardium", t.myocardium);
    read_opt(o, "subject_sd", t.subject_sd);
    read_opt(o, "lesion_shift", t.lesion_shift);
    read_opt(o, "lesion_shift_sd", t.lesion_shift_sd);
}

void read_jitter(const nlohmann::json& j, const char* key, ObserverJitter& out) {
    if (j.contains(key)) {
        read_opt(j.at(key), "sd_mm", out.sd_mm);
        read_opt(j.at(key), "correlation_length", out.correlation_length);
        read_opt(j.at(key), "bias_mm", out.bias_mm);
    }
}

}  // namespace

std::string spec_to_json(const PhantomSpec& s) {
    ojson j;
    j["grid_size"] = s.grid_size;
    j["spacing_mm"] = s.spacing_mm;
    j["blood_radius_mm"] = s.blood_radius_mm;
    j["myo_inner_mm"] = s.myo_inner_mm;
    j["myo_outer_mm"] = s.myo_outer_mm;
    j["t1_native"] = tissue_json(s.t1_native);
    j["t1_post"] = tissue_json(s.t1_post);
    j["t2"] = tissue_json(s.t2);
    j["lesion_fraction"] = s.lesion_fraction;
    ojson counts;
    ojson involvement;
    for (std::size_t d = 0; d < 4; ++d) {
        counts[std::string(kDiagnosisKeys[d])] = s.class_counts[d];
        if (d > 0) {
            const auto& inv = s.involvement[d];
            involvement[std::string(kDiagnosisKeys[d])] = {
                {"t1_only", inv.t1_only}, {"t2_only", inv.t2_only}, {"both", inv.both}};
        }
    }
    j["class_counts"] = counts;
    j["involvement"] = involvement;
    j["slices"] = {{"t1_native", s.slices_t1_native}, {"t1_post", s.slices_t1_post}, {"t2", s.slices_t2}};
    j["split"] = {{"train", s.split.train}, {"validation", s.split.validation}, {"test", s.split.test}};
    j["observers"] = {{"obs1", jitter_json(s.obs1)}, {"obs2", jitter_json(s.obs2)}, {"model", jitter_json(s.model)}};
    j["seed"] = s.seed;
    return j.dump(2);
}

PhantomSpec spec_from_json(std::string_view text) {
    PhantomSpec s;
    try {
        const auto j = nlohmann::json::parse(text);
        if (!j.is_object()) {
            throw Error(ErrorCode::SchemaError, "phantom spec must be a JSON object");
        }
        read_opt(j, "grid_size", s.grid_size);
        read_opt(j, "spacing_mm", s.spacing_mm);
        read_opt(j, "blood_radius_mm", s.blood_radius_mm);
        read_opt(j, "myo_inner_mm", s.myo_inner_mm);
        read_opt(j, "myo_outer_mm", s.myo_outer_mm);
        read_tissue(j, "t1_native", s.t1_native);
        read_tissue(j, "t1_post", s.t1_post);
        read_tissue(j, "t2", s.t2);
        read_opt(j, "lesion_fraction", s.lesion_fraction);
        for (std::size_t d = 0; d < 4; ++d) {
            const std::string key(kDiagnosisKeys[d]);
            if (j.contains("class_counts")) {
                read_opt(j.at("class_counts"), key.c_str(), s.class_counts[d]);
            }
            if (d > 0 && j.contains("involvement") && j.at("involvement").contains(key)) {
                const auto& inv = j.at("involvement").at(key);
                read_opt(inv, "t1_only", s.involvement[d].t1_only);
                read_opt(inv, "t2_only", s.involvement[d].t2_only);
                read_opt(inv, "both", s.involvement[d].both);
            }
        }
        if (j.contains("slices")) {
            read_opt(j.at("slices"), "t1_native", s.slices_t1_native);
            read_opt(j.at("slices"), "t1_post", s.slices_t1_post);
            read_opt(j.at("slices"), "t2", s.slices_t2);
        }
        if (j.contains("split")) {
            read_opt(j.at("split"), "train", s.split.train);
            read_opt(j.at("split"), "validation", s.split.validation);
            read_opt(j.at("split"), "test", s.split.test);
        }
        if (j.contains("observers")) {
            read_jitter(j.at("observers"), "obs1", s.obs1);
            read_jitter(j.at("observers"), "obs2", s.obs2);
            read_jitter(j.at("observers"), "model", s.model);
        }
        read_opt(j, "seed", s.seed);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaError, std::string("phantom spec: ") + e.what());
    }
    s.validate();
    return s;
}

PhantomSpec load_spec(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return spec_from_json(ss.str());
}

// ---- subjects -------------------------------------------------------------------------

std::vector<Diagnosis> subject_diagnoses(const PhantomSpec& spec) {
    std::vector<Diagnosis> out;
    for (std::size_t d = 0; d < 4; ++d) {
        out.insert(out.end(), spec.class_counts[d], kAllDiagnoses[d]);
    }
    Rng rng(mix_seed(spec.seed, fnv1a64("diagnoses")));
    rng.shuffle(out.begin(), out.end());
    return out;
}

std::string subject_id(const PhantomSpec& spec, std::size_t subject_index) {
    const std::size_t width = std::max<std::size_t>(3, std::to_string(spec.subject_count()).size());
    std::string digits = std::to_string(subject_index + 1);
    return "P" + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

namespace {

SubjectTraits traits_for(const PhantomSpec& spec, std::size_t subject_index, Diagnosis diagnosis) {
    SubjectTraits t;
    t.subject_id = subject_id(spec, subject_index);
    t.diagnosis = diagnosis;
    Rng rng(item_seed(spec.seed, t.subject_id));
    t.offset_t1_native = rng.normal(0.0, spec.t1_native.subject_sd);
    t.offset_t1_post = rng.normal(0.0, spec.t1_post.subject_sd);
    t.offset_t2 = rng.normal(0.0, spec.t2.subject_sd);
    // Native and post-contrast T1 shifts share one draw: same lesion.
    const double z_t1 = rng.normal();
    const double z_t2 = rng.normal();
    t.shift_t1_native = spec.t1_native.lesion_shift + spec.t1_native.lesion_shift_sd * z_t1;
    t.shift_t1_post = spec.t1_post.lesion_shift + spec.t1_post.lesion_shift_sd * z_t1;
    t.shift_t2 = spec.t2.lesion_shift + spec.t2.lesion_shift_sd * z_t2;
    const double u = rng.uniform();
    t.lesion_angle = kTwoPi * rng.uniform();
    if (diagnosis != Diagnosis::Normal) {
        const auto& inv = spec.involvement[diagnosis_index(diagnosis)];
        if (u < inv.t1_only) {
            t.lesion_t1 = true;
        } else if (u < inv.t1_only + inv.t2_only) {
            t.lesion_t2 = true;
        } else if (u < inv.t1_only + inv.t2_only + inv.both) {
            t.lesion_t1 = true;
            t.lesion_t2 = true;
        }
    }
    return t;
}

struct Geometry {
    double cy = 0.0;  ///< centre, mm
    double cx = 0.0;
};

Geometry grid_centre(const PhantomSpec& spec) {
    const double half = 0.5 * static_cast<double>(spec.grid_size) * spec.spacing_mm;
    return {half, half};
}

bool in_wedge(double angle, double start, double fraction) {
    double rel = std::fmod(angle - start, kTwoPi);
    if (rel < 0) {
        rel += kTwoPi;
    }
    return rel < kTwoPi * fraction;
}

std::pair<ParametricMap, LabelMask> render(const PhantomSpec& spec, const SubjectTraits& traits,
                                           std::size_t subject_index, std::size_t slice_index, Modality modality) {
    const auto& tissue = spec.tissue(modality);
    LabelMask mask = phantom_mask(spec);
    mask.source = "gt";

    ParametricMap map;
    map.subject_id = traits.subject_id;
    map.modality = modality;
    map.map_id = traits.subject_id + "_" + std::string(to_string(modality)) + "_" + std::to_string(slice_index);
    static constexpr SliceLocation kLocations[] = {SliceLocation::Basal, SliceLocation::Mid, SliceLocation::Apical};
    map.slice_location = kLocations[slice_index % 3];
    map.grid = PixelGrid(spec.grid_size, spec.grid_size, {spec.spacing_mm, spec.spacing_mm});

    double offset = traits.offset_t1_native;
    double shift = traits.shift_t1_native;
    bool lesion = traits.lesion_t1;
    if (modality == Modality::T1Post) {
        offset = traits.offset_t1_post;
        shift = traits.shift_t1_post;
    } else if (modality == Modality::T2) {
        offset = traits.offset_t2;
        shift = traits.shift_t2;
        lesion = traits.lesion_t2;
    }

    const std::uint64_t stream = mix_seed(
        mix_seed(mix_seed(spec.seed, subject_index), slice_index), static_cast<std::uint64_t>(modality) + 1);
    const auto centre = grid_centre(spec);
    for (std::size_t r = 0; r < spec.grid_size; ++r) {
        for (std::size_t c = 0; c < spec.grid_size; ++c) {
            const std::size_t i = r * spec.grid_size + c;
            const double z = keyed_normal(stream, i);
            double v = 0.0;
            switch (mask.labels[i]) {
                case label::kBloodPool:
                    v = tissue.blood.mean + tissue.blood.sd * z;
                    break;
                case label::kMyocardium: {
                    v = tissue.myocardium.mean + offset + tissue.myocardium.sd * z;
                    const double y = (static_cast<double>(r) + 0.5) * spec.spacing_mm - centre.cy;
                    const double x = (static_cast<double>(c) + 0.5) * spec.spacing_mm - centre.cx;
                    if (lesion && in_wedge(std::atan2(y, x), traits.lesion_angle, spec.lesion_fraction)) {
                        v += shift;
                    }
                    break;
                }
                default:
                    v = tissue.background.mean + tissue.background.sd * z;
                    break;
            }
            // Relaxation times are non-negative.
            map.grid.values[i] = std::max(0.0, v);
        }
    }
    return {std::move(map), std::move(mask)};
}

}  // namespace

SubjectTraits subject_traits(const PhantomSpec& spec, std::size_t subject_index) {
    const auto diagnoses = subject_diagnoses(spec);
    if (subject_index >= diagnoses.size()) {
        bad_spec("subject index out of range");
    }
    return traits_for(spec, subject_index, diagnoses[subject_index]);
}

LabelMask phantom_mask(const PhantomSpec& spec) {
    LabelMask mask("gt", spec.grid_size, spec.grid_size, {spec.spacing_mm, spec.spacing_mm});
    const auto centre = grid_centre(spec);
    for (std::size_t r = 0; r < spec.grid_size; ++r) {
        for (std::size_t c = 0; c < spec.grid_size; ++c) {
            const double y = (static_cast<double>(r) + 0.5) * spec.spacing_mm - centre.cy;
            const double x = (static_cast<double>(c) + 0.5) * spec.spacing_mm - centre.cx;
            const double rad = std::hypot(y, x);
            std::uint8_t l = label::kBackground;
            if (rad < spec.blood_radius_mm) {
                l = label::kBloodPool;
            } else if (rad >= spec.myo_inner_mm && rad < spec.myo_outer_mm) {
                l = label::kMyocardium;
            }
            mask.at(r, c) = l;
        }
    }
    return mask;
}

std::pair<ParametricMap, LabelMask> generate_phantom(const PhantomSpec& spec, std::size_t subject_index,
                                                     std::size_t slice_index, Modality modality) {
    spec.validate();
    return render(spec, subject_traits(spec, subject_index), subject_index, slice_index, modality);
}

// ---- observer perturbation ---------------------------------------------------------

namespace {

constexpr std::size_t kHarmonics = 24;
constexpr std::size_t kRays = 360;

// Smooth periodic field with Gaussian spectral weights; pointwise sd = sd.
class AngularField {
public:
    AngularField(double sd, double correlation_length, Rng& rng) : a_(kHarmonics), b_(kHarmonics) {
        std::vector<double> w(kHarmonics);
        double total = 0.0;
        for (std::size_t k = 1; k <= kHarmonics; ++k) {
            const double kl = static_cast<double>(k) * correlation_length;
            w[k - 1] = std::exp(-0.5 * kl * kl);
            total += w[k - 1];
        }
        for (std::size_t k = 0; k < kHarmonics; ++k) {
            const double s = sd * std::sqrt(w[k] / total);
            a_[k] = rng.normal(0.0, s);
            b_[k] = rng.normal(0.0, s);
        }
    }

    [[nodiscard]] double operator()(double theta) const {
        // cos/sin of k*theta by the angle-addition recurrence.
        const double c1 = std::cos(theta);
        const double s1 = std::sin(theta);
        double ck = c1;
        double sk = s1;
        double v = 0.0;
        for (std::size_t k = 0; k < kHarmonics; ++k) {
            v += a_[k] * ck + b_[k] * sk;
            const double next_c = ck * c1 - sk * s1;
            sk = sk * c1 + ck * s1;
            ck = next_c;
        }
        return v;
    }

private:
    std::vector<double> a_;
    std::vector<double> b_;
};

double interpolate_ray(const std::vector<double>& radii, double theta) {
    double pos = theta / kTwoPi * static_cast<double>(kRays);
    pos = std::fmod(pos, static_cast<double>(kRays));
    if (pos < 0) {
        pos += static_cast<double>(kRays);
    }
    const auto i0 = static_cast<std::size_t>(pos) % kRays;
    const std::size_t i1 = (i0 + 1) % kRays;
    const double t = pos - std::floor(pos);
    return radii[i0] + t * (radii[i1] - radii[i0]);
}

}  // namespace

LabelMask perturb_mask(const LabelMask& mask, const ObserverJitter& jitter, std::uint64_t seed) {
    jitter.validate();
    const std::size_t n_myo = mask.count(label::kMyocardium);
    if (n_myo == 0) {
        throw Error(ErrorCode::EmptyMyocardium, "mask '" + mask.source + "' has no myocardium to perturb");
    }
    if (jitter.sd_mm == 0.0 && jitter.bias_mm == 0.0) {
        return mask;
    }
    const double sr = mask.spacing_mm.row;
    const double sc = mask.spacing_mm.col;

    // Centroid of the foreground (blood + myocardium) in mm.
    double cy = 0.0;
    double cx = 0.0;
    std::size_t fg = 0;
    for (std::size_t r = 0; r < mask.rows; ++r) {
        for (std::size_t c = 0; c < mask.cols; ++c) {
            if (mask.at(r, c) != label::kBackground) {
                cy += (static_cast<double>(r) + 0.5) * sr;
                cx += (static_cast<double>(c) + 0.5) * sc;
                ++fg;
            }
        }
    }
    cy /= static_cast<double>(fg);
    cx /= static_cast<double>(fg);
    double extent = 0.0;
    for (std::size_t r = 0; r < mask.rows; ++r) {
        for (std::size_t c = 0; c < mask.cols; ++c) {
            if (mask.at(r, c) != label::kBackground) {
                const double y = (static_cast<double>(r) + 0.5) * sr - cy;
                const double x = (static_cast<double>(c) + 0.5) * sc - cx;
                extent = std::max(extent, std::hypot(y, x));
            }
        }
    }
    const double max_r = extent + 2.0 * std::max(sr, sc);

    auto label_at = [&](double y, double x) -> std::uint8_t {
        if (y < 0 || x < 0) {
            return label::kBackground;
        }
        const auto r = static_cast<std::size_t>(y / sr);
        const auto c = static_cast<std::size_t>(x / sc);
        if (r >= mask.rows || c >= mask.cols) {
            return label::kBackground;
        }
        return mask.at(r, c);
    };

    Rng rng(seed);
    const AngularField endo_noise(jitter.sd_mm, jitter.correlation_length, rng);
    const AngularField epi_noise(jitter.sd_mm, jitter.correlation_length, rng);

    // Displaced contour radii along rays from the centroid.
    const double step = 0.2 * std::min(sr, sc);
    // Keeps the wall at least one pixel thick so the blood pool stays enclosed.
    const double min_wall = 1.5 * std::max(sr, sc);
    std::vector<double> endo(kRays, 0.0);
    std::vector<double> epi(kRays, 0.0);
    for (std::size_t k = 0; k < kRays; ++k) {
        const double theta = kTwoPi * static_cast<double>(k) / static_cast<double>(kRays);
        const double dy = std::sin(theta);
        const double dx = std::cos(theta);
        double first_not_blood = -1.0;
        double last_myo = -1.0;
        for (double rad = 0.0; rad <= max_r; rad += step) {
            const auto l = label_at(cy + rad * dy, cx + rad * dx);
            if (first_not_blood < 0 && l != label::kBloodPool) {
                first_not_blood = rad;
            }
            if (l == label::kMyocardium) {
                last_myo = rad;
            }
        }
        const double re = first_not_blood <= 0.0 ? 0.0 : first_not_blood - 0.5 * step;
        const double rp = last_myo < 0.0 ? re : last_myo + 0.5 * step;
        endo[k] = std::max(0.0, re + endo_noise(theta) - jitter.bias_mm);
        epi[k] = std::max(endo[k] + min_wall, rp + epi_noise(theta) + jitter.bias_mm);
    }

    LabelMask out = mask;
    for (std::size_t r = 0; r < mask.rows; ++r) {
        for (std::size_t c = 0; c < mask.cols; ++c) {
            const double y = (static_cast<double>(r) + 0.5) * sr - cy;
            const double x = (static_cast<double>(c) + 0.5) * sc - cx;
            const double rad = std::hypot(y, x);
            std::uint8_t l = label::kBackground;
            if (rad <= max_r + 4.0 * jitter.sd_mm + std::abs(jitter.bias_mm)) {
                double theta = std::atan2(y, x);
                if (theta < 0) {
                    theta += kTwoPi;
                }
                if (rad < interpolate_ray(endo, theta)) {
                    l = label::kBloodPool;
                } else if (rad < interpolate_ray(epi, theta)) {
                    l = label::kMyocardium;
                }
            }
            out.at(r, c) = l;
        }
    }
    return out;
}

// ---- cohort --------------------------------------------------------------------------

Cohort generate_cohort(const PhantomSpec& spec, unsigned threads) {
    spec.validate();
    const auto diagnoses = subject_diagnoses(spec);
    Cohort cohort;
    cohort.subjects.resize(diagnoses.size());
    parallel_for(diagnoses.size(), threads, [&](std::size_t s) {
        const auto traits = traits_for(spec, s, diagnoses[s]);
        Subject subject;
        subject.subject_id = traits.subject_id;
        subject.diagnosis = traits.diagnosis;
        for (auto modality : kAllModalities) {
            for (std::size_t k = 0; k < spec.slices(modality); ++k) {
                auto [map, gt] = render(spec, traits, s, k, modality);
                MapEntry entry;
                const std::pair<const char*, const ObserverJitter*> observers[] = {
                    {"obs1", &spec.obs1}, {"obs2", &spec.obs2}, {"model", &spec.model}};
                entry.masks.push_back(gt);
                for (const auto& [name, jitter] : observers) {
                    auto m = perturb_mask(gt, *jitter, item_seed(spec.seed, map.map_id + "/" + name));
                    m.source = name;
                    entry.masks.push_back(std::move(m));
                }
                entry.map = std::move(map);
                subject.maps.push_back(std::move(entry));
            }
        }
        cohort.subjects[s] = std::move(subject);
    });
    return split_cohort(cohort, spec.split, spec.seed, true);
}

}  // namespace myomap::phantom
