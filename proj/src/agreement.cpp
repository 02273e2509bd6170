#include "myomap/agreement.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "myomap/csv.hpp"
#include "myomap/distributions.hpp"
#include "myomap/error.hpp"
#include "myomap/features.hpp"

namespace myomap::agreement {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool same(double a, double b) {
    return (std::isnan(a) && std::isnan(b)) || a == b;
}

struct PixelCounts {
    std::size_t a = 0;
    std::size_t b = 0;
    std::size_t both = 0;
};

PixelCounts count_pixels(const LabelMask& a, const LabelMask& b, std::uint8_t cls) {
    if (!a.same_shape(b) || a.labels.size() != b.labels.size()) {
        throw Error(ErrorCode::ShapeMismatch, "masks '" + a.source + "' and '" + b.source + "' differ in shape");
    }
    PixelCounts c;
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
        const bool in_a = a.labels[i] == cls;
        const bool in_b = b.labels[i] == cls;
        c.a += in_a;
        c.b += in_b;
        c.both += in_a && in_b;
    }
    return c;
}

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return s / static_cast<double>(v.size());
}

SummaryStats summarize(const std::vector<double>& v) {
    if (v.empty()) {
        return {kNaN, kNaN, kNaN};
    }
    return {mean_of(v), features::percentile(v, 50.0), *std::min_element(v.begin(), v.end())};
}

double nullable(const nlohmann::json& j) {
    return j.is_null() ? kNaN : j.get<double>();
}

nlohmann::json number_or_null(double v) {
    return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v);
}

nlohmann::json stats_json(const SummaryStats& s) {
    return {{"mean", number_or_null(s.mean)}, {"median", number_or_null(s.median)}, {"minimum", number_or_null(s.minimum)}};
}

SummaryStats stats_from_json(const nlohmann::json& j) {
    return {nullable(j.at("mean")), nullable(j.at("median")), nullable(j.at("minimum"))};
}

}  // namespace

bool SummaryStats::operator==(const SummaryStats& o) const {
    return same(mean, o.mean) && same(median, o.median) && same(minimum, o.minimum);
}

bool AgreementRow::operator==(const AgreementRow& o) const {
    return modality_group == o.modality_group && n_images == o.n_images && lv_dice == o.lv_dice &&
           myo_dice == o.myo_dice && lv_iou == o.lv_iou && myo_iou == o.myo_iou &&
           same(myo_mape_mean, o.myo_mape_mean) && same(myo_mape_signed_mean, o.myo_mape_signed_mean) &&
           both_empty_maps == o.both_empty_maps;
}

Overlap dice(const LabelMask& a, const LabelMask& b, std::uint8_t class_label) {
    const auto c = count_pixels(a, b, class_label);
    if (c.a + c.b == 0) {
        return {1.0, true};
    }
    return {2.0 * static_cast<double>(c.both) / static_cast<double>(c.a + c.b), false};
}

IouResult iou_and_jaccard_loss(const LabelMask& a, const LabelMask& b, std::uint8_t class_label) {
    const auto c = count_pixels(a, b, class_label);
    const std::size_t uni = c.a + c.b - c.both;
    if (uni == 0) {
        return {1.0, 0.0, true};
    }
    const double iou = static_cast<double>(c.both) / static_cast<double>(uni);
    return {iou, 1.0 - iou, false};
}

Mape mape(double reference_mean, double test_mean) {
    if (reference_mean == 0.0) {
        throw Error(ErrorCode::ZeroReference, "MAPE reference mean is zero");
    }
    const double s = (reference_mean - test_mean) / reference_mean * 100.0;
    return {s, std::abs(s)};
}

Correlation pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw Error(ErrorCode::LengthMismatch, "pearson inputs differ in length");
    }
    if (x.size() < 3) {
        throw Error(ErrorCode::InsufficientData, "pearson needs at least 3 pairs");
    }
    const double mx = mean_of(x);
    const double my = mean_of(y);
    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw Error(ErrorCode::ConstantInput, "pearson input is constant");
    }
    Correlation out;
    out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    if (std::abs(out.r) >= 1.0 - 1e-12) {
        out.p_two_sided = 0.0;
        return out;
    }
    const double dof = static_cast<double>(x.size() - 2);
    const double t = out.r * std::sqrt(dof / (1.0 - out.r * out.r));
    out.p_two_sided = dist::student_t_two_sided_p(t, dof);
    return out;
}

BlandAltman bland_altman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw Error(ErrorCode::LengthMismatch, "Bland-Altman inputs differ in length");
    }
    if (x.size() < 2) {
        throw Error(ErrorCode::InsufficientData, "Bland-Altman needs at least 2 pairs");
    }
    BlandAltman out;
    std::vector<double> d(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        d[i] = x[i] - y[i];
        out.points.emplace_back((x[i] + y[i]) / 2.0, d[i]);
    }
    out.bias = mean_of(d);
    double ss = 0.0;
    for (double v : d) {
        ss += (v - out.bias) * (v - out.bias);
    }
    out.sd_diff = std::sqrt(ss / static_cast<double>(d.size() - 1));
    out.loa_low = out.bias - kLoaMultiplier * out.sd_diff;
    out.loa_high = out.bias + kLoaMultiplier * out.sd_diff;
    return out;
}

AgreementReport agreement_report(const Cohort& cohort, const std::string& source_a, const std::string& source_b,
                                 const SubsetFilter& subset) {
    struct ImageMetrics {
        Modality modality;
        double lv_dice;
        double myo_dice;
        double lv_iou;
        double myo_iou;
        Mape mape;
    };
    std::vector<ImageMetrics> images;
    std::vector<std::pair<Modality, std::string>> empties;

    for (const auto& subject : cohort.subjects) {
        if (!subset.accepts(cohort.subset_of(subject.subject_id))) {
            continue;
        }
        for (const auto& entry : subject.maps) {
            const LabelMask* a = entry.mask(source_a);
            const LabelMask* b = entry.mask(source_b);
            if (a == nullptr || b == nullptr) {
                throw Error(ErrorCode::MissingSource, "map " + entry.map.map_id + " lacks mask source '" +
                                                          (a == nullptr ? source_a : source_b) + "'");
            }
            const auto lv = dice(*a, *b, label::kBloodPool);
            const auto myo = dice(*a, *b, label::kMyocardium);
            if (lv.both_empty || myo.both_empty) {
                empties.emplace_back(entry.map.modality, entry.map.map_id);
            }
            const double g = mean_of(features::myocardial_pixels(entry.map, *a));
            const double m = mean_of(features::myocardial_pixels(entry.map, *b));
            images.push_back({entry.map.modality, lv.value, myo.value,
                              iou_and_jaccard_loss(*a, *b, label::kBloodPool).iou,
                              iou_and_jaccard_loss(*a, *b, label::kMyocardium).iou, mape(g, m)});
        }
    }

    AgreementReport report{source_a, source_b, subset.to_string(), {}};
    const std::pair<const char*, std::optional<Modality>> groups[] = {
        {"All", std::nullopt}, {"T2", Modality::T2}, {"T1 Pre", Modality::T1Native}, {"T1 Post", Modality::T1Post}};
    for (const auto& [name, modality] : groups) {
        std::vector<double> lv, myo, lv_iou, myo_iou, mape_abs, mape_signed;
        for (const auto& im : images) {
            if (modality && im.modality != *modality) {
                continue;
            }
            lv.push_back(im.lv_dice);
            myo.push_back(im.myo_dice);
            lv_iou.push_back(im.lv_iou);
            myo_iou.push_back(im.myo_iou);
            mape_abs.push_back(im.mape.abs_pct);
            mape_signed.push_back(im.mape.signed_pct);
        }
        AgreementRow row;
        row.modality_group = name;
        row.n_images = lv.size();
        row.lv_dice = summarize(lv);
        row.myo_dice = summarize(myo);
        row.lv_iou = summarize(lv_iou);
        row.myo_iou = summarize(myo_iou);
        row.myo_mape_mean = lv.empty() ? kNaN : mean_of(mape_abs);
        row.myo_mape_signed_mean = lv.empty() ? kNaN : mean_of(mape_signed);
        for (const auto& [mod, id] : empties) {
            if (!modality || mod == *modality) {
                row.both_empty_maps.push_back(id);
            }
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

void write_agreement_json(const std::filesystem::path& path, const std::vector<AgreementReport>& reports) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const auto& row : r.rows) {
            nlohmann::ordered_json j;
            j["modality_group"] = row.modality_group;
            j["n_images"] = row.n_images;
            j["lv_dice"] = stats_json(row.lv_dice);
            j["myo_dice"] = stats_json(row.myo_dice);
            j["lv_iou"] = stats_json(row.lv_iou);
            j["myo_iou"] = stats_json(row.myo_iou);
            j["myo_mape_mean"] = number_or_null(row.myo_mape_mean);
            j["myo_mape_signed_mean"] = number_or_null(row.myo_mape_signed_mean);
            j["both_empty_maps"] = row.both_empty_maps;
            rows.push_back(std::move(j));
        }
        nlohmann::ordered_json item;
        item["pair"] = {r.source_a, r.source_b};
        item["subset"] = r.subset;
        item["rows"] = std::move(rows);
        doc.push_back(std::move(item));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    }
    out << doc.dump(2) << '\n';
}

std::vector<AgreementReport> read_agreement_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
    }
    std::vector<AgreementReport> out;
    try {
        const auto doc = nlohmann::json::parse(in);
        for (const auto& item : doc) {
            AgreementReport r;
            r.source_a = item.at("pair").at(0).get<std::string>();
            r.source_b = item.at("pair").at(1).get<std::string>();
            r.subset = item.at("subset").get<std::string>();
            for (const auto& j : item.at("rows")) {
                AgreementRow row;
                row.modality_group = j.at("modality_group").get<std::string>();
                row.n_images = j.at("n_images").get<std::size_t>();
                row.lv_dice = stats_from_json(j.at("lv_dice"));
                row.myo_dice = stats_from_json(j.at("myo_dice"));
                row.lv_iou = stats_from_json(j.at("lv_iou"));
                row.myo_iou = stats_from_json(j.at("myo_iou"));
                row.myo_mape_mean = nullable(j.at("myo_mape_mean"));
                row.myo_mape_signed_mean = nullable(j.at("myo_mape_signed_mean"));
                row.both_empty_maps = j.at("both_empty_maps").get<std::vector<std::string>>();
                r.rows.push_back(std::move(row));
            }
            out.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
    }
    return out;
}

void write_agreement_csv(const std::filesystem::path& path, const std::vector<AgreementReport>& reports) {
    csv::Table t;
    t.header = {"pair",          "modality_group", "n_images",        "lv_dice_mean", "lv_dice_median",
                "lv_dice_min",   "myo_dice_mean",  "myo_dice_median", "myo_dice_min", "myo_mape_mean"};
    for (const auto& r : reports) {
        for (const auto& row : r.rows) {
            t.rows.push_back({r.source_a + ":" + r.source_b, row.modality_group, std::to_string(row.n_images),
                              csv::format(row.lv_dice.mean), csv::format(row.lv_dice.median),
                              csv::format(row.lv_dice.minimum), csv::format(row.myo_dice.mean),
                              csv::format(row.myo_dice.median), csv::format(row.myo_dice.minimum),
                              csv::format(row.myo_mape_mean)});
        }
    }
    csv::write(path, t);
}

}  // namespace myomap::agreement
