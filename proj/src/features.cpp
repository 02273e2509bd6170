#include "myomap/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "myomap/csv.hpp"
#include "myomap/error.hpp"
#include "myomap/parallel.hpp"

namespace myomap::features {

double percentile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) {
        throw Error(ErrorCode::EmptyInput, "percentile of an empty sequence");
    }
    if (!(q >= 0.0 && q <= 100.0)) {
        throw Error(ErrorCode::InvalidArgument, "percentile rank must lie in [0,100]");
    }
    const double h = static_cast<double>(sorted.size() - 1) * q / 100.0;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const double frac = h - static_cast<double>(lo);
    if (lo + 1 >= sorted.size() || frac == 0.0) {
        return sorted[lo];
    }
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double percentile(std::span<const double> values, double q) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    return percentile_sorted(sorted, q);
}

std::vector<double> myocardial_pixels(const ParametricMap& map, const LabelMask& mask) {
    if (!mask.same_shape(map.grid)) {
        throw Error(ErrorCode::ShapeMismatch, "mask '" + mask.source + "' does not match map " + map.map_id);
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < mask.labels.size(); ++i) {
        if (mask.labels[i] == label::kMyocardium) {
            out.push_back(map.grid.values[i]);
        }
    }
    if (out.empty()) {
        throw Error(ErrorCode::EmptyMyocardium, "map " + map.map_id + " has no myocardium in mask '" + mask.source + "'");
    }
    return out;
}

SliceFeatures slice_features(std::span<const double> values) {
    if (values.empty()) {
        throw Error(ErrorCode::EmptyInput, "slice features of an empty pixel set");
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    SliceFeatures f;
    f.a = sum / static_cast<double>(values.size());
    f.lq = percentile_sorted(sorted, 25.0);
    f.m = percentile_sorted(sorted, 50.0);
    f.uq = percentile_sorted(sorted, 75.0);
    f.n_pixels = values.size();
    return f;
}

bool is_feature_name(std::string_view name) {
    return std::find(kFeatureNames.begin(), kFeatureNames.end(), name) != kFeatureNames.end();
}

std::optional<double> FeatureVector::get(std::string_view name) const {
    const auto it = std::find(kFeatureNames.begin(), kFeatureNames.end(), name);
    if (it == kFeatureNames.end()) {
        throw Error(ErrorCode::MissingFeature, "unknown feature '" + std::string(name) + "'");
    }
    const auto index = static_cast<std::size_t>(it - kFeatureNames.begin());
    const auto& block = index < 4 ? t1 : t2;
    if (!block) {
        return std::nullopt;
    }
    switch (index % 4) {
        case 0: return block->a;
        case 1: return block->lq;
        case 2: return block->m;
        default: return block->uq;
    }
}

namespace {

std::optional<FeatureBlock> average_block(std::vector<SliceFeatures> slices) {
    if (slices.empty()) {
        return std::nullopt;
    }
    std::sort(slices.begin(), slices.end(), [](const auto& x, const auto& y) { return x.map_id < y.map_id; });
    FeatureBlock b;
    for (const auto& s : slices) {
        b.a += s.a;
        b.lq += s.lq;
        b.m += s.m;
        b.uq += s.uq;
    }
    const auto n = static_cast<double>(slices.size());
    b.a /= n;
    b.lq /= n;
    b.m /= n;
    b.uq /= n;
    return b;
}

}  // namespace

FeatureVector patient_features(const Subject& subject, std::string_view mask_source) {
    std::vector<SliceFeatures> t1;
    std::vector<SliceFeatures> t2;
    for (const auto& entry : subject.maps) {
        if (entry.map.modality == Modality::T1Post) {
            continue;
        }
        const LabelMask* mask = entry.mask(mask_source);
        if (mask == nullptr) {
            continue;
        }
        auto f = slice_features(myocardial_pixels(entry.map, *mask));
        f.map_id = entry.map.map_id;
        f.modality = entry.map.modality;
        (entry.map.modality == Modality::T1Native ? t1 : t2).push_back(std::move(f));
    }
    if (t1.empty() && t2.empty()) {
        throw Error(ErrorCode::NoUsableMaps, "subject " + subject.subject_id + " has no native T1 or T2 map with mask '" +
                                                 std::string(mask_source) + "'");
    }
    FeatureVector v;
    v.subject_id = subject.subject_id;
    v.diseased = subject.diseased();
    v.t1 = average_block(std::move(t1));
    v.t2 = average_block(std::move(t2));
    return v;
}

std::vector<const FeatureRecord*> FeatureTable::select(const SubsetFilter& filter) const {
    std::vector<const FeatureRecord*> out;
    for (const auto& r : records) {
        if (filter.accepts(r.split)) {
            out.push_back(&r);
        }
    }
    return out;
}

std::vector<std::string> FeatureTable::complete_features(const SubsetFilter& filter) const {
    const auto rows = select(filter);
    std::vector<std::string> out;
    for (auto name : kFeatureNames) {
        const bool complete = !rows.empty() && std::all_of(rows.begin(), rows.end(), [&](const FeatureRecord* r) {
            return r->features.get(name).has_value();
        });
        if (complete) {
            out.emplace_back(name);
        }
    }
    return out;
}

FeatureTable extract_features(const Cohort& cohort, std::string_view mask_source, unsigned threads) {
    FeatureTable table;
    table.records.resize(cohort.subjects.size());
    parallel_for(cohort.subjects.size(), threads, [&](std::size_t i) {
        const auto& subject = cohort.subjects[i];
        table.records[i] = {patient_features(subject, mask_source), cohort.subset_of(subject.subject_id)};
    });
    return table;
}

void write_features_csv(const std::filesystem::path& path, const FeatureTable& table) {
    csv::Table out;
    out.header = {"subject_id", "split", "diseased"};
    for (auto name : kFeatureNames) {
        out.header.emplace_back(name);
    }
    for (const auto& r : table.records) {
        std::vector<std::string> row{r.features.subject_id, r.split ? std::string(to_string(*r.split)) : std::string{},
                                     r.features.diseased ? "1" : "0"};
        for (auto name : kFeatureNames) {
            row.push_back(csv::format(r.features.get(name)));
        }
        out.rows.push_back(std::move(row));
    }
    csv::write(path, out);
}

FeatureTable read_features_csv(const std::filesystem::path& path) {
    const auto in = csv::read(path);
    const auto id_col = in.column("subject_id");
    const auto split_col = in.column("split");
    const auto diseased_col = in.column("diseased");
    std::array<std::size_t, 8> cols{};
    for (std::size_t k = 0; k < kFeatureNames.size(); ++k) {
        cols[k] = in.column(kFeatureNames[k]);
    }

    FeatureTable table;
    for (const auto& row : in.rows) {
        FeatureRecord rec;
        rec.features.subject_id = row[id_col];
        if (!row[split_col].empty()) {
            rec.split = parse_subset(row[split_col]);
        }
        if (row[diseased_col] != "0" && row[diseased_col] != "1") {
            throw Error(ErrorCode::SchemaError, "diseased must be 0 or 1 for " + rec.features.subject_id);
        }
        rec.features.diseased = row[diseased_col] == "1";
        for (int block = 0; block < 2; ++block) {
            std::array<std::optional<double>, 4> v;
            for (int k = 0; k < 4; ++k) {
                v[k] = csv::parse_optional(row[cols[block * 4 + k]]);
            }
            const auto present = std::count_if(v.begin(), v.end(), [](const auto& x) { return x.has_value(); });
            if (present != 0 && present != 4) {
                throw Error(ErrorCode::SchemaError,
                            "feature block must be complete or empty for " + rec.features.subject_id);
            }
            if (present == 4) {
                FeatureBlock b{*v[0], *v[1], *v[2], *v[3]};
                (block == 0 ? rec.features.t1 : rec.features.t2) = b;
            }
        }
        table.records.push_back(std::move(rec));
    }
    return table;
}

}  // namespace myomap::features
