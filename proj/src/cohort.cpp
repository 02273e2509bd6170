#include "myomap/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "myomap/error.hpp"
#include "myomap/random.hpp"

namespace myomap {

using nlohmann::json;
using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view text, const std::pair<std::string_view, Enum> (&table)[N], const char* what) {
    for (const auto& [name, value] : table) {
        if (name == text) {
            return value;
        }
    }
    throw Error(ErrorCode::SchemaError, std::string("unknown ") + what + " '" + std::string(text) + "'");
}

constexpr std::pair<std::string_view, Modality> kModalityNames[] = {
    {"t1_native", Modality::T1Native}, {"t1_post", Modality::T1Post}, {"t2", Modality::T2}};
constexpr std::pair<std::string_view, SliceLocation> kSliceNames[] = {
    {"basal", SliceLocation::Basal}, {"mid", SliceLocation::Mid},
    {"apical", SliceLocation::Apical}, {"unknown", SliceLocation::Unknown}};
constexpr std::pair<std::string_view, Diagnosis> kDiagnosisNames[] = {
    {"normal", Diagnosis::Normal}, {"myocarditis", Diagnosis::Myocarditis},
    {"sarcoidosis", Diagnosis::Sarcoidosis}, {"systemic", Diagnosis::Systemic}};
constexpr std::pair<std::string_view, Subset> kSubsetNames[] = {
    {"train", Subset::Train}, {"validation", Subset::Validation}, {"test", Subset::Test}};

template <typename Enum, std::size_t N>
std::string_view enum_name(Enum value, const std::pair<std::string_view, Enum> (&table)[N]) {
    for (const auto& [name, v] : table) {
        if (v == value) {
            return name;
        }
    }
    return "unknown";
}

ojson read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
    }
    try {
        return ojson::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    }
    out << text << '\n';
}

template <typename T>
T get_field(const ojson& obj, const char* key, const fs::path& where) {
    if (!obj.is_object() || !obj.contains(key)) {
        throw Error(ErrorCode::SchemaError, where.string() + ": missing field '" + key + "'");
    }
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaError, where.string() + ": field '" + key + "': " + e.what());
    }
}

struct RasterHeader {
    std::size_t rows;
    std::size_t cols;
    Spacing spacing;
};

RasterHeader read_header(const ojson& doc, const fs::path& path) {
    const auto rows = get_field<long long>(doc, "rows", path);
    const auto cols = get_field<long long>(doc, "cols", path);
    const auto spacing = get_field<std::vector<double>>(doc, "spacing_mm", path);
    if (rows < 1 || cols < 1) {
        throw Error(ErrorCode::SchemaError, path.string() + ": rows and cols must be >= 1");
    }
    if (spacing.size() != 2) {
        throw Error(ErrorCode::SchemaError, path.string() + ": spacing_mm must have two entries");
    }
    if (!(spacing[0] > 0.0) || !(spacing[1] > 0.0) || !std::isfinite(spacing[0]) || !std::isfinite(spacing[1])) {
        throw Error(ErrorCode::BadSpacing, path.string() + ": spacing must be positive");
    }
    return {static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), {spacing[0], spacing[1]}};
}

json header_json(std::size_t rows, std::size_t cols, Spacing s) {
    json doc;
    doc["rows"] = rows;
    doc["cols"] = cols;
    doc["spacing_mm"] = {s.row, s.col};
    return doc;
}

}  // namespace

std::string_view to_string(Modality m) { return enum_name(m, kModalityNames); }
std::string_view to_string(SliceLocation s) { return enum_name(s, kSliceNames); }
std::string_view to_string(Diagnosis d) { return enum_name(d, kDiagnosisNames); }
std::string_view to_string(Subset s) { return enum_name(s, kSubsetNames); }
Modality parse_modality(std::string_view s) { return parse_enum(s, kModalityNames, "modality"); }
SliceLocation parse_slice_location(std::string_view s) { return parse_enum(s, kSliceNames, "slice_location"); }
Diagnosis parse_diagnosis(std::string_view s) { return parse_enum(s, kDiagnosisNames, "diagnosis"); }
Subset parse_subset(std::string_view s) { return parse_enum(s, kSubsetNames, "subset"); }

void PixelGrid::validate() const {
    if (rows < 1 || cols < 1) {
        throw Error(ErrorCode::SchemaError, "grid must have at least one row and column");
    }
    if (!(spacing_mm.row > 0.0) || !(spacing_mm.col > 0.0)) {
        throw Error(ErrorCode::BadSpacing, "grid spacing must be positive");
    }
    if (values.size() != rows * cols) {
        throw Error(ErrorCode::SchemaError, "grid value count does not match rows*cols");
    }
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw Error(ErrorCode::SchemaError, "grid contains a non-finite value");
        }
    }
}

std::size_t LabelMask::count(std::uint8_t value) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), value));
}

const LabelMask* MapEntry::mask(std::string_view source) const {
    for (const auto& m : masks) {
        if (m.source == source) {
            return &m;
        }
    }
    return nullptr;
}

std::optional<Subset> Cohort::subset_of(const std::string& subject_id) const {
    auto it = split.find(subject_id);
    if (it == split.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::size_t Cohort::map_count() const {
    std::size_t n = 0;
    for (const auto& s : subjects) {
        n += s.maps.size();
    }
    return n;
}

SubsetFilter SubsetFilter::parse(std::string_view text) {
    if (text.empty() || text == "all") {
        return all();
    }
    std::set<Subset> subsets;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto pos = text.find('+', start);
        const auto part = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        try {
            subsets.insert(parse_subset(part));
        } catch (const Error&) {
            throw Error(ErrorCode::InvalidArgument, "bad subset selector '" + std::string(text) + "'");
        }
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return SubsetFilter(std::move(subsets));
}

bool SubsetFilter::accepts(std::optional<Subset> s) const {
    if (subsets_.empty()) {
        return true;
    }
    return s && subsets_.count(*s) > 0;
}

std::string SubsetFilter::to_string() const {
    if (subsets_.empty()) {
        return "all";
    }
    std::string out;
    for (Subset s : subsets_) {
        if (!out.empty()) {
            out += '+';
        }
        out += myomap::to_string(s);
    }
    return out;
}

// ---- payload files ----------------------------------------------------------

PixelGrid read_map_file(const fs::path& path) {
    const ojson doc = read_json(path);
    const auto header = read_header(doc, path);
    PixelGrid grid;
    grid.rows = header.rows;
    grid.cols = header.cols;
    grid.spacing_mm = header.spacing;
    grid.values = get_field<std::vector<double>>(doc, "values", path);
    if (grid.values.size() != grid.rows * grid.cols) {
        throw Error(ErrorCode::SchemaError, path.string() + ": values length != rows*cols");
    }
    for (double v : grid.values) {
        if (!std::isfinite(v)) {
            throw Error(ErrorCode::SchemaError, path.string() + ": non-finite value");
        }
    }
    return grid;
}

LabelMask read_mask_file(const fs::path& path, std::string source) {
    const ojson doc = read_json(path);
    const auto header = read_header(doc, path);
    LabelMask mask(std::move(source), header.rows, header.cols, header.spacing);
    if (!doc.contains("labels") || !doc["labels"].is_array()) {
        throw Error(ErrorCode::SchemaError, path.string() + ": missing 'labels' array");
    }
    const auto& labels = doc["labels"];
    if (labels.size() != header.rows * header.cols) {
        throw Error(ErrorCode::SchemaError, path.string() + ": labels length != rows*cols");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto& v = labels[i];
        if (!v.is_number_integer()) {
            throw Error(ErrorCode::LabelError, path.string() + ": non-integer label at index " + std::to_string(i));
        }
        const auto value = v.get<long long>();
        if (value < 0 || value > 2) {
            throw Error(ErrorCode::LabelError,
                        path.string() + ": label " + std::to_string(value) + " at index " + std::to_string(i));
        }
        mask.labels[i] = static_cast<std::uint8_t>(value);
    }
    return mask;
}

void write_map_file(const fs::path& path, const PixelGrid& grid) {
    json doc = header_json(grid.rows, grid.cols, grid.spacing_mm);
    doc["values"] = grid.values;
    write_text(path, doc.dump());
}

void write_mask_file(const fs::path& path, const LabelMask& mask) {
    json doc = header_json(mask.rows, mask.cols, mask.spacing_mm);
    std::vector<int> labels(mask.labels.begin(), mask.labels.end());
    doc["labels"] = labels;
    write_text(path, doc.dump());
}

// ---- manifest ---------------------------------------------------------------

Cohort load_cohort(const fs::path& manifest_path) {
    if (!fs::exists(manifest_path)) {
        throw Error(ErrorCode::MissingFile, "manifest not found: " + manifest_path.string());
    }
    const ojson doc = read_json(manifest_path);
    const fs::path base = manifest_path.parent_path();
    if (!doc.is_object() || !doc.contains("subjects") || !doc["subjects"].is_array()) {
        throw Error(ErrorCode::SchemaError, manifest_path.string() + ": top level must hold a 'subjects' array");
    }

    auto resolve = [&](const std::string& rel) {
        fs::path p = base / rel;
        if (!fs::exists(p)) {
            throw Error(ErrorCode::MissingFile, "referenced file not found: " + p.string());
        }
        return p;
    };

    Cohort cohort;
    for (const auto& s : doc["subjects"]) {
        Subject subject;
        subject.subject_id = get_field<std::string>(s, "subject_id", manifest_path);
        subject.diagnosis = parse_diagnosis(get_field<std::string>(s, "diagnosis", manifest_path));
        if (!s.contains("maps") || !s["maps"].is_array()) {
            throw Error(ErrorCode::SchemaError, "subject " + subject.subject_id + ": missing 'maps' array");
        }
        for (const auto& m : s["maps"]) {
            MapEntry entry;
            entry.map.map_id = get_field<std::string>(m, "map_id", manifest_path);
            entry.map.subject_id = subject.subject_id;
            entry.map.modality = parse_modality(get_field<std::string>(m, "modality", manifest_path));
            entry.map.slice_location = m.contains("slice_location")
                                           ? parse_slice_location(get_field<std::string>(m, "slice_location", manifest_path))
                                           : SliceLocation::Unknown;
            entry.map.grid = read_map_file(resolve(get_field<std::string>(m, "map_file", manifest_path)));
            if (m.contains("masks")) {
                if (!m["masks"].is_object()) {
                    throw Error(ErrorCode::SchemaError, "map " + entry.map.map_id + ": 'masks' must be an object");
                }
                for (const auto& [source, rel] : m["masks"].items()) {
                    if (!rel.is_string()) {
                        throw Error(ErrorCode::SchemaError, "map " + entry.map.map_id + ": mask path must be a string");
                    }
                    LabelMask mask = read_mask_file(resolve(rel.get<std::string>()), source);
                    if (!mask.same_shape(entry.map.grid)) {
                        throw Error(ErrorCode::ShapeMismatch,
                                    "map " + entry.map.map_id + ": mask '" + source + "' is " + std::to_string(mask.rows) +
                                        "x" + std::to_string(mask.cols) + ", map is " +
                                        std::to_string(entry.map.grid.rows) + "x" + std::to_string(entry.map.grid.cols));
                    }
                    entry.masks.push_back(std::move(mask));
                }
            }
            subject.maps.push_back(std::move(entry));
        }
        cohort.subjects.push_back(std::move(subject));
    }

    if (doc.contains("split")) {
        if (!doc["split"].is_object()) {
            throw Error(ErrorCode::SchemaError, "'split' must be an object");
        }
        for (const auto& [id, value] : doc["split"].items()) {
            if (!value.is_string()) {
                throw Error(ErrorCode::SchemaError, "split entry for " + id + " must be a string");
            }
            cohort.split[id] = parse_subset(value.get<std::string>());
        }
    }
    return cohort;
}

fs::path save_cohort(const Cohort& cohort, const fs::path& dir) {
    auto check_component = [](const std::string& s, const char* what) {
        if (s.empty() || s.find_first_of("/\\") != std::string::npos || s == "." || s == "..") {
            throw Error(ErrorCode::InvalidArgument, std::string("cannot use ") + what + " '" + s + "' as a file name");
        }
    };

    fs::create_directories(dir / "maps");
    fs::create_directories(dir / "masks");
    ojson subjects = ojson::array();
    for (const auto& subject : cohort.subjects) {
        ojson s;
        s["subject_id"] = subject.subject_id;
        s["diagnosis"] = to_string(subject.diagnosis);
        ojson maps = ojson::array();
        for (const auto& entry : subject.maps) {
            check_component(entry.map.map_id, "map_id");
            const std::string map_rel = "maps/" + entry.map.map_id + ".json";
            write_map_file(dir / map_rel, entry.map.grid);
            ojson m;
            m["map_id"] = entry.map.map_id;
            m["modality"] = to_string(entry.map.modality);
            m["slice_location"] = to_string(entry.map.slice_location);
            m["map_file"] = map_rel;
            ojson masks = ojson::object();
            for (const auto& mask : entry.masks) {
                check_component(mask.source, "mask source");
                const std::string mask_rel = "masks/" + entry.map.map_id + "." + mask.source + ".json";
                write_mask_file(dir / mask_rel, mask);
                masks[mask.source] = mask_rel;
            }
            m["masks"] = std::move(masks);
            maps.push_back(std::move(m));
        }
        s["maps"] = std::move(maps);
        subjects.push_back(std::move(s));
    }
    ojson doc;
    doc["subjects"] = std::move(subjects);
    if (!cohort.split.empty()) {
        ojson split = ojson::object();
        for (const auto& [id, subset] : cohort.split) {
            split[id] = to_string(subset);
        }
        doc["split"] = std::move(split);
    }
    const fs::path manifest = dir / "manifest.json";
    write_text(manifest, doc.dump(2));
    return manifest;
}

// ---- validation -------------------------------------------------------------

std::vector<ValidationIssue> validate_cohort(const Cohort& cohort) {
    std::vector<ValidationIssue> issues;
    auto add = [&](const std::string& subject, const std::string& map, std::string rule) {
        issues.push_back({subject, map, std::move(rule)});
    };

    std::unordered_map<std::string, int> map_id_counts;
    std::unordered_set<std::string> subject_ids;
    for (const auto& subject : cohort.subjects) {
        for (const auto& entry : subject.maps) {
            ++map_id_counts[entry.map.map_id];
        }
    }

    for (const auto& subject : cohort.subjects) {
        if (subject.subject_id.empty()) {
            add(subject.subject_id, "", "empty subject_id");
        }
        if (!subject_ids.insert(subject.subject_id).second) {
            add(subject.subject_id, "", "duplicate subject_id");
        }
        bool has_native = false;
        for (const auto& entry : subject.maps) {
            const auto& map = entry.map;
            if (map.map_id.empty()) {
                add(subject.subject_id, map.map_id, "empty map_id");
            }
            if (map_id_counts[map.map_id] > 1) {
                add(subject.subject_id, map.map_id, "duplicate map_id");
            }
            if (map.subject_id != subject.subject_id) {
                add(subject.subject_id, map.map_id, "map subject_id mismatch");
            }
            if (map.modality == Modality::T1Native || map.modality == Modality::T2) {
                has_native = true;
            }
            const auto& g = map.grid;
            if (g.rows < 1 || g.cols < 1 || g.values.size() != g.rows * g.cols) {
                add(subject.subject_id, map.map_id, "grid size mismatch");
            }
            if (!(g.spacing_mm.row > 0.0) || !(g.spacing_mm.col > 0.0)) {
                add(subject.subject_id, map.map_id, "non-positive spacing");
            }
            if (std::any_of(g.values.begin(), g.values.end(), [](double v) { return !std::isfinite(v); })) {
                add(subject.subject_id, map.map_id, "non-finite value");
            } else if (std::any_of(g.values.begin(), g.values.end(), [](double v) { return v < 0.0; })) {
                add(subject.subject_id, map.map_id, "negative relaxation value");
            }
            std::unordered_set<std::string> sources;
            for (const auto& mask : entry.masks) {
                if (!sources.insert(mask.source).second) {
                    add(subject.subject_id, map.map_id, "duplicate mask source '" + mask.source + "'");
                }
                if (!mask.same_shape(g) || mask.labels.size() != mask.rows * mask.cols) {
                    add(subject.subject_id, map.map_id, "mask shape mismatch ('" + mask.source + "')");
                }
                if (std::any_of(mask.labels.begin(), mask.labels.end(), [](std::uint8_t v) { return v > 2; })) {
                    add(subject.subject_id, map.map_id, "label outside {0,1,2} ('" + mask.source + "')");
                }
            }
        }
        if (!has_native) {
            add(subject.subject_id, "", "no native modality");
        }
        if (!cohort.split.empty() && cohort.split.count(subject.subject_id) == 0) {
            add(subject.subject_id, "", "missing from split");
        }
    }
    for (const auto& [id, subset] : cohort.split) {
        if (subject_ids.count(id) == 0) {
            add(id, "", "split names unknown subject");
        }
    }
    return issues;
}

// ---- splitting --------------------------------------------------------------

std::vector<std::size_t> largest_remainder(std::size_t total, const std::vector<double>& fractions) {
    std::vector<std::size_t> counts(fractions.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        const double quota = fractions[i] * static_cast<double>(total);
        counts[i] = static_cast<std::size_t>(std::floor(quota));
        assigned += counts[i];
        remainders.emplace_back(quota - std::floor(quota), i);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < total && k < remainders.size(); ++k, ++assigned) {
        ++counts[remainders[k].second];
    }
    return counts;
}

namespace {

// Rounds the class-by-subset quota table so that each row sums to the class
// size and each column sums to the subset total. Cells only ever round to
// floor or ceil of their quota, with the surplus units handed out in order of
// descending remainder. Returns nullopt if no such rounding is found.
std::optional<std::vector<std::vector<std::size_t>>> controlled_round(
    const std::vector<std::size_t>& class_sizes, const std::vector<double>& fractions,
    const std::vector<std::size_t>& column_totals) {
    const std::size_t rows = class_sizes.size();
    const std::size_t cols = fractions.size();
    std::vector<std::vector<std::size_t>> table(rows, std::vector<std::size_t>(cols));
    std::vector<std::vector<double>> frac(rows, std::vector<double>(cols));
    std::vector<long long> row_need(rows);
    std::vector<long long> col_need(cols);
    for (std::size_t s = 0; s < cols; ++s) {
        col_need[s] = static_cast<long long>(column_totals[s]);
    }
    for (std::size_t c = 0; c < rows; ++c) {
        row_need[c] = static_cast<long long>(class_sizes[c]);
        for (std::size_t s = 0; s < cols; ++s) {
            const double quota = fractions[s] * static_cast<double>(class_sizes[c]);
            table[c][s] = static_cast<std::size_t>(std::floor(quota));
            frac[c][s] = quota - std::floor(quota);
            row_need[c] -= static_cast<long long>(table[c][s]);
            col_need[s] -= static_cast<long long>(table[c][s]);
        }
    }
    if (std::any_of(col_need.begin(), col_need.end(), [](long long v) { return v < 0; })) {
        return std::nullopt;
    }

    struct Cell {
        double frac;
        std::size_t c;
        std::size_t s;
    };
    std::vector<Cell> cells;
    for (std::size_t c = 0; c < rows; ++c) {
        for (std::size_t s = 0; s < cols; ++s) {
            if (frac[c][s] > 0.0) {
                cells.push_back({frac[c][s], c, s});
            }
        }
    }
    std::stable_sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) { return a.frac > b.frac; });

    std::vector<std::vector<bool>> bumped(rows, std::vector<bool>(cols, false));
    for (const auto& cell : cells) {
        if (row_need[cell.c] > 0 && col_need[cell.s] > 0) {
            bumped[cell.c][cell.s] = true;
            --row_need[cell.c];
            --col_need[cell.s];
        }
    }

    // Greedy may strand a row; repair with augmenting paths over eligible cells.
    auto eligible = [&](std::size_t c, std::size_t s) { return frac[c][s] > 0.0; };
    for (std::size_t c0 = 0; c0 < rows; ++c0) {
        while (row_need[c0] > 0) {
            std::vector<bool> seen_col(cols, false);
            std::function<bool(std::size_t)> augment = [&](std::size_t c) -> bool {
                for (std::size_t s = 0; s < cols; ++s) {
                    if (!eligible(c, s) || bumped[c][s] || seen_col[s]) {
                        continue;
                    }
                    seen_col[s] = true;
                    if (col_need[s] > 0) {
                        bumped[c][s] = true;
                        --col_need[s];
                        return true;
                    }
                    for (std::size_t c2 = 0; c2 < rows; ++c2) {
                        if (c2 != c && bumped[c2][s]) {
                            bumped[c2][s] = false;
                            bumped[c][s] = true;
                            if (augment(c2)) {
                                return true;
                            }
                            bumped[c][s] = false;
                            bumped[c2][s] = true;
                        }
                    }
                }
                return false;
            };
            if (!augment(c0)) {
                return std::nullopt;
            }
            --row_need[c0];
        }
    }
    for (std::size_t c = 0; c < rows; ++c) {
        for (std::size_t s = 0; s < cols; ++s) {
            table[c][s] += bumped[c][s] ? 1 : 0;
        }
    }
    return table;
}

}  // namespace

Cohort split_cohort(const Cohort& cohort, SplitFractions fractions, std::uint64_t seed, bool stratify) {
    const std::vector<double> f{fractions.train, fractions.validation, fractions.test};
    if (std::any_of(f.begin(), f.end(), [](double v) { return !(v > 0.0) || !std::isfinite(v); })) {
        throw Error(ErrorCode::BadFractions, "split fractions must be positive");
    }
    if (std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-9) {
        throw Error(ErrorCode::BadFractions, "split fractions must sum to 1");
    }

    // Groups of subject indices, each in subject_id order before shuffling.
    std::vector<std::vector<std::size_t>> groups;
    if (stratify) {
        for (Diagnosis d : kAllDiagnoses) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < cohort.subjects.size(); ++i) {
                if (cohort.subjects[i].diagnosis == d) {
                    members.push_back(i);
                }
            }
            if (members.empty()) {
                throw Error(ErrorCode::EmptyClass, "no subjects with diagnosis '" + std::string(to_string(d)) + "'");
            }
            groups.push_back(std::move(members));
        }
    } else {
        std::vector<std::size_t> all(cohort.subjects.size());
        std::iota(all.begin(), all.end(), 0);
        groups.push_back(std::move(all));
    }

    std::vector<std::size_t> sizes;
    for (auto& g : groups) {
        std::sort(g.begin(), g.end(), [&](std::size_t a, std::size_t b) {
            return cohort.subjects[a].subject_id < cohort.subjects[b].subject_id;
        });
        sizes.push_back(g.size());
    }

    std::vector<std::vector<std::size_t>> counts;
    if (groups.size() == 1) {
        counts.push_back(largest_remainder(sizes[0], f));
    } else {
        const auto totals = largest_remainder(cohort.subjects.size(), f);
        if (auto table = controlled_round(sizes, f, totals)) {
            counts = std::move(*table);
        } else {
            for (std::size_t n : sizes) {
                counts.push_back(largest_remainder(n, f));
            }
        }
    }

    Cohort out = cohort;
    out.split.clear();
    Rng rng(splitmix64(seed));
    for (std::size_t g = 0; g < groups.size(); ++g) {
        auto members = groups[g];
        rng.shuffle(members.begin(), members.end());
        std::size_t k = 0;
        for (std::size_t s = 0; s < 3; ++s) {
            for (std::size_t j = 0; j < counts[g][s]; ++j, ++k) {
                out.split[cohort.subjects[members[k]].subject_id] = kAllSubsets[s];
            }
        }
    }
    return out;
}

}  // namespace myomap
