#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>

#include "fixtures.hpp"
#include "json.hpp"
#include "myomap/cohort.hpp"
#include "myomap/error.hpp"
#include "temp_dir.hpp"

using namespace myomap;
using nlohmann::json;
using testutil::TempDir;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an Error";
    return ErrorCode::InvalidArgument;
}

void write_json(const std::filesystem::path& p, const json& doc) {
    std::ofstream(p) << doc.dump();
}

// Two subjects with three maps each, written by hand.
json write_small_manifest(const TempDir& dir) {
    json subjects = json::array();
    for (const std::string sid : {"A", "B"}) {
        json maps = json::array();
        int k = 0;
        for (const std::string mod : {"t1_native", "t1_post", "t2"}) {
            const std::string id = sid + "_" + std::to_string(k++);
            write_map_file(dir / (id + ".json"), PixelGrid(3, 3, {1.0, 1.0}, 900.0));
            write_mask_file(dir / (id + "_gt.json"), LabelMask("gt", 3, 3, {1.0, 1.0}));
            maps.push_back({{"map_id", id},
                            {"modality", mod},
                            {"slice_location", "mid"},
                            {"map_file", id + ".json"},
                            {"masks", {{"gt", id + "_gt.json"}}}});
        }
        subjects.push_back({{"subject_id", sid}, {"diagnosis", sid == "A" ? "normal" : "sarcoidosis"}, {"maps", maps}});
    }
    json doc = {{"subjects", subjects}, {"split", {{"A", "train"}, {"B", "test"}}}};
    write_json(dir / "manifest.json", doc);
    return doc;
}

}  // namespace

TEST(LoadCohort, CountsSubjectsAndMaps) {
    TempDir dir;
    write_small_manifest(dir);
    const auto cohort = load_cohort(dir / "manifest.json");
    ASSERT_EQ(cohort.subjects.size(), 2u);
    EXPECT_EQ(cohort.map_count(), 6u);
    EXPECT_FALSE(cohort.subjects[0].diseased());
    EXPECT_TRUE(cohort.subjects[1].diseased());
    EXPECT_EQ(cohort.subset_of("B"), Subset::Test);
    EXPECT_TRUE(validate_cohort(cohort).empty());
}

TEST(LoadCohort, MaskShapeDifferentFromMapIsShapeMismatch) {
    TempDir dir;
    auto doc = write_small_manifest(dir);
    write_map_file(dir / "big.json", PixelGrid(12, 12, {1.0, 1.0}, 1.0));
    write_mask_file(dir / "small.json", LabelMask("gt", 10, 10, {1.0, 1.0}));
    doc["subjects"][0]["maps"][0]["map_file"] = "big.json";
    doc["subjects"][0]["maps"][0]["masks"]["gt"] = "small.json";
    write_json(dir / "manifest.json", doc);
    EXPECT_EQ(code_of([&] { load_cohort(dir / "manifest.json"); }), ErrorCode::ShapeMismatch);
}

TEST(LoadCohort, LabelThreeIsLabelError) {
    TempDir dir;
    write_small_manifest(dir);
    json mask = {{"rows", 3}, {"cols", 3}, {"spacing_mm", {1.0, 1.0}}, {"labels", {0, 0, 0, 0, 3, 0, 0, 0, 0}}};
    write_json(dir / "A_0_gt.json", mask);
    EXPECT_EQ(code_of([&] { load_cohort(dir / "manifest.json"); }), ErrorCode::LabelError);
}

TEST(LoadCohort, MissingReferencedFileAndBadSchema) {
    TempDir dir;
    write_small_manifest(dir);
    std::filesystem::remove(dir / "B_2.json");
    EXPECT_EQ(code_of([&] { load_cohort(dir / "manifest.json"); }), ErrorCode::MissingFile);
    write_json(dir / "manifest.json", json{{"people", json::array()}});
    EXPECT_EQ(code_of([&] { load_cohort(dir / "manifest.json"); }), ErrorCode::SchemaError);
    EXPECT_EQ(code_of([&] { load_cohort(dir / "absent.json"); }), ErrorCode::MissingFile);
}

TEST(SaveCohort, RoundTripIsLosslessAndByteStable) {
    TempDir dir;
    auto cohort = testutil::make_cohort({Diagnosis::Normal, Diagnosis::Myocarditis, Diagnosis::Systemic});
    cohort.subjects[1].maps[0].map.grid.values[5] = 1234.5678901234567;
    cohort.subjects[2].maps[1].map.grid.values[0] = 0.1;
    cohort.split = {{"S000", Subset::Train}, {"S001", Subset::Validation}, {"S002", Subset::Test}};
    const auto manifest = save_cohort(cohort, dir / "a");
    const auto loaded = load_cohort(manifest);
    EXPECT_EQ(loaded, cohort);
    save_cohort(loaded, dir / "b");
    std::ifstream fa(dir / "a" / "manifest.json"), fb(dir / "b" / "manifest.json");
    const std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
    EXPECT_EQ(sa, sb);
}

TEST(ValidateCohort, WellFormedHasNoIssues) {
    auto cohort = testutil::make_cohort({Diagnosis::Normal, Diagnosis::Myocarditis, Diagnosis::Sarcoidosis});
    cohort.split = {{"S000", Subset::Train}, {"S001", Subset::Train}, {"S002", Subset::Test}};
    EXPECT_TRUE(validate_cohort(cohort).empty());
}

TEST(ValidateCohort, OnlyPostContrastMapsIsFlagged) {
    auto cohort = testutil::make_cohort({Diagnosis::Normal, Diagnosis::Myocarditis});
    cohort.subjects[1] = testutil::make_subject("S001", Diagnosis::Myocarditis, {Modality::T1Post, Modality::T1Post});
    const auto issues = validate_cohort(cohort);
    ASSERT_EQ(issues.size(), 1u);
    EXPECT_EQ(issues[0].subject_id, "S001");
    EXPECT_EQ(issues[0].rule, "no native modality");
}

TEST(ValidateCohort, DuplicateMapIdAcrossSubjectsIsFlagged) {
    auto cohort = testutil::make_cohort({Diagnosis::Normal, Diagnosis::Myocarditis});
    cohort.subjects[1].maps[0].map.map_id = cohort.subjects[0].maps[0].map.map_id;
    const auto issues = validate_cohort(cohort);
    // Both occurrences are reported.
    ASSERT_EQ(issues.size(), 2u);
    for (const auto& issue : issues) {
        EXPECT_EQ(issue.rule, "duplicate map_id");
        EXPECT_EQ(issue.map_id, "S000_m0");
    }
    EXPECT_EQ(issues[0].subject_id, "S000");
    EXPECT_EQ(issues[1].subject_id, "S001");
}

TEST(ValidateCohort, SplitThatMissesASubjectIsFlagged) {
    auto cohort = testutil::make_cohort({Diagnosis::Normal, Diagnosis::Myocarditis});
    cohort.split = {{"S000", Subset::Train}};
    const auto issues = validate_cohort(cohort);
    ASSERT_EQ(issues.size(), 1u);
    EXPECT_EQ(issues[0].rule, "missing from split");
}

TEST(SplitCohort, StratifiedCountsForFourClassMix) {
    std::vector<Diagnosis> dx;
    const std::size_t sizes[] = {52, 49, 20, 23};
    for (std::size_t c = 0; c < 4; ++c) {
        dx.insert(dx.end(), sizes[c], kAllDiagnoses[c]);
    }
    const auto split = split_cohort(testutil::make_cohort(dx), {100.0 / 144, 15.0 / 144, 29.0 / 144}, 7, true);
    std::map<Diagnosis, std::array<int, 3>> counts;
    std::array<int, 3> totals{};
    for (const auto& s : split.subjects) {
        const auto k = static_cast<std::size_t>(*split.subset_of(s.subject_id));
        ++counts[s.diagnosis][k];
        ++totals[k];
    }
    EXPECT_EQ(counts[Diagnosis::Normal], (std::array<int, 3>{36, 6, 10}));
    EXPECT_EQ(counts[Diagnosis::Myocarditis], (std::array<int, 3>{34, 5, 10}));
    EXPECT_EQ(counts[Diagnosis::Sarcoidosis], (std::array<int, 3>{14, 2, 4}));
    EXPECT_EQ(counts[Diagnosis::Systemic], (std::array<int, 3>{16, 2, 5}));
    EXPECT_EQ(totals, (std::array<int, 3>{100, 15, 29}));
}

TEST(SplitCohort, SameSeedSameAssignment) {
    std::vector<Diagnosis> dx(10, Diagnosis::Normal);
    std::fill(dx.begin(), dx.begin() + 4, Diagnosis::Myocarditis);
    const auto c = testutil::make_cohort(dx);
    const auto a = split_cohort(c, {0.8, 0.1, 0.1}, 99, false);
    const auto b = split_cohort(c, {0.8, 0.1, 0.1}, 99, false);
    EXPECT_EQ(a.split, b.split);
    EXPECT_EQ(a.split.size(), 10u);
    const auto other = split_cohort(c, {0.8, 0.1, 0.1}, 100, false);
    EXPECT_EQ(other.split.size(), 10u);
}

TEST(SplitCohort, OneSubjectPerClassLandsWholeClassesInSubsets) {
    const auto c = testutil::make_cohort(
        {Diagnosis::Normal, Diagnosis::Myocarditis, Diagnosis::Sarcoidosis, Diagnosis::Systemic});
    const auto split = split_cohort(c, {0.5, 0.25, 0.25}, 3, true);
    std::array<int, 3> totals{};
    for (const auto& [id, subset] : split.split) {
        ++totals[static_cast<std::size_t>(subset)];
    }
    // Overall totals follow largest remainder of 4 over (0.5, 0.25, 0.25).
    EXPECT_EQ(totals, (std::array<int, 3>{2, 1, 1}));
}

TEST(SplitCohort, PartitionAndStratificationBoundHoldForManySeeds) {
    std::vector<Diagnosis> dx;
    const std::size_t sizes[] = {17, 9, 5, 3};
    for (std::size_t c = 0; c < 4; ++c) {
        dx.insert(dx.end(), sizes[c], kAllDiagnoses[c]);
    }
    const auto cohort = testutil::make_cohort(dx);
    const SplitFractions fr{0.6, 0.25, 0.15};
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const auto split = split_cohort(cohort, fr, seed, true);
        ASSERT_EQ(split.split.size(), dx.size());
        std::map<Diagnosis, std::array<double, 3>> counts;
        for (const auto& s : split.subjects) {
            counts[s.diagnosis][static_cast<std::size_t>(*split.subset_of(s.subject_id))] += 1;
        }
        const double f[] = {fr.train, fr.validation, fr.test};
        for (std::size_t c = 0; c < 4; ++c) {
            for (std::size_t k = 0; k < 3; ++k) {
                EXPECT_LT(std::abs(counts[kAllDiagnoses[c]][k] - f[k] * static_cast<double>(sizes[c])), 1.0);
            }
        }
    }
}

TEST(SplitCohort, RejectsBadFractionsAndEmptyClass) {
    const auto c = testutil::make_cohort({Diagnosis::Normal, Diagnosis::Myocarditis});
    EXPECT_EQ(code_of([&] { split_cohort(c, {0.5, 0.3, 0.3}, 1, false); }), ErrorCode::BadFractions);
    EXPECT_EQ(code_of([&] { split_cohort(c, {1.0, 0.0, 0.0}, 1, false); }), ErrorCode::BadFractions);
    EXPECT_EQ(code_of([&] { split_cohort(c, {0.5, 0.25, 0.25}, 1, true); }), ErrorCode::EmptyClass);
}

TEST(LargestRemainder, TiesGoToEarlierSlot) {
    EXPECT_EQ(largest_remainder(4, {0.5, 0.25, 0.25}), (std::vector<std::size_t>{2, 1, 1}));
    EXPECT_EQ(largest_remainder(1, {0.5, 0.25, 0.25}), (std::vector<std::size_t>{1, 0, 0}));
    EXPECT_EQ(largest_remainder(2, {1.0 / 3, 1.0 / 3, 1.0 / 3}), (std::vector<std::size_t>{1, 1, 0}));
}

TEST(SubsetFilter, ParsesCombinations) {
    const auto f = SubsetFilter::parse("train+validation");
    EXPECT_TRUE(f.includes(Subset::Train));
    EXPECT_TRUE(f.includes(Subset::Validation));
    EXPECT_FALSE(f.includes(Subset::Test));
    EXPECT_FALSE(f.accepts(std::nullopt));
    EXPECT_TRUE(SubsetFilter::parse("all").accepts(std::nullopt));
    EXPECT_EQ(code_of([] { SubsetFilter::parse("training"); }), ErrorCode::InvalidArgument);
}
