#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "json.hpp"
#include "myomap/classifiers.hpp"
#include "myomap/features.hpp"
#include "myomap/phantom.hpp"
#include "myomap/roc.hpp"
#include "myomap/stats_eval.hpp"
#include "temp_dir.hpp"

using namespace myomap;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "myomap");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out, err;
    const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// One synthetic cohort and its feature table shared by all tests.
class CliPipeline : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = new testutil::TempDir();
        phantom::PhantomSpec spec;
        spec.class_counts = {14, 10, 6, 6};
        spec.grid_size = 48;
        spec.blood_radius_mm = spec.myo_inner_mm = 20;
        spec.myo_outer_mm = 28;
        std::ofstream(root() / "spec.json") << phantom::spec_to_json(spec);
        const auto r = run({"synth", "--spec", (root() / "spec.json").string(), "--seed", "5", "--out",
                            (root() / "cohort").string()});
        ASSERT_EQ(r.code, cli::kExitOk) << r.err;
        const auto f = run({"features", "--manifest", manifest().string(), "--out", (root() / "feat").string()});
        ASSERT_EQ(f.code, cli::kExitOk) << f.err;
    }
    static void TearDownTestSuite() { delete dir_; }

    static fs::path root() { return dir_->path(); }
    static fs::path manifest() { return root() / "cohort" / "manifest.json"; }
    static fs::path table() { return root() / "feat" / "features.csv"; }

    static testutil::TempDir* dir_;
};

testutil::TempDir* CliPipeline::dir_ = nullptr;

}  // namespace

TEST_F(CliPipeline, SynthWritesLoadableCohortAndRunRecord) {
    const auto cohort = load_cohort(manifest());
    EXPECT_EQ(cohort.subjects.size(), 36u);
    const auto record = nlohmann::json::parse(slurp(root() / "cohort" / "run_record.json"));
    EXPECT_EQ(record["command"], "synth");
    EXPECT_EQ(record["seed"], 5);
    EXPECT_EQ(record["status"], "ok");
    EXPECT_TRUE(record.contains("version"));
    EXPECT_TRUE(record["config"].is_object());
    EXPECT_FALSE(record["outputs"].empty());
}

TEST_F(CliPipeline, ValidateReportsNoIssues) {
    const auto r = run({"validate", "--manifest", manifest().string()});
    EXPECT_EQ(r.code, cli::kExitOk) << r.err;
}

TEST_F(CliPipeline, FeaturesTableReloads) {
    const auto t = features::read_features_csv(table());
    EXPECT_EQ(t.records.size(), 36u);
    EXPECT_EQ(t.complete_features(SubsetFilter::all()).size(), 8u);
}

TEST_F(CliPipeline, RocEmitsEightSummaryRowsOnTrainValidation) {
    const auto out = root() / "roc";
    const auto r = run({"roc", "--table", table().string(), "--out", out.string()});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    const auto rows = roc::read_summary_csv(out / "roc_summary.csv");
    ASSERT_EQ(rows.size(), 8u);
    for (const auto& row : rows) {
        EXPECT_LE(row.summary.ci_lo, row.summary.auc);
        EXPECT_GE(row.summary.ci_hi, row.summary.auc);
        EXPECT_TRUE(fs::exists(out / "roc_curves" / (row.summary.feature + ".csv")));
        EXPECT_EQ(roc::read_cutoff_rule(out / "cutoffs" / (row.summary.feature + ".json")).cutoff, row.rule.cutoff);
    }
}

TEST_F(CliPipeline, RocOnTestSubsetIsRefused) {
    const auto r = run({"roc", "--table", table().string(), "--out", (root() / "roc_bad").string(), "--subset",
                        "test"});
    EXPECT_EQ(r.code, cli::kExitDataError);
    EXPECT_NE(r.err.find("SUBSET_VIOLATION"), std::string::npos) << r.err;
}

TEST_F(CliPipeline, TrainEvalCompareChain) {
    const auto model_dir = root() / "train";
    const auto t = run({"train", "--table", table().string(), "--out", model_dir.string(), "--classifier", "rf",
                        "--seed", "3", "--features", "all", "--features", "top2-per-modality"});
    ASSERT_EQ(t.code, cli::kExitOk) << t.err;
    EXPECT_NO_THROW(classifiers::load_model(model_dir / "model.json"));
    EXPECT_TRUE(fs::exists(model_dir / "search_log.csv"));

    const auto e = run({"eval", "--table", table().string(), "--model", (model_dir / "model.json").string(),
                        "--out", (root() / "eval").string()});
    ASSERT_EQ(e.code, cli::kExitOk) << e.err;
    const auto reports = stats::read_reports_json(root() / "eval" / "eval_report.json");
    ASSERT_EQ(reports.size(), 1u);
    const auto& rep = reports[0];
    if (rep.precision + rep.recall > 0) {
        EXPECT_NEAR(rep.f1, 2 * rep.precision * rep.recall / (rep.precision + rep.recall), 1e-9);
    }
    EXPECT_EQ(rep.subset, "test");

    const auto c = run({"cutoff-classify", "--table", table().string(), "--out", (root() / "cut").string(),
                        "--features", "t1_uq"});
    ASSERT_EQ(c.code, cli::kExitOk) << c.err;
    const auto cut = stats::read_reports_json(root() / "cut" / "cutoff_report.json");
    ASSERT_EQ(cut.size(), 1u);
    EXPECT_TRUE(cut[0].cutoff.has_value());

    const auto self = run({"compare", "--report-a", (root() / "eval" / "eval_report.json").string(), "--report-b",
                           (root() / "eval" / "eval_report.json").string(), "--out", (root() / "cmp_self").string()});
    ASSERT_EQ(self.code, cli::kExitOk) << self.err;
    const auto rows = stats::read_comparisons_csv(root() / "cmp_self" / "comparison.csv");
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].result.p_two_sided, 1.0);

    const auto cross = run({"compare", "--report-a", (root() / "eval" / "eval_report.json").string(), "--report-b",
                            (root() / "cut" / "cutoff_report.json").string(), "--out", (root() / "cmp").string()});
    EXPECT_EQ(cross.code, cli::kExitOk) << cross.err;
}

TEST_F(CliPipeline, RepeatedRunsAreByteIdentical) {
    for (const char* name : {"t1", "t2"}) {
        const auto r = run({"train", "--table", table().string(), "--out", (root() / name).string(), "--classifier",
                            "logreg", "--seed", "9", "--threads", name[1] == '1' ? "1" : "3"});
        ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    }
    EXPECT_EQ(slurp(root() / "t1" / "model.json"), slurp(root() / "t2" / "model.json"));
    EXPECT_EQ(slurp(root() / "t1" / "search_log.csv"), slurp(root() / "t2" / "search_log.csv"));
}

TEST_F(CliPipeline, AgreeAndBlandAltman) {
    const auto a = run({"agree", "--manifest", manifest().string(), "--out", (root() / "agree").string(), "--pair",
                        "gt:obs1", "--pair", "obs1:obs2"});
    ASSERT_EQ(a.code, cli::kExitOk) << a.err;
    EXPECT_TRUE(fs::exists(root() / "agree" / "agreement.csv"));
    const auto f2 = run({"features", "--manifest", manifest().string(), "--out", (root() / "feat_obs1").string(),
                         "--source", "obs1"});
    ASSERT_EQ(f2.code, cli::kExitOk) << f2.err;
    const auto b = run({"bland-altman", "--table", table().string(), "--table-b",
                        (root() / "feat_obs1" / "features.csv").string(), "--out", (root() / "ba").string(),
                        "--features", "t1_a,t2_a"});
    ASSERT_EQ(b.code, cli::kExitOk) << b.err;
    EXPECT_TRUE(fs::exists(root() / "ba" / "bland_altman" / "t1_a.csv"));
    EXPECT_TRUE(fs::exists(root() / "ba" / "bland_altman_summary.csv"));
}

TEST_F(CliPipeline, PreprocessWritesCohort) {
    const auto r = run({"preprocess", "--manifest", manifest().string(), "--out", (root() / "prep").string(),
                        "--crop-mm", "64"});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    const auto c = load_cohort(root() / "prep" / "manifest.json");
    EXPECT_EQ(c.subjects[0].maps[0].map.grid.rows, 64u);
}

TEST(CliUsage, MissingRequiredFlagAndUnknownCommand) {
    EXPECT_EQ(run({"roc", "--out", "/tmp/x"}).code, cli::kExitUsageError);
    EXPECT_EQ(run({"frobnicate"}).code, cli::kExitUsageError);
    EXPECT_EQ(run({}).code, cli::kExitUsageError);
}

TEST(CliUsage, UnknownFeatureNameIsUsageError) {
    testutil::TempDir dir;
    features::FeatureTable t;
    std::ofstream(dir / "empty.csv") << "subject_id,split,diseased,t1_a,t1_lq,t1_m,t1_uq,t2_a,t2_lq,t2_m,t2_uq\n";
    const auto r = run({"roc", "--table", (dir / "empty.csv").string(), "--out", (dir / "o").string(), "--features",
                        "t9_zz"});
    EXPECT_EQ(r.code, cli::kExitUsageError);
}

TEST(CliUsage, VersionFlag) {
    const auto r = run({"--version"});
    EXPECT_EQ(r.code, cli::kExitOk);
    EXPECT_FALSE(r.out.empty());
}
