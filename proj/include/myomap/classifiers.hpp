#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "myomap/features.hpp"
#include "myomap/roc.hpp"
#include "myomap/stats_eval.hpp"

namespace myomap::classifiers {

enum class Kind { LogReg, Knn, SvmLinear, RandomForest, Perceptron };

inline constexpr Kind kAllKinds[] = {Kind::LogReg, Kind::Knn, Kind::SvmLinear, Kind::RandomForest, Kind::Perceptron};

/// "logreg", "knn", "svm", "rf", "perceptron".
std::string_view to_string(Kind kind);
/// Accepts the short names above and the upper-case enum spellings.
Kind parse_kind(std::string_view text);

/// Feature matrix of one subset, rows sorted by subject_id.
struct Dataset {
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> x;
    std::vector<bool> y;  ///< true = diseased
    std::vector<std::string> subject_ids;

    [[nodiscard]] std::size_t size() const noexcept { return x.size(); }
};

/// Throws MissingFeature if a selected record lacks one of the features.
Dataset make_dataset(const features::FeatureTable& table, const std::vector<std::string>& feature_names,
                     const SubsetFilter& subset);

inline constexpr double kSdFloor = 1e-9;

struct Standardizer {
    std::vector<double> mean;
    std::vector<double> sd;       ///< n-1 denominator, 1 where floored
    std::vector<bool> floored;    ///< sd was below kSdFloor

    [[nodiscard]] std::vector<double> apply(const std::vector<double>& row) const;
    [[nodiscard]] std::vector<std::vector<double>> apply(const std::vector<std::vector<double>>& rows) const;

    bool operator==(const Standardizer&) const = default;
};

/// Throws EmptyTrain.
Standardizer fit_standardizer(const Dataset& train);

/// Hyperparameters by name. Keys per kind: logreg "lambda"; knn "k";
/// svm "lambda"; rf "n_trees", "max_depth" (0 = unlimited), "min_leaf";
/// perceptron "eta", "epochs".
using Hyperparams = std::map<std::string, double>;

/// Defaults merged under the given values; throws InvalidArgument for an
/// unknown key or an out-of-range value.
Hyperparams resolve_hyperparams(Kind kind, const Hyperparams& given);

// ---- random forest internals -----------------------------------------------

struct TreeNode {
    int feature = -1;  ///< -1 for a leaf
    double threshold = 0.0;  ///< left iff value <= threshold
    int left = -1;
    int right = -1;
    std::size_t votes_negative = 0;
    std::size_t votes_positive = 0;

    bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  ///< nodes[0] is the root

    /// Majority class of the reached leaf; ties go to diseased.
    [[nodiscard]] bool predict(const std::vector<double>& row) const;
    [[nodiscard]] std::size_t depth() const;

    bool operator==(const DecisionTree&) const = default;
};

struct TreeSettings {
    std::size_t max_depth = 0;  ///< 0 = unlimited
    std::size_t min_leaf = 1;
    std::size_t candidate_features = 1;
};

/// Bootstrap sample (with replacement) drawn for tree `tree_index`.
std::vector<std::size_t> bootstrap_indices(std::uint64_t seed, std::size_t tree_index, std::size_t n);

/// CART with Gini impurity on rows x[idx].
DecisionTree grow_tree(const std::vector<std::vector<double>>& x, const std::vector<bool>& y,
                       const std::vector<std::size_t>& idx, const TreeSettings& settings, std::uint64_t tree_seed);

std::vector<DecisionTree> train_forest(const std::vector<std::vector<double>>& x, const std::vector<bool>& y,
                                       std::size_t n_trees, std::size_t max_depth, std::size_t min_leaf,
                                       std::uint64_t seed);

/// Majority of tree votes; ties go to diseased.
bool forest_predict(const std::vector<DecisionTree>& forest, const std::vector<double>& row);

// ---- linear model objectives -------------------------------------------------

/// theta = (w_1..w_d, b). Mean negative log-likelihood + (lambda/2)|w|^2.
double logreg_loss(const std::vector<std::vector<double>>& x, const std::vector<bool>& y, double lambda,
                   const std::vector<double>& theta);
std::vector<double> logreg_gradient(const std::vector<std::vector<double>>& x, const std::vector<bool>& y,
                                    double lambda, const std::vector<double>& theta);

struct LogRegFit {
    std::vector<double> theta;
    std::vector<double> loss_trace;  ///< loss before the first and after every iteration
    std::vector<std::string> log;    ///< step-halving events
};

inline constexpr std::size_t kLogRegIterations = 5000;
inline constexpr double kLogRegStep = 0.1;

LogRegFit fit_logreg(const std::vector<std::vector<double>>& x, const std::vector<bool>& y, double lambda,
                     std::size_t iterations = kLogRegIterations, double step = kLogRegStep);

/// (lambda/2)|w|^2 + mean hinge loss; theta = (w, b).
double svm_objective(const std::vector<std::vector<double>>& x, const std::vector<bool>& y, double lambda,
                     const std::vector<double>& theta);

inline constexpr std::size_t kSvmIterations = 10000;

// ---- trained models ------------------------------------------------------------

struct TrainedClassifier {
    Kind kind = Kind::LogReg;
    std::vector<std::string> feature_names;
    Hyperparams hyperparams;
    Standardizer standardizer;
    bool standardized = true;  ///< false for random forests
    std::vector<double> weights;  ///< linear kinds
    double bias = 0.0;
    std::vector<std::vector<double>> train_x;  ///< knn, standardized
    std::vector<bool> train_y;
    std::vector<DecisionTree> forest;
    std::uint64_t train_seed = 0;
    std::vector<std::string> training_log;

    /// Raw (unstandardized) feature row in feature_names order.
    [[nodiscard]] bool predict_row(const std::vector<double>& raw) const;

    bool operator==(const TrainedClassifier&) const = default;
};

/// Throws EmptyTrain, SingleClassTrain or InvalidArgument.
TrainedClassifier train(Kind kind, const Dataset& train_set, const Hyperparams& hyperparams, std::uint64_t seed);

TrainedClassifier train(Kind kind, const features::FeatureTable& table, const std::vector<std::string>& feature_names,
                        const Hyperparams& hyperparams, const SubsetFilter& train_subset, std::uint64_t seed);

std::vector<bool> predict(const TrainedClassifier& model, const Dataset& data);

/// Outcomes for every record in `subset`, ordered by subject_id.
std::vector<stats::SubjectOutcome> predict(const TrainedClassifier& model, const features::FeatureTable& table,
                                           const SubsetFilter& subset);

std::string model_to_json(const TrainedClassifier& model);
TrainedClassifier model_from_json(std::string_view text);
void save_model(const std::filesystem::path& path, const TrainedClassifier& model);
TrainedClassifier load_model(const std::filesystem::path& path);

// ---- cutoff rules --------------------------------------------------------------

/// Diseased iff value > rule.cutoff. Throws MissingFeature.
std::vector<stats::SubjectOutcome> apply_cutoff(const features::FeatureTable& table, const roc::CutoffRule& rule,
                                                const SubsetFilter& subset);

// ---- grid search ---------------------------------------------------------------

struct GridAxis {
    std::string name;
    std::vector<double> values;
};

/// Cells enumerate the axes lexicographically, first axis slowest.
using Grid = std::vector<GridAxis>;

Grid default_grid(Kind kind);
std::vector<Hyperparams> enumerate_grid(const Grid& grid);

struct SearchCell {
    std::vector<std::string> feature_set;
    Hyperparams hyperparams;
    double val_f1 = 0.0;
};

struct SearchResult {
    TrainedClassifier best;
    std::size_t best_cell = 0;
    std::vector<SearchCell> log;  ///< feature set outer, grid cell inner
};

/// Trains every (feature set, grid cell) on TRAIN and scores F1 on VALIDATION.
/// Highest F1 wins; ties go to fewer features, then the earlier cell.
SearchResult grid_search(Kind kind, const features::FeatureTable& table,
                         const std::vector<std::vector<std::string>>& feature_sets, const Grid& grid,
                         std::uint64_t seed, unsigned threads = 1);

/// "lambda=0.1;k=3" style, keys in map order.
std::string format_hyperparams(const Hyperparams& hp);

/// Columns kind,feature_set,hyperparams,val_f1; feature sets are '+'-joined.
void write_search_log_csv(const std::filesystem::path& path, Kind kind, const std::vector<SearchCell>& log);

}  // namespace myomap::classifiers
