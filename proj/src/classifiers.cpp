#include "myomap/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "myomap/csv.hpp"
#include "myomap/error.hpp"
#include "myomap/parallel.hpp"

namespace myomap::classifiers {

using Matrix = std::vector<std::vector<double>>;

std::string_view to_string(Kind kind) {
    switch (kind) {
        case Kind::LogReg: return "logreg";
        case Kind::Knn: return "knn";
        case Kind::SvmLinear: return "svm";
        case Kind::RandomForest: return "rf";
        case Kind::Perceptron: return "perceptron";
    }
    return "logreg";
}

Kind parse_kind(std::string_view text) {
    if (text == "logreg" || text == "LOGREG") return Kind::LogReg;
    if (text == "knn" || text == "KNN") return Kind::Knn;
    if (text == "svm" || text == "SVM_LINEAR") return Kind::SvmLinear;
    if (text == "rf" || text == "RANDOM_FOREST") return Kind::RandomForest;
    if (text == "perceptron" || text == "PERCEPTRON") return Kind::Perceptron;
    throw Error(ErrorCode::InvalidArgument, "unknown classifier kind '" + std::string(text) + "'");
}

Dataset make_dataset(const features::FeatureTable& table, const std::vector<std::string>& feature_names,
                     const SubsetFilter& subset) {
    auto rows = table.select(subset);
    std::sort(rows.begin(), rows.end(), [](const features::FeatureRecord* a, const features::FeatureRecord* b) {
        return a->features.subject_id < b->features.subject_id;
    });
    Dataset d;
    d.feature_names = feature_names;
    for (const auto* rec : rows) {
        std::vector<double> row;
        row.reserve(feature_names.size());
        for (const auto& name : feature_names) {
            const auto v = rec->features.get(name);
            if (!v) {
                throw Error(ErrorCode::MissingFeature, "subject " + rec->features.subject_id + " lacks feature " + name);
            }
            row.push_back(*v);
        }
        d.x.push_back(std::move(row));
        d.y.push_back(rec->features.diseased);
        d.subject_ids.push_back(rec->features.subject_id);
    }
    return d;
}

// ---- standardizer ----------------------------------------------------------------

std::vector<double> Standardizer::apply(const std::vector<double>& row) const {
    if (row.size() != mean.size()) {
        throw Error(ErrorCode::LengthMismatch, "row width differs from the standardizer");
    }
    std::vector<double> out(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) {
        out[j] = (row[j] - mean[j]) / sd[j];
    }
    return out;
}

Matrix Standardizer::apply(const Matrix& rows) const {
    Matrix out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        out.push_back(apply(r));
    }
    return out;
}

Standardizer fit_standardizer(const Dataset& train) {
    if (train.x.empty()) {
        throw Error(ErrorCode::EmptyTrain, "cannot fit a standardizer on zero rows");
    }
    const std::size_t d = train.feature_names.size();
    const auto n = static_cast<double>(train.size());
    Standardizer s;
    s.mean.assign(d, 0.0);
    s.sd.assign(d, 0.0);
    s.floored.assign(d, false);
    for (std::size_t j = 0; j < d; ++j) {
        double sum = 0.0;
        for (const auto& r : train.x) {
            sum += r[j];
        }
        s.mean[j] = sum / n;
        double ss = 0.0;
        for (const auto& r : train.x) {
            ss += (r[j] - s.mean[j]) * (r[j] - s.mean[j]);
        }
        const double sd = train.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        if (sd < kSdFloor) {
            s.sd[j] = 1.0;
            s.floored[j] = true;
        } else {
            s.sd[j] = sd;
        }
    }
    return s;
}

// ---- hyperparameters ---------------------------------------------------------------

namespace {

Hyperparams default_hyperparams(Kind kind) {
    switch (kind) {
        case Kind::LogReg: return {{"lambda", 0.01}};
        case Kind::Knn: return {{"k", 5}};
        case Kind::SvmLinear: return {{"lambda", 0.01}};
        case Kind::RandomForest: return {{"n_trees", 50}, {"max_depth", 0}, {"min_leaf", 1}};
        case Kind::Perceptron: return {{"eta", 1.0}, {"epochs", 1000}};
    }
    return {};
}

bool is_count(double v, double minimum) {
    return std::isfinite(v) && v >= minimum && v == std::floor(v);
}

}  // namespace

Hyperparams resolve_hyperparams(Kind kind, const Hyperparams& given) {
    auto hp = default_hyperparams(kind);
    for (const auto& [key, value] : given) {
        if (hp.count(key) == 0) {
            throw Error(ErrorCode::InvalidArgument,
                        "unknown hyperparameter '" + key + "' for " + std::string(to_string(kind)));
        }
        hp[key] = value;
    }
    auto bad = [&](const std::string& key) {
        throw Error(ErrorCode::InvalidArgument, "invalid value for hyperparameter '" + key + "'");
    };
    switch (kind) {
        case Kind::LogReg:
            if (!(hp["lambda"] >= 0.0) || !std::isfinite(hp["lambda"])) bad("lambda");
            break;
        case Kind::Knn:
            if (!is_count(hp["k"], 1)) bad("k");
            break;
        case Kind::SvmLinear:
            if (!(hp["lambda"] > 0.0) || !std::isfinite(hp["lambda"])) bad("lambda");
            break;
        case Kind::RandomForest:
            if (!is_count(hp["n_trees"], 1)) bad("n_trees");
            if (!is_count(hp["max_depth"], 0)) bad("max_depth");
            if (!is_count(hp["min_leaf"], 1)) bad("min_leaf");
            break;
        case Kind::Perceptron:
            if (!(hp["eta"] > 0.0) || !std::isfinite(hp["eta"])) bad("eta");
            if (!is_count(hp["epochs"], 1)) bad("epochs");
            break;
    }
    return hp;
}

// ---- logistic regression ------------------------------------------------------------

namespace {

double dot_bias(const std::vector<double>& row, const std::vector<double>& theta) {
    double z = theta.back();
    for (std::size_t j = 0; j < row.size(); ++j) {
        z += theta[j] * row[j];
    }
    return z;
}

// log(1 + exp(z)) without overflow.
double softplus(double z) {
    return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
    if (z >= 0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void check_theta(const Matrix& x, const std::vector<bool>& y, const std::vector<double>& theta) {
    if (x.size() != y.size()) {
        throw Error(ErrorCode::LengthMismatch, "rows and labels differ in length");
    }
    if (x.empty()) {
        throw Error(ErrorCode::EmptyTrain, "no training rows");
    }
    if (theta.size() != x.front().size() + 1) {
        throw Error(ErrorCode::LengthMismatch, "parameter vector has the wrong length");
    }
}

}  // namespace

double logreg_loss(const Matrix& x, const std::vector<bool>& y, double lambda, const std::vector<double>& theta) {
    check_theta(x, y, theta);
    double nll = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double z = dot_bias(x[i], theta);
        nll += softplus(z) - (y[i] ? z : 0.0);
    }
    double reg = 0.0;
    for (std::size_t j = 0; j + 1 < theta.size(); ++j) {
        reg += theta[j] * theta[j];
    }
    return nll / static_cast<double>(x.size()) + 0.5 * lambda * reg;
}

std::vector<double> logreg_gradient(const Matrix& x, const std::vector<bool>& y, double lambda,
                                    const std::vector<double>& theta) {
    check_theta(x, y, theta);
    const std::size_t d = theta.size() - 1;
    std::vector<double> g(theta.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = sigmoid(dot_bias(x[i], theta)) - (y[i] ? 1.0 : 0.0);
        for (std::size_t j = 0; j < d; ++j) {
            g[j] += r * x[i][j];
        }
        g[d] += r;
    }
    const auto n = static_cast<double>(x.size());
    for (std::size_t j = 0; j < d; ++j) {
        g[j] = g[j] / n + lambda * theta[j];
    }
    g[d] /= n;
    return g;
}

LogRegFit fit_logreg(const Matrix& x, const std::vector<bool>& y, double lambda, std::size_t iterations,
                     double step) {
    LogRegFit fit;
    fit.theta.assign(x.empty() ? 1 : x.front().size() + 1, 0.0);
    double loss = logreg_loss(x, y, lambda, fit.theta);
    fit.loss_trace.push_back(loss);
    std::vector<double> candidate(fit.theta.size());
    for (std::size_t it = 0; it < iterations; ++it) {
        const auto g = logreg_gradient(x, y, lambda, fit.theta);
        double next_loss = 0.0;
        while (true) {
            for (std::size_t j = 0; j < candidate.size(); ++j) {
                candidate[j] = fit.theta[j] - step * g[j];
            }
            next_loss = logreg_loss(x, y, lambda, candidate);
            if (next_loss <= loss || step < 1e-12) {
                break;
            }
            step /= 2.0;
            fit.log.push_back("iteration " + std::to_string(it) + ": loss increased, step halved to " +
                              csv::format(step));
        }
        if (next_loss > loss) {
            fit.log.push_back("iteration " + std::to_string(it) + ": no descent possible, stopped");
            break;
        }
        fit.theta = candidate;
        loss = next_loss;
        fit.loss_trace.push_back(loss);
    }
    return fit;
}

// ---- linear SVM ---------------------------------------------------------------------

double svm_objective(const Matrix& x, const std::vector<bool>& y, double lambda, const std::vector<double>& theta) {
    check_theta(x, y, theta);
    double hinge = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double s = y[i] ? 1.0 : -1.0;
        hinge += std::max(0.0, 1.0 - s * dot_bias(x[i], theta));
    }
    double reg = 0.0;
    for (std::size_t j = 0; j + 1 < theta.size(); ++j) {
        reg += theta[j] * theta[j];
    }
    return 0.5 * lambda * reg + hinge / static_cast<double>(x.size());
}

namespace {

// Full-batch subgradient descent with step 1/(lambda t) and projection onto
// the ball |w| <= 1/sqrt(lambda). The best iterate seen (starting at zero) is
// returned, so the result never scores worse than the trivial classifier.
std::vector<double> fit_svm(const Matrix& x, const std::vector<bool>& y, double lambda) {
    const std::size_t d = x.front().size();
    std::vector<double> theta(d + 1, 0.0);
    std::vector<double> best = theta;
    double best_obj = svm_objective(x, y, lambda, theta);
    const double radius = 1.0 / std::sqrt(lambda);
    const auto n = static_cast<double>(x.size());
    std::vector<double> g(d + 1);
    for (std::size_t t = 1; t <= kSvmIterations; ++t) {
        std::fill(g.begin(), g.end(), 0.0);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double s = y[i] ? 1.0 : -1.0;
            if (s * dot_bias(x[i], theta) < 1.0) {
                for (std::size_t j = 0; j < d; ++j) {
                    g[j] -= s * x[i][j];
                }
                g[d] -= s;
            }
        }
        const double eta = 1.0 / (lambda * static_cast<double>(t));
        double norm2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            theta[j] -= eta * (g[j] / n + lambda * theta[j]);
            norm2 += theta[j] * theta[j];
        }
        theta[d] -= eta * g[d] / n;
        if (norm2 > radius * radius) {
            const double scale = radius / std::sqrt(norm2);
            for (std::size_t j = 0; j < d; ++j) {
                theta[j] *= scale;
            }
        }
        const double obj = svm_objective(x, y, lambda, theta);
        if (obj < best_obj) {
            best_obj = obj;
            best = theta;
        }
    }
    return best;
}

std::vector<double> fit_perceptron(const Matrix& x, const std::vector<bool>& y, double eta, std::size_t epochs) {
    const std::size_t d = x.front().size();
    std::vector<double> theta(d + 1, 0.0);
    for (std::size_t e = 0; e < epochs; ++e) {
        std::size_t mistakes = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double s = y[i] ? 1.0 : -1.0;
            if (s * dot_bias(x[i], theta) <= 0.0) {
                for (std::size_t j = 0; j < d; ++j) {
                    theta[j] += eta * s * x[i][j];
                }
                theta[d] += eta * s;
                ++mistakes;
            }
        }
        // No further update can happen once an epoch is clean.
        if (mistakes == 0) {
            break;
        }
    }
    return theta;
}

bool knn_predict(const Matrix& train_x, const std::vector<bool>& train_y, std::size_t k,
                 const std::vector<double>& z) {
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(train_x.size());
    for (std::size_t i = 0; i < train_x.size(); ++i) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < z.size(); ++j) {
            const double diff = train_x[i][j] - z[j];
            d2 += diff * diff;
        }
        dist.emplace_back(d2, i);
    }
    k = std::min(k, dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::size_t pos = 0;
    for (std::size_t i = 0; i < k; ++i) {
        pos += train_y[dist[i].second] ? 1 : 0;
    }
    return 2 * pos >= k;
}

}  // namespace

// ---- training ---------------------------------------------------------------------

bool TrainedClassifier::predict_row(const std::vector<double>& raw) const {
    if (raw.size() != feature_names.size()) {
        throw Error(ErrorCode::LengthMismatch, "row width differs from the model's feature count");
    }
    switch (kind) {
        case Kind::RandomForest:
            return forest_predict(forest, raw);
        case Kind::Knn:
            return knn_predict(train_x, train_y, static_cast<std::size_t>(hyperparams.at("k")), standardizer.apply(raw));
        case Kind::LogReg:
        case Kind::SvmLinear:
        case Kind::Perceptron: {
            const auto z = standardizer.apply(raw);
            double s = bias;
            for (std::size_t j = 0; j < z.size(); ++j) {
                s += weights[j] * z[j];
            }
            // LOGREG: probability > 0.5 is the same as s > 0.
            return s > 0.0;
        }
    }
    return false;
}

TrainedClassifier train(Kind kind, const Dataset& train_set, const Hyperparams& hyperparams, std::uint64_t seed) {
    if (train_set.feature_names.empty()) {
        throw Error(ErrorCode::InvalidArgument, "a classifier needs at least one feature");
    }
    if (train_set.x.empty()) {
        throw Error(ErrorCode::EmptyTrain, "training subset is empty");
    }
    const auto n_pos = static_cast<std::size_t>(std::count(train_set.y.begin(), train_set.y.end(), true));
    if (n_pos == 0 || n_pos == train_set.size()) {
        throw Error(ErrorCode::SingleClassTrain, "training subset contains a single class");
    }
    TrainedClassifier m;
    m.kind = kind;
    m.feature_names = train_set.feature_names;
    m.hyperparams = resolve_hyperparams(kind, hyperparams);
    m.standardizer = fit_standardizer(train_set);
    m.train_seed = seed;
    m.standardized = kind != Kind::RandomForest;
    for (std::size_t j = 0; j < m.standardizer.floored.size(); ++j) {
        if (m.standardizer.floored[j]) {
            m.training_log.push_back("feature " + m.feature_names[j] + " is constant on TRAIN; sd set to 1");
        }
    }
    const auto& hp = m.hyperparams;
    switch (kind) {
        case Kind::LogReg: {
            auto fit = fit_logreg(m.standardizer.apply(train_set.x), train_set.y, hp.at("lambda"));
            m.bias = fit.theta.back();
            fit.theta.pop_back();
            m.weights = std::move(fit.theta);
            m.training_log.insert(m.training_log.end(), fit.log.begin(), fit.log.end());
            break;
        }
        case Kind::Knn:
            m.train_x = m.standardizer.apply(train_set.x);
            m.train_y = train_set.y;
            break;
        case Kind::SvmLinear: {
            auto theta = fit_svm(m.standardizer.apply(train_set.x), train_set.y, hp.at("lambda"));
            m.bias = theta.back();
            theta.pop_back();
            m.weights = std::move(theta);
            break;
        }
        case Kind::RandomForest:
            m.training_log.push_back("random forest trained on unstandardized features");
            m.forest = train_forest(train_set.x, train_set.y, static_cast<std::size_t>(hp.at("n_trees")),
                                    static_cast<std::size_t>(hp.at("max_depth")),
                                    static_cast<std::size_t>(hp.at("min_leaf")), seed);
            break;
        case Kind::Perceptron: {
            auto theta = fit_perceptron(m.standardizer.apply(train_set.x), train_set.y, hp.at("eta"),
                                        static_cast<std::size_t>(hp.at("epochs")));
            m.bias = theta.back();
            theta.pop_back();
            m.weights = std::move(theta);
            break;
        }
    }
    return m;
}

TrainedClassifier train(Kind kind, const features::FeatureTable& table, const std::vector<std::string>& feature_names,
                        const Hyperparams& hyperparams, const SubsetFilter& train_subset, std::uint64_t seed) {
    return train(kind, make_dataset(table, feature_names, train_subset), hyperparams, seed);
}

std::vector<bool> predict(const TrainedClassifier& model, const Dataset& data) {
    if (data.feature_names != model.feature_names) {
        throw Error(ErrorCode::MissingFeature, "dataset features differ from the model's");
    }
    std::vector<bool> out;
    out.reserve(data.size());
    for (const auto& row : data.x) {
        out.push_back(model.predict_row(row));
    }
    return out;
}

std::vector<stats::SubjectOutcome> predict(const TrainedClassifier& model, const features::FeatureTable& table,
                                           const SubsetFilter& subset) {
    const auto data = make_dataset(table, model.feature_names, subset);
    const auto pred = predict(model, data);
    std::vector<stats::SubjectOutcome> out;
    for (std::size_t i = 0; i < data.size(); ++i) {
        out.push_back({data.subject_ids[i], pred[i], data.y[i]});
    }
    return out;
}

// ---- serialization -------------------------------------------------------------------

namespace {

using ojson = nlohmann::ordered_json;

ojson tree_node_json(const DecisionTree& tree, int index) {
    const auto& node = tree.nodes[static_cast<std::size_t>(index)];
    ojson j;
    if (node.feature < 0) {
        j["votes"] = {node.votes_negative, node.votes_positive};
        return j;
    }
    j["feature"] = node.feature;
    j["threshold"] = node.threshold;
    j["votes"] = {node.votes_negative, node.votes_positive};
    j["left"] = tree_node_json(tree, node.left);
    j["right"] = tree_node_json(tree, node.right);
    return j;
}

// Rebuilds nodes in the order the grower allocates them: children of a split
// are adjacent and the left subtree is expanded first.
DecisionTree tree_from_json(const nlohmann::json& root) {
    DecisionTree tree;
    tree.nodes.emplace_back();
    std::vector<std::pair<std::size_t, const nlohmann::json*>> stack = {{0, &root}};
    while (!stack.empty()) {
        const auto [index, j] = stack.back();
        stack.pop_back();
        TreeNode node;
        node.votes_negative = j->at("votes").at(0).get<std::size_t>();
        node.votes_positive = j->at("votes").at(1).get<std::size_t>();
        if (j->contains("feature")) {
            node.feature = j->at("feature").get<int>();
            node.threshold = j->at("threshold").get<double>();
            node.left = static_cast<int>(tree.nodes.size());
            node.right = node.left + 1;
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            stack.emplace_back(static_cast<std::size_t>(node.right), &j->at("right"));
            stack.emplace_back(static_cast<std::size_t>(node.left), &j->at("left"));
        }
        tree.nodes[index] = node;
    }
    return tree;
}

}  // namespace

std::string model_to_json(const TrainedClassifier& m) {
    ojson j;
    j["kind"] = std::string(to_string(m.kind));
    j["version"] = MYOMAP_VERSION;
    j["feature_names"] = m.feature_names;
    ojson hp = ojson::object();
    for (const auto& [k, v] : m.hyperparams) {
        hp[k] = v;
    }
    j["hyperparams"] = hp;
    j["train_seed"] = m.train_seed;
    j["standardized"] = m.standardized;
    j["standardizer"] = {{"mean", m.standardizer.mean}, {"sd", m.standardizer.sd}, {"floored", m.standardizer.floored}};
    ojson params = ojson::object();
    switch (m.kind) {
        case Kind::LogReg:
        case Kind::SvmLinear:
        case Kind::Perceptron:
            params["weights"] = m.weights;
            params["bias"] = m.bias;
            break;
        case Kind::Knn:
            params["train_x"] = m.train_x;
            params["train_y"] = m.train_y;
            break;
        case Kind::RandomForest: {
            ojson trees = ojson::array();
            for (const auto& t : m.forest) {
                trees.push_back(tree_node_json(t, 0));
            }
            params["trees"] = std::move(trees);
            break;
        }
    }
    j["parameters"] = std::move(params);
    j["training_log"] = m.training_log;
    return j.dump(2);
}

TrainedClassifier model_from_json(std::string_view text) {
    TrainedClassifier m;
    try {
        const auto j = nlohmann::json::parse(text);
        m.kind = parse_kind(j.at("kind").get<std::string>());
        m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        for (const auto& [k, v] : j.at("hyperparams").items()) {
            m.hyperparams[k] = v.get<double>();
        }
        m.train_seed = j.at("train_seed").get<std::uint64_t>();
        m.standardized = j.at("standardized").get<bool>();
        const auto& s = j.at("standardizer");
        m.standardizer.mean = s.at("mean").get<std::vector<double>>();
        m.standardizer.sd = s.at("sd").get<std::vector<double>>();
        m.standardizer.floored = s.at("floored").get<std::vector<bool>>();
        const auto& p = j.at("parameters");
        switch (m.kind) {
            case Kind::LogReg:
            case Kind::SvmLinear:
            case Kind::Perceptron:
                m.weights = p.at("weights").get<std::vector<double>>();
                m.bias = p.at("bias").get<double>();
                break;
            case Kind::Knn:
                m.train_x = p.at("train_x").get<Matrix>();
                m.train_y = p.at("train_y").get<std::vector<bool>>();
                break;
            case Kind::RandomForest:
                for (const auto& t : p.at("trees")) {
                    m.forest.push_back(tree_from_json(t));
                }
                break;
        }
        if (j.contains("training_log")) {
            m.training_log = j.at("training_log").get<std::vector<std::string>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaError, std::string("model file: ") + e.what());
    }
    const std::size_t d = m.feature_names.size();
    if (d == 0 || m.standardizer.mean.size() != d || m.standardizer.sd.size() != d ||
        m.standardizer.floored.size() != d) {
        throw Error(ErrorCode::SchemaError, "model file: inconsistent feature dimensions");
    }
    const bool linear = m.kind == Kind::LogReg || m.kind == Kind::SvmLinear || m.kind == Kind::Perceptron;
    if ((linear && m.weights.size() != d) || (m.kind == Kind::Knn && m.train_x.size() != m.train_y.size()) ||
        (m.kind == Kind::RandomForest && m.forest.empty())) {
        throw Error(ErrorCode::SchemaError, "model file: parameters inconsistent with kind");
    }
    m.hyperparams = resolve_hyperparams(m.kind, m.hyperparams);
    return m;
}

void save_model(const std::filesystem::path& path, const TrainedClassifier& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    }
    out << model_to_json(model) << '\n';
}

TrainedClassifier load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

// ---- cutoff rules -----------------------------------------------------------------------

std::vector<stats::SubjectOutcome> apply_cutoff(const features::FeatureTable& table, const roc::CutoffRule& rule,
                                                const SubsetFilter& subset) {
    const auto data = make_dataset(table, {rule.feature}, subset);
    std::vector<stats::SubjectOutcome> out;
    for (std::size_t i = 0; i < data.size(); ++i) {
        out.push_back({data.subject_ids[i], rule.positive(data.x[i][0]), data.y[i]});
    }
    return out;
}

// ---- grid search ------------------------------------------------------------------------

Grid default_grid(Kind kind) {
    switch (kind) {
        case Kind::LogReg: return {{"lambda", {0.0, 0.01, 0.1, 1.0}}};
        case Kind::Knn: return {{"k", {1, 3, 5, 7}}};
        case Kind::SvmLinear: return {{"lambda", {0.001, 0.01, 0.1, 1.0}}};
        case Kind::RandomForest:
            return {{"n_trees", {50, 200}}, {"max_depth", {3, 5, 0}}, {"min_leaf", {1, 3}}};
        case Kind::Perceptron: return {{"eta", {0.1, 1.0}}, {"epochs", {100, 1000}}};
    }
    return {};
}

std::vector<Hyperparams> enumerate_grid(const Grid& grid) {
    std::vector<Hyperparams> cells{Hyperparams{}};
    for (const auto& axis : grid) {
        if (axis.values.empty()) {
            throw Error(ErrorCode::InvalidArgument, "grid axis '" + axis.name + "' has no values");
        }
        std::vector<Hyperparams> next;
        for (const auto& cell : cells) {
            for (double v : axis.values) {
                auto c = cell;
                c[axis.name] = v;
                next.push_back(std::move(c));
            }
        }
        cells = std::move(next);
    }
    return cells;
}

SearchResult grid_search(Kind kind, const features::FeatureTable& table,
                         const std::vector<std::vector<std::string>>& feature_sets, const Grid& grid,
                         std::uint64_t seed, unsigned threads) {
    if (feature_sets.empty()) {
        throw Error(ErrorCode::InvalidArgument, "grid search needs at least one feature set");
    }
    const auto cells = enumerate_grid(grid);
    for (const auto& c : cells) {
        resolve_hyperparams(kind, c);
    }
    std::vector<Dataset> train_sets;
    std::vector<Dataset> val_sets;
    for (const auto& fs : feature_sets) {
        train_sets.push_back(make_dataset(table, fs, SubsetFilter::only(Subset::Train)));
        val_sets.push_back(make_dataset(table, fs, SubsetFilter::only(Subset::Validation)));
        if (val_sets.back().x.empty()) {
            throw Error(ErrorCode::EmptyInput, "validation subset is empty");
        }
    }

    const std::size_t total = feature_sets.size() * cells.size();
    std::vector<SearchCell> log(total);
    std::vector<TrainedClassifier> models(total);
    parallel_for(total, threads, [&](std::size_t i) {
        const std::size_t f = i / cells.size();
        const std::size_t c = i % cells.size();
        models[i] = train(kind, train_sets[f], cells[c], seed);
        const auto pred = predict(models[i], val_sets[f]);
        const auto counts = stats::confusion(pred, val_sets[f].y);
        log[i] = {feature_sets[f], cells[c], stats::precision_recall_f1(counts).f1};
    });

    std::size_t best = 0;
    for (std::size_t i = 1; i < total; ++i) {
        const auto& a = log[i];
        const auto& b = log[best];
        if (a.val_f1 > b.val_f1 || (a.val_f1 == b.val_f1 && a.feature_set.size() < b.feature_set.size())) {
            best = i;
        }
    }
    return {std::move(models[best]), best, std::move(log)};
}

std::string format_hyperparams(const Hyperparams& hp) {
    std::string out;
    for (const auto& [k, v] : hp) {
        if (!out.empty()) {
            out += ';';
        }
        out += k + "=" + csv::format(v);
    }
    return out;
}

void write_search_log_csv(const std::filesystem::path& path, Kind kind, const std::vector<SearchCell>& log) {
    csv::Table t;
    t.header = {"kind", "feature_set", "hyperparams", "val_f1"};
    for (const auto& cell : log) {
        std::string fs;
        for (const auto& f : cell.feature_set) {
            fs += (fs.empty() ? "" : "+") + f;
        }
        t.rows.push_back({std::string(to_string(kind)), fs, format_hyperparams(cell.hyperparams), csv::format(cell.val_f1)});
    }
    csv::write(path, t);
}

}  // namespace myomap::classifiers
