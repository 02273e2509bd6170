#include "myomap/stats_eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include <json.hpp>

#include "myomap/csv.hpp"
#include "myomap/distributions.hpp"
#include "myomap/error.hpp"

namespace myomap::stats {

ConfusionCounts confusion(const std::vector<bool>& predicted, const std::vector<bool>& truth) {
    if (predicted.size() != truth.size()) {
        throw Error(ErrorCode::LengthMismatch, "predictions and truth differ in length");
    }
    if (predicted.empty()) {
        throw Error(ErrorCode::EmptyInput, "confusion counts need at least one subject");
    }
    ConfusionCounts c;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (predicted[i]) {
            (truth[i] ? c.tp : c.fp) += 1;
        } else {
            (truth[i] ? c.fn : c.tn) += 1;
        }
    }
    return c;
}

PrecisionRecallF1 precision_recall_f1(const ConfusionCounts& c) {
    PrecisionRecallF1 m;
    if (c.tp + c.fp == 0) {
        m.precision_undefined = true;
    } else {
        m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    }
    if (c.tp + c.fn == 0) {
        m.recall_undefined = true;
    } else {
        m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    }
    if (m.precision + m.recall > 0.0) {
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    }
    return m;
}

ClassificationReport make_report(std::string approach, std::vector<std::string> features, std::optional<double> cutoff,
                                 std::string model_ref, std::string subset, std::vector<SubjectOutcome> outcomes) {
    ClassificationReport r;
    r.approach = std::move(approach);
    r.features = std::move(features);
    r.cutoff = cutoff;
    r.model_ref = std::move(model_ref);
    r.subset = std::move(subset);
    std::vector<bool> pred;
    std::vector<bool> truth;
    for (const auto& o : outcomes) {
        pred.push_back(o.predicted);
        truth.push_back(o.truth);
    }
    r.outcomes = std::move(outcomes);
    if (!pred.empty()) {
        r.confusion = confusion(pred, truth);
        const auto m = precision_recall_f1(r.confusion);
        r.precision = m.precision;
        r.recall = m.recall;
        r.f1 = m.f1;
    }
    return r;
}

void write_reports_json(const std::filesystem::path& path, const std::vector<ClassificationReport>& reports) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        nlohmann::ordered_json j;
        j["approach"] = r.approach;
        j["features"] = r.features;
        j["cutoff"] = r.cutoff ? nlohmann::ordered_json(*r.cutoff) : nlohmann::ordered_json(nullptr);
        j["model"] = r.model_ref;
        j["subset"] = r.subset;
        j["f1"] = r.f1;
        j["precision"] = r.precision;
        j["recall"] = r.recall;
        j["confusion"] = {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"tn", r.confusion.tn}, {"fn", r.confusion.fn}};
        nlohmann::ordered_json outcomes = nlohmann::ordered_json::array();
        for (const auto& o : r.outcomes) {
            outcomes.push_back({{"subject_id", o.subject_id}, {"predicted", o.predicted}, {"truth", o.truth}});
        }
        j["outcomes"] = std::move(outcomes);
        doc.push_back(std::move(j));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    }
    out << doc.dump(2) << '\n';
}

std::vector<ClassificationReport> read_reports_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
    }
    std::vector<ClassificationReport> out;
    try {
        const auto doc = nlohmann::json::parse(in);
        for (const auto& j : doc) {
            ClassificationReport r;
            r.approach = j.at("approach").get<std::string>();
            r.features = j.at("features").get<std::vector<std::string>>();
            if (!j.at("cutoff").is_null()) {
                r.cutoff = j.at("cutoff").get<double>();
            }
            r.model_ref = j.at("model").get<std::string>();
            r.subset = j.at("subset").get<std::string>();
            r.f1 = j.at("f1").get<double>();
            r.precision = j.at("precision").get<double>();
            r.recall = j.at("recall").get<double>();
            const auto& c = j.at("confusion");
            r.confusion = {c.at("tp").get<std::size_t>(), c.at("fp").get<std::size_t>(), c.at("tn").get<std::size_t>(),
                           c.at("fn").get<std::size_t>()};
            for (const auto& o : j.at("outcomes")) {
                r.outcomes.push_back(
                    {o.at("subject_id").get<std::string>(), o.at("predicted").get<bool>(), o.at("truth").get<bool>()});
            }
            out.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
    }
    return out;
}

StatTestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b, WilcoxonMethod method) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::LengthMismatch, "paired samples differ in length");
    }
    std::vector<double> d;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        if (diff != 0.0) {
            d.push_back(diff);
        }
    }
    StatTestResult out;
    out.n_effective = d.size();
    const bool exact = method == WilcoxonMethod::Exact ||
                       (method == WilcoxonMethod::Auto && d.size() <= kWilcoxonExactMaxN);
    out.method = exact ? "wilcoxon-exact" : "wilcoxon-normal";
    if (d.empty()) {
        out.degenerate = true;
        out.p_two_sided = 1.0;
        return out;
    }

    // Doubled midranks of |d| are integers, which keeps the exact
    // distribution on an integer lattice.
    const std::size_t n = d.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return std::abs(d[x]) < std::abs(d[y]); });
    std::vector<std::size_t> rank2(n);
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) {
            ++j;
        }
        const std::size_t r2 = i + j + 2;
        for (std::size_t k = i; k <= j; ++k) {
            rank2[order[k]] = r2;
        }
        const auto t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    std::size_t w2 = 0;
    std::size_t total2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        total2 += rank2[i];
        if (d[i] > 0) {
            w2 += rank2[i];
        }
    }
    out.statistic = static_cast<double>(w2) / 2.0;

    if (exact) {
        std::vector<double> counts(total2 + 1, 0.0);
        counts[0] = 1.0;
        std::size_t reach = 0;
        for (std::size_t i = 0; i < n; ++i) {
            reach += rank2[i];
            for (std::size_t s = reach; s >= rank2[i]; --s) {
                counts[s] += counts[s - rank2[i]];
                if (s == rank2[i]) {
                    break;
                }
            }
        }
        const double all = std::ldexp(1.0, static_cast<int>(n));
        double lower = 0.0;
        double upper = 0.0;
        for (std::size_t s = 0; s <= total2; ++s) {
            if (s <= w2) {
                lower += counts[s];
            }
            if (s >= w2) {
                upper += counts[s];
            }
        }
        out.p_two_sided = std::min(1.0, 2.0 * std::min(lower, upper) / all);
        return out;
    }

    const auto nd = static_cast<double>(n);
    const double mean = nd * (nd + 1.0) / 4.0;
    const double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_term / 48.0;
    if (!(var > 0.0)) {
        out.p_two_sided = 1.0;
        return out;
    }
    const double z = std::max(0.0, std::abs(out.statistic - mean) - 0.5) / std::sqrt(var);
    out.p_two_sided = dist::normal_two_sided_p(z);
    return out;
}

StatTestResult compare_methods(const ClassificationReport& a, const ClassificationReport& b) {
    auto correctness = [](const ClassificationReport& r) {
        std::map<std::string, double> m;
        for (const auto& o : r.outcomes) {
            if (!m.emplace(o.subject_id, o.predicted == o.truth ? 1.0 : 0.0).second) {
                throw Error(ErrorCode::SubjectMismatch, "duplicate subject " + o.subject_id + " in report");
            }
        }
        return m;
    };
    const auto ca = correctness(a);
    const auto cb = correctness(b);
    if (ca.size() != cb.size() ||
        !std::equal(ca.begin(), ca.end(), cb.begin(), [](const auto& x, const auto& y) { return x.first == y.first; })) {
        throw Error(ErrorCode::SubjectMismatch, "reports were evaluated on different subjects");
    }
    std::vector<double> xa;
    std::vector<double> xb;
    for (const auto& [id, v] : ca) {
        xa.push_back(v);
        xb.push_back(cb.at(id));
    }
    return wilcoxon_signed_rank(xa, xb);
}

void write_comparisons_csv(const std::filesystem::path& path, const std::vector<Comparison>& rows) {
    csv::Table t;
    t.header = {"method_a", "method_b", "statistic", "n_effective", "p", "method"};
    for (const auto& c : rows) {
        t.rows.push_back({c.method_a, c.method_b, csv::format(c.result.statistic), std::to_string(c.result.n_effective),
                          csv::format(c.result.p_two_sided), c.result.method});
    }
    csv::write(path, t);
}

std::vector<Comparison> read_comparisons_csv(const std::filesystem::path& path) {
    const auto t = csv::read(path);
    const auto ca = t.column("method_a");
    const auto cb = t.column("method_b");
    const auto cs = t.column("statistic");
    const auto cn = t.column("n_effective");
    const auto cp = t.column("p");
    const auto cm = t.column("method");
    std::vector<Comparison> out;
    for (const auto& row : t.rows) {
        Comparison c;
        c.method_a = row[ca];
        c.method_b = row[cb];
        c.result.statistic = csv::parse_double(row[cs]);
        c.result.n_effective = static_cast<std::size_t>(csv::parse_double(row[cn]));
        c.result.p_two_sided = csv::parse_double(row[cp]);
        c.result.method = row[cm];
        c.result.degenerate = c.result.n_effective == 0;
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace myomap::stats
