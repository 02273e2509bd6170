#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

namespace oracle {

namespace {

double heaviside(double d) {
    if (d > 0) {
        return 1.0;
    }
    return d == 0 ? 0.5 : 0.0;
}

double two_sided_from_counts(double le, double ge, double total) {
    return std::min(1.0, 2.0 * std::min(le, ge) / total);
}

}  // namespace

double mann_whitney_auc(const std::vector<double>& scores, const std::vector<bool>& labels) {
    double sum = 0.0;
    double pairs = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) {
            continue;
        }
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) {
                continue;
            }
            sum += heaviside(scores[i] - scores[j]);
            pairs += 1.0;
        }
    }
    return sum / pairs;
}

double youden_j(const std::vector<double>& scores, const std::vector<bool>& labels, double cutoff) {
    double tp = 0, fn = 0, tn = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] > cutoff;
        if (labels[i]) {
            (pred ? tp : fn) += 1;
        } else {
            (pred ? fp : tn) += 1;
        }
    }
    return tp / (tp + fn) + tn / (tn + fp) - 1.0;
}

double max_youden_j(const std::vector<double>& scores, const std::vector<bool>& labels) {
    std::vector<double> distinct = scores;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    double best = -2.0;
    // Positive set = scores >= distinct[k] for k >= 1.
    for (std::size_t k = 1; k < distinct.size(); ++k) {
        double tp = 0, fn = 0, tn = 0, fp = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const bool pred = scores[i] >= distinct[k];
            if (labels[i]) {
                (pred ? tp : fn) += 1;
            } else {
                (pred ? fp : tn) += 1;
            }
        }
        best = std::max(best, tp / (tp + fn) + tn / (tn + fp) - 1.0);
    }
    return best;
}

double paired_permutation_p(const std::vector<double>& a, const std::vector<double>& b,
                            const std::vector<bool>& labels, std::size_t resamples, std::uint64_t seed) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        (labels[i] ? pos : neg).push_back(i);
    }
    // contrib[(p*nn + q)*4 + swap_p*2 + swap_q]: H(a'-a') - H(b'-b') for that pair.
    const std::size_t np = pos.size(), nn = neg.size();
    std::vector<double> contrib(np * nn * 4);
    double observed = 0.0;
    for (std::size_t p = 0; p < np; ++p) {
        for (std::size_t q = 0; q < nn; ++q) {
            for (int sp = 0; sp < 2; ++sp) {
                for (int sq = 0; sq < 2; ++sq) {
                    const double ap = sp ? b[pos[p]] : a[pos[p]];
                    const double bp = sp ? a[pos[p]] : b[pos[p]];
                    const double aq = sq ? b[neg[q]] : a[neg[q]];
                    const double bq = sq ? a[neg[q]] : b[neg[q]];
                    contrib[(p * nn + q) * 4 + sp * 2 + sq] = heaviside(ap - aq) - heaviside(bp - bq);
                }
            }
            observed += contrib[(p * nn + q) * 4];
        }
    }
    const double scale = static_cast<double>(np * nn);
    observed /= scale;
    std::mt19937_64 gen(seed);
    std::vector<int> sp(np), sq(nn);
    std::size_t extreme = 0;
    for (std::size_t r = 0; r < resamples; ++r) {
        std::uint64_t bits = 0;
        int left = 0;
        auto coin = [&] {
            if (left == 0) {
                bits = gen();
                left = 64;
            }
            --left;
            const int v = static_cast<int>(bits & 1u);
            bits >>= 1;
            return v;
        };
        for (auto& s : sp) {
            s = coin();
        }
        for (auto& s : sq) {
            s = coin();
        }
        double delta = 0.0;
        for (std::size_t p = 0; p < np; ++p) {
            const double* row = &contrib[p * nn * 4 + static_cast<std::size_t>(sp[p]) * 2];
            for (std::size_t q = 0; q < nn; ++q) {
                delta += row[q * 4 + static_cast<std::size_t>(sq[q])];
            }
        }
        if (std::abs(delta / scale) >= std::abs(observed) - 1e-12) {
            ++extreme;
        }
    }
    return static_cast<double>(extreme) / static_cast<double>(resamples);
}

double bootstrap_auc_se(const std::vector<double>& scores, const std::vector<bool>& labels, std::size_t replicates,
                        std::uint64_t seed) {
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        (labels[i] ? pos : neg).push_back(scores[i]);
    }
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<std::size_t> pick_pos(0, pos.size() - 1), pick_neg(0, neg.size() - 1);
    std::vector<double> bp(pos.size()), bn(neg.size());
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t r = 0; r < replicates; ++r) {
        for (auto& v : bp) {
            v = pos[pick_pos(gen)];
        }
        for (auto& v : bn) {
            v = neg[pick_neg(gen)];
        }
        double s = 0.0;
        for (double x : bp) {
            for (double y : bn) {
                s += heaviside(x - y);
            }
        }
        const double a = s / static_cast<double>(bp.size() * bn.size());
        sum += a;
        sum2 += a * a;
    }
    const auto n = static_cast<double>(replicates);
    const double mean = sum / n;
    return std::sqrt((sum2 - n * mean * mean) / (n - 1.0));
}

double signed_rank_enumeration_p(const std::vector<double>& abs_ranks, const std::vector<bool>& positive) {
    const std::size_t n = abs_ranks.size();
    if (n > 24) {
        throw std::invalid_argument("enumeration limited to n <= 24");
    }
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (positive[i]) {
            w += abs_ranks[i];
        }
    }
    double le = 0.0, ge = 0.0;
    const std::uint64_t patterns = std::uint64_t{1} << n;
    for (std::uint64_t m = 0; m < patterns; ++m) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if ((m >> i) & 1u) {
                s += abs_ranks[i];
            }
        }
        if (s <= w + 1e-9) {
            le += 1.0;
        }
        if (s >= w - 1e-9) {
            ge += 1.0;
        }
    }
    return two_sided_from_counts(le, ge, static_cast<double>(patterns));
}

double signed_rank_counting_p(std::size_t n, long long w) {
    const std::size_t max_sum = n * (n + 1) / 2;
    // ways[s] = number of subsets of {1..k} with sum s.
    std::vector<double> ways(max_sum + 1, 0.0);
    ways[0] = 1.0;
    for (std::size_t k = 1; k <= n; ++k) {
        for (std::size_t s = max_sum; s >= k; --s) {
            ways[s] += ways[s - k];
        }
    }
    double le = 0.0, ge = 0.0, total = 0.0;
    for (std::size_t s = 0; s <= max_sum; ++s) {
        total += ways[s];
        if (static_cast<long long>(s) <= w) {
            le += ways[s];
        }
        if (static_cast<long long>(s) >= w) {
            ge += ways[s];
        }
    }
    return two_sided_from_counts(le, ge, total);
}

double two_level_percentile(std::size_t n_low, double low, std::size_t n_high, double high, double q) {
    const std::size_t n = n_low + n_high;
    const double h = static_cast<double>(n - 1) * q / 100.0;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    auto value_at = [&](std::size_t i) { return i < n_low ? low : high; };
    if (lo + 1 >= n) {
        return value_at(n - 1);
    }
    return value_at(lo) + (h - static_cast<double>(lo)) * (value_at(lo + 1) - value_at(lo));
}

std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> x, double h) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double up = f(x);
        x[i] = keep - h;
        const double down = f(x);
        x[i] = keep;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

myomap::LabelMask random_mask(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    myomap::LabelMask mask("random", rows, cols, {1.0, 1.0});
    const int blobs = 1 + static_cast<int>(u(gen) * 6);
    for (int b = 0; b < blobs; ++b) {
        const auto value = static_cast<std::uint8_t>(u(gen) < 0.5 ? 1 : 2);
        const double cy = u(gen) * static_cast<double>(rows);
        const double cx = u(gen) * static_cast<double>(cols);
        const double radius = 1.0 + u(gen) * static_cast<double>(std::max(rows, cols)) / 3.0;
        const bool disc = u(gen) < 0.5;
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                const double dy = static_cast<double>(r) - cy;
                const double dx = static_cast<double>(c) - cx;
                const bool inside = disc ? dy * dy + dx * dx < radius * radius
                                         : std::abs(dy) < radius && std::abs(dx) < radius / 2.0;
                if (inside) {
                    mask.at(r, c) = value;
                }
            }
        }
    }
    // Sprinkle isolated pixels so boundaries are irregular.
    for (auto& l : mask.labels) {
        if (u(gen) < 0.05) {
            l = static_cast<std::uint8_t>(gen() % 3);
        }
    }
    return mask;
}

PairedScores paired_instance(std::size_t k, std::size_t n) {
    std::mt19937_64 gen(1000 + k);
    std::normal_distribution<double> z(0.0, 1.0);
    PairedScores out;
    const double sep_a = 0.3 + 0.12 * static_cast<double>(k % 10);
    const double sep_b = 0.9;
    for (std::size_t i = 0; i < n; ++i) {
        const bool pos = i % 2 == 1;
        const double shared = z(gen);
        const double ea = z(gen);
        const double eb = z(gen);
        out.labels.push_back(pos);
        out.a.push_back((pos ? sep_a : 0.0) + 0.7 * shared + 0.7 * ea);
        out.b.push_back((pos ? sep_b : 0.0) + 0.7 * shared + 0.7 * eb);
    }
    return out;
}

ResultCache::ResultCache(std::filesystem::path file) : file_(std::move(file)) {}

double ResultCache::get(const std::string& key, const std::function<double()>& compute) {
    std::map<std::string, double> entries;
    {
        std::ifstream in(file_);
        std::string k;
        double v = 0.0;
        while (in >> k >> v) {
            entries[k] = v;
        }
    }
    if (auto it = entries.find(key); it != entries.end()) {
        return it->second;
    }
    const double value = compute();
    std::filesystem::create_directories(file_.parent_path());
    std::ofstream out(file_, std::ios::app);
    out.precision(17);
    out << key << ' ' << value << '\n';
    return value;
}

std::filesystem::path cache_dir() {
#ifdef MYOMAP_TEST_CACHE_DIR
    return MYOMAP_TEST_CACHE_DIR;
#else
    return std::filesystem::temp_directory_path() / "myomap_oracle_cache";
#endif
}

}  // namespace oracle
