#include "meg/eval.hpp"

#include "meg/common.hpp"
#include "meg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <unordered_set>

namespace meg {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct BinaryCounts {
    double tp = 0, fp = 0, fn = 0;

    double precision() const { return tp + fp > 0 ? tp / (tp + fp) : 0.0; }
    double recall() const { return tp + fn > 0 ? tp / (tp + fn) : 0.0; }
    double f1() const {
        double p = precision(), r = recall();
        return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    }
    double jaccard() const { return tp + fp + fn > 0 ? tp / (tp + fp + fn) : 0.0; }
};

/// Binary logistic regression trained with full-batch Adam.
struct Logistic {
    VectorXd w;
    double b = 0.0;

    void fit(const MatrixXd& x, const std::vector<double>& y, const ClassifyConfig& cfg) {
        const Index n = x.rows(), d = x.cols();
        w = VectorXd::Zero(d);
        b = 0.0;
        VectorXd mw = VectorXd::Zero(d), vw = VectorXd::Zero(d);
        double mb = 0.0, vb = 0.0;
        const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
        for (int t = 1; t <= cfg.iterations; ++t) {
            VectorXd z = x * w;
            z.array() += b;
            VectorXd gz(n);
            for (Index i = 0; i < n; ++i) {
                // d/dz log(1 + exp(-y z)) = -y * sigmoid(-y z)
                double yz = y[i] * z(i);
                double s = yz > 0 ? std::exp(-yz) / (1.0 + std::exp(-yz)) : 1.0 / (1.0 + std::exp(yz));
                gz(i) = -y[i] * s / static_cast<double>(n);
            }
            VectorXd gw = x.transpose() * gz + 2.0 * cfg.l2_penalty * w;
            double gb = gz.sum();
            double c1 = 1.0 - std::pow(beta1, t), c2 = 1.0 - std::pow(beta2, t);
            mw = beta1 * mw + (1 - beta1) * gw;
            vw = beta2 * vw + (1 - beta2) * gw.cwiseProduct(gw);
            w.array() -= cfg.learning_rate * (mw.array() / c1) / ((vw.array() / c2).sqrt() + eps);
            mb = beta1 * mb + (1 - beta1) * gb;
            vb = beta2 * vb + (1 - beta2) * gb * gb;
            b -= cfg.learning_rate * (mb / c1) / (std::sqrt(vb / c2) + eps);
        }
    }

    double score(const VectorXd& x) const { return w.dot(x) + b; }
};

struct RepeatScores {
    double f1_macro = 0, f1_micro = 0, jaccard_macro = 0;
};

std::pair<double, double> mean_std(const std::vector<double>& values) {
    double mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    return {mean, std::sqrt(var / values.size())};
}

}  // namespace

EvalResult classify(const MatrixXd& embedding, const std::vector<std::vector<int>>& labels,
                    int n_classes, const ClassifyConfig& config) {
    if (labels.size() != static_cast<std::size_t>(embedding.rows()))
        throw DataError("classify: label list does not match embedding rows");
    if (config.split_ratio <= 0.0 || config.split_ratio >= 1.0)
        throw ConfigError("classify: split_ratio outside (0, 1)");
    if (config.repeats < 1) throw ConfigError("classify: repeats must be positive");

    // Classes with fewer than two labeled vertices cannot be split.
    std::vector<std::vector<int>> members(n_classes);
    for (std::size_t i = 0; i < labels.size(); ++i)
        for (int c : labels[i]) members[c].push_back(static_cast<int>(i));
    std::vector<int> usable;
    int excluded = 0;
    for (int c = 0; c < n_classes; ++c) {
        if (members[c].size() >= 2)
            usable.push_back(c);
        else if (!members[c].empty())
            ++excluded;
    }
    if (usable.size() < 2)
        throw DataError("classify: need at least two classes with two labeled vertices each");

    std::vector<int> labeled_rows;
    bool multi_label = false;
    {
        std::set<int> usable_set(usable.begin(), usable.end());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            int count = 0;
            for (int c : labels[i])
                if (usable_set.count(c)) ++count;
            if (count > 0) labeled_rows.push_back(static_cast<int>(i));
            if (count > 1) multi_label = true;
        }
    }

    std::vector<RepeatScores> scores(static_cast<std::size_t>(config.repeats));
    parallel_for(static_cast<std::size_t>(config.repeats), config.threads, [&](std::size_t rep) {
        std::mt19937_64 rng(derive_seed(config.seed, rep));

        std::vector<int> train_rows, test_rows;
        if (multi_label) {
            std::vector<int> rows = labeled_rows;
            std::shuffle(rows.begin(), rows.end(), rng);
            auto train_count = std::clamp<std::size_t>(
                static_cast<std::size_t>(std::lround(config.split_ratio * rows.size())), 1,
                rows.size() - 1);
            train_rows.assign(rows.begin(), rows.begin() + train_count);
            test_rows.assign(rows.begin() + train_count, rows.end());
        } else {
            // Stratified: every class contributes to both sides.
            for (int c : usable) {
                std::vector<int> rows = members[c];
                std::shuffle(rows.begin(), rows.end(), rng);
                auto train_count = std::clamp<std::size_t>(
                    static_cast<std::size_t>(std::lround(config.split_ratio * rows.size())), 1,
                    rows.size() - 1);
                train_rows.insert(train_rows.end(), rows.begin(), rows.begin() + train_count);
                test_rows.insert(test_rows.end(), rows.begin() + train_count, rows.end());
            }
        }

        // Standardize features on the training split.
        MatrixXd x_train(train_rows.size(), embedding.cols());
        for (std::size_t i = 0; i < train_rows.size(); ++i) x_train.row(i) = embedding.row(train_rows[i]);
        VectorXd mean = x_train.colwise().mean();
        VectorXd sd(embedding.cols());
        for (Index j = 0; j < embedding.cols(); ++j) {
            double var = (x_train.col(j).array() - mean(j)).square().sum() / x_train.rows();
            sd(j) = var > 0 ? std::sqrt(var) : 1.0;
        }
        x_train.rowwise() -= mean.transpose();
        x_train = x_train * sd.cwiseInverse().asDiagonal();

        MatrixXd x_test(test_rows.size(), embedding.cols());
        for (std::size_t i = 0; i < test_rows.size(); ++i) x_test.row(i) = embedding.row(test_rows[i]);
        x_test.rowwise() -= mean.transpose();
        x_test = x_test * sd.cwiseInverse().asDiagonal();

        auto has_class = [&](int row, int c) {
            return std::binary_search(labels[row].begin(), labels[row].end(), c);
        };

        std::vector<Logistic> classifiers(usable.size());
        for (std::size_t ci = 0; ci < usable.size(); ++ci) {
            std::vector<double> y(train_rows.size());
            for (std::size_t i = 0; i < train_rows.size(); ++i)
                y[i] = has_class(train_rows[i], usable[ci]) ? 1.0 : -1.0;
            classifiers[ci].fit(x_train, y, config);
        }

        std::vector<BinaryCounts> counts(usable.size());
        for (std::size_t i = 0; i < test_rows.size(); ++i) {
            VectorXd x = x_test.row(i).transpose();
            if (multi_label) {
                for (std::size_t ci = 0; ci < usable.size(); ++ci) {
                    bool predicted = classifiers[ci].score(x) > 0.0;
                    bool actual = has_class(test_rows[i], usable[ci]);
                    if (predicted && actual) counts[ci].tp += 1;
                    if (predicted && !actual) counts[ci].fp += 1;
                    if (!predicted && actual) counts[ci].fn += 1;
                }
            } else {
                std::size_t best = 0;
                double best_score = -std::numeric_limits<double>::infinity();
                for (std::size_t ci = 0; ci < usable.size(); ++ci) {
                    double s = classifiers[ci].score(x);
                    if (s > best_score) {
                        best_score = s;
                        best = ci;
                    }
                }
                for (std::size_t ci = 0; ci < usable.size(); ++ci) {
                    bool predicted = ci == best;
                    bool actual = has_class(test_rows[i], usable[ci]);
                    if (predicted && actual) counts[ci].tp += 1;
                    if (predicted && !actual) counts[ci].fp += 1;
                    if (!predicted && actual) counts[ci].fn += 1;
                }
            }
        }

        RepeatScores s;
        BinaryCounts micro;
        for (const auto& c : counts) {
            s.f1_macro += c.f1();
            s.jaccard_macro += c.jaccard();
            micro.tp += c.tp;
            micro.fp += c.fp;
            micro.fn += c.fn;
        }
        s.f1_macro /= counts.size();
        s.jaccard_macro /= counts.size();
        s.f1_micro = micro.f1();
        scores[rep] = s;
    });

    EvalResult result;
    result.task = "classification";
    std::vector<double> f1m, f1u, jac;
    for (const auto& s : scores) {
        f1m.push_back(s.f1_macro);
        f1u.push_back(s.f1_micro);
        jac.push_back(s.jaccard_macro);
    }
    result.metrics["f1_macro"] = mean_std(f1m);
    result.metrics["f1_micro"] = mean_std(f1u);
    result.metrics["jaccard_macro"] = mean_std(jac);
    result.extras["excluded_classes"] = excluded;
    result.extras["usable_classes"] = static_cast<double>(usable.size());
    result.extras["labeled_vertices"] = static_cast<double>(labeled_rows.size());
    result.extras["multi_label"] = multi_label ? 1.0 : 0.0;
    return result;
}

EvalResult link_predict(const MatrixXd& embedding, const std::vector<std::pair<int, int>>& eval_links,
                        const LinkPredictConfig& config) {
    const Index n = embedding.rows();
    if (config.k < 1) throw ConfigError("link_predict: K must be at least 1");

    std::vector<std::vector<int>> links(static_cast<std::size_t>(n));
    for (auto [u, v] : eval_links) {
        if (u < 0 || v < 0 || u >= n || v >= n)
            throw DataError("link_predict: link endpoint out of range");
        if (u == v) continue;
        links[u].push_back(v);
        links[v].push_back(u);
    }
    for (auto& l : links) {
        std::sort(l.begin(), l.end());
        l.erase(std::unique(l.begin(), l.end()), l.end());
    }

    VectorXd norms(n);
    for (Index i = 0; i < n; ++i) norms(i) = embedding.row(i).norm();

    std::vector<int> sources;
    for (Index u = 0; u < n; ++u)
        if (!links[u].empty()) sources.push_back(static_cast<int>(u));

    std::vector<double> precision(sources.size(), 0.0), recall(sources.size(), 0.0);
    parallel_for(sources.size(), config.threads, [&](std::size_t si) {
        int u = sources[si];
        VectorXd scores = embedding * embedding.row(u).transpose();
        for (Index v = 0; v < n; ++v) {
            double denom = norms(u) * norms(v);
            scores(v) = denom > 0 ? scores(v) / denom : 0.0;
        }
        std::vector<int> order;
        order.reserve(n - 1);
        for (Index v = 0; v < n; ++v)
            if (v != u) order.push_back(static_cast<int>(v));
        auto k = std::min<std::size_t>(static_cast<std::size_t>(config.k), order.size());
        std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
            if (scores(a) != scores(b)) return scores(a) > scores(b);
            return a < b;
        });
        double hits = 0;
        for (std::size_t i = 0; i < k; ++i)
            if (std::binary_search(links[u].begin(), links[u].end(), order[i])) ++hits;
        precision[si] = hits / static_cast<double>(config.k);
        recall[si] = hits / static_cast<double>(links[u].size());
    });

    EvalResult result;
    result.task = "link_prediction";
    if (sources.empty()) {
        result.metrics["precision_at_k"] = {0.0, 0.0};
        result.metrics["recall_at_k"] = {0.0, 0.0};
    } else {
        result.metrics["precision_at_k"] = mean_std(precision);
        result.metrics["recall_at_k"] = mean_std(recall);
    }
    result.extras["k"] = config.k;
    result.extras["sources_evaluated"] = static_cast<double>(sources.size());
    result.extras["sources_skipped"] = static_cast<double>(n - static_cast<Index>(sources.size()));
    return result;
}

std::vector<std::pair<int, int>> class_links(const std::vector<std::vector<int>>& labels,
                                             int n_classes, std::size_t cap_per_class,
                                             std::uint64_t seed) {
    std::vector<std::vector<int>> members(n_classes);
    for (std::size_t i = 0; i < labels.size(); ++i)
        for (int c : labels[i]) members[c].push_back(static_cast<int>(i));

    std::unordered_set<std::uint64_t> seen;
    std::vector<std::pair<int, int>> out;
    for (int c = 0; c < n_classes; ++c) {
        const auto& m = members[c];
        if (m.size() < 2) continue;
        std::size_t all_pairs = m.size() * (m.size() - 1) / 2;
        auto emit = [&](int a, int b) {
            if (a > b) std::swap(a, b);
            std::uint64_t key = (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
            if (seen.insert(key).second) out.emplace_back(a, b);
        };
        if (all_pairs <= cap_per_class) {
            for (std::size_t i = 0; i < m.size(); ++i)
                for (std::size_t j = i + 1; j < m.size(); ++j) emit(m[i], m[j]);
        } else {
            // Seeded rejection sampling of exactly cap distinct pairs.
            std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
            std::uniform_int_distribution<std::size_t> pick(0, m.size() - 1);
            std::unordered_set<std::uint64_t> chosen;
            while (chosen.size() < cap_per_class) {
                std::size_t i = pick(rng), j = pick(rng);
                if (i == j) continue;
                std::size_t a = std::min(i, j), b = std::max(i, j);
                if (chosen.insert((static_cast<std::uint64_t>(a) << 32) | b).second) emit(m[a], m[b]);
            }
        }
    }
    return out;
}

}  // namespace meg
