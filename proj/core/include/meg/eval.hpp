#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace meg {

struct EvalResult {
    std::string task;
    std::map<std::string, std::pair<double, double>> metrics;  // name -> (mean, std)
    std::map<std::string, double> extras;                      // counters and warnings
};

struct ClassifyConfig {
    double split_ratio = 0.5;  // labeled fraction used for training
    int repeats = 10;
    std::uint64_t seed = 1;
    int threads = 0;
    int iterations = 300;  // classifier gradient steps
    double learning_rate = 0.1;
    double l2_penalty = 1e-4;
};

/// Node classification with an in-repo one-vs-rest logistic classifier over
/// random stratified splits. labels[i] holds the sorted class ids of row i
/// (empty = unlabeled); vertices with several labels switch the harness to
/// independent binary tasks. Reports macro/micro F1 and Jaccard over repeats.
/// Classes with fewer than two labeled vertices are excluded with a warning
/// counter; fewer than two usable classes is an error.
EvalResult classify(const Eigen::MatrixXd& embedding, const std::vector<std::vector<int>>& labels,
                    int n_classes, const ClassifyConfig& config = {});

struct LinkPredictConfig {
    int k = 10;
    int threads = 0;
};

/// Ranks every other vertex by cosine similarity per source vertex and
/// reports precision@K / recall@K averaged over sources with at least one
/// true link (skipped sources are counted). Ties break by vertex index;
/// zero-norm embeddings have cosine 0.
EvalResult link_predict(const Eigen::MatrixXd& embedding,
                        const std::vector<std::pair<int, int>>& eval_links,
                        const LinkPredictConfig& config = {});

/// All intra-class vertex pairs, capped per class by seeded sampling.
std::vector<std::pair<int, int>> class_links(const std::vector<std::vector<int>>& labels,
                                             int n_classes, std::size_t cap_per_class = 100000,
                                             std::uint64_t seed = 1);

}  // namespace meg
