#pragma once

#include "meg/errors.hpp"
#include "meg/spectral.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace meg {

struct GroupSpec {
    std::string name;
    Eigen::Index offset = 0;
    Eigen::Index width = 0;
};

/// Concatenated per-meta-graph embeddings over a shared vertex universe.
/// Groups tile [0, D) disjointly; vertices missing from one projection get a
/// zero-filled slice.
struct GroupedMatrix {
    Eigen::MatrixXd data;  // n x D
    std::vector<GroupSpec> groups;
    std::vector<std::string> vertex_ids;
};

GroupedMatrix concat_embeddings(const std::vector<EmbeddingMatrix>& embeddings);

enum class NormalizationMode { group_variance, column_variance };

struct PreprocessStats {
    Eigen::VectorXd means;   // per-column shift
    Eigen::VectorXd scales;  // per-column multiplier applied after shifting
    NormalizationMode mode = NormalizationMode::group_variance;
    std::vector<std::string> zero_variance_groups;
};

/// Mean-shifts every column to zero and normalizes variance: jointly per
/// group (total group variance 1) or per column. Idempotent. Zero-variance
/// groups are left at zero and reported in the stats.
PreprocessStats preprocess(GroupedMatrix& g, NormalizationMode mode = NormalizationMode::group_variance);

/// Applies previously computed stats (for encoding new rows).
void apply_preprocess(GroupedMatrix& g, const PreprocessStats& stats);

enum class LossKind { l21, l2 };

struct DenseLayer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;    // out
};

struct TrainConfig {
    int encoding_dim = 8;  // Q
    int layers = 2;        // encoder depth P; the decoder mirrors it
    double leaky_slope = 0.01;
    double dropout = 0.2;
    int epochs = 200;
    int batch_size = 128;
    double learning_rate = 1e-3;
    LossKind loss = LossKind::l21;
    double norm_epsilon = 0.0;  // > 0 smooths the group norm at zero residual
    std::uint64_t seed = 1;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
};

struct TrainingRecord {
    int epoch = 0;
    double loss = 0.0;      // summed objective over the epoch's batches
    double smoothed = 0.0;  // running minimum (monotone)
};

struct AutoencoderModel {
    std::vector<DenseLayer> encoder;  // D -> ... -> Q, each layer LeakyReLU
    std::vector<DenseLayer> decoder;  // Q -> ... -> D, mirrored widths
    double leaky_slope = 0.01;
    double dropout = 0.2;
    LossKind loss = LossKind::l21;
    double norm_epsilon = 0.0;
    std::uint64_t seed = 1;
    std::vector<GroupSpec> groups;
    PreprocessStats stats;
    std::vector<TrainingRecord> history;

    Eigen::Index input_dim() const { return encoder.empty() ? 0 : encoder.front().weight.cols(); }
    Eigen::Index encoding_dim() const { return encoder.empty() ? 0 : encoder.back().weight.rows(); }
};

/// Raised when the objective turns non-finite; carries the parameters from
/// the last finite epoch.
class TrainingDivergence : public NumericalError {
  public:
    TrainingDivergence(const std::string& message, AutoencoderModel last_good_model)
        : NumericalError(message), last_good(std::move(last_good_model)) {}
    AutoencoderModel last_good;
};

/// Group-wise l2,1 residual loss: sum over groups of the unsquared l2 norm
/// of (x - xt) restricted to the group. epsilon > 0 selects the smoothed
/// variant sqrt(|r|^2 + eps^2) - eps.
double l21_loss(const Eigen::VectorXd& x, const Eigen::VectorXd& xt,
                const std::vector<GroupSpec>& groups, double epsilon = 0.0);

/// Single-row forward pass: returns (encoding q, reconstruction xt).
/// Dropout is applied in inverted form and only when train_mode is set, so
/// evaluation is deterministic and needs no rescaling.
std::pair<Eigen::VectorXd, Eigen::VectorXd> forward(const AutoencoderModel& model,
                                                    const Eigen::VectorXd& x, bool train_mode,
                                                    std::mt19937_64& rng);

/// Trains on preprocessed data with mini-batch Adam. Deterministic for a
/// fixed seed. Throws TrainingDivergence on a non-finite objective.
AutoencoderModel train(const GroupedMatrix& g, const PreprocessStats& stats,
                       const TrainConfig& config);

struct CombinedEmbedding {
    Eigen::MatrixXd rows;  // n x Q
    std::vector<std::string> vertex_ids;
    std::uint64_t model_seed = 0;
};

/// Evaluation-mode encodings of preprocessed rows. The group layout must
/// match the one the model was trained with.
CombinedEmbedding encode(const AutoencoderModel& model, const GroupedMatrix& g);

struct GroupNorm {
    std::string name;
    double mean_residual_norm = 0.0;
};

/// Mean per-group residual norm over all rows, in group order; sorting
/// ascending gives the selection ranking (better reconstructed first).
std::vector<GroupNorm> group_norms(const AutoencoderModel& model, const GroupedMatrix& g);

/// Evaluation-mode objective J = sum_i l(x_i, xt_i) under the model's loss.
double reconstruction_loss(const AutoencoderModel& model, const GroupedMatrix& g);

struct ModelGradients {
    std::vector<DenseLayer> encoder;
    std::vector<DenseLayer> decoder;
};

/// Analytic gradient of the training objective (dropout disabled) with
/// respect to every weight and bias; shares the training backward pass.
ModelGradients loss_gradients(const AutoencoderModel& model, const Eigen::MatrixXd& rows);

}  // namespace meg
