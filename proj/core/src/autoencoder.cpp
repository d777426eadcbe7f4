#include "meg/autoencoder.hpp"

#include "meg/common.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

namespace meg {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Index round_up8(Index v) { return (v + 7) / 8 * 8; }

/// Encoder widths D -> ... -> Q, halving per layer (rounded up to multiples
/// of 8 when that keeps the sizes decreasing).
std::vector<Index> encoder_widths(Index input_dim, Index q, int layers) {
    std::vector<Index> widths{input_dim};
    for (int p = 1; p < layers; ++p) {
        Index half = (widths.back() + 1) / 2;
        Index w = std::clamp(round_up8(half), q, std::max(q, widths.back() - 1));
        widths.push_back(w);
    }
    widths.push_back(q);
    return widths;
}

struct LayerCache {
    MatrixXd dropped_input;  // layer input after dropout scaling
    MatrixXd preact;         // W x + b
    MatrixXd mask;           // 0 or 1/keep per entry; empty when no dropout
};

const DenseLayer& layer_at(const AutoencoderModel& model, std::size_t l) {
    return l < model.encoder.size() ? model.encoder[l] : model.decoder[l - model.encoder.size()];
}

/// Forward over a batch of rows. Fills caches for the backward pass when
/// given; `encoding` receives the activation after the last encoder layer.
MatrixXd forward_batch(const AutoencoderModel& model, const MatrixXd& batch, bool train_mode,
                       std::mt19937_64* rng, std::vector<LayerCache>* caches, MatrixXd* encoding) {
    const double slope = model.leaky_slope;
    const double keep = 1.0 - model.dropout;
    const bool dropping = train_mode && model.dropout > 0.0;
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const std::size_t all_layers = model.encoder.size() + model.decoder.size();
    if (caches) caches->assign(all_layers, {});

    MatrixXd a = batch;
    for (std::size_t l = 0; l < all_layers; ++l) {
        const DenseLayer& layer = layer_at(model, l);
        MatrixXd mask;
        if (dropping) {
            mask.resize(a.rows(), a.cols());
            for (Index i = 0; i < a.rows(); ++i)
                for (Index j = 0; j < a.cols(); ++j)
                    mask(i, j) = uniform(*rng) < keep ? 1.0 / keep : 0.0;
            a = a.cwiseProduct(mask);
        }
        MatrixXd z = a * layer.weight.transpose();
        z.rowwise() += layer.bias.transpose();
        if (caches) {
            (*caches)[l].dropped_input = std::move(a);
            (*caches)[l].preact = z;
            (*caches)[l].mask = std::move(mask);
        }
        a = z.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
        if (encoding && l + 1 == model.encoder.size()) *encoding = a;
    }
    return a;
}

/// Objective over a batch plus its gradient with respect to the
/// reconstruction. l21 sums unsquared group norms; l2 sums squared norms.
double loss_and_grad(const AutoencoderModel& model, const MatrixXd& batch, const MatrixXd& recon,
                     MatrixXd* grad) {
    if (grad) grad->setZero(recon.rows(), recon.cols());
    if (model.loss == LossKind::l2) {
        MatrixXd r = batch - recon;
        if (grad) *grad = -2.0 * r;
        return r.squaredNorm();
    }
    double total = 0.0;
    const double eps = model.norm_epsilon;
    for (Index i = 0; i < batch.rows(); ++i) {
        for (const GroupSpec& g : model.groups) {
            if (g.width == 0) continue;
            VectorXd r =
                batch.row(i).segment(g.offset, g.width) - recon.row(i).segment(g.offset, g.width);
            double norm2 = r.squaredNorm();
            if (eps > 0.0) {
                double smooth = std::sqrt(norm2 + eps * eps);
                total += smooth - eps;
                if (grad) grad->row(i).segment(g.offset, g.width) = (-r / smooth).transpose();
            } else {
                double norm = std::sqrt(norm2);
                total += norm;
                // subgradient 0 at exactly zero residual
                if (grad && norm > 0.0)
                    grad->row(i).segment(g.offset, g.width) = (-r / norm).transpose();
            }
        }
    }
    return total;
}

ModelGradients zero_gradients(const AutoencoderModel& model) {
    ModelGradients g;
    auto zero_like = [](const std::vector<DenseLayer>& layers) {
        std::vector<DenseLayer> out(layers.size());
        for (std::size_t i = 0; i < layers.size(); ++i) {
            out[i].weight = MatrixXd::Zero(layers[i].weight.rows(), layers[i].weight.cols());
            out[i].bias = VectorXd::Zero(layers[i].bias.size());
        }
        return out;
    };
    g.encoder = zero_like(model.encoder);
    g.decoder = zero_like(model.decoder);
    return g;
}

/// Backpropagates dJ/d(recon) through every layer, accumulating parameter
/// gradients. Caches must come from the matching forward pass.
void backward_batch(const AutoencoderModel& model, const std::vector<LayerCache>& caches,
                    const MatrixXd& grad_out, ModelGradients& grads) {
    const double slope = model.leaky_slope;
    const std::size_t all_layers = model.encoder.size() + model.decoder.size();
    MatrixXd da = grad_out;
    for (std::size_t rl = all_layers; rl-- > 0;) {
        const DenseLayer& layer = layer_at(model, rl);
        DenseLayer& g =
            rl < model.encoder.size() ? grads.encoder[rl] : grads.decoder[rl - model.encoder.size()];
        const LayerCache& cache = caches[rl];

        MatrixXd dz = da.cwiseProduct(
            cache.preact.unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; }));
        g.weight.noalias() += dz.transpose() * cache.dropped_input;
        g.bias.noalias() += dz.colwise().sum().transpose();
        if (rl == 0) break;
        da.noalias() = dz * layer.weight;
        if (cache.mask.size() > 0) da = da.cwiseProduct(cache.mask);
    }
}

void validate_groups(const std::vector<GroupSpec>& groups, Index dim) {
    Index expected = 0;
    for (const auto& g : groups) {
        if (g.offset != expected)
            throw DataError("group '" + g.name + "' does not tile the input contiguously");
        if (g.width < 0) throw DataError("group '" + g.name + "' has negative width");
        expected += g.width;
    }
    if (expected != dim)
        throw DataError("group layout covers " + std::to_string(expected) + " of " +
                        std::to_string(dim) + " columns");
}

}  // namespace

GroupedMatrix concat_embeddings(const std::vector<EmbeddingMatrix>& embeddings) {
    if (embeddings.empty()) throw DataError("concat_embeddings: no embeddings given");
    std::set<std::string> names;
    for (const auto& e : embeddings) {
        if (!names.insert(e.metagraph).second)
            throw DataError("concat_embeddings: duplicate meta-graph '" + e.metagraph + "'");
    }

    // Union universe in sorted id order; absent vertices get zero rows.
    std::set<std::string> universe;
    for (const auto& e : embeddings) universe.insert(e.vertex_ids.begin(), e.vertex_ids.end());

    GroupedMatrix g;
    g.vertex_ids.assign(universe.begin(), universe.end());
    std::unordered_map<std::string, Index> row_of;
    for (std::size_t i = 0; i < g.vertex_ids.size(); ++i)
        row_of.emplace(g.vertex_ids[i], static_cast<Index>(i));

    Index total_width = 0;
    for (const auto& e : embeddings) {
        g.groups.push_back({e.metagraph, total_width, e.rows.cols()});
        total_width += e.rows.cols();
    }
    g.data = MatrixXd::Zero(static_cast<Index>(g.vertex_ids.size()), total_width);
    for (std::size_t k = 0; k < embeddings.size(); ++k) {
        const auto& e = embeddings[k];
        const GroupSpec& spec = g.groups[k];
        for (std::size_t r = 0; r < e.vertex_ids.size(); ++r)
            g.data.row(row_of.at(e.vertex_ids[r])).segment(spec.offset, spec.width) =
                e.rows.row(static_cast<Index>(r));
    }
    return g;
}

PreprocessStats preprocess(GroupedMatrix& g, NormalizationMode mode) {
    if (g.data.rows() == 0) throw DataError("preprocess: empty matrix");
    validate_groups(g.groups, g.data.cols());

    PreprocessStats stats;
    stats.mode = mode;
    stats.means = g.data.colwise().mean();
    g.data.rowwise() -= stats.means.transpose();
    stats.scales = VectorXd::Ones(g.data.cols());

    const double n = static_cast<double>(g.data.rows());
    if (mode == NormalizationMode::group_variance) {
        for (const GroupSpec& spec : g.groups) {
            if (spec.width == 0) continue;
            double variance = g.data.middleCols(spec.offset, spec.width).squaredNorm() / n;
            if (variance > 0.0) {
                stats.scales.segment(spec.offset, spec.width).setConstant(1.0 / std::sqrt(variance));
            } else {
                stats.zero_variance_groups.push_back(spec.name);
            }
        }
    } else {
        for (Index c = 0; c < g.data.cols(); ++c) {
            double variance = g.data.col(c).squaredNorm() / n;
            if (variance > 0.0) stats.scales(c) = 1.0 / std::sqrt(variance);
        }
        for (const GroupSpec& spec : g.groups) {
            if (spec.width > 0 && g.data.middleCols(spec.offset, spec.width).squaredNorm() == 0.0)
                stats.zero_variance_groups.push_back(spec.name);
        }
    }
    g.data = g.data * stats.scales.asDiagonal();
    return stats;
}

void apply_preprocess(GroupedMatrix& g, const PreprocessStats& stats) {
    if (g.data.cols() != stats.means.size())
        throw DataError("apply_preprocess: stats computed for a different column count");
    g.data.rowwise() -= stats.means.transpose();
    g.data = g.data * stats.scales.asDiagonal();
}

double l21_loss(const VectorXd& x, const VectorXd& xt, const std::vector<GroupSpec>& groups,
                double epsilon) {
    if (x.size() != xt.size()) throw DataError("l21_loss: shape mismatch");
    validate_groups(groups, x.size());
    double total = 0.0;
    for (const GroupSpec& g : groups) {
        if (g.width == 0) continue;
        double norm2 = (x.segment(g.offset, g.width) - xt.segment(g.offset, g.width)).squaredNorm();
        total += epsilon > 0.0 ? std::sqrt(norm2 + epsilon * epsilon) - epsilon : std::sqrt(norm2);
    }
    return total;
}

std::pair<VectorXd, VectorXd> forward(const AutoencoderModel& model, const VectorXd& x,
                                      bool train_mode, std::mt19937_64& rng) {
    if (x.size() != model.input_dim())
        throw DataError("forward: input has " + std::to_string(x.size()) + " dims, model expects " +
                        std::to_string(model.input_dim()));
    MatrixXd encoding;
    MatrixXd recon = forward_batch(model, x.transpose(), train_mode, &rng, nullptr, &encoding);
    return {encoding.row(0).transpose(), recon.row(0).transpose()};
}

AutoencoderModel train(const GroupedMatrix& g, const PreprocessStats& stats,
                       const TrainConfig& config) {
    const Index n = g.data.rows();
    const Index dim = g.data.cols();
    if (n == 0 || dim == 0) throw DataError("train: empty input matrix");
    validate_groups(g.groups, dim);
    if (config.encoding_dim < 1 || config.encoding_dim > dim)
        throw ConfigError("train: encoding_dim outside [1, " + std::to_string(dim) + "]");
    if (config.layers < 1) throw ConfigError("train: need at least one layer");
    if (config.dropout < 0.0 || config.dropout >= 1.0)
        throw ConfigError("train: dropout outside [0, 1)");
    if (config.batch_size < 1) throw ConfigError("train: batch_size must be positive");
    if (config.learning_rate <= 0.0) throw ConfigError("train: learning_rate must be positive");
    if (config.epochs < 0) throw ConfigError("train: epochs must be non-negative");

    AutoencoderModel model;
    model.leaky_slope = config.leaky_slope;
    model.dropout = config.dropout;
    model.loss = config.loss;
    model.norm_epsilon = config.norm_epsilon;
    model.seed = config.seed;
    model.groups = g.groups;
    model.stats = stats;

    // Symmetric uniform init scaled by fan-in + fan-out; biases zero.
    std::mt19937_64 init_rng(derive_seed(config.seed, 0));
    auto init_layer = [&](Index out, Index in) {
        DenseLayer layer;
        double bound = std::sqrt(6.0 / static_cast<double>(in + out));
        std::uniform_real_distribution<double> uniform(-bound, bound);
        layer.weight.resize(out, in);
        for (Index i = 0; i < out; ++i)
            for (Index j = 0; j < in; ++j) layer.weight(i, j) = uniform(init_rng);
        layer.bias = VectorXd::Zero(out);
        return layer;
    };
    std::vector<Index> widths = encoder_widths(dim, config.encoding_dim, config.layers);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l)
        model.encoder.push_back(init_layer(widths[l + 1], widths[l]));
    for (std::size_t l = widths.size() - 1; l > 0; --l)
        model.decoder.push_back(init_layer(widths[l - 1], widths[l]));

    std::mt19937_64 shuffle_rng(derive_seed(config.seed, 1));
    std::mt19937_64 dropout_rng(derive_seed(config.seed, 2));

    ModelGradients grads = zero_gradients(model);
    ModelGradients adam_m = zero_gradients(model);
    ModelGradients adam_v = zero_gradients(model);
    long adam_t = 0;

    auto for_each_param = [&](auto&& fn) {
        for (std::size_t l = 0; l < model.encoder.size(); ++l)
            fn(model.encoder[l], grads.encoder[l], adam_m.encoder[l], adam_v.encoder[l]);
        for (std::size_t l = 0; l < model.decoder.size(); ++l)
            fn(model.decoder[l], grads.decoder[l], adam_m.decoder[l], adam_v.decoder[l]);
    };

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    AutoencoderModel last_good = model;
    std::vector<LayerCache> caches;
    MatrixXd grad_out;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double epoch_loss = 0.0;
        for (Index start = 0; start < n; start += config.batch_size) {
            Index size = std::min<Index>(config.batch_size, n - start);
            MatrixXd batch(size, dim);
            for (Index r = 0; r < size; ++r) batch.row(r) = g.data.row(order[start + r]);

            MatrixXd recon = forward_batch(model, batch, true, &dropout_rng, &caches, nullptr);
            double batch_loss = loss_and_grad(model, batch, recon, &grad_out);
            epoch_loss += batch_loss;
            if (!std::isfinite(batch_loss)) {
                epoch_loss = batch_loss;
                break;
            }

            for (auto& layer : grads.encoder) {
                layer.weight.setZero();
                layer.bias.setZero();
            }
            for (auto& layer : grads.decoder) {
                layer.weight.setZero();
                layer.bias.setZero();
            }
            grad_out /= static_cast<double>(size);
            backward_batch(model, caches, grad_out, grads);

            ++adam_t;
            double correction1 = 1.0 - std::pow(config.adam_beta1, adam_t);
            double correction2 = 1.0 - std::pow(config.adam_beta2, adam_t);
            for_each_param([&](DenseLayer& p, DenseLayer& dp, DenseLayer& m1, DenseLayer& m2) {
                auto update = [&](auto& w, const auto& dw, auto& m, auto& v) {
                    m = config.adam_beta1 * m + (1.0 - config.adam_beta1) * dw;
                    v = config.adam_beta2 * v + (1.0 - config.adam_beta2) * dw.cwiseProduct(dw);
                    w.array() -= config.learning_rate * (m.array() / correction1) /
                                 ((v.array() / correction2).sqrt() + config.adam_epsilon);
                };
                update(p.weight, dp.weight, m1.weight, m2.weight);
                update(p.bias, dp.bias, m1.bias, m2.bias);
            });
        }

        if (!std::isfinite(epoch_loss)) {
            throw TrainingDivergence("training diverged at epoch " + std::to_string(epoch) +
                                         " (non-finite objective); last good epoch " +
                                         std::to_string(epoch - 1),
                                     std::move(last_good));
        }
        double smoothed =
            model.history.empty() ? epoch_loss : std::min(model.history.back().smoothed, epoch_loss);
        model.history.push_back({epoch, epoch_loss, smoothed});
        last_good = model;
    }
    return model;
}

CombinedEmbedding encode(const AutoencoderModel& model, const GroupedMatrix& g) {
    if (g.data.cols() != model.input_dim())
        throw DataError("encode: input has " + std::to_string(g.data.cols()) +
                        " columns, model expects " + std::to_string(model.input_dim()));
    if (g.groups.size() != model.groups.size())
        throw DataError("encode: group layout does not match the trained model");
    for (std::size_t i = 0; i < g.groups.size(); ++i) {
        if (g.groups[i].name != model.groups[i].name || g.groups[i].offset != model.groups[i].offset ||
            g.groups[i].width != model.groups[i].width)
            throw DataError("encode: group '" + g.groups[i].name +
                            "' does not match the trained model's layout");
    }
    CombinedEmbedding out;
    out.vertex_ids = g.vertex_ids;
    out.model_seed = model.seed;
    MatrixXd encoding;
    std::mt19937_64 unused(0);
    forward_batch(model, g.data, false, &unused, nullptr, &encoding);
    out.rows = std::move(encoding);
    return out;
}

std::vector<GroupNorm> group_norms(const AutoencoderModel& model, const GroupedMatrix& g) {
    std::mt19937_64 unused(0);
    MatrixXd recon = forward_batch(model, g.data, false, &unused, nullptr, nullptr);
    std::vector<GroupNorm> out;
    out.reserve(model.groups.size());
    const auto n = static_cast<double>(g.data.rows());
    for (const GroupSpec& spec : model.groups) {
        double sum = 0.0;
        for (Index i = 0; i < g.data.rows(); ++i) {
            sum += (g.data.row(i).segment(spec.offset, spec.width) -
                    recon.row(i).segment(spec.offset, spec.width))
                       .norm();
        }
        out.push_back({spec.name, n > 0 ? sum / n : 0.0});
    }
    return out;
}

double reconstruction_loss(const AutoencoderModel& model, const GroupedMatrix& g) {
    std::mt19937_64 unused(0);
    MatrixXd recon = forward_batch(model, g.data, false, &unused, nullptr, nullptr);
    return loss_and_grad(model, g.data, recon, nullptr);
}

ModelGradients loss_gradients(const AutoencoderModel& model, const MatrixXd& rows) {
    std::vector<LayerCache> caches;
    std::mt19937_64 unused(0);
    MatrixXd recon = forward_batch(model, rows, false, &unused, &caches, nullptr);
    MatrixXd grad_out;
    loss_and_grad(model, rows, recon, &grad_out);
    ModelGradients grads = zero_gradients(model);
    backward_batch(model, caches, grad_out, grads);
    return grads;
}

}  // namespace meg
