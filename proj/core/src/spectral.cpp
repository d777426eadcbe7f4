#include "meg/spectral.hpp"

#include "meg/common.hpp"
#include "meg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace meg {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Removes the components of v along the first m columns of basis (and all
/// columns of extra). Two passes of classical Gram-Schmidt.
void orthogonalize(VectorXd& v, const MatrixXd& basis, Eigen::Index m, const MatrixXd* extra,
                   Eigen::Index extra_cols) {
    for (int pass = 0; pass < 2; ++pass) {
        if (m > 0) v.noalias() -= basis.leftCols(m) * (basis.leftCols(m).transpose() * v);
        if (extra && extra_cols > 0)
            v.noalias() -= extra->leftCols(extra_cols) * (extra->leftCols(extra_cols).transpose() * v);
    }
}

struct LanczosState {
    MatrixXd vectors;            // converged eigenvectors of 2I - L, column per pair
    std::vector<double> thetas;  // eigenvalues of 2I - L
    Eigen::Index count = 0;
    long matvecs = 0;
};

/// Converges `want` additional eigenpairs of 2I - L on the complement of
/// what `state` already holds. Restarts with fresh seeded vectors deflate
/// converged pairs.
void converge_pairs(const SparseMatrix& L, Eigen::Index want, const SpectrumOptions& options,
                    LanczosState& state, long matvec_cap, std::mt19937_64& rng) {
    const Eigen::Index n = L.rows();
    const Eigen::Index target = state.count + want;
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto random_start = [&]() {
        VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = gauss(rng);
        return v;
    };

    int stalled_rounds = 0;
    double best_residual = std::numeric_limits<double>::infinity();

    while (state.count < target) {
        const Eigen::Index remaining = n - state.count;
        const Eigen::Index need = target - state.count;

        VectorXd v = random_start();
        orthogonalize(v, state.vectors, state.count, nullptr, 0);
        double vnorm = v.norm();
        if (vnorm < 1e-8) continue;  // unlucky draw, resample
        v /= vnorm;

        MatrixXd basis(n, remaining);
        basis.col(0) = v;
        std::vector<double> alpha, beta;
        alpha.reserve(remaining);
        beta.reserve(remaining);

        Eigen::Index m = 0;
        static const double kNoSub = 0.0;
        auto ritz_converged = [&](Eigen::Index steps) {
            // Cheap bound: |beta_m * s_{m,i}| estimates the residual of Ritz
            // pair i without forming the vector.
            if (steps < need) return false;
            Eigen::Map<const VectorXd> diag(alpha.data(), steps);
            Eigen::Map<const VectorXd> sub(steps > 1 ? beta.data() : &kNoSub,
                                           steps > 1 ? steps - 1 : 0);
            Eigen::SelfAdjointEigenSolver<MatrixXd> small;
            small.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
            double last_beta = beta.empty() ? 0.0 : beta.back();
            for (Eigen::Index i = 0; i < need; ++i) {
                Eigen::Index idx = steps - 1 - i;
                double est = std::abs(last_beta * small.eigenvectors()(steps - 1, idx));
                if (est > options.tol * 0.1) return false;
            }
            return true;
        };

        while (m < remaining) {
            VectorXd w = 2.0 * basis.col(m) - L * basis.col(m);
            ++state.matvecs;
            double a = basis.col(m).dot(w);
            alpha.push_back(a);
            w -= a * basis.col(m);
            if (m > 0) w -= beta[m - 1] * basis.col(m - 1);
            orthogonalize(w, basis, m + 1, &state.vectors, state.count);
            double b = w.norm();
            ++m;
            // Invariant subspace reached: the factorization is exact.
            if (b < 1e-13) break;
            if (m < remaining) {
                beta.push_back(b);
                basis.col(m) = w / b;
            }
            if (m >= need && (m % 8 == 0) && ritz_converged(m)) break;
            if (state.matvecs > matvec_cap) break;
        }

        // Ritz pairs of the tridiagonal factorization.
        Eigen::Map<const VectorXd> diag(alpha.data(), m);
        Eigen::Map<const VectorXd> sub(m > 1 ? beta.data() : &kNoSub, m > 1 ? m - 1 : 0);
        Eigen::SelfAdjointEigenSolver<MatrixXd> small;
        small.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);

        // Accept pairs from the largest Ritz value down while the explicit
        // residual meets the tolerance; stopping at the first failure keeps
        // the accepted set equal to the top of the remaining spectrum.
        Eigen::Index accepted = 0;
        for (Eigen::Index idx = m - 1; idx >= 0 && state.count < target; --idx) {
            double theta = small.eigenvalues()(idx);
            VectorXd y = basis.leftCols(m) * small.eigenvectors().col(idx);
            orthogonalize(y, state.vectors, state.count, nullptr, 0);
            double ynorm = y.norm();
            if (ynorm < 1e-8) continue;  // collapsed onto converged space
            y /= ynorm;
            VectorXd ay = 2.0 * y - L * y;
            ++state.matvecs;
            double residual = (ay - theta * y).norm();
            if (residual > options.tol) {
                best_residual = std::min(best_residual, residual);
                break;
            }
            if (state.vectors.cols() < state.count + 1) {
                MatrixXd grown(n, std::max<Eigen::Index>(2 * state.count + 1, 8));
                grown.leftCols(state.count) = state.vectors.leftCols(state.count);
                state.vectors = std::move(grown);
            }
            state.vectors.col(state.count) = y;
            state.thetas.push_back(theta);
            ++state.count;
            ++accepted;
        }

        if (accepted == 0)
            ++stalled_rounds;
        else
            stalled_rounds = 0;
        if (state.count < target && (state.matvecs > matvec_cap || stalled_rounds > 4)) {
            std::ostringstream msg;
            msg << "eigensolver did not converge: " << state.count << "/" << target
                << " pairs after " << state.matvecs << " matrix-vector products (cap " << matvec_cap
                << "), best unconverged residual " << best_residual;
            throw NumericalError(msg.str());
        }
    }
}

/// Converges `want` more of the largest eigenpairs of 2I - L. A single
/// Krylov run sees one direction per degenerate eigenvalue, so a greedy
/// sweep can accept a small Ritz value while duplicate copies of larger
/// ones hide in the complement; the verification loop converges the top of
/// the deflated remainder and swaps it in until the accepted set dominates
/// the complement.
void lanczos_largest(const SparseMatrix& L, int want, const SpectrumOptions& options,
                     LanczosState& state) {
    const Eigen::Index n = L.rows();
    const Eigen::Index target = state.count + want;
    std::mt19937_64 rng(options.seed);
    long matvec_cap = std::max<long>(static_cast<long>(options.iteration_factor) * target, 200);

    converge_pairs(L, want, options, state, matvec_cap, rng);

    auto remove_pair = [&](Eigen::Index idx) {
        if (idx != state.count - 1) {
            state.vectors.col(idx) = state.vectors.col(state.count - 1);
            state.thetas[idx] = state.thetas[state.count - 1];
        }
        state.thetas.pop_back();
        --state.count;
    };

    const double gap = 10.0 * options.tol;
    for (Eigen::Index swaps = 0; state.count < n && swaps <= 2 * target + 8; ++swaps) {
        Eigen::Index min_idx = 0;
        for (Eigen::Index i = 1; i < state.count; ++i)
            if (state.thetas[i] < state.thetas[min_idx]) min_idx = i;
        double theta_min = state.thetas[min_idx];

        matvec_cap += std::max(options.iteration_factor, 50);
        converge_pairs(L, 1, options, state, matvec_cap, rng);
        double theta_next = state.thetas[state.count - 1];
        if (theta_next > theta_min + gap) {
            remove_pair(min_idx);  // a hidden duplicate beat the accepted minimum
        } else {
            remove_pair(state.count - 1);
            break;
        }
    }
}

Spectrum assemble_spectrum(const ProjectedNetwork& pn, const LaplacianResult& lap,
                           LanczosState& state) {
    Spectrum s;
    s.metagraph = pn.source_metagraph;
    s.laplacian_dim = lap.matrix.rows();
    s.vertices = lap.retained;
    s.vertex_ids.reserve(lap.retained.size());
    for (int v : lap.retained) s.vertex_ids.push_back(pn.vertex_ids[v]);
    s.dropped_isolated.reserve(lap.dropped.size());
    for (int v : lap.dropped) s.dropped_isolated.push_back(pn.vertex_ids[v]);

    // theta = 2 - lambda: descending theta order is ascending in lambda, but
    // deflation restarts can interleave, so sort explicitly.
    std::vector<Eigen::Index> order(state.count);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return state.thetas[a] > state.thetas[b]; });

    s.eigenvalues.resize(state.count);
    s.eigenvectors.resize(lap.matrix.rows(), state.count);
    s.residual_norms.resize(state.count);
    for (Eigen::Index i = 0; i < state.count; ++i) {
        Eigen::Index src = order[i];
        double lambda = 2.0 - state.thetas[src];
        s.eigenvalues[i] = lambda;
        s.eigenvectors.col(i) = state.vectors.col(src);
        s.residual_norms[i] =
            (lap.matrix * s.eigenvectors.col(i) - lambda * s.eigenvectors.col(i)).norm();
    }
    return s;
}

}  // namespace

LaplacianResult normalized_laplacian(const ProjectedNetwork& pn) {
    const Eigen::Index n = pn.size();
    LaplacianResult out;
    std::vector<double> degree(n, 0.0);
    for (Eigen::Index v = 0; v < n; ++v) degree[v] = pn.degree(v);

    std::vector<int> local(n, -1);
    for (Eigen::Index v = 0; v < n; ++v) {
        if (degree[v] > 0.0) {
            local[v] = static_cast<int>(out.retained.size());
            out.retained.push_back(static_cast<int>(v));
        } else {
            out.dropped.push_back(static_cast<int>(v));
        }
    }
    if (out.retained.empty())
        throw DataError("normalized Laplacian undefined: every vertex is isolated");

    std::vector<Eigen::Triplet<double>> triplets;
    for (int v : out.retained) {
        triplets.emplace_back(local[v], local[v], 1.0);
        double dv = degree[v];
        for (SparseMatrix::InnerIterator it(pn.adjacency, v); it; ++it) {
            int r = local[it.row()];
            triplets.emplace_back(r, local[v], -it.value() / std::sqrt(degree[it.row()] * dv));
        }
    }
    auto nr = static_cast<Eigen::Index>(out.retained.size());
    out.matrix.resize(nr, nr);
    out.matrix.setFromTriplets(triplets.begin(), triplets.end());
    return out;
}

Spectrum spectrum(const ProjectedNetwork& pn, int k, const SpectrumOptions& options) {
    LaplacianResult lap = normalized_laplacian(pn);
    if (k < 1 || k > lap.matrix.rows())
        throw ConfigError("spectrum: k = " + std::to_string(k) + " outside [1, " +
                          std::to_string(lap.matrix.rows()) + "]");
    LanczosState state;
    state.vectors.resize(lap.matrix.rows(), std::min<Eigen::Index>(k, lap.matrix.rows()));
    lanczos_largest(lap.matrix, k, options, state);
    return assemble_spectrum(pn, lap, state);
}

Spectrum extend_spectrum(const ProjectedNetwork& pn, const Spectrum& base, int extra,
                         const SpectrumOptions& options) {
    if (extra <= 0) return base;
    LaplacianResult lap = normalized_laplacian(pn);
    if (lap.matrix.rows() != base.laplacian_dim || base.vertices != lap.retained)
        throw DataError("extend_spectrum: spectrum does not match this network");
    if (base.size() + extra > lap.matrix.rows())
        throw ConfigError("extend_spectrum: requested " + std::to_string(base.size() + extra) +
                          " pairs from a " + std::to_string(lap.matrix.rows()) + "-dim Laplacian");

    LanczosState state;
    state.count = base.size();
    state.vectors.resize(lap.matrix.rows(), state.count + extra);
    state.vectors.leftCols(state.count) = base.eigenvectors;
    state.thetas.reserve(state.count + extra);
    for (double lambda : base.eigenvalues) state.thetas.push_back(2.0 - lambda);

    SpectrumOptions opts = options;
    opts.seed = derive_seed(options.seed, static_cast<std::uint64_t>(base.size()));
    lanczos_largest(lap.matrix, extra, opts, state);
    return assemble_spectrum(pn, lap, state);
}

EmbeddingMatrix spectral_embedding(const Spectrum& s, const std::vector<int>& dims) {
    EmbeddingMatrix e;
    e.vertex_ids = s.vertex_ids;
    e.metagraph = s.metagraph;
    e.rows.resize(s.eigenvectors.rows(), static_cast<Eigen::Index>(dims.size()));
    e.columns.reserve(dims.size());
    for (std::size_t j = 0; j < dims.size(); ++j) {
        int d = dims[j];
        if (d < 0 || d >= s.size())
            throw ConfigError("spectral_embedding: eigen-index " + std::to_string(d) +
                              " outside computed spectrum of size " + std::to_string(s.size()));
        e.rows.col(static_cast<Eigen::Index>(j)) = s.eigenvectors.col(d);
        e.columns.push_back({s.metagraph, s.eigenvalues[d], d});
    }
    return e;
}

double pca_loss(const Spectrum& s, int k) {
    if (!s.full())
        throw ConfigError("pca_loss requires a full spectrum (" + std::to_string(s.size()) + " of " +
                          std::to_string(s.laplacian_dim) + " pairs computed)");
    if (k < 0 || k > s.size())
        throw ConfigError("pca_loss: k = " + std::to_string(k) + " outside [0, " +
                          std::to_string(s.size()) + "]");
    double loss = 0.0;
    for (int i = k; i < s.size(); ++i) {
        double w = 2.0 - s.eigenvalues[i];
        loss += w * w;
    }
    return loss;
}

}  // namespace meg
