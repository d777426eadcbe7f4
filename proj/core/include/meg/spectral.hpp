#pragma once

#include "meg/metagraph.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace meg {

struct LaplacianResult {
    SparseMatrix matrix;        // L = I - D^{-1/2} A D^{-1/2} over retained vertices
    std::vector<int> retained;  // pn-local indices with positive degree
    std::vector<int> dropped;   // pn-local indices removed for zero degree
};

/// Normalized Laplacian of a projected network. Degree-zero vertices are
/// dropped (D^{-1/2} is undefined for them) and reported; throws DataError
/// when every vertex is isolated.
LaplacianResult normalized_laplacian(const ProjectedNetwork& pn);

struct SpectrumOptions {
    double tol = 1e-8;          // residual bound per eigenpair
    std::uint64_t seed = 1;     // start-vector seed
    int iteration_factor = 50;  // matrix-vector product cap = factor * k
};

/// Leading (smallest) eigenpairs of the normalized Laplacian.
struct Spectrum {
    std::vector<double> eigenvalues;  // ascending, in [0, 2] up to tol
    Eigen::MatrixXd eigenvectors;     // retained-vertex rows, orthonormal columns
    std::vector<int> vertices;        // pn-local index per row
    std::vector<std::string> vertex_ids;
    std::vector<std::string> dropped_isolated;
    std::vector<double> residual_norms;  // ||L u - lambda u|| per pair
    std::string metagraph;
    Eigen::Index laplacian_dim = 0;

    int size() const { return static_cast<int>(eigenvalues.size()); }
    bool full() const { return static_cast<Eigen::Index>(eigenvalues.size()) == laplacian_dim; }
};

/// Computes the k smallest eigenpairs of L via Lanczos iteration with full
/// reorthogonalization on 2I - L (largest eigenvalues of the shifted
/// operator). Deterministic for a fixed seed; throws NumericalError with the
/// best residuals when the iteration cap is hit.
Spectrum spectrum(const ProjectedNetwork& pn, int k, const SpectrumOptions& options = {});

/// Grows an existing spectrum by `extra` eigenpairs, reusing the converged
/// pairs instead of recomputing them.
Spectrum extend_spectrum(const ProjectedNetwork& pn, const Spectrum& base, int extra,
                         const SpectrumOptions& options = {});

struct EmbeddingColumn {
    std::string metagraph;
    double eigenvalue = 0.0;
    int eigen_index = 0;  // position within the source spectrum
};

struct EmbeddingMatrix {
    Eigen::MatrixXd rows;  // one embedding row per retained vertex
    std::vector<EmbeddingColumn> columns;
    std::vector<std::string> vertex_ids;
    std::string metagraph;
};

/// Assembles per-vertex embeddings from the selected eigenvector columns.
EmbeddingMatrix spectral_embedding(const Spectrum& s, const std::vector<int>& dims);

/// Optimal rank-k PCA loss of the normalized adjacency 2I - L, equal to
/// sum_{i>k} (2 - lambda_i)^2. Requires a full spectrum.
double pca_loss(const Spectrum& s, int k);

}  // namespace meg
