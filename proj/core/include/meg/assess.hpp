#pragma once

#include "meg/spectral.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace meg {

struct FppResult {
    int zero_count = 0;    // eigenvalues below zero_tol (the FPP index p)
    bool all_zero = false;  // every computed eigenvalue is zero
};

/// First-Positive-Point of a sorted spectrum: the number of (near-)zero
/// eigenvalues, which equals the connected-component count of the graph.
FppResult fpp(const Spectrum& s, double zero_tol = 1e-8);

struct Partition {
    std::vector<int> component;  // component id per pn vertex, dense ids ordered
                                 // by smallest contained vertex index
    int count = 0;
};

Partition connected_components(const ProjectedNetwork& pn);

/// Mean of the first m eigenvalues past the FPP, in [0, 2]; higher means
/// steeper early spectrum growth. Returns 0 when no positive eigenvalues
/// were computed; throws when the spectrum is partial and too short.
double curvature_score(const Spectrum& s, int m, double zero_tol = 1e-8);

struct Lc3Result {
    std::vector<std::string> ids;   // sorted vertex ids of the LC3
    std::vector<int> pn1_vertices;  // the same set as local indices per side
    std::vector<int> pn2_vertices;
};

/// Largest Common Connected Component of two projected networks over a
/// shared anchor type, by partition refinement to a fixed point.
Lc3Result lc3(const ProjectedNetwork& pn1, const ProjectedNetwork& pn2);

struct NodalDomainSet {
    std::vector<std::vector<int>> domains;  // disjoint, sign-pure, connected
    std::vector<int> signs;                 // +1 / -1 per domain
};

/// Strong nodal domains of a vertex function: maximal connected components
/// of {f > 0} and {f < 0}. Zero-valued vertices belong to no domain.
NodalDomainSet nodal_domains(const ProjectedNetwork& pn, const Eigen::VectorXd& f);

struct CheegerResult {
    double max_ratio = 0.0;  // worst domain cut / volume
    double bound = 0.0;      // sqrt(2 lambda)
    bool holds = false;
};

/// Higher-order Cheeger check: every nodal domain's cut ratio is bounded by
/// sqrt(2 lambda) for the domain's eigenvalue.
CheegerResult cheeger_check(const ProjectedNetwork& pn, const NodalDomainSet& domains,
                            double lambda, double tol = 1e-9);

/// Embedding dimensions worth keeping: eigen-indices with
/// zero_tol < lambda < lambda_cap, ascending, truncated to budget.
std::vector<int> select_dims(const Spectrum& s, int budget, double lambda_cap = 1.0,
                             double zero_tol = 1e-8);

/// Expands a spectrum column to a pn-indexed vector; dropped vertices get 0.
Eigen::VectorXd lift_to_network(const ProjectedNetwork& pn, const Spectrum& s, int column);

struct AssessConfig {
    int m = 10;              // eigenvalues averaged into the curvature score
    double lambda_cap = 1.0;
    int budget = 16;         // selected dimensions per meta-graph
    double zero_tol = 1e-8;
    double tol = 1e-8;
    std::uint64_t seed = 1;
    int fpp_window = 50;  // assessment depth past the FPP
    int max_k = 0;        // hard cap on computed eigenpairs; 0 = automatic
    int threads = 0;
};

struct MetaGraphAssessment {
    std::string metagraph;
    int fpp = 0;
    bool all_zero = false;
    double curvature = 0.0;
    int component_count = 0;  // on the isolated-dropped graph
    int isolated_count = 0;
    std::vector<int> selected_dims;
    std::vector<double> spectrum_curve;
    Eigen::Index laplacian_dim = 0;
};

struct PairAssessment {
    std::string first, second;
    std::size_t lc3_size = 0;
    double curvature_first = 0.0;   // curvature of `first` restricted to the LC3
    double curvature_second = 0.0;
};

struct AssessmentReport {
    std::vector<MetaGraphAssessment> ranked;  // fpp ascending, curvature descending
    std::vector<PairAssessment> pairs;
};

struct AssessmentResult {
    AssessmentReport report;
    std::vector<ProjectedNetwork> projections;  // input order
    std::vector<Spectrum> spectra;              // input order
};

/// Full per-meta-graph and pairwise assessment. Spectra are grown adaptively
/// until they reach fpp + max(m, budget, fpp_window) eigenpairs (or the full
/// Laplacian). Sub-operation errors are annotated with the meta-graph name.
AssessmentResult assess(const HeterogeneousNetwork& hin, const std::vector<MetaGraph>& metagraphs,
                        const AssessConfig& config = {});

/// Adaptive-depth spectrum used by assess(); exposed for the pipeline.
Spectrum assess_spectrum(const ProjectedNetwork& pn, const AssessConfig& config);

}  // namespace meg
