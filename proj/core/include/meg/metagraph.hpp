#pragma once

#include "meg/hin.hpp"

#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace meg {

/// Series-parallel meta-graph pattern between two anchor slots of the same
/// type. A branch holds parallel sub-chains that rejoin at the surrounding
/// node stages; meta-paths are the branch-free special case.
struct MetaGraph {
    struct Branch {
        std::vector<std::vector<int>> arms;  // each arm: nonempty list of type ids
    };
    using Stage = std::variant<int, Branch>;  // Node(type) | Branch

    std::vector<Stage> stages;
    int anchor_type = -1;
    std::string display_name;      // canonical form; parse(display_name) round-trips
    bool mirror_symmetric = true;  // pattern equals its own reversal

    bool operator==(const MetaGraph& other) const {
        return display_name == other.display_name && anchor_type == other.anchor_type;
    }
};

/// Weighted undirected homogeneous network over the anchor-type vertices.
/// Invariants: adjacency symmetric, zero diagonal, weights >= 0. Isolated
/// anchor vertices stay in the vertex set.
struct ProjectedNetwork {
    std::vector<std::string> vertex_ids;  // local index -> source vertex id
    std::vector<int> hin_vertices;        // local index -> hin vertex index (may be empty)
    SparseMatrix adjacency;
    std::string source_metagraph;

    Eigen::Index size() const { return adjacency.rows(); }
    std::size_t edge_count() const { return static_cast<std::size_t>(adjacency.nonZeros()) / 2; }
    double degree(Eigen::Index v) const;
    bool is_isolated(Eigen::Index v) const { return degree(v) == 0.0; }
};

/// Builds a ProjectedNetwork from an undirected edge list (u, v, w). Used by
/// tests and by graph fixtures; validates symmetry-by-construction inputs.
ProjectedNetwork make_projected_network(std::vector<std::string> vertex_ids,
                                        const std::vector<std::tuple<int, int, double>>& edges,
                                        std::string source_metagraph = "");

/// Restriction of a projected network to a vertex subset (induced subgraph).
ProjectedNetwork induce_subnetwork(const ProjectedNetwork& pn, const std::vector<int>& vertices);

/// Parses an expression over the grammar
///   CHAIN := TYPE (SEP UNIT)* ; UNIT := TYPE | '(' ARM ('|' ARM)* ')' ;
///   ARM := TYPE (SEP TYPE)*
/// e.g. "A-P-V-P-A", "M-(U|D)-M", "A-(P-P)-A", and validates it against the
/// network schema: both endpoints must be anchor-type nodes, and every
/// adjacent stage pair must be connected by a declared relation.
MetaGraph parse_metagraph(const HeterogeneousNetwork& hin, std::string_view expr);

/// Reads a meta-graph list file: one expression per line, '#' comments.
std::vector<MetaGraph> load_metagraphs(const HeterogeneousNetwork& hin, const std::string& path);

struct ProjectOptions {
    /// Brute-force expansion allowance, scaled by the number of anchor pairs.
    double budget_per_pair = 1e4;
};

/// Projects the network through a meta-graph: weight(u, v) counts the
/// matched instances with endpoints {u, v} (anchored homomorphisms; a match
/// and its mirror image are the same instance). Computed by sparse matrix
/// products along the stages; parallel arms combine by element-wise product.
ProjectedNetwork project(const HeterogeneousNetwork& hin, const MetaGraph& mg);

/// Independent oracle for project(): explicit depth-first enumeration of all
/// stage assignments. Refuses (DataError) when the expansion budget is
/// exceeded rather than truncating.
ProjectedNetwork project_bruteforce(const HeterogeneousNetwork& hin, const MetaGraph& mg,
                                    const ProjectOptions& options = {});

}  // namespace meg
