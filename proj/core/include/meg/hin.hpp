#pragma once

#include <Eigen/SparseCore>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace meg {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct Relation {
    std::string name;
    int src_type = -1;
    int dst_type = -1;
};

struct HinEdge {
    int src = -1;
    int dst = -1;
    int relation = -1;
};

/// Typed multi-relational network. Vertex ids and type names are opaque
/// strings mapped to dense indices at load time; edges are stored undirected
/// and unweighted, de-duplicated per (src, dst, relation).
class HeterogeneousNetwork {
  public:
    int add_type(const std::string& name);
    int type_id(const std::string& name) const;  // -1 if absent

    int add_vertex(const std::string& id, int type);
    int vertex(const std::string& id) const;  // -1 if absent

    /// Declares a relation or checks an existing declaration against
    /// (src_type, dst_type). Throws DataError on conflicting declarations.
    int declare_relation(const std::string& name, int src_type, int dst_type);
    int relation_id(const std::string& name) const;  // -1 if absent

    /// Adds an undirected edge. The relation is declared on first use with
    /// the endpoint types of this edge. Returns false for duplicates.
    /// Throws DataError for dangling endpoints or endpoint/relation type
    /// mismatches.
    bool add_edge(const std::string& src_id, const std::string& dst_id,
                  const std::string& relation_name);

    void set_label(const std::string& vertex_id, const std::string& class_name);

    std::size_t vertex_count() const { return vertex_types_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    std::size_t type_count() const { return type_names_.size(); }
    std::size_t relation_count() const { return relations_.size(); }

    const std::string& vertex_id(int v) const { return vertex_ids_[v]; }
    int vertex_type(int v) const { return vertex_types_[v]; }
    const std::string& type_name(int t) const { return type_names_[t]; }
    const Relation& relation(int r) const { return relations_[r]; }
    const std::vector<HinEdge>& edges() const { return edges_; }

    /// Undirected adjacency: one (neighbor, relation) entry per incident
    /// edge; self-loops appear once.
    const std::vector<std::pair<int, int>>& neighbors(int v) const { return adjacency_[v]; }

    /// Vertices of a type, in insertion order.
    const std::vector<int>& vertices_of_type(int t) const { return type_members_[t]; }

    bool has_labels() const { return !labels_.empty(); }
    /// Sorted class ids of a vertex; empty if unlabeled.
    const std::vector<int>& labels_of(int v) const;
    const std::vector<std::string>& class_names() const { return class_names_; }
    const std::unordered_map<int, std::vector<int>>& labels() const { return labels_; }

  private:
    std::vector<std::string> vertex_ids_;
    std::vector<int> vertex_types_;
    std::unordered_map<std::string, int> vertex_index_;

    std::vector<std::string> type_names_;
    std::unordered_map<std::string, int> type_index_;
    std::vector<std::vector<int>> type_members_;

    std::vector<Relation> relations_;
    std::unordered_map<std::string, int> relation_index_;

    std::vector<HinEdge> edges_;
    std::unordered_set<std::uint64_t> edge_keys_;
    std::vector<std::vector<std::pair<int, int>>> adjacency_;

    std::unordered_map<int, std::vector<int>> labels_;
    std::vector<std::string> class_names_;
    std::unordered_map<std::string, int> class_index_;
};

struct SchemaSummary {
    std::map<std::string, std::size_t> vertices_per_type;
    std::map<std::string, std::size_t> edges_per_relation;
    std::map<std::string, double> relation_density;
    std::size_t vertex_total = 0;
    std::size_t edge_total = 0;
};

struct BipartiteMatrix {
    SparseMatrix matrix;            // rows: src-type vertices, cols: dst-type vertices
    std::vector<int> row_vertices;  // hin vertex index per row
    std::vector<int> col_vertices;  // hin vertex index per column
};

struct LoadOptions {
    std::optional<std::string> labels_path;
    std::optional<std::string> schema_path;
};

/// Loads a network from TSV files (see README for the formats). Reports the
/// line of the first violation on failure.
HeterogeneousNetwork load_hin(const std::string& nodes_path, const std::string& edges_path,
                              const LoadOptions& options = {});

/// Stream variant; stream names are used in error messages.
HeterogeneousNetwork load_hin(std::istream& nodes, std::istream& edges,
                              std::istream* labels = nullptr, std::istream* schema = nullptr);

SchemaSummary schema_summary(const HeterogeneousNetwork& hin);

/// 0/1 incidence matrix of one relation. Transposing it equals the matrix of
/// the relation traversed in reverse.
BipartiteMatrix bipartite_matrix(const HeterogeneousNetwork& hin, int relation);
BipartiteMatrix bipartite_matrix(const HeterogeneousNetwork& hin, const std::string& relation);

}  // namespace meg
