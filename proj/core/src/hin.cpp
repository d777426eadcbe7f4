#include "meg/hin.hpp"

#include "meg/errors.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <sstream>

namespace meg {

namespace {

std::uint64_t edge_key(int a, int b, int relation) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32 |
            static_cast<std::uint32_t>(b)) ^
           (static_cast<std::uint64_t>(relation) << 1) * 0x9e3779b97f4a7c15ULL;
}

}  // namespace

int HeterogeneousNetwork::add_type(const std::string& name) {
    auto it = type_index_.find(name);
    if (it != type_index_.end()) return it->second;
    int id = static_cast<int>(type_names_.size());
    type_names_.push_back(name);
    type_index_.emplace(name, id);
    type_members_.emplace_back();
    return id;
}

int HeterogeneousNetwork::type_id(const std::string& name) const {
    auto it = type_index_.find(name);
    return it == type_index_.end() ? -1 : it->second;
}

int HeterogeneousNetwork::add_vertex(const std::string& id, int type) {
    if (vertex_index_.count(id)) throw DataError("duplicate vertex id '" + id + "'");
    int v = static_cast<int>(vertex_ids_.size());
    vertex_ids_.push_back(id);
    vertex_types_.push_back(type);
    vertex_index_.emplace(id, v);
    type_members_[type].push_back(v);
    adjacency_.emplace_back();
    return v;
}

int HeterogeneousNetwork::vertex(const std::string& id) const {
    auto it = vertex_index_.find(id);
    return it == vertex_index_.end() ? -1 : it->second;
}

int HeterogeneousNetwork::declare_relation(const std::string& name, int src_type, int dst_type) {
    auto it = relation_index_.find(name);
    if (it != relation_index_.end()) {
        const Relation& r = relations_[it->second];
        if (r.src_type != src_type || r.dst_type != dst_type) {
            throw DataError("relation '" + name + "' redeclared as (" + type_names_[src_type] +
                            ", " + type_names_[dst_type] + "), previously (" +
                            type_names_[r.src_type] + ", " + type_names_[r.dst_type] + ")");
        }
        return it->second;
    }
    int id = static_cast<int>(relations_.size());
    relations_.push_back({name, src_type, dst_type});
    relation_index_.emplace(name, id);
    return id;
}

int HeterogeneousNetwork::relation_id(const std::string& name) const {
    auto it = relation_index_.find(name);
    return it == relation_index_.end() ? -1 : it->second;
}

bool HeterogeneousNetwork::add_edge(const std::string& src_id, const std::string& dst_id,
                                    const std::string& relation_name) {
    int src = vertex(src_id);
    if (src < 0) throw DataError("edge endpoint '" + src_id + "' is not a declared vertex");
    int dst = vertex(dst_id);
    if (dst < 0) throw DataError("edge endpoint '" + dst_id + "' is not a declared vertex");

    int rel = relation_id(relation_name);
    if (rel < 0) rel = declare_relation(relation_name, vertex_types_[src], vertex_types_[dst]);
    const Relation& r = relations_[rel];
    if (vertex_types_[src] != r.src_type || vertex_types_[dst] != r.dst_type) {
        throw DataError("edge (" + src_id + ", " + dst_id + ") does not match relation '" +
                        relation_name + "' declared as (" + type_names_[r.src_type] + ", " +
                        type_names_[r.dst_type] + ")");
    }

    // Undirected storage: same-type edges are canonicalized so (b, a) and
    // (a, b) de-duplicate to one edge.
    int a = src, b = dst;
    if (r.src_type == r.dst_type && a > b) std::swap(a, b);
    if (!edge_keys_.insert(edge_key(a, b, rel)).second) return false;

    edges_.push_back({a, b, rel});
    adjacency_[a].emplace_back(b, rel);
    if (a != b) adjacency_[b].emplace_back(a, rel);
    return true;
}

void HeterogeneousNetwork::set_label(const std::string& vertex_id, const std::string& class_name) {
    int v = vertex(vertex_id);
    if (v < 0) throw DataError("label references unknown vertex '" + vertex_id + "'");
    int c;
    auto it = class_index_.find(class_name);
    if (it == class_index_.end()) {
        c = static_cast<int>(class_names_.size());
        class_names_.push_back(class_name);
        class_index_.emplace(class_name, c);
    } else {
        c = it->second;
    }
    auto& classes = labels_[v];
    auto pos = std::lower_bound(classes.begin(), classes.end(), c);
    if (pos == classes.end() || *pos != c) classes.insert(pos, c);
}

const std::vector<int>& HeterogeneousNetwork::labels_of(int v) const {
    static const std::vector<int> empty;
    auto it = labels_.find(v);
    return it == labels_.end() ? empty : it->second;
}

namespace {

struct TsvReader {
    std::istream& in;
    std::string source;
    std::size_t line_no = 0;

    /// Reads the next data row, skipping blank lines and '#' comments.
    /// Throws ParseError unless the row has exactly `columns` fields.
    bool next(std::size_t columns, std::vector<std::string>& fields) {
        std::string line;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            fields.clear();
            std::size_t start = 0;
            for (;;) {
                std::size_t tab = line.find('\t', start);
                fields.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
                if (tab == std::string::npos) break;
                start = tab + 1;
            }
            if (fields.size() != columns) {
                throw ParseError(source + ": expected " + std::to_string(columns) +
                                     " tab-separated fields, got " + std::to_string(fields.size()),
                                 line_no, 1);
            }
            std::size_t col = 1;
            for (const auto& f : fields) {
                if (f.empty())
                    throw ParseError(source + ": empty field", line_no, col);
                col += f.size() + 1;
            }
            return true;
        }
        return false;
    }
};

}  // namespace

HeterogeneousNetwork load_hin(std::istream& nodes, std::istream& edges, std::istream* labels,
                              std::istream* schema) {
    HeterogeneousNetwork hin;
    std::vector<std::string> f;

    TsvReader node_reader{nodes, "nodes"};
    while (node_reader.next(2, f)) {
        try {
            hin.add_vertex(f[0], hin.add_type(f[1]));
        } catch (const DataError& e) {
            throw ParseError(std::string("nodes: ") + e.what(), node_reader.line_no, 1);
        }
    }

    if (schema) {
        TsvReader schema_reader{*schema, "schema"};
        while (schema_reader.next(3, f)) {
            int src_t = hin.type_id(f[1]);
            int dst_t = hin.type_id(f[2]);
            if (src_t < 0 || dst_t < 0)
                throw ParseError("schema: unknown type in relation '" + f[0] + "'",
                                 schema_reader.line_no, 1);
            hin.declare_relation(f[0], src_t, dst_t);
        }
    }

    TsvReader edge_reader{edges, "edges"};
    while (edge_reader.next(3, f)) {
        try {
            hin.add_edge(f[0], f[1], f[2]);
        } catch (const DataError& e) {
            throw ParseError(std::string("edges: ") + e.what(), edge_reader.line_no, 1);
        }
    }

    if (labels) {
        TsvReader label_reader{*labels, "labels"};
        while (label_reader.next(2, f)) {
            try {
                hin.set_label(f[0], f[1]);
            } catch (const DataError& e) {
                throw ParseError(std::string("labels: ") + e.what(), label_reader.line_no, 1);
            }
        }
    }
    return hin;
}

HeterogeneousNetwork load_hin(const std::string& nodes_path, const std::string& edges_path,
                              const LoadOptions& options) {
    auto open = [](const std::string& path) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open '" + path + "'");
        return in;
    };
    std::ifstream nodes = open(nodes_path);
    std::ifstream edges = open(edges_path);
    std::ifstream labels, schema;
    if (options.labels_path) labels = open(*options.labels_path);
    if (options.schema_path) schema = open(*options.schema_path);
    return load_hin(nodes, edges, options.labels_path ? &labels : nullptr,
                    options.schema_path ? &schema : nullptr);
}

SchemaSummary schema_summary(const HeterogeneousNetwork& hin) {
    SchemaSummary s;
    s.vertex_total = hin.vertex_count();
    s.edge_total = hin.edge_count();
    for (std::size_t t = 0; t < hin.type_count(); ++t) {
        s.vertices_per_type[hin.type_name(static_cast<int>(t))] =
            hin.vertices_of_type(static_cast<int>(t)).size();
    }
    std::vector<std::size_t> per_relation(hin.relation_count(), 0);
    for (const auto& e : hin.edges()) ++per_relation[e.relation];
    for (std::size_t r = 0; r < hin.relation_count(); ++r) {
        const Relation& rel = hin.relation(static_cast<int>(r));
        s.edges_per_relation[rel.name] = per_relation[r];
        double n_src = static_cast<double>(hin.vertices_of_type(rel.src_type).size());
        double n_dst = static_cast<double>(hin.vertices_of_type(rel.dst_type).size());
        double pairs = rel.src_type == rel.dst_type ? n_src * (n_src - 1) / 2 : n_src * n_dst;
        s.relation_density[rel.name] =
            pairs > 0 ? static_cast<double>(per_relation[r]) / pairs : 0.0;
    }
    return s;
}

BipartiteMatrix bipartite_matrix(const HeterogeneousNetwork& hin, int relation) {
    if (relation < 0 || static_cast<std::size_t>(relation) >= hin.relation_count())
        throw DataError("unknown relation id " + std::to_string(relation));
    const Relation& rel = hin.relation(relation);

    BipartiteMatrix out;
    out.row_vertices = hin.vertices_of_type(rel.src_type);
    out.col_vertices = hin.vertices_of_type(rel.dst_type);

    std::vector<int> row_local(hin.vertex_count(), -1), col_local(hin.vertex_count(), -1);
    for (std::size_t i = 0; i < out.row_vertices.size(); ++i)
        row_local[out.row_vertices[i]] = static_cast<int>(i);
    for (std::size_t j = 0; j < out.col_vertices.size(); ++j)
        col_local[out.col_vertices[j]] = static_cast<int>(j);

    std::vector<Eigen::Triplet<double>> triplets;
    for (const auto& e : hin.edges()) {
        if (e.relation != relation) continue;
        triplets.emplace_back(row_local[e.src], col_local[e.dst], 1.0);
        // Same-type edges are retrievable from either endpoint.
        if (rel.src_type == rel.dst_type && e.src != e.dst)
            triplets.emplace_back(row_local[e.dst], col_local[e.src], 1.0);
    }
    out.matrix.resize(static_cast<Eigen::Index>(out.row_vertices.size()),
                      static_cast<Eigen::Index>(out.col_vertices.size()));
    out.matrix.setFromTriplets(triplets.begin(), triplets.end());
    return out;
}

BipartiteMatrix bipartite_matrix(const HeterogeneousNetwork& hin, const std::string& relation) {
    int id = hin.relation_id(relation);
    if (id < 0) throw DataError("unknown relation '" + relation + "'");
    return bipartite_matrix(hin, id);
}

}  // namespace meg
