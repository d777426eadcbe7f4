#include "meg/metagraph.hpp"

#include "meg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <unordered_map>

namespace meg {

namespace {

// Counts above 2^53 are no longer exact in double arithmetic.
constexpr double kMaxExactCount = 9007199254740992.0;

std::string join(const std::vector<std::string>& parts, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::string arm_display(const HeterogeneousNetwork& hin, const std::vector<int>& arm) {
    std::vector<std::string> names;
    names.reserve(arm.size());
    for (int t : arm) names.push_back(hin.type_name(t));
    return join(names, "-");
}

std::string build_display(const HeterogeneousNetwork& hin, const std::vector<MetaGraph::Stage>& stages) {
    std::vector<std::string> parts;
    for (const auto& stage : stages) {
        if (std::holds_alternative<int>(stage)) {
            parts.push_back(hin.type_name(std::get<int>(stage)));
        } else {
            const auto& branch = std::get<MetaGraph::Branch>(stage);
            std::vector<std::string> arms;
            for (const auto& arm : branch.arms) arms.push_back(arm_display(hin, arm));
            parts.push_back("(" + join(arms, "|") + ")");
        }
    }
    return join(parts, "-");
}

void sort_arms(const HeterogeneousNetwork& hin, MetaGraph::Branch& branch) {
    std::sort(branch.arms.begin(), branch.arms.end(),
              [&](const std::vector<int>& a, const std::vector<int>& b) {
                  return arm_display(hin, a) < arm_display(hin, b);
              });
}

std::vector<MetaGraph::Stage> mirrored_stages(const HeterogeneousNetwork& hin,
                                              const std::vector<MetaGraph::Stage>& stages) {
    std::vector<MetaGraph::Stage> out(stages.rbegin(), stages.rend());
    for (auto& stage : out) {
        if (auto* branch = std::get_if<MetaGraph::Branch>(&stage)) {
            for (auto& arm : branch->arms) std::reverse(arm.begin(), arm.end());
            sort_arms(hin, *branch);
        }
    }
    return out;
}

bool relation_connects(const HeterogeneousNetwork& hin, int ta, int tb) {
    for (std::size_t r = 0; r < hin.relation_count(); ++r) {
        const Relation& rel = hin.relation(static_cast<int>(r));
        if ((rel.src_type == ta && rel.dst_type == tb) || (rel.src_type == tb && rel.dst_type == ta))
            return true;
    }
    return false;
}

void require_relation(const HeterogeneousNetwork& hin, int ta, int tb) {
    if (!relation_connects(hin, ta, tb))
        throw DataError("no relation connects types '" + hin.type_name(ta) + "' and '" +
                        hin.type_name(tb) + "'");
}

struct Tokenizer {
    std::string_view text;
    std::size_t pos = 0;

    void skip_space() {
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
    }
    bool done() {
        skip_space();
        return pos >= text.size();
    }
    char peek() {
        skip_space();
        return pos < text.size() ? text[pos] : '\0';
    }
    void expect(char c) {
        if (peek() != c)
            throw DataError("meta-graph '" + std::string(text) + "': expected '" + c +
                            "' at position " + std::to_string(pos));
        ++pos;
    }
    std::string name() {
        skip_space();
        std::size_t start = pos;
        while (pos < text.size() && text[pos] != '-' && text[pos] != '(' && text[pos] != ')' &&
               text[pos] != '|' && text[pos] != ' ' && text[pos] != '\t')
            ++pos;
        if (pos == start)
            throw DataError("meta-graph '" + std::string(text) + "': expected a type name at position " +
                            std::to_string(pos));
        return std::string(text.substr(start, pos - start));
    }
};

/// Traversal-count matrix between two vertex types: entry (i, j) is the
/// number of undirected edges (any relation) between the i-th vertex of
/// type_a and the j-th vertex of type_b.
SparseMatrix step_matrix(const HeterogeneousNetwork& hin, int type_a, int type_b) {
    const auto& rows = hin.vertices_of_type(type_a);
    const auto& cols = hin.vertices_of_type(type_b);
    std::vector<int> row_local(hin.vertex_count(), -1), col_local(hin.vertex_count(), -1);
    for (std::size_t i = 0; i < rows.size(); ++i) row_local[rows[i]] = static_cast<int>(i);
    for (std::size_t j = 0; j < cols.size(); ++j) col_local[cols[j]] = static_cast<int>(j);

    std::vector<Eigen::Triplet<double>> triplets;
    for (const auto& e : hin.edges()) {
        int ts = hin.vertex_type(e.src), td = hin.vertex_type(e.dst);
        if (ts == type_a && td == type_b) triplets.emplace_back(row_local[e.src], col_local[e.dst], 1.0);
        if (ts == type_b && td == type_a && !(type_a == type_b && e.src == e.dst))
            triplets.emplace_back(row_local[e.dst], col_local[e.src], 1.0);
    }
    SparseMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    m.setFromTriplets(triplets.begin(), triplets.end());
    return m;
}

ProjectedNetwork finalize_projection(const HeterogeneousNetwork& hin, const MetaGraph& mg,
                                     const SparseMatrix& counts) {
    // A mirror-symmetric pattern already counts each unordered instance once
    // per orientation pair; an asymmetric pattern needs both orientations
    // summed. Counts are integers, so the symmetric case is exact.
    SparseMatrix sym;
    if (mg.mirror_symmetric) {
        sym = counts;
    } else {
        SparseMatrix t = SparseMatrix(counts.transpose());
        sym = counts + t;
    }

    bool saturated = false;
    std::vector<Eigen::Triplet<double>> triplets;
    for (int k = 0; k < sym.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(sym, k); it; ++it) {
            if (it.row() == it.col() || it.value() == 0.0) continue;
            double w = it.value();
            if (w > kMaxExactCount) {
                w = kMaxExactCount;
                saturated = true;
            }
            triplets.emplace_back(it.row(), it.col(), w);
        }
    }
    if (saturated)
        std::fprintf(stderr, "warning: %s: instance counts exceeded exact integer range, saturated\n",
                     mg.display_name.c_str());

    const auto& anchors = hin.vertices_of_type(mg.anchor_type);
    ProjectedNetwork pn;
    pn.source_metagraph = mg.display_name;
    pn.hin_vertices = anchors;
    pn.vertex_ids.reserve(anchors.size());
    for (int v : anchors) pn.vertex_ids.push_back(hin.vertex_id(v));
    pn.adjacency.resize(static_cast<Eigen::Index>(anchors.size()),
                        static_cast<Eigen::Index>(anchors.size()));
    pn.adjacency.setFromTriplets(triplets.begin(), triplets.end());
    return pn;
}

}  // namespace

double ProjectedNetwork::degree(Eigen::Index v) const {
    double d = 0;
    for (SparseMatrix::InnerIterator it(adjacency, v); it; ++it) d += it.value();
    return d;
}

ProjectedNetwork make_projected_network(std::vector<std::string> vertex_ids,
                                        const std::vector<std::tuple<int, int, double>>& edges,
                                        std::string source_metagraph) {
    ProjectedNetwork pn;
    pn.vertex_ids = std::move(vertex_ids);
    pn.source_metagraph = std::move(source_metagraph);
    auto n = static_cast<Eigen::Index>(pn.vertex_ids.size());
    std::vector<Eigen::Triplet<double>> triplets;
    for (const auto& [u, v, w] : edges) {
        if (u == v) throw DataError("projected network: self-loop on vertex " + std::to_string(u));
        if (w < 0) throw DataError("projected network: negative weight");
        if (u < 0 || v < 0 || u >= n || v >= n)
            throw DataError("projected network: vertex index out of range");
        if (w == 0) continue;
        triplets.emplace_back(u, v, w);
        triplets.emplace_back(v, u, w);
    }
    pn.adjacency.resize(n, n);
    pn.adjacency.setFromTriplets(triplets.begin(), triplets.end());
    return pn;
}

ProjectedNetwork induce_subnetwork(const ProjectedNetwork& pn, const std::vector<int>& vertices) {
    std::vector<int> local(static_cast<std::size_t>(pn.size()), -1);
    for (std::size_t i = 0; i < vertices.size(); ++i) local[vertices[i]] = static_cast<int>(i);

    ProjectedNetwork out;
    out.source_metagraph = pn.source_metagraph;
    out.vertex_ids.reserve(vertices.size());
    for (int v : vertices) {
        out.vertex_ids.push_back(pn.vertex_ids[v]);
        if (!pn.hin_vertices.empty()) out.hin_vertices.push_back(pn.hin_vertices[v]);
    }
    std::vector<Eigen::Triplet<double>> triplets;
    for (int v : vertices) {
        for (SparseMatrix::InnerIterator it(pn.adjacency, v); it; ++it) {
            int r = local[it.row()];
            if (r >= 0) triplets.emplace_back(r, local[v], it.value());
        }
    }
    auto n = static_cast<Eigen::Index>(vertices.size());
    out.adjacency.resize(n, n);
    out.adjacency.setFromTriplets(triplets.begin(), triplets.end());
    return out;
}

MetaGraph parse_metagraph(const HeterogeneousNetwork& hin, std::string_view expr) {
    Tokenizer tok{expr};
    auto type_of = [&](const std::string& name) {
        int t = hin.type_id(name);
        if (t < 0) throw DataError("meta-graph '" + std::string(expr) + "': unknown type '" + name + "'");
        return t;
    };

    MetaGraph mg;
    if (tok.done()) throw DataError("empty meta-graph expression");
    mg.stages.emplace_back(type_of(tok.name()));
    while (!tok.done()) {
        tok.expect('-');
        if (tok.peek() == '(') {
            tok.expect('(');
            MetaGraph::Branch branch;
            for (;;) {
                std::vector<int> arm{type_of(tok.name())};
                while (tok.peek() == '-') {
                    tok.expect('-');
                    arm.push_back(type_of(tok.name()));
                }
                branch.arms.push_back(std::move(arm));
                if (tok.peek() != '|') break;
                tok.expect('|');
            }
            tok.expect(')');
            sort_arms(hin, branch);
            mg.stages.emplace_back(std::move(branch));
        } else {
            mg.stages.emplace_back(type_of(tok.name()));
        }
    }

    // Structural validation.
    if (!std::holds_alternative<int>(mg.stages.front()) || !std::holds_alternative<int>(mg.stages.back()))
        throw DataError("meta-graph '" + std::string(expr) + "': must start and end with a node stage");
    int first = std::get<int>(mg.stages.front());
    int last = std::get<int>(mg.stages.back());
    if (first != last)
        throw DataError("meta-graph '" + std::string(expr) + "': endpoints must have the same type ('" +
                        hin.type_name(first) + "' vs '" + hin.type_name(last) + "')");
    mg.anchor_type = first;

    for (std::size_t i = 0; i + 1 < mg.stages.size(); ++i) {
        bool branch_here = std::holds_alternative<MetaGraph::Branch>(mg.stages[i]);
        bool branch_next = std::holds_alternative<MetaGraph::Branch>(mg.stages[i + 1]);
        if (branch_here && branch_next)
            throw DataError("meta-graph '" + std::string(expr) +
                            "': parallel branches must be separated by a node stage");
    }

    // Every adjacent stage pair needs a declared relation.
    for (std::size_t i = 0; i + 1 < mg.stages.size(); ++i) {
        if (const auto* branch = std::get_if<MetaGraph::Branch>(&mg.stages[i + 1])) {
            int pred = std::get<int>(mg.stages[i]);
            int succ = std::get<int>(mg.stages[i + 2]);
            for (const auto& arm : branch->arms) {
                require_relation(hin, pred, arm.front());
                for (std::size_t j = 0; j + 1 < arm.size(); ++j) require_relation(hin, arm[j], arm[j + 1]);
                require_relation(hin, arm.back(), succ);
            }
            ++i;  // the successor node pairs were just checked
        } else if (std::holds_alternative<int>(mg.stages[i])) {
            require_relation(hin, std::get<int>(mg.stages[i]), std::get<int>(mg.stages[i + 1]));
        }
    }

    mg.display_name = build_display(hin, mg.stages);
    mg.mirror_symmetric = build_display(hin, mirrored_stages(hin, mg.stages)) == mg.display_name;
    return mg;
}

std::vector<MetaGraph> load_metagraphs(const HeterogeneousNetwork& hin, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::vector<MetaGraph> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos || line[start] == '#') continue;
        MetaGraph mg;
        try {
            mg = parse_metagraph(hin, line);
        } catch (const DataError& e) {
            throw ParseError(path + ": " + e.what(), line_no, 1);
        }
        for (const auto& seen : out) {
            if (seen.display_name == mg.display_name)
                throw ParseError(path + ": duplicate meta-graph '" + mg.display_name + "'", line_no, 1);
        }
        out.push_back(std::move(mg));
    }
    return out;
}

ProjectedNetwork project(const HeterogeneousNetwork& hin, const MetaGraph& mg) {
    const auto& anchors = hin.vertices_of_type(mg.anchor_type);
    auto na = static_cast<Eigen::Index>(anchors.size());

    SparseMatrix cur(na, na);
    cur.setIdentity();
    int prev_type = mg.anchor_type;

    std::size_t i = 1;
    while (i < mg.stages.size()) {
        if (const auto* branch = std::get_if<MetaGraph::Branch>(&mg.stages[i])) {
            int succ = std::get<int>(mg.stages[i + 1]);
            SparseMatrix combined;
            for (std::size_t a = 0; a < branch->arms.size(); ++a) {
                const auto& arm = branch->arms[a];
                SparseMatrix arm_m = step_matrix(hin, prev_type, arm.front());
                for (std::size_t j = 1; j < arm.size(); ++j)
                    arm_m = SparseMatrix(arm_m * step_matrix(hin, arm[j - 1], arm[j]));
                arm_m = SparseMatrix(arm_m * step_matrix(hin, arm.back(), succ));
                combined = a == 0 ? std::move(arm_m) : SparseMatrix(combined.cwiseProduct(arm_m));
            }
            cur = SparseMatrix(cur * combined);
            prev_type = succ;
            i += 2;
        } else {
            int t = std::get<int>(mg.stages[i]);
            cur = SparseMatrix(cur * step_matrix(hin, prev_type, t));
            prev_type = t;
            ++i;
        }
    }
    return finalize_projection(hin, mg, cur);
}

namespace {

struct SlotGraph {
    struct Slot {
        int type;
        std::vector<int> earlier_neighbors;  // pattern edges to already-assigned slots
    };
    std::vector<Slot> slots;
    int last_slot = -1;  // second anchor
};

SlotGraph build_slots(const MetaGraph& mg) {
    SlotGraph g;
    int last_node = -1;                 // most recent plain node slot
    std::vector<int> pending_arm_ends;  // arm tails waiting for the next node

    std::size_t i = 0;
    while (i < mg.stages.size()) {
        if (const auto* branch = std::get_if<MetaGraph::Branch>(&mg.stages[i])) {
            pending_arm_ends.clear();
            for (const auto& arm : branch->arms) {
                int prev = last_node;
                for (int t : arm) {
                    g.slots.push_back({t, {prev}});
                    prev = static_cast<int>(g.slots.size()) - 1;
                }
                pending_arm_ends.push_back(prev);
            }
            ++i;
        } else {
            SlotGraph::Slot slot{std::get<int>(mg.stages[i]), {}};
            if (!pending_arm_ends.empty()) {
                slot.earlier_neighbors = pending_arm_ends;
                pending_arm_ends.clear();
            } else if (last_node >= 0) {
                slot.earlier_neighbors = {last_node};
            }
            g.slots.push_back(std::move(slot));
            last_node = static_cast<int>(g.slots.size()) - 1;
            ++i;
        }
    }
    g.last_slot = last_node;
    return g;
}

/// Per-vertex neighbors bucketed by type, with edge multiplicities.
struct TypedAdjacency {
    // typed[v * type_count + t] -> list of (neighbor, edge count)
    std::vector<std::vector<std::pair<int, double>>> typed;
    std::size_t type_count;

    const std::vector<std::pair<int, double>>& of(int v, int t) const {
        return typed[static_cast<std::size_t>(v) * type_count + t];
    }
};

TypedAdjacency build_typed_adjacency(const HeterogeneousNetwork& hin) {
    TypedAdjacency adj;
    adj.type_count = hin.type_count();
    adj.typed.resize(hin.vertex_count() * adj.type_count);
    for (std::size_t v = 0; v < hin.vertex_count(); ++v) {
        std::unordered_map<int, double> counts;
        for (const auto& [nbr, rel] : hin.neighbors(static_cast<int>(v))) counts[nbr] += 1.0;
        for (const auto& [nbr, c] : counts)
            adj.typed[v * adj.type_count + hin.vertex_type(nbr)].emplace_back(nbr, c);
        for (std::size_t t = 0; t < adj.type_count; ++t) {
            auto& bucket = adj.typed[v * adj.type_count + t];
            std::sort(bucket.begin(), bucket.end());
        }
    }
    return adj;
}

struct Enumerator {
    const SlotGraph& graph;
    const TypedAdjacency& adj;
    double budget;
    double expansions = 0;
    std::vector<int> assignment;

    void expand(std::size_t slot, double weight, std::unordered_map<std::int64_t, double>& counts,
                int source, Eigen::Index na, const std::vector<int>& anchor_local) {
        if (slot == graph.slots.size()) {
            int v = anchor_local[assignment[graph.last_slot]];
            if (v != source) counts[static_cast<std::int64_t>(source) * na + v] += weight;
            return;
        }
        const auto& s = graph.slots[slot];
        int p0 = s.earlier_neighbors.front();
        for (const auto& [candidate, count0] : adj.of(assignment[p0], s.type)) {
            if (++expansions > budget)
                throw DataError("brute-force projection budget exceeded (" +
                                std::to_string(static_cast<long long>(budget)) +
                                " expansions); refusing to truncate");
            double w = weight * count0;
            bool feasible = true;
            for (std::size_t e = 1; e < s.earlier_neighbors.size() && feasible; ++e) {
                int other = assignment[s.earlier_neighbors[e]];
                const auto& bucket = adj.of(other, s.type);
                auto it = std::lower_bound(bucket.begin(), bucket.end(),
                                           std::make_pair(candidate, 0.0));
                if (it == bucket.end() || it->first != candidate)
                    feasible = false;
                else
                    w *= it->second;
            }
            if (!feasible) continue;
            assignment[slot] = candidate;
            expand(slot + 1, w, counts, source, na, anchor_local);
        }
    }
};

}  // namespace

ProjectedNetwork project_bruteforce(const HeterogeneousNetwork& hin, const MetaGraph& mg,
                                    const ProjectOptions& options) {
    const auto& anchors = hin.vertices_of_type(mg.anchor_type);
    auto na = static_cast<Eigen::Index>(anchors.size());
    std::vector<int> anchor_local(hin.vertex_count(), -1);
    for (std::size_t i = 0; i < anchors.size(); ++i) anchor_local[anchors[i]] = static_cast<int>(i);

    SlotGraph graph = build_slots(mg);
    TypedAdjacency adj = build_typed_adjacency(hin);

    double pair_count = static_cast<double>(na) * (static_cast<double>(na) - 1) / 2;
    Enumerator en{graph, adj, options.budget_per_pair * std::max(1.0, pair_count), 0.0, {}};
    en.assignment.resize(graph.slots.size());

    std::unordered_map<std::int64_t, double> counts;
    for (Eigen::Index u = 0; u < na; ++u) {
        en.assignment[0] = anchors[u];
        en.expand(1, 1.0, counts, static_cast<int>(u), na, anchor_local);
    }

    // counts[u, v] holds oriented matches; an unordered instance appears once
    // per orientation, twice when the pattern is mirror-symmetric.
    SparseMatrix oriented(na, na);
    {
        std::vector<Eigen::Triplet<double>> triplets;
        triplets.reserve(counts.size());
        for (const auto& [key, c] : counts)
            triplets.emplace_back(static_cast<int>(key / na), static_cast<int>(key % na), c);
        oriented.setFromTriplets(triplets.begin(), triplets.end());
    }
    SparseMatrix total = oriented + SparseMatrix(oriented.transpose());
    if (mg.mirror_symmetric) total = total * 0.5;

    std::vector<Eigen::Triplet<double>> triplets;
    for (int k = 0; k < total.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(total, k); it; ++it)
            if (it.value() != 0.0) triplets.emplace_back(it.row(), it.col(), it.value());

    ProjectedNetwork pn;
    pn.source_metagraph = mg.display_name;
    pn.hin_vertices = anchors;
    pn.vertex_ids.reserve(anchors.size());
    for (int v : anchors) pn.vertex_ids.push_back(hin.vertex_id(v));
    pn.adjacency.resize(na, na);
    pn.adjacency.setFromTriplets(triplets.begin(), triplets.end());
    return pn;
}

}  // namespace meg
