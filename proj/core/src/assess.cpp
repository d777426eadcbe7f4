#include "meg/assess.hpp"

#include "meg/common.hpp"
#include "meg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <unordered_map>

namespace meg {

FppResult fpp(const Spectrum& s, double zero_tol) {
    FppResult r;
    for (double lambda : s.eigenvalues) {
        if (lambda > zero_tol) break;
        ++r.zero_count;
    }
    r.all_zero = r.zero_count == s.size();
    return r;
}

Partition connected_components(const ProjectedNetwork& pn) {
    const auto n = pn.size();
    Partition p;
    p.component.assign(static_cast<std::size_t>(n), -1);
    std::deque<int> queue;
    for (Eigen::Index start = 0; start < n; ++start) {
        if (p.component[start] >= 0) continue;
        int id = p.count++;
        p.component[start] = id;
        queue.push_back(static_cast<int>(start));
        while (!queue.empty()) {
            int v = queue.front();
            queue.pop_front();
            for (SparseMatrix::InnerIterator it(pn.adjacency, v); it; ++it) {
                int u = static_cast<int>(it.row());
                if (it.value() != 0.0 && p.component[u] < 0) {
                    p.component[u] = id;
                    queue.push_back(u);
                }
            }
        }
    }
    return p;
}

double curvature_score(const Spectrum& s, int m, double zero_tol) {
    if (m < 1) throw ConfigError("curvature_score: m must be positive");
    FppResult p = fpp(s, zero_tol);
    if (p.all_zero) return 0.0;
    int available = s.size() - p.zero_count;
    if (available < m && !s.full())
        throw ConfigError("curvature_score: spectrum has " + std::to_string(available) +
                          " positive eigenvalues, need " + std::to_string(m) +
                          " (compute a deeper spectrum)");
    int take = std::min(m, available);
    double sum = 0.0;
    for (int i = p.zero_count; i < p.zero_count + take; ++i) sum += s.eigenvalues[i];
    return sum / take;
}

namespace {

/// Splits each cell into connected components of the induced subgraph.
/// Returns true when any cell was split.
bool refine_by(const SparseMatrix& adjacency, const std::vector<int>& to_local,
               std::vector<std::vector<int>>& cells) {
    bool changed = false;
    std::vector<std::vector<int>> next;
    std::unordered_map<int, int> cell_pos;  // local vertex -> position in cell
    for (auto& cell : cells) {
        cell_pos.clear();
        for (std::size_t i = 0; i < cell.size(); ++i) cell_pos[to_local[cell[i]]] = static_cast<int>(i);
        std::vector<int> comp(cell.size(), -1);
        int count = 0;
        std::deque<int> queue;
        for (std::size_t start = 0; start < cell.size(); ++start) {
            if (comp[start] >= 0) continue;
            comp[start] = count;
            queue.push_back(static_cast<int>(start));
            while (!queue.empty()) {
                int i = queue.front();
                queue.pop_front();
                for (SparseMatrix::InnerIterator it(adjacency, to_local[cell[i]]); it; ++it) {
                    auto found = cell_pos.find(static_cast<int>(it.row()));
                    if (found != cell_pos.end() && comp[found->second] < 0) {
                        comp[found->second] = count;
                        queue.push_back(found->second);
                    }
                }
            }
            ++count;
        }
        if (count == 1) {
            next.push_back(std::move(cell));
            continue;
        }
        changed = true;
        std::vector<std::vector<int>> parts(count);
        for (std::size_t i = 0; i < cell.size(); ++i) parts[comp[i]].push_back(cell[i]);
        for (auto& part : parts) next.push_back(std::move(part));
    }
    cells = std::move(next);
    return changed;
}

}  // namespace

Lc3Result lc3(const ProjectedNetwork& pn1, const ProjectedNetwork& pn2) {
    std::unordered_map<std::string, int> index2;
    for (Eigen::Index v = 0; v < pn2.size(); ++v) index2.emplace(pn2.vertex_ids[v], static_cast<int>(v));

    // Shared universe: vertices present and non-isolated on both sides.
    std::vector<std::string> ids;
    std::vector<int> local1, local2;
    for (Eigen::Index v = 0; v < pn1.size(); ++v) {
        auto it = index2.find(pn1.vertex_ids[v]);
        if (it == index2.end()) continue;
        if (pn1.is_isolated(v) || pn2.is_isolated(it->second)) continue;
        ids.push_back(pn1.vertex_ids[v]);
        local1.push_back(static_cast<int>(v));
        local2.push_back(it->second);
    }

    Lc3Result out;
    if (ids.empty()) return out;

    std::vector<std::vector<int>> cells(1);
    cells[0].resize(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) cells[0][i] = static_cast<int>(i);

    // Alternate splitting by each side's components until neither splits.
    for (;;) {
        bool c1 = refine_by(pn1.adjacency, local1, cells);
        bool c2 = refine_by(pn2.adjacency, local2, cells);
        if (!c1 && !c2) break;
    }

    const std::vector<int>* best = nullptr;
    for (const auto& cell : cells) {
        if (!best || cell.size() > best->size() ||
            (cell.size() == best->size() &&
             ids[*std::min_element(cell.begin(), cell.end())] <
                 ids[*std::min_element(best->begin(), best->end())]))
            best = &cell;
    }
    std::vector<int> chosen = *best;
    std::sort(chosen.begin(), chosen.end(),
              [&](int a, int b) { return ids[a] < ids[b]; });
    for (int i : chosen) {
        out.ids.push_back(ids[i]);
        out.pn1_vertices.push_back(local1[i]);
        out.pn2_vertices.push_back(local2[i]);
    }
    return out;
}

NodalDomainSet nodal_domains(const ProjectedNetwork& pn, const Eigen::VectorXd& f) {
    if (f.size() != pn.size())
        throw ConfigError("nodal_domains: vector length " + std::to_string(f.size()) +
                          " does not match network size " + std::to_string(pn.size()));
    NodalDomainSet out;
    std::vector<bool> visited(static_cast<std::size_t>(pn.size()), false);
    std::deque<int> queue;
    for (Eigen::Index start = 0; start < pn.size(); ++start) {
        if (visited[start] || f(start) == 0.0) continue;
        int sign = f(start) > 0.0 ? 1 : -1;
        std::vector<int> domain;
        visited[start] = true;
        queue.push_back(static_cast<int>(start));
        while (!queue.empty()) {
            int v = queue.front();
            queue.pop_front();
            domain.push_back(v);
            for (SparseMatrix::InnerIterator it(pn.adjacency, v); it; ++it) {
                int u = static_cast<int>(it.row());
                if (visited[u] || it.value() == 0.0) continue;
                if ((sign > 0 && f(u) > 0.0) || (sign < 0 && f(u) < 0.0)) {
                    visited[u] = true;
                    queue.push_back(u);
                }
            }
        }
        std::sort(domain.begin(), domain.end());
        out.domains.push_back(std::move(domain));
        out.signs.push_back(sign);
    }
    return out;
}

CheegerResult cheeger_check(const ProjectedNetwork& pn, const NodalDomainSet& domains,
                            double lambda, double tol) {
    CheegerResult r;
    r.bound = std::sqrt(std::max(0.0, 2.0 * lambda));
    std::vector<char> inside(static_cast<std::size_t>(pn.size()), 0);
    for (const auto& domain : domains.domains) {
        for (int v : domain) inside[v] = 1;
        double cut = 0.0, volume = 0.0;
        for (int v : domain) {
            for (SparseMatrix::InnerIterator it(pn.adjacency, v); it; ++it) {
                volume += it.value();
                if (!inside[it.row()]) cut += it.value();
            }
        }
        if (volume > 0.0) r.max_ratio = std::max(r.max_ratio, cut / volume);
        for (int v : domain) inside[v] = 0;
    }
    r.holds = r.max_ratio <= r.bound + tol;
    return r;
}

std::vector<int> select_dims(const Spectrum& s, int budget, double lambda_cap, double zero_tol) {
    std::vector<int> dims;
    for (int i = 0; i < s.size() && static_cast<int>(dims.size()) < budget; ++i) {
        double lambda = s.eigenvalues[i];
        if (lambda > zero_tol && lambda < lambda_cap) dims.push_back(i);
    }
    return dims;
}

Eigen::VectorXd lift_to_network(const ProjectedNetwork& pn, const Spectrum& s, int column) {
    if (column < 0 || column >= s.size())
        throw ConfigError("lift_to_network: column out of range");
    Eigen::VectorXd f = Eigen::VectorXd::Zero(pn.size());
    for (std::size_t i = 0; i < s.vertices.size(); ++i)
        f(s.vertices[i]) = s.eigenvectors(static_cast<Eigen::Index>(i), column);
    return f;
}

Spectrum assess_spectrum(const ProjectedNetwork& pn, const AssessConfig& config) {
    Eigen::Index n_retained = 0;
    for (Eigen::Index v = 0; v < pn.size(); ++v)
        if (!pn.is_isolated(v)) ++n_retained;
    if (n_retained == 0) throw DataError("projection has no edges");

    int depth = std::max({config.m, config.budget, config.fpp_window});
    SpectrumOptions so;
    so.tol = config.tol;
    so.seed = config.seed;

    int k = static_cast<int>(std::min<Eigen::Index>(n_retained, std::max(config.m + 8, 16)));
    if (config.max_k > 0) k = std::min(k, config.max_k);
    Spectrum s = spectrum(pn, k, so);
    for (;;) {
        int p = fpp(s, config.zero_tol).zero_count;
        auto target = std::min<Eigen::Index>(n_retained, static_cast<Eigen::Index>(p) + depth);
        if (config.max_k > 0)
            target = std::min<Eigen::Index>(target, std::max(config.max_k, s.size()));
        if (s.size() >= target) break;
        s = extend_spectrum(pn, s, static_cast<int>(target) - s.size(), so);
    }
    return s;
}

namespace {

double lc3_curvature(const ProjectedNetwork& pn, const std::vector<int>& vertices,
                     const AssessConfig& config) {
    if (vertices.size() < 2) return 0.0;
    ProjectedNetwork sub = induce_subnetwork(pn, vertices);
    Spectrum s = assess_spectrum(sub, config);
    FppResult p = fpp(s, config.zero_tol);
    if (p.zero_count != 1)
        throw NumericalError("LC3 of '" + pn.source_metagraph + "': expected one zero eigenvalue, got " +
                             std::to_string(p.zero_count));
    return curvature_score(s, config.m, config.zero_tol);
}

}  // namespace

AssessmentResult assess(const HeterogeneousNetwork& hin, const std::vector<MetaGraph>& metagraphs,
                        const AssessConfig& config) {
    AssessmentResult result;
    const std::size_t count = metagraphs.size();
    result.projections.resize(count);
    result.spectra.resize(count);
    std::vector<MetaGraphAssessment> entries(count);
    struct Failure {
        std::string message;
        ErrorCategory category = ErrorCategory::data;
    };
    std::vector<Failure> failures(count);

    parallel_for(count, config.threads, [&](std::size_t i) {
        try {
            const MetaGraph& mg = metagraphs[i];
            ProjectedNetwork pn = project(hin, mg);
            Spectrum s = assess_spectrum(pn, config);

            MetaGraphAssessment a;
            a.metagraph = mg.display_name;
            FppResult p = fpp(s, config.zero_tol);
            a.fpp = p.zero_count;
            a.all_zero = p.all_zero;
            a.curvature = curvature_score(s, config.m, config.zero_tol);
            a.isolated_count = static_cast<int>(s.dropped_isolated.size());
            a.laplacian_dim = s.laplacian_dim;

            Partition parts = connected_components(pn);
            std::vector<int> sizes(parts.count, 0);
            for (int c : parts.component) ++sizes[c];
            for (int c = 0; c < parts.count; ++c)
                if (sizes[c] > 1) ++a.component_count;

            // The zero-eigenvalue multiplicity of the normalized Laplacian
            // equals the component count of the isolated-dropped graph.
            // assess_spectrum() always computes past the FPP (or the full
            // spectrum), so a mismatch here is a solver bug.
            if (a.fpp != a.component_count)
                throw NumericalError("FPP " + std::to_string(a.fpp) + " != component count " +
                                     std::to_string(a.component_count));

            a.selected_dims = select_dims(s, config.budget, config.lambda_cap, config.zero_tol);
            a.spectrum_curve = s.eigenvalues;

            entries[i] = std::move(a);
            result.projections[i] = std::move(pn);
            result.spectra[i] = std::move(s);
        } catch (const Error& e) {
            failures[i] = {e.what(), e.category()};
        }
    });

    // Propagate the first failure with the meta-graph name attached,
    // preserving the error category (and thus the CLI exit code).
    for (std::size_t i = 0; i < count; ++i) {
        if (!failures[i].message.empty())
            throw Error(failures[i].category,
                        "assess '" + metagraphs[i].display_name + "': " + failures[i].message);
    }

    const std::size_t pair_count = count < 2 ? 0 : count * (count - 1) / 2;
    result.report.pairs.resize(pair_count);
    std::vector<std::pair<std::size_t, std::size_t>> index_pairs;
    index_pairs.reserve(pair_count);
    for (std::size_t i = 0; i < count; ++i)
        for (std::size_t j = i + 1; j < count; ++j) index_pairs.emplace_back(i, j);

    std::vector<Failure> pair_failures(pair_count);
    parallel_for(pair_count, config.threads, [&](std::size_t p) {
        try {
            auto [i, j] = index_pairs[p];
            Lc3Result common = lc3(result.projections[i], result.projections[j]);
            PairAssessment pa;
            pa.first = metagraphs[i].display_name;
            pa.second = metagraphs[j].display_name;
            pa.lc3_size = common.ids.size();
            pa.curvature_first = lc3_curvature(result.projections[i], common.pn1_vertices, config);
            pa.curvature_second = lc3_curvature(result.projections[j], common.pn2_vertices, config);
            result.report.pairs[p] = std::move(pa);
        } catch (const Error& e) {
            pair_failures[p] = {e.what(), e.category()};
        }
    });
    for (std::size_t p = 0; p < pair_count; ++p) {
        if (!pair_failures[p].message.empty())
            throw Error(pair_failures[p].category,
                        "assess pair (" + metagraphs[index_pairs[p].first].display_name + ", " +
                            metagraphs[index_pairs[p].second].display_name +
                            "): " + pair_failures[p].message);
    }

    result.report.ranked = entries;
    std::sort(result.report.ranked.begin(), result.report.ranked.end(),
              [](const MetaGraphAssessment& a, const MetaGraphAssessment& b) {
                  if (a.fpp != b.fpp) return a.fpp < b.fpp;
                  if (a.curvature != b.curvature) return a.curvature > b.curvature;
                  return a.metagraph < b.metagraph;
              });
    return result;
}

}  // namespace meg
