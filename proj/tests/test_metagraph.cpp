#include "meg/metagraph.hpp"

#include "meg/errors.hpp"
#include "testutil.hpp"

#include <sstream>

#include "doctest.h"

using namespace meg;

namespace {

/// DBLP-style schema: authors write papers, papers appear at venues,
/// papers cite papers.
HeterogeneousNetwork dblp_schema() {
    HeterogeneousNetwork hin;
    int a = hin.add_type("A"), p = hin.add_type("P"), v = hin.add_type("V");
    hin.declare_relation("writes", a, p);
    hin.declare_relation("published_at", p, v);
    hin.declare_relation("cites", p, p);
    return hin;
}

/// IMDB-style schema: users rate movies, directors direct movies.
HeterogeneousNetwork imdb_schema() {
    HeterogeneousNetwork hin;
    int m = hin.add_type("M"), u = hin.add_type("U"), d = hin.add_type("D");
    hin.declare_relation("rates", u, m);
    hin.declare_relation("directs", d, m);
    return hin;
}

double weight_between(const ProjectedNetwork& pn, const std::string& a, const std::string& b) {
    Eigen::Index ia = -1, ib = -1;
    for (Eigen::Index i = 0; i < pn.size(); ++i) {
        if (pn.vertex_ids[i] == a) ia = i;
        if (pn.vertex_ids[i] == b) ib = i;
    }
    REQUIRE(ia >= 0);
    REQUIRE(ib >= 0);
    return pn.adjacency.coeff(ia, ib);
}

bool same_adjacency(const ProjectedNetwork& a, const ProjectedNetwork& b) {
    if (a.vertex_ids != b.vertex_ids) return false;
    SparseMatrix diff = a.adjacency - b.adjacency;
    for (int k = 0; k < diff.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(diff, k); it; ++it)
            if (it.value() != 0.0) return false;
    return true;
}

}  // namespace

TEST_CASE("parse_metagraph handles chains") {
    HeterogeneousNetwork hin = dblp_schema();
    MetaGraph mg = parse_metagraph(hin, "A-P-V-P-A");
    CHECK(mg.stages.size() == 5);
    CHECK(mg.anchor_type == hin.type_id("A"));
    CHECK(mg.display_name == "A-P-V-P-A");
    CHECK(mg.mirror_symmetric);
}

TEST_CASE("parse_metagraph handles branches") {
    HeterogeneousNetwork hin = imdb_schema();
    MetaGraph mg = parse_metagraph(hin, "M-(U|D)-M");
    REQUIRE(mg.stages.size() == 3);
    const auto& branch = std::get<MetaGraph::Branch>(mg.stages[1]);
    CHECK(branch.arms.size() == 2);
    CHECK(mg.anchor_type == hin.type_id("M"));
    CHECK(mg.mirror_symmetric);
    // Canonical form sorts the arms.
    CHECK(mg.display_name == "M-(D|U)-M");
    CHECK(parse_metagraph(hin, "M-(D|U)-M").display_name == mg.display_name);
}

TEST_CASE("parse round-trips its canonical display form") {
    HeterogeneousNetwork dblp = dblp_schema();
    HeterogeneousNetwork imdb = imdb_schema();
    for (const char* expr : {"A-P-A", "A-P-P-A", "A-P-V-P-A", "A-(P-P)-A"}) {
        MetaGraph mg = parse_metagraph(dblp, expr);
        MetaGraph again = parse_metagraph(dblp, mg.display_name);
        CHECK(again == mg);
    }
    MetaGraph mg = parse_metagraph(imdb, "M-(U|D)-M");
    CHECK(parse_metagraph(imdb, mg.display_name) == mg);
}

TEST_CASE("parse_metagraph rejects invalid expressions") {
    HeterogeneousNetwork hin = dblp_schema();
    CHECK_THROWS_AS(parse_metagraph(hin, "A-P-X-A"), DataError);    // unknown type
    CHECK_THROWS_AS(parse_metagraph(hin, "A-V-A"), DataError);      // no relation A-V
    CHECK_THROWS_AS(parse_metagraph(hin, "A-P"), DataError);        // endpoints differ
    CHECK_THROWS_AS(parse_metagraph(hin, "A-P-(V|V)"), DataError);  // ends with a branch
    CHECK_THROWS_AS(parse_metagraph(hin, ""), DataError);
    CHECK_THROWS_AS(parse_metagraph(hin, "A-()-A"), DataError);
    CHECK_THROWS_AS(parse_metagraph(hin, "A-(P-"), DataError);
}

TEST_CASE("project counts shared intermediate vertices (APA)") {
    HeterogeneousNetwork hin = dblp_schema();
    hin.add_vertex("a1", hin.type_id("A"));
    hin.add_vertex("a2", hin.type_id("A"));
    hin.add_vertex("p1", hin.type_id("P"));
    hin.add_vertex("p2", hin.type_id("P"));
    hin.add_vertex("p3", hin.type_id("P"));
    hin.add_edge("a1", "p1", "writes");
    hin.add_edge("a1", "p2", "writes");
    hin.add_edge("a2", "p2", "writes");
    hin.add_edge("a2", "p3", "writes");

    MetaGraph apa = parse_metagraph(hin, "A-P-A");
    ProjectedNetwork pn = project(hin, apa);
    CHECK(weight_between(pn, "a1", "a2") == 1.0);  // shared p2
    CHECK(pn.adjacency.coeff(0, 0) == 0.0);        // zero diagonal
    CHECK(same_adjacency(pn, project_bruteforce(hin, apa)));
}

TEST_CASE("projection with a single anchor vertex is edgeless") {
    HeterogeneousNetwork hin = dblp_schema();
    hin.add_vertex("a1", hin.type_id("A"));
    hin.add_vertex("p1", hin.type_id("P"));
    hin.add_edge("a1", "p1", "writes");
    ProjectedNetwork pn = project(hin, parse_metagraph(hin, "A-P-A"));
    CHECK(pn.size() == 1);
    CHECK(pn.adjacency.nonZeros() == 0);
}

TEST_CASE("branch instances multiply arm matches (M(UD)M)") {
    HeterogeneousNetwork hin = imdb_schema();
    hin.add_vertex("m1", hin.type_id("M"));
    hin.add_vertex("m2", hin.type_id("M"));
    for (const char* u : {"u1", "u2", "u3"}) hin.add_vertex(u, hin.type_id("U"));
    hin.add_vertex("d1", hin.type_id("D"));
    // m1 and m2 share two users and one director.
    for (const char* u : {"u1", "u2"}) {
        hin.add_edge(u, "m1", "rates");
        hin.add_edge(u, "m2", "rates");
    }
    hin.add_edge("u3", "m1", "rates");
    hin.add_edge("d1", "m1", "directs");
    hin.add_edge("d1", "m2", "directs");

    MetaGraph mudm = parse_metagraph(hin, "M-(U|D)-M");
    ProjectedNetwork pn = project(hin, mudm);
    CHECK(weight_between(pn, "m1", "m2") == 2.0);  // 2 users x 1 director
    CHECK(same_adjacency(pn, project_bruteforce(hin, mudm)));
}

TEST_CASE("single-arm branch projects like the plain chain") {
    HeterogeneousNetwork hin = dblp_schema();
    std::mt19937_64 rng(5);
    for (int i = 0; i < 6; ++i) hin.add_vertex("a" + std::to_string(i), hin.type_id("A"));
    for (int i = 0; i < 8; ++i) hin.add_vertex("p" + std::to_string(i), hin.type_id("P"));
    std::uniform_real_distribution<double> coin(0, 1);
    for (int a = 0; a < 6; ++a)
        for (int p = 0; p < 8; ++p)
            if (coin(rng) < 0.4)
                hin.add_edge("a" + std::to_string(a), "p" + std::to_string(p), "writes");
    for (int p = 0; p < 8; ++p)
        for (int q = p + 1; q < 8; ++q)
            if (coin(rng) < 0.2)
                hin.add_edge("p" + std::to_string(p), "p" + std::to_string(q), "cites");

    ProjectedNetwork branch = project(hin, parse_metagraph(hin, "A-(P-P)-A"));
    ProjectedNetwork chain = project(hin, parse_metagraph(hin, "A-P-P-A"));
    CHECK(same_adjacency(branch, chain));
}

TEST_CASE("chain projection is invariant under reversal") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        HeterogeneousNetwork hin = megtest::random_hin(rng);
        MetaGraph mg = megtest::random_metagraph(rng, hin);

        // Reverse the expression manually.
        std::vector<MetaGraph::Stage> reversed(mg.stages.rbegin(), mg.stages.rend());
        std::ostringstream expr;
        for (std::size_t i = 0; i < reversed.size(); ++i) {
            if (i) expr << "-";
            if (const auto* branch = std::get_if<MetaGraph::Branch>(&reversed[i])) {
                expr << "(";
                for (std::size_t a = 0; a < branch->arms.size(); ++a) {
                    if (a) expr << "|";
                    for (auto it = branch->arms[a].rbegin(); it != branch->arms[a].rend(); ++it) {
                        if (it != branch->arms[a].rbegin()) expr << "-";
                        expr << hin.type_name(*it);
                    }
                }
                expr << ")";
            } else {
                expr << hin.type_name(std::get<int>(reversed[i]));
            }
        }
        MetaGraph back = parse_metagraph(hin, expr.str());
        CHECK(same_adjacency(project(hin, mg), project(hin, back)));
    }
}

TEST_CASE("project matches the brute-force oracle on random cases") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 40; ++trial) {
        HeterogeneousNetwork hin = megtest::random_hin(rng);
        MetaGraph mg = megtest::random_metagraph(rng, hin);
        ProjectedNetwork fast = project(hin, mg);
        ProjectedNetwork slow = project_bruteforce(hin, mg);
        CHECK(same_adjacency(fast, slow));
    }
}

TEST_CASE("instance counts past the exact-integer range saturate with a warning") {
    // Complete bipartite A-P core: each A-P-A hop doubles the count, so a
    // long chain overflows 2^53.
    HeterogeneousNetwork hin = dblp_schema();
    for (const char* a : {"a1", "a2"}) hin.add_vertex(a, hin.type_id("A"));
    for (const char* p : {"p1", "p2"}) hin.add_vertex(p, hin.type_id("P"));
    for (const char* a : {"a1", "a2"})
        for (const char* p : {"p1", "p2"}) hin.add_edge(a, p, "writes");

    std::string expr = "A";
    for (int hop = 0; hop < 60; ++hop) expr += "-P-A";
    ProjectedNetwork pn = project(hin, parse_metagraph(hin, expr));
    CHECK(weight_between(pn, "a1", "a2") == 9007199254740992.0);  // clamped at 2^53
}

TEST_CASE("brute-force refuses when the budget is exceeded") {
    HeterogeneousNetwork hin = dblp_schema();
    for (int i = 0; i < 8; ++i) hin.add_vertex("a" + std::to_string(i), hin.type_id("A"));
    for (int i = 0; i < 8; ++i) hin.add_vertex("p" + std::to_string(i), hin.type_id("P"));
    for (int a = 0; a < 8; ++a)
        for (int p = 0; p < 8; ++p)
            hin.add_edge("a" + std::to_string(a), "p" + std::to_string(p), "writes");

    ProjectOptions tiny;
    tiny.budget_per_pair = 1;  // 28 pairs, far fewer than the expansions needed
    CHECK_THROWS_AS(project_bruteforce(hin, parse_metagraph(hin, "A-P-A-P-A"), tiny), DataError);
}

TEST_CASE("load_metagraphs reads list files and rejects duplicates") {
    HeterogeneousNetwork hin = dblp_schema();
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "meg_test_mglist";
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "ok.txt");
        out << "# comment\nA-P-A\nA-P-P-A\n\n";
    }
    std::vector<MetaGraph> mgs = load_metagraphs(hin, (dir / "ok.txt").string());
    REQUIRE(mgs.size() == 2);
    CHECK(mgs[0].display_name == "A-P-A");

    {
        std::ofstream out(dir / "dup.txt");
        out << "A-P-A\nA-P-A\n";
    }
    CHECK_THROWS_AS(load_metagraphs(hin, (dir / "dup.txt").string()), ParseError);
    fs::remove_all(dir);
}
