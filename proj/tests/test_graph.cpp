#include "rcaforge/errors.hpp"
#include "rcaforge/graph.hpp"
#include "rcaforge/simulate.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace rcaforge;

namespace {

MixedGraph graph(int n, std::initializer_list<std::pair<int, int>> directed,
                 std::initializer_list<std::pair<int, int>> undirected = {}) {
    MixedGraph g(testing::names(n));
    for (auto [a, b] : directed) g.add_directed(a, b);
    for (auto [a, b] : undirected) g.add_undirected(a, b);
    return g;
}

// Unshielded colliders a -> c <- b as sorted triples.
std::set<std::tuple<NodeId, NodeId, NodeId>> colliders(const MixedGraph& g) {
    std::set<std::tuple<NodeId, NodeId, NodeId>> out;
    for (NodeId c = 0; c < g.size(); ++c) {
        const auto ps = g.parents(c);
        for (std::size_t i = 0; i < ps.size(); ++i)
            for (std::size_t j = i + 1; j < ps.size(); ++j)
                if (!g.adjacent(ps[i], ps[j])) out.insert({std::min(ps[i], ps[j]), std::max(ps[i], ps[j]), c});
    }
    return out;
}

std::set<std::pair<NodeId, NodeId>> skeleton(const MixedGraph& g) {
    std::set<std::pair<NodeId, NodeId>> out;
    for (auto [a, b] : g.directed_edges()) out.insert({std::min(a, b), std::max(a, b)});
    for (auto e : g.undirected_edges()) out.insert(e);
    return out;
}

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("one edge per pair; directed insertion replaces the old mark") {
    MixedGraph g(testing::names(3));
    g.add_undirected(0, 1);
    CHECK(g.has_undirected(1, 0));
    g.add_directed(1, 0);
    CHECK(g.has_directed(1, 0));
    CHECK_FALSE(g.has_undirected(0, 1));
    g.add_directed(0, 1);
    CHECK(g.has_directed(0, 1));
    CHECK_FALSE(g.has_directed(1, 0));
    CHECK(g.num_edges() == 1);
    g.remove_edge(1, 0);
    CHECK(g.num_edges() == 0);
    CHECK_THROWS_AS(g.index("Z"), UnknownNode);
    CHECK_THROWS_AS(MixedGraph({"A", "A"}), InvalidArgument);
}

TEST_CASE("node names are case sensitive") {
    MixedGraph g({"cpu", "CPU"});
    CHECK(g.index("cpu") == 0);
    CHECK(g.index("CPU") == 1);
}

TEST_CASE("equality ignores node order") {
    MixedGraph a({"A", "B", "C"}), b({"C", "A", "B"});
    a.add_directed("A", "B");
    a.add_undirected("B", "C");
    b.add_directed("A", "B");
    b.add_undirected("C", "B");
    CHECK(a == b);
    b.add_directed("A", "C");
    CHECK_FALSE(a == b);
}

TEST_CASE("topological sort: chain, cycle and mixed edges") {
    const MixedGraph chain = graph(3, {{2, 1}, {1, 0}});
    CHECK(topological_sort(chain) == std::vector<std::string>{"C", "B", "A"});
    CHECK_THROWS_AS(topological_sort(graph(3, {{0, 1}, {1, 2}, {2, 0}})), CycleError);
    CHECK_THROWS_AS(topological_sort(graph(2, {}, {{0, 1}})), MixedEdgeError);
    // Ties broken by node order.
    CHECK(topological_sort(graph(3, {})) == std::vector<std::string>{"A", "B", "C"});
}

TEST_CASE("topological order respects every edge of random DAGs") {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const MixedGraph g = gen_dag(12, 25, seed);
        const auto order = topological_order(g);
        std::vector<std::size_t> pos(g.size());
        for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
        for (auto [a, b] : g.directed_edges()) CHECK(pos[a] < pos[b]);
    }
}

TEST_CASE("descendants agree with a transitive-closure oracle") {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        const MixedGraph g = gen_dag(10, 18, seed);
        const auto reach = testing::closure(g);
        for (NodeId v = 0; v < g.size(); ++v) {
            std::set<std::string> expected;
            for (NodeId w = 0; w < g.size(); ++w)
                if (reach[v][w]) expected.insert(g.name(w));
            CHECK(descendants(g, g.name(v)) == expected);
        }
    }
}

TEST_CASE("collider orientation uses separating sets") {
    MixedGraph skel = graph(3, {}, {{0, 2}, {1, 2}});
    SepsetMap sep;
    sep.set(0, 1, {});
    const MixedGraph v = orient_v_structures(skel, sep);
    CHECK(v.has_directed(0, 2));
    CHECK(v.has_directed(1, 2));

    SepsetMap chain_sep;
    chain_sep.set(0, 1, {2});
    const MixedGraph c = orient_v_structures(skel, chain_sep);
    CHECK(c.directed_edges().empty());
    CHECK(c.undirected_edges().size() == 2);

    // No recorded separator: leave the triple alone.
    CHECK(orient_v_structures(skel, SepsetMap{}).directed_edges().empty());
}

TEST_CASE("Meek R1 to R3 on textbook patterns") {
    // R1: A -> B - C, A and C non-adjacent => B -> C.
    CHECK(meek_propagate(graph(3, {{0, 1}}, {{1, 2}})).has_directed(1, 2));
    // R2: A -> B -> C and A - C => A -> C.
    CHECK(meek_propagate(graph(3, {{0, 1}, {1, 2}}, {{0, 2}})).has_directed(0, 2));
    // R3: A - B, A - C, A - D, B -> D <- C, B and C non-adjacent => A -> D.
    const MixedGraph r3 = meek_propagate(graph(4, {{1, 3}, {2, 3}}, {{0, 1}, {0, 2}, {0, 3}}));
    CHECK(r3.has_directed(0, 3));
    CHECK(r3.has_undirected(0, 1));
    CHECK(r3.has_undirected(0, 2));
    // Nothing to do on a fully undirected chain.
    CHECK(meek_propagate(graph(3, {}, {{0, 1}, {1, 2}})).undirected_edges().size() == 2);
}

TEST_CASE("dag_to_cpdag matches the Markov-equivalence oracle on all 4-node DAGs") {
    const auto dags = testing::all_dags(testing::names(4));
    REQUIRE(dags.size() == 543);
    for (const auto& d : dags) {
        // Verma-Pearl: equivalent iff same skeleton and same unshielded colliders.
        std::vector<const MixedGraph*> cls;
        for (const auto& e : dags)
            if (skeleton(e) == skeleton(d) && colliders(e) == colliders(d)) cls.push_back(&e);
        MixedGraph expected(d.nodes());
        for (auto [a, b] : skeleton(d)) {
            const bool all_ab = std::all_of(cls.begin(), cls.end(), [&](auto* e) { return e->has_directed(a, b); });
            const bool all_ba = std::all_of(cls.begin(), cls.end(), [&](auto* e) { return e->has_directed(b, a); });
            if (all_ab) expected.add_directed(a, b);
            else if (all_ba) expected.add_directed(b, a);
            else expected.add_undirected(a, b);
        }
        CHECK(dag_to_cpdag(d) == expected);
    }
}

TEST_CASE("dag_sepsets separate every non-adjacent pair") {
    const MixedGraph d = graph(3, {{0, 1}, {1, 2}});
    const SepsetMap s = dag_sepsets(d);
    REQUIRE(s.find(0, 2) != nullptr);
    CHECK(*s.find(0, 2) == std::vector<NodeId>{1});
}

TEST_CASE("extend_to_dag orients lower to higher and never leaves a cycle") {
    const MixedGraph e = extend_to_dag(graph(3, {}, {{0, 1}, {1, 2}}));
    CHECK(e.has_directed(0, 1));
    CHECK(e.has_directed(1, 2));

    // Inconsistent directed input with a cycle gets repaired.
    const MixedGraph cyc = extend_to_dag(graph(3, {{0, 1}, {1, 2}, {2, 0}}));
    CHECK(cyc.is_dag());
    CHECK(skeleton(cyc) == skeleton(graph(3, {{0, 1}, {1, 2}, {2, 0}})));

    // Property: acyclic, same skeleton, consistent directed edges kept.
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        MixedGraph g(testing::names(6));
        for (NodeId a = 0; a < 6; ++a)
            for (NodeId b = a + 1; b < 6; ++b) {
                const auto r = rng() % 4;
                if (r == 1) g.add_directed(a, b);
                if (r == 2) g.add_directed(b, a);
                if (r == 3) g.add_undirected(a, b);
            }
        const MixedGraph x = extend_to_dag(g);
        CHECK(x.is_dag());
        CHECK(skeleton(x) == skeleton(g));
        if (!g.has_directed_cycle() && g.undirected_edges().empty())
            CHECK(x == g);
    }
}

TEST_CASE("extend_to_dag keeps CPDAG directed edges") {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        const MixedGraph d = gen_dag(10, 15, seed);
        const MixedGraph cp = dag_to_cpdag(d);
        const MixedGraph x = extend_to_dag(cp);
        CHECK(x.is_dag());
        for (auto [a, b] : cp.directed_edges()) CHECK(x.has_directed(a, b));
    }
}

TEST_CASE("domain knowledge validation") {
    DomainKnowledge k;
    k.forbidden = {{"A", "B"}};
    k.required = {{"A", "B"}};
    CHECK_THROWS_AS(k.validate(), KnowledgeConflict);

    DomainKnowledge root;
    root.root_nodes = {"A"};
    root.required = {{"B", "A"}};
    CHECK_THROWS_AS(root.validate(), KnowledgeConflict);

    DomainKnowledge leaf;
    leaf.leaf_nodes = {"A"};
    leaf.required = {{"A", "B"}};
    CHECK_THROWS_AS(leaf.validate(), KnowledgeConflict);

    DomainKnowledge ok;
    ok.required = {{"A", "B"}};
    ok.forbidden = {{"B", "A"}};
    CHECK_NOTHROW(ok.validate());
}

TEST_CASE("apply_knowledge enforces every constraint kind") {
    MixedGraph g(testing::names(4));
    g.add_directed("A", "B");
    g.add_undirected("B", "C");
    g.add_directed("D", "C");

    DomainKnowledge k;
    k.forbidden = {{"A", "B"}};
    k.root_nodes = {"B"};
    k.leaf_nodes = {"D"};
    k.required = {{"C", "D"}};
    const MixedGraph out = apply_knowledge(g, k);
    // A -> B forbidden but B -> A admissible: reversed.
    CHECK(out.has_directed("B", "A"));
    // B - C with B a root: oriented out of the root.
    CHECK(out.has_directed("B", "C"));
    // D is a leaf, so D -> C flips to the required C -> D.
    CHECK(out.has_directed("C", "D"));
    for (const auto& r : k.root_nodes) CHECK(out.parents(out.index(r)).empty());
    for (const auto& l : k.leaf_nodes) CHECK(out.children(out.index(l)).empty());

    // Both directions inadmissible: the edge is dropped.
    DomainKnowledge both;
    both.forbidden = {{"A", "B"}, {"B", "A"}};
    CHECK_FALSE(apply_knowledge(g, both).adjacent("A", "B"));
}

}  // TEST_SUITE
