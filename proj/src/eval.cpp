#include "rcaforge/eval.hpp"

#include "rcaforge/errors.hpp"

#include <algorithm>

namespace rcaforge {

namespace {

void check_same_nodes(const MixedGraph& a, const MixedGraph& b) {
    std::set<std::string> x(a.nodes().begin(), a.nodes().end());
    std::set<std::string> y(b.nodes().begin(), b.nodes().end());
    if (x != y) throw NodeMismatch("graphs are defined over different node sets");
}

std::set<NamePair> skeleton(const MixedGraph& g) {
    std::set<NamePair> out = g.undirected_names();
    for (const auto& [a, b] : g.directed_names()) out.insert(a < b ? NamePair{a, b} : NamePair{b, a});
    return out;
}

// 0 none, 1 a->b, 2 b->a, 3 a-b for names a < b.
int mark(const MixedGraph& g, const std::string& a, const std::string& b) {
    const NodeId x = g.index(a), y = g.index(b);
    if (g.has_directed(x, y)) return 1;
    if (g.has_directed(y, x)) return 2;
    if (g.has_undirected(x, y)) return 3;
    return 0;
}

}  // namespace

AdjacencyScore adjacency_prf(const MixedGraph& est, const MixedGraph& truth) {
    check_same_nodes(est, truth);
    const auto e = skeleton(est);
    const auto t = skeleton(truth);
    std::size_t common = 0;
    for (const auto& pair : e) common += t.count(pair);
    AdjacencyScore out;
    out.precision = e.empty() ? 1.0 : static_cast<double>(common) / static_cast<double>(e.size());
    out.recall = t.empty() ? 1.0 : static_cast<double>(common) / static_cast<double>(t.size());
    const double sum = out.precision + out.recall;
    out.f1 = sum > 0.0 ? 2.0 * out.precision * out.recall / sum : 0.0;
    return out;
}

int shd(const MixedGraph& est, const MixedGraph& truth) {
    check_same_nodes(est, truth);
    std::set<NamePair> pairs = skeleton(est);
    const auto t = skeleton(truth);
    pairs.insert(t.begin(), t.end());
    int out = 0;
    for (const auto& [a, b] : pairs)
        if (mark(est, a, b) != mark(truth, a, b)) ++out;
    return out;
}

GraphScore graph_score(const MixedGraph& est, const MixedGraph& truth_dag) {
    const MixedGraph truth = dag_to_cpdag(truth_dag);
    const AdjacencyScore prf = adjacency_prf(est, truth);
    return GraphScore{prf.precision, prf.recall, prf.f1, shd(est, truth)};
}

double recall_at_k(const RcaResult& result, const std::set<std::string>& truth, std::size_t k) {
    if (k < 1) throw InvalidArgument("k must be at least 1");
    if (truth.empty()) throw InvalidArgument("truth set must be non-empty");
    if (result.ranked.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < std::min(k, result.ranked.size()); ++i) hits += truth.count(result.ranked[i].metric);
    return static_cast<double>(hits) / static_cast<double>(std::min(k, truth.size()));
}

}  // namespace rcaforge
