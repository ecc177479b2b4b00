#pragma once

#include "rcaforge/graph.hpp"
#include "rcaforge/scoring.hpp"

#include <set>
#include <string>

namespace rcaforge {

struct AdjacencyScore {
    double precision = 1.0;
    double recall = 1.0;
    double f1 = 1.0;
};

struct GraphScore {
    double precision = 1.0;
    double recall = 1.0;
    double f1 = 1.0;
    int shd = 0;
};

/// Skeleton precision/recall. An empty estimate has precision 1 and an empty
/// truth recall 1; F1 is 0 when precision + recall is 0.
AdjacencyScore adjacency_prf(const MixedGraph& est, const MixedGraph& truth);

/// Number of node pairs whose edge differs (missing, extra, or a different
/// mark: reversed, or directed versus undirected). Each pair counts once.
int shd(const MixedGraph& est, const MixedGraph& truth);

/// Adjacency scores plus SHD against the CPDAG of a true DAG.
GraphScore graph_score(const MixedGraph& est, const MixedGraph& truth_dag);

/// |top-k ∩ truth| / min(k, |truth|); an empty result scores 0.
double recall_at_k(const RcaResult& result, const std::set<std::string>& truth, std::size_t k);

}  // namespace rcaforge
