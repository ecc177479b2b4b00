#pragma once

#include "rcaforge/frame.hpp"
#include "rcaforge/graph.hpp"

#include <optional>
#include <vector>

namespace rcaforge {

struct PcConfig {
    double alpha = 0.05;
    /// Largest conditioning set tried; nullopt means unlimited.
    std::optional<int> max_cond_size = 3;
    /// Freeze adjacencies per conditioning size (PC-stable).
    bool stable = true;
};

struct GesConfig {
    /// nullopt means unlimited.
    std::optional<int> max_parents;
};

struct PcSkeleton {
    MixedGraph skeleton;
    SepsetMap sepsets;
    std::size_t tests = 0;
};

/// Adjacency search of PC with Fisher-z tests. Conditioning subsets are drawn
/// from adj(x) \ {y} in lexicographic name order and the first separator wins.
/// Required edges are never tested; pairs forbidden both ways never enter.
PcSkeleton pc_skeleton(const MetricFrame& f, const DomainKnowledge& k, const PcConfig& cfg);

/// Full PC: skeleton, colliders, Meek propagation, then domain knowledge. Returns a CPDAG.
MixedGraph pc_discover(const MetricFrame& f, const DomainKnowledge& k, const PcConfig& cfg);

struct GesResult {
    MixedGraph dag;
    MixedGraph cpdag;
    /// Total BIC after the required edges, then after every accepted insertion.
    std::vector<double> forward_trace;
    /// Total BIC after every accepted deletion.
    std::vector<double> backward_trace;
    double bic = 0.0;
};

/// Greedy BIC search over DAGs with single-edge insertions followed by
/// single-edge deletions. Ties go to the lexicographically smallest (cause, effect) pair.
GesResult ges_search(const MetricFrame& f, const DomainKnowledge& k, const GesConfig& cfg);

/// CPDAG of the GES optimum with domain knowledge applied.
MixedGraph ges_discover(const MetricFrame& f, const DomainKnowledge& k, const GesConfig& cfg);

/// Sum of local BIC scores of a DAG over the frame's columns.
double total_bic(const MetricFrame& f, const MixedGraph& dag);

}  // namespace rcaforge
