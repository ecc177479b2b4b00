#pragma once

#include "rcaforge/frame.hpp"
#include "rcaforge/graph.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace rcaforge {

struct RankedMetric {
    std::string metric;
    double score = 0.0;

    friend bool operator==(const RankedMetric&, const RankedMetric&) = default;
};

/// Ranked root-cause candidates, best first.
struct RcaResult {
    std::string method;
    std::vector<RankedMetric> ranked;
    nlohmann::json metadata = nlohmann::json::object();

    std::vector<std::string> top(std::size_t k) const;
};

/// Inputs shared by every scorer. Two-phase scorers need `graph`; one-phase
/// scorers never read it.
struct ScoringContext {
    std::optional<MixedGraph> graph;
    MetricFrame normal;
    MetricFrame abnormal;
    std::set<std::string> anomalous_metrics;

    /// Throws InvalidArgument when the frames disagree on columns or an
    /// anomalous metric is not a column.
    void validate() const;
};

struct RandomWalkParams {
    double rho = 0.1;
    double self_weight = 0.5;
    int steps = 50000;
    std::uint64_t seed = 0;
};

struct HtParams {
    bool adjust = false;
    double lambda = 0.5;
};

struct EpsilonParams {
    int permutations = 199;
    double alpha = 0.05;
    std::uint64_t seed = 0;
};

struct RcdParams {
    int bins = 3;
    double alpha = 0.05;
    bool localized = false;
    int chunk_size = 5;
    int max_cond_size = 2;
};

/// Graph used by the two-phase scorers: the context graph with undirected
/// edges extended to a DAG. Throws GraphRequired when absent.
MixedGraph scoring_dag(const ScoringContext& ctx);

/// Random walk over the causal graph started at the anomalous metric with the
/// largest robust peak. Moving to a parent is weighted by its |correlation|
/// with the start metric, moving to a child by rho times that, and staying by
/// self_weight times the node's excess correlation over its neighbours.
/// Nodes are scored by visit frequency.
RcaResult random_walk_scores(const ScoringContext& ctx, const RandomWalkParams& params);

/// Regression-based hypothesis test: each node's mechanism is fitted on normal
/// data and scored by its largest standardised abnormal residual. With
/// `adjust`, every node gains lambda times the largest score among its descendants.
RcaResult ht_scores(const ScoringContext& ctx, const HtParams& params);

/// Excess negative log-likelihood of abnormal rows under per-node
/// linear-Gaussian conditionals fitted on normal data.
RcaResult bayesian_scores(const ScoringContext& ctx);

/// Energy-distance two-sample test per metric between equal-length trailing
/// windows of the normal and abnormal frames. Ranked by p-value, ties by
/// energy distance; empty when no metric is significant at alpha.
RcaResult epsilon_diagnosis(const ScoringContext& ctx, const EpsilonParams& params);

/// Neighbourhood search of a normal/abnormal indicator on discretised data.
/// Survivors are ranked by the largest p-value among the tests they survived.
RcaResult rcd_scores(const ScoringContext& ctx, const RcdParams& params);

}  // namespace rcaforge
