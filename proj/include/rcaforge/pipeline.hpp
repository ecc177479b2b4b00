#pragma once

#include "rcaforge/discovery.hpp"
#include "rcaforge/frame.hpp"
#include "rcaforge/graph.hpp"
#include "rcaforge/scoring.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace rcaforge {

/// Scorer identifiers accepted by the CLI, the service and the benchmark.
inline const std::vector<std::string> kScorerMethods{"ht", "ht-adj", "bi", "rw", "eps", "rcd", "rcd-local"};

/// Table label of a scorer ("HT", "Local-RCD", ...).
std::string scorer_label(const std::string& method);
/// True for methods that need a causal graph.
bool is_two_phase(const std::string& method);

struct ScorerOptions {
    RandomWalkParams rw;
    HtParams ht{.adjust = false, .lambda = 0.5};
    EpsilonParams eps;
    RcdParams rcd;
    std::uint64_t seed = 0;
};

/// Dispatches to one of the five scorers; seeds of the stochastic scorers are
/// derived from `options.seed`.
RcaResult run_scorer(const std::string& method, const ScoringContext& ctx, const ScorerOptions& options);

/// Metrics flagged by the stats-threshold detector on normal + abnormal rows,
/// trained on the normal prefix. Falls back to every metric when none is flagged.
std::set<std::string> anomalous_metrics(const MetricFrame& normal, const MetricFrame& abnormal, double k_sigma = 3.0);

struct DiscoverOptions {
    std::string algorithm = "pc";
    PcConfig pc;
    GesConfig ges;
};

/// Runs PC or GES and returns the graph document with a `metadata` block
/// describing the configuration.
nlohmann::json discover_document(const MetricFrame& f, const DomainKnowledge& k, const DiscoverOptions& options);

/// Result document for `score`.
nlohmann::json score_document(const std::string& method, const std::optional<MixedGraph>& graph,
                              const MetricFrame& normal, const MetricFrame& abnormal, const ScorerOptions& options);

/// Span document for `detect`.
nlohmann::json detect_document(const MetricFrame& f, double train_fraction, double k_sigma);

/// Graph comparison document for `evaluate`.
nlohmann::json evaluate_document(const MixedGraph& est, const MixedGraph& truth);

/// Options built from a flat parameter object. Absent keys keep their
/// defaults; unknown keys and ill-typed values raise SchemaError. The CLI maps
/// its flags onto the same keys, so both front ends configure runs identically.
///
///   discover: algo, alpha, max_cond (null = unlimited), stable, max_parents
///   score:    method, seed, lambda, rho, self_weight, steps, permutations,
///             eps_alpha, bins, rcd_alpha, chunk_size, rcd_max_cond
///   detect:   train_fraction, k_sigma
DiscoverOptions discover_options(const nlohmann::json& params);
ScorerOptions scorer_options(const nlohmann::json& params);
std::string score_method(const nlohmann::json& params);

struct DetectOptions {
    double train_fraction = 0.5;
    double k_sigma = 3.0;
};
DetectOptions detect_options(const nlohmann::json& params);

/// Per-metric count/mean/std/min/max.
nlohmann::json frame_summary(const MetricFrame& f);

}  // namespace rcaforge
