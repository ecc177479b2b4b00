#pragma once

#include "rcaforge/frame.hpp"
#include "rcaforge/graph.hpp"
#include "rcaforge/scoring.hpp"
#include "rcaforge/simulate.hpp"
#include "rcaforge/stats.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace rcaforge {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// --- metric frames -----------------------------------------------------------

/// Parses a metric CSV: header row, `timestamp` first (integer epoch seconds or
/// ISO-8601), then real-valued metric columns.
MetricFrame parse_metrics(std::string_view text);
MetricFrame load_metrics(const std::filesystem::path& path);
/// Writes the shortest round-tripping representation of every value.
std::string format_metrics(const MetricFrame& f);

// --- domain knowledge ----------------------------------------------------------

/// YAML document with optional keys `forbids`, `requires` (lists of
/// [cause, effect] pairs), `root-nodes` and `leaf-nodes` (lists of names).
DomainKnowledge parse_knowledge(std::string_view text);
std::string format_knowledge(const DomainKnowledge& k);

// --- graphs --------------------------------------------------------------------

nlohmann::json graph_to_json(const MixedGraph& g);
MixedGraph graph_from_json(const nlohmann::json& j);
std::string format_graph(const MixedGraph& g);
MixedGraph parse_graph(std::string_view text);
/// Adjacency matrix CSV: row = cause, column = effect; undirected edges set both cells.
std::string format_adjacency_csv(const MixedGraph& g);
MixedGraph parse_adjacency_csv(std::string_view text);

// --- results -------------------------------------------------------------------

nlohmann::json result_to_json(const RcaResult& r);
RcaResult result_from_json(const nlohmann::json& j);
std::string format_result(const RcaResult& r);

nlohmann::json spans_to_json(const std::map<std::string, std::vector<AnomalySpan>>& spans);

// --- simulation bundles --------------------------------------------------------

nlohmann::json scm_to_json(const Scm& scm);
Scm scm_from_json(const nlohmann::json& j);

/// Writes truth.json, graph.json, scm.json, normal.csv and abnormal.csv.
void write_case_bundle(const std::filesystem::path& dir, const SimulatedCase& c);

struct CaseBundle {
    std::set<std::string> truth;
    MixedGraph graph;
    Scm scm;
    MetricFrame normal;
    MetricFrame abnormal;
    nlohmann::json truth_doc;
};
CaseBundle read_case_bundle(const std::filesystem::path& dir);

/// Consistent text rendering for every JSON artifact.
std::string dump_json(const nlohmann::json& j);

}  // namespace rcaforge
