#pragma once

#include "rcaforge/discovery.hpp"
#include "rcaforge/pipeline.hpp"
#include "rcaforge/simulate.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rcaforge {

struct BenchConfig {
    int cases = 50;
    std::uint64_t first_seed = 1;
    CaseOptions case_options{.num_nodes = 20, .num_edges = 30, .n_normal = 2000, .n_abnormal = 200};
    /// Root-cause count per case is drawn uniformly from this range.
    int min_root_causes = 1;
    int max_root_causes = 3;
    std::vector<std::string> methods = kScorerMethods;
    /// Any of "truth", "pc", "ges".
    std::vector<std::string> graphs{"truth", "pc", "ges"};
    PcConfig pc;
    GesConfig ges;
    ScorerOptions scorers;
    /// 0 means one worker per hardware thread.
    int workers = 0;
    /// Per-case records are cached here and reused on later runs.
    std::optional<std::filesystem::path> cache_dir;
    /// Adds wall-clock time to the report (breaks byte-identical output).
    bool include_timing = false;
};

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

struct RcaRow {
    std::string method;  // scorer id
    std::string graph;   // "truth", "pc", "ges" or "none" for one-phase scorers
    std::string label;   // table label, e.g. "HT-pc"
    int n = 0;
    MeanSe recall1, recall3, recall5;
};

struct GraphRow {
    std::string algorithm;
    int n = 0;
    MeanSe precision, recall, f1, shd;
};

struct BenchReport {
    nlohmann::json config;
    int requested = 0;
    int completed = 0;
    nlohmann::json failures = nlohmann::json::array();
    std::vector<RcaRow> rca;
    std::vector<GraphRow> graphs;
    std::optional<double> wall_seconds;

    const RcaRow* row(const std::string& label) const;
    const GraphRow* graph(const std::string& algorithm) const;
};

/// Simulate -> discover -> score -> aggregate over seeds first_seed .. first_seed + cases - 1.
/// Cases run on a bounded worker pool; aggregation is in seed order, so the
/// report does not depend on scheduling.
BenchReport run_benchmark(const BenchConfig& cfg);

/// One benchmark case as a JSON record (graph scores and per-row recalls).
nlohmann::json run_bench_case(const BenchConfig& cfg, std::uint64_t seed);

nlohmann::json config_to_json(const BenchConfig& cfg);

/// Benchmark configuration from a flat parameter object with keys cases,
/// seed (first seed), nodes, edges, samples, abnormal, min_roots, max_roots,
/// magnitude, methods, graphs, workers, timing. Unknown keys raise SchemaError.
BenchConfig bench_config(const nlohmann::json& params);
nlohmann::json report_to_json(const BenchReport& report);
/// Markdown tables of Recall@k and graph accuracy.
std::string report_markdown(const BenchReport& report);

}  // namespace rcaforge
