#include "rcaforge/bench.hpp"

#include "rcaforge/errors.hpp"
#include "rcaforge/eval.hpp"
#include "rcaforge/io.hpp"
#include "params.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <random>
#include <thread>

namespace rcaforge {

using nlohmann::json;

namespace {

enum BenchStream : std::uint64_t { kRootCount = 21, kScorers = 22 };

std::string row_label(const std::string& method, const std::string& graph) {
    std::string label = scorer_label(method);
    if (graph != "truth" && graph != "none") label += "-" + graph;
    return label;
}

std::string error_text(const std::exception& e) {
    if (const auto* err = dynamic_cast<const Error*>(&e)) return err->kind() + ": " + err->what();
    return std::string("internal: ") + e.what();
}

MeanSe summarize(const std::vector<double>& values) {
    MeanSe out;
    if (values.empty()) return out;
    const double n = static_cast<double>(values.size());
    for (double v : values) out.mean += v;
    out.mean /= n;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    return out;
}

json mean_se_json(const MeanSe& m) { return json{{"mean", m.mean}, {"se", m.se}}; }

std::string fmt(const MeanSe& m, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f ± %.*f", digits, m.mean, digits, m.se);
    return buf;
}

}  // namespace

const RcaRow* BenchReport::row(const std::string& label) const {
    for (const auto& r : rca)
        if (r.label == label) return &r;
    return nullptr;
}

const GraphRow* BenchReport::graph(const std::string& algorithm) const {
    for (const auto& g : graphs)
        if (g.algorithm == algorithm) return &g;
    return nullptr;
}

json config_to_json(const BenchConfig& cfg) {
    const auto& c = cfg.case_options;
    return json{{"cases", cfg.cases},
                {"first_seed", cfg.first_seed},
                {"nodes", c.num_nodes},
                {"edges", c.num_edges},
                {"normal_samples", c.n_normal},
                {"abnormal_samples", c.n_abnormal},
                {"root_causes", {cfg.min_root_causes, cfg.max_root_causes}},
                {"mechanism", to_string(c.mechanism)},
                {"magnitude", c.magnitude},
                {"noise", to_string(c.noise)},
                {"weight_range", {c.weight_low, c.weight_high}},
                {"methods", cfg.methods},
                {"graphs", cfg.graphs},
                {"pc", {{"alpha", cfg.pc.alpha},
                        {"max_cond_size", cfg.pc.max_cond_size ? json(*cfg.pc.max_cond_size) : json(nullptr)},
                        {"stable", cfg.pc.stable},
                        {"ci_test", "fisher-z"}}},
                {"ges", {{"max_parents", cfg.ges.max_parents ? json(*cfg.ges.max_parents) : json(nullptr)}}},
                {"scorers", {{"rw", {{"rho", cfg.scorers.rw.rho},
                                     {"self_weight", cfg.scorers.rw.self_weight},
                                     {"steps", cfg.scorers.rw.steps}}},
                             {"ht_adj_lambda", cfg.scorers.ht.lambda},
                             {"eps", {{"permutations", cfg.scorers.eps.permutations}, {"alpha", cfg.scorers.eps.alpha}}},
                             {"rcd", {{"bins", cfg.scorers.rcd.bins},
                                      {"alpha", cfg.scorers.rcd.alpha},
                                      {"chunk_size", cfg.scorers.rcd.chunk_size},
                                      {"max_cond_size", cfg.scorers.rcd.max_cond_size}}}}}};
}

BenchConfig bench_config(const json& params) {
    const detail::Params p(params, {"cases", "seed", "nodes", "edges", "samples", "abnormal", "min_roots",
                                    "max_roots", "magnitude", "methods", "graphs", "workers", "timing"});
    BenchConfig cfg;
    auto& c = cfg.case_options;
    p.get("cases", cfg.cases);
    p.get("seed", cfg.first_seed);
    p.get("nodes", c.num_nodes);
    p.get("edges", c.num_edges);
    p.get("samples", c.n_normal);
    p.get("abnormal", c.n_abnormal);
    p.get("min_roots", cfg.min_root_causes);
    p.get("max_roots", cfg.max_root_causes);
    p.get("magnitude", c.magnitude);
    p.get_list("methods", cfg.methods);
    p.get_list("graphs", cfg.graphs);
    p.get("workers", cfg.workers);
    p.get("timing", cfg.include_timing);
    if (cfg.cases < 1) throw InvalidArgument("cases must be positive");
    if (cfg.min_root_causes < 1 || cfg.max_root_causes < cfg.min_root_causes)
        throw InvalidArgument("root-cause range must satisfy 1 <= min_roots <= max_roots");
    if (c.n_normal < 2 || c.n_abnormal < 2) throw InvalidArgument("sample counts must be at least 2");
    if (cfg.workers < 0) throw InvalidArgument("workers must be non-negative");
    for (const auto& m : cfg.methods) scorer_label(m);
    for (const auto& g : cfg.graphs)
        if (g != "truth" && g != "pc" && g != "ges") throw InvalidArgument("unknown graph source '" + g + "'");
    return cfg;
}

json run_bench_case(const BenchConfig& cfg, std::uint64_t seed) {
    json record{{"seed", seed}};
    try {
        CaseOptions options = cfg.case_options;
        std::mt19937_64 rng(derive_seed(seed, kRootCount));
        options.n_root_causes = std::uniform_int_distribution<int>(cfg.min_root_causes, cfg.max_root_causes)(rng);
        const SimulatedCase c = gen_case(options, seed);
        record["truth"] = c.truth;

        std::map<std::string, MixedGraph> graphs;
        json graph_scores = json::object();
        for (const auto& source : cfg.graphs) {
            if (source == "truth") {
                graphs.emplace(source, c.scm.graph);
                continue;
            }
            MixedGraph est;
            if (source == "pc") est = pc_discover(c.normal, {}, cfg.pc);
            else if (source == "ges") est = ges_discover(c.normal, {}, cfg.ges);
            else throw InvalidArgument("unknown graph source '" + source + "'");
            const GraphScore s = graph_score(est, c.scm.graph);
            graph_scores[source] = {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"shd", s.shd}};
            graphs.emplace(source, std::move(est));
        }
        record["graphs"] = graph_scores;

        ScorerOptions scorer_options = cfg.scorers;
        scorer_options.seed = derive_seed(seed, kScorers);
        const auto anomalous = anomalous_metrics(c.normal, c.abnormal);

        json rows = json::array();
        for (const auto& method : cfg.methods) {
            std::vector<std::string> sources = is_two_phase(method) ? cfg.graphs : std::vector<std::string>{"none"};
            for (const auto& source : sources) {
                json row{{"method", method}, {"graph", source}, {"label", row_label(method, source)}};
                try {
                    ScoringContext ctx{std::nullopt, c.normal, c.abnormal, anomalous};
                    if (source != "none") ctx.graph = graphs.at(source);
                    const RcaResult r = run_scorer(method, ctx, scorer_options);
                    row["recall@1"] = recall_at_k(r, c.truth, 1);
                    row["recall@3"] = recall_at_k(r, c.truth, 3);
                    row["recall@5"] = recall_at_k(r, c.truth, 5);
                } catch (const std::exception& e) {
                    row["error"] = error_text(e);
                }
                rows.push_back(std::move(row));
            }
        }
        record["rows"] = rows;
    } catch (const std::exception& e) {
        record["error"] = error_text(e);
    }
    return record;
}

BenchReport run_benchmark(const BenchConfig& cfg) {
    if (cfg.cases < 1) throw InvalidArgument("benchmark needs at least one case");
    if (cfg.methods.empty()) throw InvalidArgument("benchmark needs at least one scoring method");
    for (const auto& m : cfg.methods) scorer_label(m);
    if (cfg.min_root_causes < 1 || cfg.max_root_causes < cfg.min_root_causes)
        throw InvalidArgument("invalid root cause range");

    const auto started = std::chrono::steady_clock::now();
    const json config = config_to_json(cfg);
    const std::string config_key = config.dump();
    std::vector<json> records(static_cast<std::size_t>(cfg.cases));

    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < cfg.cases; i = next++) {
            const std::uint64_t seed = cfg.first_seed + static_cast<std::uint64_t>(i);
            std::optional<std::filesystem::path> cached;
            if (cfg.cache_dir) {
                cached = *cfg.cache_dir / ("case-" + std::to_string(seed) + ".json");
                if (std::filesystem::exists(*cached)) {
                    try {
                        json stored = json::parse(read_file(*cached));
                        if (stored.value("config", "") == config_key) {
                            records[static_cast<std::size_t>(i)] = stored.at("record");
                            continue;
                        }
                    } catch (const std::exception&) {
                        // unreadable cache entries are recomputed
                    }
                }
            }
            records[static_cast<std::size_t>(i)] = run_bench_case(cfg, seed);
            if (cached) write_file(*cached, dump_json(json{{"config", config_key}, {"record", records[static_cast<std::size_t>(i)]}}));
        }
    };
    const int workers = cfg.workers > 0 ? cfg.workers : std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
    {
        std::vector<std::jthread> pool;
        for (int w = 0; w < std::min(workers, cfg.cases); ++w) pool.emplace_back(worker);
    }

    BenchReport report;
    report.config = config;
    report.requested = cfg.cases;
    std::map<std::string, std::size_t> row_index;
    std::map<std::string, std::array<std::vector<double>, 3>> recalls;
    std::map<std::string, std::array<std::vector<double>, 4>> graph_values;
    for (const auto& record : records) {
        if (record.contains("error")) {
            report.failures.push_back({{"seed", record["seed"]}, {"error", record["error"]}});
            continue;
        }
        ++report.completed;
        for (const auto& source : cfg.graphs) {
            if (source == "truth") continue;
            const auto& g = record["graphs"][source];
            auto& v = graph_values[source];
            v[0].push_back(g["precision"]);
            v[1].push_back(g["recall"]);
            v[2].push_back(g["f1"]);
            v[3].push_back(g["shd"].get<double>());
        }
        for (const auto& row : record["rows"]) {
            const std::string label = row["label"];
            if (!row_index.count(label)) {
                row_index[label] = report.rca.size();
                report.rca.push_back(RcaRow{row["method"], row["graph"], label, 0, {}, {}, {}});
            }
            if (row.contains("error")) {
                report.failures.push_back({{"seed", record["seed"]}, {"row", label}, {"error", row["error"]}});
                continue;
            }
            auto& r = recalls[label];
            r[0].push_back(row["recall@1"]);
            r[1].push_back(row["recall@3"]);
            r[2].push_back(row["recall@5"]);
        }
    }
    for (auto& row : report.rca) {
        const auto& r = recalls[row.label];
        row.n = static_cast<int>(r[0].size());
        row.recall1 = summarize(r[0]);
        row.recall3 = summarize(r[1]);
        row.recall5 = summarize(r[2]);
    }
    for (const auto& source : cfg.graphs) {
        if (source == "truth") continue;
        const auto& v = graph_values[source];
        report.graphs.push_back(GraphRow{source, static_cast<int>(v[0].size()), summarize(v[0]), summarize(v[1]),
                                         summarize(v[2]), summarize(v[3])});
    }
    if (cfg.include_timing)
        report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

json report_to_json(const BenchReport& report) {
    json rca = json::array();
    for (const auto& r : report.rca)
        rca.push_back({{"label", r.label},
                       {"method", r.method},
                       {"graph", r.graph},
                       {"n", r.n},
                       {"recall@1", mean_se_json(r.recall1)},
                       {"recall@3", mean_se_json(r.recall3)},
                       {"recall@5", mean_se_json(r.recall5)}});
    json graphs = json::array();
    for (const auto& g : report.graphs)
        graphs.push_back({{"algorithm", g.algorithm},
                          {"n", g.n},
                          {"precision", mean_se_json(g.precision)},
                          {"recall", mean_se_json(g.recall)},
                          {"f1", mean_se_json(g.f1)},
                          {"shd", mean_se_json(g.shd)}});
    json out{{"interval", "mean ± standard error (sample standard deviation / sqrt(n))"},
             {"shd_convention", "each node pair counts once; directed versus undirected counts as a disagreement"},
             {"graph_reference", "estimated CPDAG versus the CPDAG of the true DAG"},
             {"config", report.config},
             {"cases", {{"requested", report.requested}, {"completed", report.completed}}},
             {"rca", rca},
             {"graphs", graphs},
             {"failures", report.failures},
             {"markdown", report_markdown(report)}};
    if (report.wall_seconds) out["wall_seconds"] = *report.wall_seconds;
    return out;
}

std::string report_markdown(const BenchReport& report) {
    std::string out = "| Method | Recall@1 | Recall@3 | Recall@5 |\n|---|---|---|---|\n";
    for (const auto& r : report.rca)
        out += "| " + r.label + " | " + fmt(r.recall1) + " | " + fmt(r.recall3) + " | " + fmt(r.recall5) + " |\n";
    if (!report.graphs.empty()) {
        out += "\n| Algorithm | Precision | Recall | F1 | SHD |\n|---|---|---|---|---|\n";
        for (const auto& g : report.graphs)
            out += "| " + g.algorithm + " | " + fmt(g.precision) + " | " + fmt(g.recall) + " | " + fmt(g.f1) + " | " +
                   fmt(g.shd) + " |\n";
    }
    return out;
}

}  // namespace rcaforge
