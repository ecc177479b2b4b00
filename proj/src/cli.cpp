#include "rcaforge/cli.hpp"

#include "rcaforge/bench.hpp"
#include "rcaforge/errors.hpp"
#include "rcaforge/io.hpp"
#include "rcaforge/pipeline.hpp"
#include "rcaforge/service.hpp"
#include "rcaforge/simulate.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <functional>
#include <iostream>
#include <memory>

namespace rcaforge {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

/// Collects flags that were actually given into a parameter object, so the
/// library defaults stay the single source of truth.
class ParamFlags {
public:
    template <class T>
    CLI::Option* add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        auto value = std::make_shared<T>();
        CLI::Option* opt = app->add_option(flag, *value, help);
        commits_.push_back([this, opt, value, key] {
            if (opt->count()) params_[key] = *value;
        });
        return opt;
    }

    /// Integer option where "none" means unlimited.
    CLI::Option* add_limit(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        auto value = std::make_shared<std::string>();
        CLI::Option* opt = app->add_option(flag, *value, help + " (integer or 'none')");
        commits_.push_back([this, opt, value, key] {
            if (!opt->count()) return;
            if (*value == "none") {
                params_[key] = nullptr;
                return;
            }
            try {
                std::size_t used = 0;
                const int n = std::stoi(*value, &used);
                if (used != value->size()) throw std::invalid_argument(*value);
                params_[key] = n;
            } catch (const std::logic_error&) {
                throw InvalidArgument(flag_name(opt) + " expects an integer or 'none'");
            }
        });
        return opt;
    }

    json collect() {
        params_ = json::object();
        for (auto& c : commits_) c();
        return params_;
    }

private:
    static std::string flag_name(const CLI::Option* opt) { return opt->get_name(); }

    json params_ = json::object();
    std::vector<std::function<void()>> commits_;
};

void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
    if (out_path.empty()) {
        out << text;
    } else {
        write_file(out_path, text);
    }
}

MixedGraph load_graph_file(const fs::path& path) {
    const std::string text = read_file(path);
    return path.extension() == ".csv" ? parse_adjacency_csv(text) : parse_graph(text);
}

std::string fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Root-cause analysis for metric telemetry", "rca-forge"};
    app.require_subcommand(1);
    app.fallthrough(false);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Generate a synthetic case bundle");
    CaseOptions case_opts;
    std::uint64_t sim_seed = 0;
    std::string sim_out, mechanism = to_string(case_opts.mechanism), noise = to_string(case_opts.noise);
    sim->add_option("--nodes", case_opts.num_nodes, "Number of metrics")->capture_default_str();
    sim->add_option("--edges", case_opts.num_edges, "Number of causal edges")->capture_default_str();
    sim->add_option("--samples", case_opts.n_normal, "Normal rows")->capture_default_str();
    sim->add_option("--abnormal", case_opts.n_abnormal, "Abnormal rows")->capture_default_str();
    sim->add_option("--root-causes", case_opts.n_root_causes, "Intervened metrics")->capture_default_str();
    sim->add_option("--mechanism", mechanism, "mean_shift | variance_scale | weight_rescale")->capture_default_str();
    sim->add_option("--magnitude", case_opts.magnitude, "Intervention magnitude")->capture_default_str();
    sim->add_option("--noise", noise, "gaussian | uniform | exponential")->capture_default_str();
    sim->add_option("--weight-low", case_opts.weight_low, "Smallest absolute edge weight")->capture_default_str();
    sim->add_option("--weight-high", case_opts.weight_high, "Largest absolute edge weight")->capture_default_str();
    sim->add_option("--seed", sim_seed, "Random seed")->capture_default_str();
    sim->add_option("--out", sim_out, "Output directory")->required();

    // detect
    auto* det = app.add_subcommand("detect", "Flag anomalous spans per metric");
    ParamFlags det_flags;
    std::string det_input, det_out;
    det->add_option("--input", det_input, "Metric CSV")->required()->check(CLI::ExistingFile);
    det_flags.add<double>(det, "--train-fraction", "train_fraction", "Leading fraction used as reference [0.5]");
    det_flags.add<double>(det, "--k-sigma", "k_sigma", "Threshold in robust standard deviations [3]");
    det->add_option("--out", det_out, "Output JSON (stdout if omitted)");

    // discover
    auto* dis = app.add_subcommand("discover", "Learn a causal graph from normal data");
    ParamFlags dis_flags;
    std::string dis_input, dis_knowledge, dis_out;
    dis->add_option("--input", dis_input, "Metric CSV")->required()->check(CLI::ExistingFile);
    dis->add_option("--knowledge", dis_knowledge, "Domain knowledge YAML")->check(CLI::ExistingFile);
    dis_flags.add<std::string>(dis, "--algo", "algo", "pc | ges [pc]");
    dis_flags.add<double>(dis, "--alpha", "alpha", "PC significance level [0.05]");
    dis_flags.add_limit(dis, "--max-cond", "max_cond", "PC conditioning set limit [3]");
    dis_flags.add<bool>(dis, "--stable", "stable", "PC-stable adjacency freezing [true]");
    dis_flags.add_limit(dis, "--max-parents", "max_parents", "GES in-degree limit [none]");
    dis->add_option("--out", dis_out, "Output graph JSON (stdout if omitted)");

    // score
    auto* sco = app.add_subcommand("score", "Rank root-cause candidates");
    ParamFlags sco_flags;
    std::string sco_graph, sco_normal, sco_abnormal, sco_out;
    sco_flags.add<std::string>(sco, "--method", "method", "rw | ht | ht-adj | bi | eps | rcd | rcd-local")->required();
    sco->add_option("--graph", sco_graph, "Graph JSON or adjacency CSV (two-phase methods)")->check(CLI::ExistingFile);
    sco->add_option("--normal", sco_normal, "Normal-period metric CSV")->required()->check(CLI::ExistingFile);
    sco->add_option("--abnormal", sco_abnormal, "Abnormal-period metric CSV")->required()->check(CLI::ExistingFile);
    sco_flags.add<std::uint64_t>(sco, "--seed", "seed", "Random seed [0]");
    sco_flags.add<double>(sco, "--lambda", "lambda", "Descendant adjustment weight [0.5]");
    sco_flags.add<double>(sco, "--rho", "rho", "Random-walk backward damping [0.1]");
    sco_flags.add<double>(sco, "--self-weight", "self_weight", "Random-walk self weight [0.5]");
    sco_flags.add<int>(sco, "--steps", "steps", "Random-walk transitions [50000]");
    sco_flags.add<int>(sco, "--permutations", "permutations", "Permutation count [199]");
    sco_flags.add<double>(sco, "--eps-alpha", "eps_alpha", "Epsilon-diagnosis significance [0.05]");
    sco_flags.add<int>(sco, "--bins", "bins", "RCD discretization bins [3]");
    sco_flags.add<double>(sco, "--rcd-alpha", "rcd_alpha", "RCD significance [0.05]");
    sco_flags.add<int>(sco, "--chunk-size", "chunk_size", "Local-RCD chunk size [5]");
    sco_flags.add<int>(sco, "--rcd-max-cond", "rcd_max_cond", "RCD conditioning limit [2]");
    sco->add_option("--out", sco_out, "Output result JSON (stdout if omitted)");

    // evaluate
    auto* eva = app.add_subcommand("evaluate", "Compare an estimated graph with the truth");
    std::string eva_est, eva_truth, eva_out;
    eva->add_option("--est", eva_est, "Estimated graph (JSON or adjacency CSV)")->required()->check(CLI::ExistingFile);
    eva->add_option("--truth", eva_truth, "True graph (JSON or adjacency CSV)")->required()->check(CLI::ExistingFile);
    eva->add_option("--out", eva_out, "Write the full JSON document here");

    // bench
    auto* ben = app.add_subcommand("bench", "Run the simulate-discover-score benchmark");
    ParamFlags ben_flags;
    std::string ben_out, ben_markdown, ben_cache;
    ben_flags.add<int>(ben, "--cases", "cases", "Number of cases [50]");
    ben_flags.add<std::uint64_t>(ben, "--seed", "seed", "First case seed [1]");
    ben_flags.add<int>(ben, "--nodes", "nodes", "Metrics per case [20]");
    ben_flags.add<int>(ben, "--edges", "edges", "Edges per case [30]");
    ben_flags.add<int>(ben, "--samples", "samples", "Normal rows per case [2000]");
    ben_flags.add<int>(ben, "--abnormal", "abnormal", "Abnormal rows per case [200]");
    ben_flags.add<int>(ben, "--min-roots", "min_roots", "Fewest root causes [1]");
    ben_flags.add<int>(ben, "--max-roots", "max_roots", "Most root causes [3]");
    ben_flags.add<double>(ben, "--magnitude", "magnitude", "Mean-shift magnitude [10]");
    ben_flags.add<std::string>(ben, "--methods", "methods", "Comma-separated scorers [all]");
    ben_flags.add<std::string>(ben, "--graphs", "graphs", "Comma-separated graph sources [truth,pc,ges]");
    ben_flags.add<int>(ben, "--workers", "workers", "Worker threads, 0 = all cores [0]");
    ben_flags.add<bool>(ben, "--timing", "timing", "Include wall-clock time [false]");
    ben->add_option("--cache", ben_cache, "Directory for per-case records");
    ben->add_option("--out", ben_out, "Output report JSON");
    ben->add_option("--markdown", ben_markdown, "Write the Markdown tables here");

    // serve
    auto* ser = app.add_subcommand("serve", "Run the HTTP job service");
    ServiceConfig svc;
    std::string data_dir;
    ser->add_option("--host", svc.host, "Bind address")->capture_default_str();
    ser->add_option("--port", svc.port, "Port (0 picks a free one)")->capture_default_str();
    ser->add_option("--data-dir", data_dir, "Artifact directory [$RCA_FORGE_DATA_DIR or ./rca-forge-data]");
    ser->add_option("--jobs", svc.max_jobs, "Concurrent jobs, 0 = all cores")->capture_default_str();

    const auto subcommands = app.get_subcommands({});
    if (!args.empty() && !args.front().starts_with("-") &&
        std::none_of(subcommands.begin(), subcommands.end(),
                     [&](const CLI::App* sub) { return sub->check_name(args.front()); })) {
        err << "error: unknown subcommand '" << args.front() << "'\n\n" << app.help();
        return 1;
    }
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        if (*sim) {
            case_opts.mechanism = parse_mechanism(mechanism);
            case_opts.noise = parse_noise_form(noise);
            write_case_bundle(sim_out, gen_case(case_opts, sim_seed));
            out << "wrote case bundle to " << sim_out << "\n";
        } else if (*det) {
            const DetectOptions o = detect_options(det_flags.collect());
            emit(dump_json(detect_document(load_metrics(det_input), o.train_fraction, o.k_sigma)), det_out, out);
        } else if (*dis) {
            const DiscoverOptions o = discover_options(dis_flags.collect());
            DomainKnowledge k;
            if (!dis_knowledge.empty()) k = parse_knowledge(read_file(dis_knowledge));
            emit(dump_json(discover_document(load_metrics(dis_input), k, o)), dis_out, out);
        } else if (*sco) {
            const json params = sco_flags.collect();
            const std::string method = score_method(params);
            const ScorerOptions o = scorer_options(params);
            std::optional<MixedGraph> graph;
            if (!sco_graph.empty()) graph = load_graph_file(sco_graph);
            emit(dump_json(score_document(method, graph, load_metrics(sco_normal), load_metrics(sco_abnormal), o)),
                 sco_out, out);
        } else if (*eva) {
            const json doc = evaluate_document(load_graph_file(eva_est), load_graph_file(eva_truth));
            out << "P=" << fixed(doc["precision"]) << " R=" << fixed(doc["recall"]) << " F1=" << fixed(doc["f1"])
                << " SHD=" << doc["shd"].get<int>() << "\n";
            if (!eva_out.empty()) write_file(eva_out, dump_json(doc));
        } else if (*ben) {
            BenchConfig cfg = bench_config(ben_flags.collect());
            if (!ben_cache.empty()) cfg.cache_dir = fs::path(ben_cache);
            const BenchReport report = run_benchmark(cfg);
            if (!ben_out.empty()) write_file(ben_out, dump_json(report_to_json(report)));
            if (!ben_markdown.empty()) write_file(ben_markdown, report_markdown(report));
            out << report_markdown(report);
        } else if (*ser) {
            svc.data_dir = data_dir.empty() ? data_dir_from_env("rca-forge-data") : fs::path(data_dir);
            Service service(svc);
            const int port = service.bind();
            out << "serving on http://" << svc.host << ":" << port << " (artifacts in " << svc.data_dir.string()
                << ")" << std::endl;
            service.run();
        }
    } catch (const Error& e) {
        err << "error: " << e.kind() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

int cli_main(int argc, char** argv) {
    std::vector<std::string> args(argv + (argc > 0 ? 1 : 0), argv + argc);
    return cli_main(args, std::cout, std::cerr);
}

}  // namespace rcaforge
