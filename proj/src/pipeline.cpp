#include "rcaforge/pipeline.hpp"

#include "rcaforge/errors.hpp"
#include "rcaforge/eval.hpp"
#include "rcaforge/io.hpp"
#include "rcaforge/simulate.hpp"
#include "rcaforge/stats.hpp"
#include "params.hpp"

#include <algorithm>
#include <cmath>

namespace rcaforge {

using nlohmann::json;

namespace {

enum ScorerStream : std::uint64_t { kWalk = 11, kEpsilon = 12 };

}  // namespace

std::string scorer_label(const std::string& method) {
    if (method == "ht") return "HT";
    if (method == "ht-adj") return "HT-adj";
    if (method == "bi") return "BI";
    if (method == "rw") return "RW";
    if (method == "eps") return "epsilon-Diagnosis";
    if (method == "rcd") return "RCD";
    if (method == "rcd-local") return "Local-RCD";
    throw InvalidArgument("unknown scoring method '" + method + "'");
}

bool is_two_phase(const std::string& method) {
    scorer_label(method);
    return method == "ht" || method == "ht-adj" || method == "bi" || method == "rw";
}

RcaResult run_scorer(const std::string& method, const ScoringContext& ctx, const ScorerOptions& options) {
    if (method == "ht" || method == "ht-adj") {
        HtParams p = options.ht;
        p.adjust = method == "ht-adj";
        return ht_scores(ctx, p);
    }
    if (method == "bi") return bayesian_scores(ctx);
    if (method == "rw") {
        RandomWalkParams p = options.rw;
        p.seed = derive_seed(options.seed, kWalk);
        return random_walk_scores(ctx, p);
    }
    if (method == "eps") {
        EpsilonParams p = options.eps;
        p.seed = derive_seed(options.seed, kEpsilon);
        return epsilon_diagnosis(ctx, p);
    }
    if (method == "rcd" || method == "rcd-local") {
        RcdParams p = options.rcd;
        p.localized = method == "rcd-local";
        return rcd_scores(ctx, p);
    }
    throw InvalidArgument("unknown scoring method '" + method + "'");
}

std::set<std::string> anomalous_metrics(const MetricFrame& normal, const MetricFrame& abnormal, double k_sigma) {
    const MetricFrame all = normal.concat(abnormal);
    const double train = static_cast<double>(normal.rows()) / static_cast<double>(all.rows());
    std::set<std::string> out;
    for (const auto& [name, spans] : detect_anomalies(all, train, k_sigma))
        if (!spans.empty()) out.insert(name);
    if (out.empty()) out.insert(normal.names().begin(), normal.names().end());
    return out;
}

json discover_document(const MetricFrame& f, const DomainKnowledge& k, const DiscoverOptions& options) {
    json meta;
    MixedGraph g;
    if (options.algorithm == "pc") {
        g = pc_discover(f, k, options.pc);
        meta = {{"algorithm", "pc"},
                {"ci_test", "fisher-z"},
                {"alpha", options.pc.alpha},
                {"max_cond_size", options.pc.max_cond_size ? json(*options.pc.max_cond_size) : json(nullptr)},
                {"stable", options.pc.stable}};
    } else if (options.algorithm == "ges") {
        g = ges_discover(f, k, options.ges);
        meta = {{"algorithm", "ges"},
                {"score", "bic"},
                {"max_parents", options.ges.max_parents ? json(*options.ges.max_parents) : json(nullptr)}};
    } else {
        throw InvalidArgument("unknown discovery algorithm '" + options.algorithm + "'");
    }
    meta["output"] = "cpdag";
    meta["dag_extension"] = "undirected edges oriented from lower to higher node index";
    json doc = graph_to_json(g);
    doc["metadata"] = meta;
    return doc;
}

json score_document(const std::string& method, const std::optional<MixedGraph>& graph, const MetricFrame& normal,
                    const MetricFrame& abnormal, const ScorerOptions& options) {
    ScoringContext ctx{graph, normal, abnormal, {}};
    if (method == "rw") ctx.anomalous_metrics = anomalous_metrics(normal, abnormal);
    if (!is_two_phase(method)) ctx.graph.reset();
    return result_to_json(run_scorer(method, ctx, options));
}

json detect_document(const MetricFrame& f, double train_fraction, double k_sigma) {
    return json{{"train_fraction", train_fraction},
                {"k_sigma", k_sigma},
                {"rows", f.rows()},
                {"spans", spans_to_json(detect_anomalies(f, train_fraction, k_sigma))}};
}

json evaluate_document(const MixedGraph& est, const MixedGraph& truth) {
    const AdjacencyScore prf = adjacency_prf(est, truth);
    json doc{{"precision", prf.precision}, {"recall", prf.recall}, {"f1", prf.f1}, {"shd", shd(est, truth)}};
    if (truth.is_dag()) {
        const GraphScore cp = graph_score(est, truth);
        doc["against_cpdag"] = {{"precision", cp.precision}, {"recall", cp.recall}, {"f1", cp.f1}, {"shd", cp.shd}};
    }
    return doc;
}

DiscoverOptions discover_options(const json& params) {
    const detail::Params p(params, {"algo", "alpha", "max_cond", "stable", "max_parents"});
    DiscoverOptions o;
    p.get("algo", o.algorithm);
    if (o.algorithm != "pc" && o.algorithm != "ges")
        throw InvalidArgument("unknown discovery algorithm '" + o.algorithm + "'");
    p.get("alpha", o.pc.alpha);
    p.get("max_cond", o.pc.max_cond_size);
    p.get("stable", o.pc.stable);
    p.get("max_parents", o.ges.max_parents);
    if (!(o.pc.alpha > 0.0 && o.pc.alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
    if (o.pc.max_cond_size && *o.pc.max_cond_size < 0) throw InvalidArgument("max_cond must be non-negative");
    if (o.ges.max_parents && *o.ges.max_parents < 0) throw InvalidArgument("max_parents must be non-negative");
    return o;
}

namespace {

const std::set<std::string> kScoreKeys{"method", "seed", "lambda", "rho", "self_weight", "steps", "permutations",
                                       "eps_alpha", "bins", "rcd_alpha", "chunk_size", "rcd_max_cond"};

}  // namespace

std::string score_method(const json& params) {
    const detail::Params p(params, kScoreKeys);
    if (!p.has("method")) throw SchemaError("parameter 'method' is required");
    std::string method;
    p.get("method", method);
    scorer_label(method);
    return method;
}

ScorerOptions scorer_options(const json& params) {
    const detail::Params p(params, kScoreKeys);
    ScorerOptions o;
    p.get("seed", o.seed);
    p.get("lambda", o.ht.lambda);
    p.get("rho", o.rw.rho);
    p.get("self_weight", o.rw.self_weight);
    p.get("steps", o.rw.steps);
    p.get("permutations", o.eps.permutations);
    p.get("eps_alpha", o.eps.alpha);
    p.get("bins", o.rcd.bins);
    p.get("rcd_alpha", o.rcd.alpha);
    p.get("chunk_size", o.rcd.chunk_size);
    p.get("rcd_max_cond", o.rcd.max_cond_size);
    if (o.ht.lambda < 0.0) throw InvalidArgument("lambda must be non-negative");
    if (o.rw.steps < 1) throw InvalidArgument("steps must be positive");
    if (o.eps.permutations < 1) throw InvalidArgument("permutations must be positive");
    return o;
}

DetectOptions detect_options(const json& params) {
    const detail::Params p(params, {"train_fraction", "k_sigma"});
    DetectOptions o;
    p.get("train_fraction", o.train_fraction);
    p.get("k_sigma", o.k_sigma);
    if (!(o.train_fraction > 0.0 && o.train_fraction < 1.0)) throw InvalidArgument("train_fraction must lie in (0, 1)");
    if (!(o.k_sigma >= 0.0)) throw InvalidArgument("k_sigma must be non-negative");
    return o;
}

json frame_summary(const MetricFrame& f) {
    json metrics = json::array();
    for (Eigen::Index j = 0; j < f.cols(); ++j) {
        const auto col = f.column(j);
        const double mean = col.mean();
        const double var = f.rows() > 1 ? (col.array() - mean).square().sum() / static_cast<double>(f.rows() - 1) : 0.0;
        metrics.push_back({{"metric", f.names()[static_cast<std::size_t>(j)]},
                           {"count", f.rows()},
                           {"mean", mean},
                           {"std", std::sqrt(var)},
                           {"min", col.minCoeff()},
                           {"max", col.maxCoeff()}});
    }
    return json{{"rows", f.rows()}, {"metrics", metrics}};
}

}  // namespace rcaforge
