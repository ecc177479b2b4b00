#include "rcaforge/scoring.hpp"

#include "rcaforge/errors.hpp"
#include "rcaforge/simulate.hpp"
#include "rcaforge/stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <random>

namespace rcaforge {

namespace {

constexpr double kSigmaFloor = 1e-9;

struct NodeFit {
    Eigen::VectorXd coefficients;  // intercept first
    std::vector<Eigen::Index> parent_columns;
    double sigma = 1.0;      // unbiased residual scale
    double sigma_mle = 1.0;  // RSS / n
};

Eigen::MatrixXd design_matrix(const MetricFrame& f, const std::vector<Eigen::Index>& columns) {
    Eigen::MatrixXd x(f.rows(), static_cast<Eigen::Index>(columns.size()) + 1);
    x.col(0).setOnes();
    for (std::size_t j = 0; j < columns.size(); ++j) x.col(static_cast<Eigen::Index>(j) + 1) = f.column(columns[j]);
    return x;
}

Eigen::VectorXd residuals(const MetricFrame& f, Eigen::Index column, const NodeFit& fit) {
    return f.column(column) - design_matrix(f, fit.parent_columns) * fit.coefficients;
}

NodeFit fit_node(const MetricFrame& normal, Eigen::Index column, std::vector<Eigen::Index> parent_columns) {
    NodeFit fit;
    fit.parent_columns = std::move(parent_columns);
    const Eigen::MatrixXd x = design_matrix(normal, fit.parent_columns);
    fit.coefficients = x.completeOrthogonalDecomposition().solve(normal.column(column));
    const double rss = residuals(normal, column, fit).squaredNorm();
    const double n = static_cast<double>(normal.rows());
    const double dof = n - static_cast<double>(x.cols());
    fit.sigma = std::max(std::sqrt(rss / (dof > 0 ? dof : n)), kSigmaFloor);
    fit.sigma_mle = std::max(std::sqrt(rss / n), kSigmaFloor);
    return fit;
}

std::vector<NodeFit> fit_all(const ScoringContext& ctx, const MixedGraph& dag) {
    std::vector<NodeFit> fits;
    for (NodeId v = 0; v < dag.size(); ++v) {
        std::vector<Eigen::Index> parents;
        for (NodeId p : dag.parents(v)) parents.push_back(ctx.normal.index(dag.name(p)));
        fits.push_back(fit_node(ctx.normal, ctx.normal.index(dag.name(v)), std::move(parents)));
    }
    return fits;
}

void check_graph_columns(const ScoringContext& ctx, const MixedGraph& g) {
    if (static_cast<Eigen::Index>(g.size()) != ctx.normal.cols())
        throw NodeMismatch("graph nodes do not match the metric columns");
    for (const auto& name : g.nodes())
        if (!ctx.normal.find(name)) throw NodeMismatch("graph node '" + name + "' is not a metric column");
}

// Sorted by score descending, then name.
RcaResult ranked_by_score(std::string method, std::vector<RankedMetric> items) {
    std::stable_sort(items.begin(), items.end(), [](const RankedMetric& a, const RankedMetric& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.metric < b.metric;
    });
    RcaResult out;
    out.method = std::move(method);
    out.ranked = std::move(items);
    return out;
}

std::vector<std::string> sorted_columns(const MetricFrame& f) {
    std::vector<std::string> names = f.names();
    std::sort(names.begin(), names.end());
    return names;
}

}  // namespace

std::vector<std::string> RcaResult::top(std::size_t k) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) out.push_back(ranked[i].metric);
    return out;
}

void ScoringContext::validate() const {
    if (normal.cols() != abnormal.cols()) throw InvalidArgument("normal and abnormal frames have different columns");
    for (const auto& name : normal.names())
        if (!abnormal.find(name)) throw InvalidArgument("metric '" + name + "' missing from the abnormal frame");
    for (const auto& name : anomalous_metrics)
        if (!normal.find(name)) throw InvalidArgument("anomalous metric '" + name + "' is not a column");
}

MixedGraph scoring_dag(const ScoringContext& ctx) {
    if (!ctx.graph) throw GraphRequired("this scorer needs a causal graph");
    check_graph_columns(ctx, *ctx.graph);
    if (ctx.graph->undirected_edges().empty()) {
        if (ctx.graph->has_directed_cycle()) throw CycleError("scoring graph contains a directed cycle");
        return *ctx.graph;
    }
    return extend_to_dag(*ctx.graph);
}

RcaResult random_walk_scores(const ScoringContext& ctx, const RandomWalkParams& params) {
    ctx.validate();
    const MixedGraph dag = scoring_dag(ctx);
    if (ctx.anomalous_metrics.empty()) throw InvalidArgument("random walk needs at least one anomalous metric");
    if (params.steps < 1) throw InvalidArgument("random walk needs at least one step");

    // Start at the anomalous metric with the largest robust deviation (ties: smallest name).
    std::string start;
    double start_peak = -1.0;
    for (const auto& name : ctx.anomalous_metrics) {
        const auto normal = to_vector(ctx.normal.column(name));
        RobustScale rs = robust_scale(normal);
        if (rs.scale <= 0.0) {
            const Eigen::VectorXd c = ctx.normal.column(name);
            rs.scale = std::sqrt((c.array() - c.mean()).square().mean());
        }
        double peak = 0.0;
        if (rs.scale > 0.0) peak = ((ctx.abnormal.column(name).array() - rs.location).abs() / rs.scale).maxCoeff();
        if (peak > start_peak) {
            start_peak = peak;
            start = name;
        }
    }

    const MetricFrame all = ctx.normal.concat(ctx.abnormal);
    const std::size_t n = dag.size();
    const Eigen::VectorXd anchor = all.column(start);
    std::vector<double> affinity(n);
    for (NodeId v = 0; v < n; ++v) affinity[v] = std::abs(pearson(all.column(dag.name(v)), anchor));

    Eigen::MatrixXd transition = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (NodeId v = 0; v < n; ++v) {
        const auto row = static_cast<Eigen::Index>(v);
        double neighbour_max = 0.0;
        for (NodeId p : dag.parents(v)) {
            transition(row, static_cast<Eigen::Index>(p)) += affinity[p];
            neighbour_max = std::max(neighbour_max, affinity[p]);
        }
        for (NodeId c : dag.children(v)) {
            transition(row, static_cast<Eigen::Index>(c)) += params.rho * affinity[c];
            neighbour_max = std::max(neighbour_max, affinity[c]);
        }
        transition(row, row) += params.self_weight * std::max(0.0, affinity[v] - neighbour_max);
        const double total = transition.row(row).sum();
        if (total > 0.0) transition.row(row) /= total;
        else transition.row(row).setConstant(1.0 / static_cast<double>(n));
    }

    std::vector<std::discrete_distribution<std::size_t>> rows;
    for (NodeId v = 0; v < n; ++v) {
        const Eigen::RowVectorXd r = transition.row(static_cast<Eigen::Index>(v));
        rows.emplace_back(r.data(), r.data() + r.size());
    }

    std::mt19937_64 rng(params.seed);
    std::vector<long> visits(n, 0);
    std::size_t at = dag.index(start);
    for (int s = 0; s < params.steps; ++s) {
        at = rows[at](rng);
        ++visits[at];
    }

    std::vector<RankedMetric> items;
    nlohmann::json counts = nlohmann::json::object();
    for (NodeId v = 0; v < n; ++v) {
        items.push_back({dag.name(v), static_cast<double>(visits[v]) / params.steps});
        counts[dag.name(v)] = visits[v];
    }
    RcaResult out = ranked_by_score("RW", std::move(items));
    out.metadata["start"] = start;
    out.metadata["visits"] = counts;
    out.metadata["steps"] = params.steps;
    return out;
}

RcaResult ht_scores(const ScoringContext& ctx, const HtParams& params) {
    ctx.validate();
    if (params.lambda < 0.0) throw InvalidArgument("lambda must be non-negative");
    const MixedGraph dag = scoring_dag(ctx);
    const auto fits = fit_all(ctx, dag);

    std::vector<double> base(dag.size());
    for (NodeId v = 0; v < dag.size(); ++v) {
        const Eigen::Index column = ctx.abnormal.index(dag.name(v));
        const Eigen::VectorXd r = residuals(ctx.abnormal, column, fits[v]);
        base[v] = r.cwiseAbs().maxCoeff() / fits[v].sigma;
    }

    std::vector<RankedMetric> items;
    nlohmann::json base_json = nlohmann::json::object(), delta_json = nlohmann::json::object();
    for (NodeId v = 0; v < dag.size(); ++v) {
        double score = base[v];
        if (params.adjust) {
            double downstream = 0.0;
            for (NodeId d : descendant_ids(dag, v)) downstream = std::max(downstream, base[d]);
            score += params.lambda * downstream;
            delta_json[dag.name(v)] = params.lambda * downstream;
        }
        base_json[dag.name(v)] = base[v];
        items.push_back({dag.name(v), score});
    }
    RcaResult out = ranked_by_score(params.adjust ? "HT-adj" : "HT", std::move(items));
    out.metadata["base_scores"] = base_json;
    if (params.adjust) {
        out.metadata["adjustment"] = delta_json;
        out.metadata["lambda"] = params.lambda;
    }
    const double peak = base.empty() ? 0.0 : *std::max_element(base.begin(), base.end());
    out.metadata["no_signal"] = peak < 3.0;
    return out;
}

RcaResult bayesian_scores(const ScoringContext& ctx) {
    ctx.validate();
    const MixedGraph dag = scoring_dag(ctx);
    const auto fits = fit_all(ctx, dag);

    auto mean_nll = [](const Eigen::VectorXd& r, double sigma) {
        const double var = sigma * sigma;
        return 0.5 * std::log(2.0 * std::numbers::pi * var) + r.squaredNorm() / (2.0 * var * static_cast<double>(r.size()));
    };
    std::vector<RankedMetric> items;
    for (NodeId v = 0; v < dag.size(); ++v) {
        const Eigen::Index column = ctx.normal.index(dag.name(v));
        const double abnormal = mean_nll(residuals(ctx.abnormal, ctx.abnormal.index(dag.name(v)), fits[v]), fits[v].sigma_mle);
        const double normal = mean_nll(residuals(ctx.normal, column, fits[v]), fits[v].sigma_mle);
        items.push_back({dag.name(v), abnormal - normal});
    }
    return ranked_by_score("BI", std::move(items));
}

RcaResult epsilon_diagnosis(const ScoringContext& ctx, const EpsilonParams& params) {
    ctx.validate();
    if (!(params.alpha > 0.0 && params.alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
    const Eigen::Index window = std::min(ctx.normal.rows(), ctx.abnormal.rows());
    if (window < 2) throw InvalidArgument("epsilon diagnosis needs at least two rows per window");
    const MetricFrame normal = ctx.normal.tail(window);
    const MetricFrame abnormal = ctx.abnormal.tail(window);

    struct Row {
        std::string metric;
        double energy;
        double p;
    };
    std::vector<Row> rows;
    const auto names = sorted_columns(ctx.normal);
    for (std::size_t j = 0; j < names.size(); ++j) {
        const auto a = to_vector(normal.column(names[j]));
        const auto b = to_vector(abnormal.column(names[j]));
        const EnergyTest t = energy_permutation_test(a, b, params.permutations, derive_seed(params.seed, j));
        rows.push_back({names[j], t.statistic, t.p_value});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) {
        if (x.p != y.p) return x.p < y.p;
        if (x.energy != y.energy) return x.energy > y.energy;
        return x.metric < y.metric;
    });

    RcaResult out;
    out.method = "epsilon-Diagnosis";
    nlohmann::json energy = nlohmann::json::object(), pvalues = nlohmann::json::object();
    for (const auto& r : rows) {
        energy[r.metric] = r.energy;
        pvalues[r.metric] = r.p;
    }
    out.metadata["energy"] = energy;
    out.metadata["p_values"] = pvalues;
    out.metadata["window"] = window;
    const bool any = std::any_of(rows.begin(), rows.end(), [&](const Row& r) { return r.p <= params.alpha; });
    if (!any) return out;
    for (const auto& r : rows) out.ranked.push_back({r.metric, 1.0 - r.p});
    return out;
}

RcaResult rcd_scores(const ScoringContext& ctx, const RcdParams& params) {
    ctx.validate();
    if (params.bins < 2) throw InvalidArgument("RCD needs at least two bins");
    if (!(params.alpha > 0.0 && params.alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
    if (params.localized && params.chunk_size < 1) throw InvalidArgument("chunk size must be positive");

    const auto names = sorted_columns(ctx.normal);
    CategoricalFrame data;
    for (const auto& name : names) {
        const auto normal = to_vector(ctx.normal.column(name));
        const auto abnormal = to_vector(ctx.abnormal.column(name));
        const auto edges = equal_frequency_edges(normal, params.bins);
        std::vector<int> codes = apply_bins(normal, edges);
        const std::vector<int> tail = apply_bins(abnormal, edges);
        codes.insert(codes.end(), tail.begin(), tail.end());
        data.names.push_back(name);
        data.columns.push_back(std::move(codes));
    }
    std::vector<int> indicator(static_cast<std::size_t>(ctx.normal.rows()), 0);
    indicator.resize(indicator.size() + static_cast<std::size_t>(ctx.abnormal.rows()), 1);
    const std::size_t f_index = data.names.size();
    data.names.push_back("__indicator__");
    data.columns.push_back(std::move(indicator));

    struct Evidence {
        double p = -1.0;
        double statistic = 0.0;
    };
    std::map<std::size_t, Evidence> evidence;
    std::vector<std::string> dropped;

    // Removes candidates separated from the indicator by a conditioning set of
    // other candidates, for conditioning sizes 0..max_level.
    auto filter = [&](std::vector<Eigen::Index> candidates, int max_level) {
        for (auto c : candidates) evidence[static_cast<std::size_t>(c)] = Evidence{};
        for (int level = 0; level <= max_level; ++level) {
            if (candidates.size() < static_cast<std::size_t>(level) + 1) break;
            const std::vector<Eigen::Index> snapshot = candidates;
            std::vector<Eigen::Index> kept;
            for (Eigen::Index x : snapshot) {
                std::vector<Eigen::Index> others;
                for (Eigen::Index c : snapshot)
                    if (c != x) others.push_back(c);
                bool removed = false;
                bool insufficient = false;
                auto& ev = evidence[static_cast<std::size_t>(x)];
                std::vector<std::size_t> z;
                // lexicographic subsets of `others`
                std::function<bool(std::size_t, std::size_t)> recurse = [&](std::size_t start, std::size_t depth) {
                    if (depth == static_cast<std::size_t>(level)) {
                        CiTestResult t;
                        try {
                            t = chi_square_ci(data, f_index, static_cast<std::size_t>(x), z);
                        } catch (const InsufficientData&) {
                            insufficient = true;
                            return true;
                        }
                        if (t.p_value > ev.p) ev = Evidence{t.p_value, t.statistic};
                        if (t.p_value > params.alpha) {
                            removed = true;
                            return true;
                        }
                        return false;
                    }
                    for (std::size_t i = start; i < others.size(); ++i) {
                        z.push_back(static_cast<std::size_t>(others[i]));
                        const bool stop = recurse(i + 1, depth + 1);
                        z.pop_back();
                        if (stop) return true;
                    }
                    return false;
                };
                recurse(0, 0);
                if (insufficient) {
                    dropped.push_back(names[static_cast<std::size_t>(x)]);
                    continue;
                }
                if (!removed) kept.push_back(x);
            }
            candidates = std::move(kept);
        }
        return candidates;
    };

    std::vector<Eigen::Index> all(names.size());
    std::iota(all.begin(), all.end(), 0);
    std::vector<Eigen::Index> pool = all;
    if (params.localized) {
        std::vector<Eigen::Index> merged;
        for (std::size_t start = 0; start < all.size(); start += static_cast<std::size_t>(params.chunk_size)) {
            const auto stop = std::min(all.size(), start + static_cast<std::size_t>(params.chunk_size));
            std::vector<Eigen::Index> chunk(all.begin() + static_cast<std::ptrdiff_t>(start),
                                            all.begin() + static_cast<std::ptrdiff_t>(stop));
            const auto kept = filter(chunk, std::min(1, params.max_cond_size));
            merged.insert(merged.end(), kept.begin(), kept.end());
        }
        std::sort(merged.begin(), merged.end());
        pool = merged;
    }
    const auto survivors = filter(pool, params.max_cond_size);

    struct Row {
        std::string metric;
        Evidence ev;
    };
    std::vector<Row> rows;
    for (Eigen::Index s : survivors) rows.push_back({names[static_cast<std::size_t>(s)], evidence[static_cast<std::size_t>(s)]});
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        if (a.ev.p != b.ev.p) return a.ev.p < b.ev.p;
        if (a.ev.statistic != b.ev.statistic) return a.ev.statistic > b.ev.statistic;
        return a.metric < b.metric;
    });

    RcaResult out;
    out.method = params.localized ? "Local-RCD" : "RCD";
    nlohmann::json pvalues = nlohmann::json::object();
    for (const auto& r : rows) {
        out.ranked.push_back({r.metric, 1.0 - r.ev.p});
        pvalues[r.metric] = r.ev.p;
    }
    out.metadata["p_values"] = pvalues;
    out.metadata["bins"] = params.bins;
    if (!dropped.empty()) out.metadata["dropped_insufficient_data"] = dropped;
    return out;
}

}  // namespace rcaforge
