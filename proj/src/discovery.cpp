#include "rcaforge/discovery.hpp"

#include "rcaforge/errors.hpp"
#include "rcaforge/stats.hpp"

#include <algorithm>
#include <numeric>

namespace rcaforge {

namespace {

// Calls visit(subset) for every k-subset of items in lexicographic order until it returns true.
template <typename Visit>
bool for_each_subset(const std::vector<Eigen::Index>& items, std::size_t k, Visit&& visit) {
    if (k > items.size()) return false;
    std::vector<std::size_t> pos(k);
    std::iota(pos.begin(), pos.end(), 0);
    std::vector<Eigen::Index> subset(k);
    while (true) {
        for (std::size_t i = 0; i < k; ++i) subset[i] = items[pos[i]];
        if (visit(subset)) return true;
        std::size_t i = k;
        while (i > 0 && pos[i - 1] == items.size() - k + i - 1) --i;
        if (i == 0) return false;
        ++pos[i - 1];
        for (std::size_t j = i; j < k; ++j) pos[j] = pos[j - 1] + 1;
    }
}

// Column order sorted by name so that results do not depend on input column order.
std::vector<std::string> sorted_names(const MetricFrame& f) {
    std::vector<std::string> names = f.names();
    std::sort(names.begin(), names.end());
    return names;
}

void check_knowledge_nodes(const MetricFrame& f, const DomainKnowledge& k) {
    auto need = [&](const std::string& name) { f.index(name); };
    for (const auto& [a, b] : k.forbidden) need(a), need(b);
    for (const auto& [a, b] : k.required) need(a), need(b);
    for (const auto& v : k.root_nodes) need(v);
    for (const auto& v : k.leaf_nodes) need(v);
}

}  // namespace

PcSkeleton pc_skeleton(const MetricFrame& f, const DomainKnowledge& k, const PcConfig& cfg) {
    if (f.cols() < 2) throw InvalidArgument("causal discovery needs at least two metrics");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
    if (cfg.max_cond_size && *cfg.max_cond_size < 0) throw InvalidArgument("max_cond_size must be non-negative");
    k.validate();
    check_knowledge_nodes(f, k);

    const auto names = sorted_names(f);
    const auto p = static_cast<Eigen::Index>(names.size());
    const auto n = static_cast<std::size_t>(f.rows());
    const int max_by_samples = static_cast<int>(n) - 4;
    if (max_by_samples < 0) throw InvalidArgument("too few rows for conditional independence tests");
    const int max_cond = std::min(cfg.max_cond_size.value_or(static_cast<int>(p) - 2), max_by_samples);
    if (cfg.max_cond_size && static_cast<long>(n) <= *cfg.max_cond_size + 3)
        throw InvalidArgument("PC needs more rows than max_cond_size + 3");

    const Eigen::MatrixXd corr = correlation_matrix(f.select(names).values());

    std::vector<std::vector<bool>> adj(static_cast<std::size_t>(p), std::vector<bool>(static_cast<std::size_t>(p), true));
    std::vector<std::vector<bool>> fixed(adj.size(), std::vector<bool>(adj.size(), false));
    for (Eigen::Index i = 0; i < p; ++i) adj[i][i] = false;
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            if (i == j) continue;
            const auto& a = names[static_cast<std::size_t>(i)];
            const auto& b = names[static_cast<std::size_t>(j)];
            if (k.is_forbidden(a, b) && k.is_forbidden(b, a)) adj[i][j] = false;
            if (k.required.count({a, b}) || k.required.count({b, a})) fixed[i][j] = true;
        }
    }

    auto neighbors = [&](Eigen::Index x) {
        std::vector<Eigen::Index> out;
        for (Eigen::Index j = 0; j < p; ++j)
            if (adj[x][j]) out.push_back(j);
        return out;
    };

    SepsetMap sepsets_sorted;
    std::size_t tests = 0;
    for (int level = 0; level <= max_cond; ++level) {
        std::vector<std::vector<Eigen::Index>> snapshot;
        if (cfg.stable)
            for (Eigen::Index x = 0; x < p; ++x) snapshot.push_back(neighbors(x));
        bool testable = false;
        for (Eigen::Index x = 0; x < p; ++x) {
            const std::vector<Eigen::Index> around = cfg.stable ? snapshot[x] : neighbors(x);
            for (Eigen::Index y : around) {
                if (!adj[x][y] || fixed[x][y]) continue;
                std::vector<Eigen::Index> candidates;
                const auto& pool = cfg.stable ? snapshot[x] : neighbors(x);
                for (Eigen::Index c : pool)
                    if (c != y) candidates.push_back(c);
                if (candidates.size() < static_cast<std::size_t>(level)) continue;
                testable = true;
                for_each_subset(candidates, static_cast<std::size_t>(level), [&](const std::vector<Eigen::Index>& z) {
                    ++tests;
                    const double r = partial_correlation(corr, x, y, z);
                    if (fisher_z_test(r, n, z.size()).p_value <= cfg.alpha) return false;
                    adj[x][y] = adj[y][x] = false;
                    sepsets_sorted.set(static_cast<NodeId>(x), static_cast<NodeId>(y),
                                       std::vector<NodeId>(z.begin(), z.end()));
                    return true;
                });
            }
        }
        if (!testable) break;
    }

    // Map back to the caller's column order.
    PcSkeleton out{MixedGraph(f.names()), {}, tests};
    std::vector<NodeId> to_original(static_cast<std::size_t>(p));
    for (Eigen::Index i = 0; i < p; ++i)
        to_original[static_cast<std::size_t>(i)] = static_cast<NodeId>(f.index(names[static_cast<std::size_t>(i)]));
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = i + 1; j < p; ++j) {
            const NodeId a = to_original[static_cast<std::size_t>(i)];
            const NodeId b = to_original[static_cast<std::size_t>(j)];
            if (adj[i][j]) {
                out.skeleton.add_undirected(a, b);
            } else if (const auto* sep = sepsets_sorted.find(static_cast<NodeId>(i), static_cast<NodeId>(j))) {
                std::vector<NodeId> mapped;
                for (NodeId z : *sep) mapped.push_back(to_original[z]);
                out.sepsets.set(a, b, std::move(mapped));
            }
        }
    }
    return out;
}

MixedGraph pc_discover(const MetricFrame& f, const DomainKnowledge& k, const PcConfig& cfg) {
    // Orient in name order too; collider conflicts resolve by visit order.
    const MetricFrame sorted = f.select(sorted_names(f));
    const PcSkeleton s = pc_skeleton(sorted, k, cfg);
    const MixedGraph g = apply_knowledge(meek_propagate(orient_v_structures(s.skeleton, s.sepsets)), k);
    MixedGraph out(f.names());
    for (auto [a, b] : g.directed_edges()) out.add_directed(g.name(a), g.name(b));
    for (auto [a, b] : g.undirected_edges()) out.add_undirected(g.name(a), g.name(b));
    return out;
}

GesResult ges_search(const MetricFrame& f, const DomainKnowledge& k, const GesConfig& cfg) {
    if (f.cols() < 2) throw InvalidArgument("causal discovery needs at least two metrics");
    if (cfg.max_parents && *cfg.max_parents < 0) throw InvalidArgument("max_parents must be non-negative");
    k.validate();
    check_knowledge_nodes(f, k);

    const auto names = sorted_names(f);
    const MetricFrame work = f.select(names);
    const auto p = static_cast<Eigen::Index>(names.size());
    LocalBicCache bic(work);

    std::vector<std::vector<Eigen::Index>> parents(static_cast<std::size_t>(p));
    std::vector<std::vector<bool>> edge(static_cast<std::size_t>(p), std::vector<bool>(static_cast<std::size_t>(p), false));
    std::vector<std::vector<bool>> required(edge);
    std::vector<double> local(static_cast<std::size_t>(p));
    for (Eigen::Index v = 0; v < p; ++v) local[v] = bic.score(v, {});

    auto reaches = [&](Eigen::Index from, Eigen::Index to) {
        std::vector<bool> seen(static_cast<std::size_t>(p), false);
        std::vector<Eigen::Index> stack{from};
        while (!stack.empty()) {
            Eigen::Index u = stack.back();
            stack.pop_back();
            if (u == to) return true;
            if (seen[u]) continue;
            seen[u] = true;
            for (Eigen::Index c = 0; c < p; ++c)
                if (edge[u][c] && !seen[c]) stack.push_back(c);
        }
        return false;
    };
    auto total = [&] { return std::accumulate(local.begin(), local.end(), 0.0); };
    auto with = [](std::vector<Eigen::Index> ps, Eigen::Index u) {
        ps.insert(std::upper_bound(ps.begin(), ps.end(), u), u);
        return ps;
    };
    auto without = [](std::vector<Eigen::Index> ps, Eigen::Index u) {
        ps.erase(std::find(ps.begin(), ps.end(), u));
        return ps;
    };

    for (const auto& [a, b] : k.required) {
        const Eigen::Index u = work.index(a), v = work.index(b);
        if (reaches(v, u)) throw KnowledgeConflict("required edges form a directed cycle");
        edge[u][v] = required[u][v] = true;
        parents[v] = with(parents[v], u);
        local[v] = bic.score(v, parents[v]);
    }

    GesResult out;
    out.forward_trace.push_back(total());
    while (true) {
        double best = 0.0;
        Eigen::Index bu = -1, bv = -1;
        double best_local = 0.0;
        for (Eigen::Index u = 0; u < p; ++u) {
            for (Eigen::Index v = 0; v < p; ++v) {
                if (u == v || edge[u][v] || edge[v][u]) continue;
                if (!k.allows(names[static_cast<std::size_t>(u)], names[static_cast<std::size_t>(v)])) continue;
                if (cfg.max_parents && static_cast<int>(parents[v].size()) >= *cfg.max_parents) continue;
                double candidate;
                try {
                    candidate = bic.score(v, with(parents[v], u));
                } catch (const SingularData&) {
                    continue;
                }
                const double delta = candidate - local[v];
                if (delta < best && !reaches(v, u)) {
                    best = delta;
                    bu = u;
                    bv = v;
                    best_local = candidate;
                }
            }
        }
        if (bu < 0) break;
        edge[bu][bv] = true;
        parents[bv] = with(parents[bv], bu);
        local[bv] = best_local;
        out.forward_trace.push_back(total());
    }

    while (true) {
        double best = 0.0;
        Eigen::Index bu = -1, bv = -1;
        double best_local = 0.0;
        for (Eigen::Index u = 0; u < p; ++u) {
            for (Eigen::Index v = 0; v < p; ++v) {
                if (!edge[u][v] || required[u][v]) continue;
                const double candidate = bic.score(v, without(parents[v], u));
                const double delta = candidate - local[v];
                if (delta < best) {
                    best = delta;
                    bu = u;
                    bv = v;
                    best_local = candidate;
                }
            }
        }
        if (bu < 0) break;
        edge[bu][bv] = false;
        parents[bv] = without(parents[bv], bu);
        local[bv] = best_local;
        out.backward_trace.push_back(total());
    }

    out.dag = MixedGraph(f.names());
    for (Eigen::Index u = 0; u < p; ++u)
        for (Eigen::Index v = 0; v < p; ++v)
            if (edge[u][v]) out.dag.add_directed(names[static_cast<std::size_t>(u)], names[static_cast<std::size_t>(v)]);
    out.bic = total();
    out.cpdag = apply_knowledge(dag_to_cpdag(out.dag), k);
    return out;
}

MixedGraph ges_discover(const MetricFrame& f, const DomainKnowledge& k, const GesConfig& cfg) {
    return ges_search(f, k, cfg).cpdag;
}

double total_bic(const MetricFrame& f, const MixedGraph& dag) {
    double sum = 0.0;
    for (NodeId v = 0; v < dag.size(); ++v) {
        std::vector<std::string> ps;
        for (NodeId p : dag.parents(v)) ps.push_back(dag.name(p));
        sum += local_bic(f, dag.name(v), ps);
    }
    return sum;
}

}  // namespace rcaforge
