#include "rcaforge/graph.hpp"

#include "rcaforge/errors.hpp"

#include <algorithm>
#include <functional>
#include <queue>

namespace rcaforge {

MixedGraph::MixedGraph(std::vector<std::string> nodes) : nodes_(std::move(nodes)) {
    for (NodeId i = 0; i < nodes_.size(); ++i) {
        if (!index_.emplace(nodes_[i], i).second) {
            throw InvalidArgument("duplicate node name '" + nodes_[i] + "'");
        }
    }
}

std::optional<NodeId> MixedGraph::find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

NodeId MixedGraph::index(std::string_view name) const {
    if (auto id = find(name)) return *id;
    throw UnknownNode("unknown node '" + std::string(name) + "'");
}

void MixedGraph::check(NodeId v) const {
    if (v >= nodes_.size()) throw UnknownNode("node id " + std::to_string(v) + " out of range");
}

void MixedGraph::add_directed(NodeId from, NodeId to) {
    check(from);
    check(to);
    if (from == to) throw InvalidArgument("self-loop on '" + nodes_[from] + "'");
    remove_edge(from, to);
    directed_.insert({from, to});
}

void MixedGraph::add_undirected(NodeId a, NodeId b) {
    check(a);
    check(b);
    if (a == b) throw InvalidArgument("self-loop on '" + nodes_[a] + "'");
    remove_edge(a, b);
    undirected_.insert(ordered(a, b));
}

void MixedGraph::remove_edge(NodeId a, NodeId b) {
    directed_.erase({a, b});
    directed_.erase({b, a});
    undirected_.erase(ordered(a, b));
}

std::vector<NodeId> MixedGraph::parents(NodeId v) const {
    std::vector<NodeId> out;
    for (const auto& [from, to] : directed_)
        if (to == v) out.push_back(from);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<NodeId> MixedGraph::children(NodeId v) const {
    std::vector<NodeId> out;
    for (auto it = directed_.lower_bound({v, 0}); it != directed_.end() && it->first == v; ++it)
        out.push_back(it->second);
    return out;
}

std::vector<NodeId> MixedGraph::neighbors(NodeId v) const {
    std::vector<NodeId> out;
    for (const auto& [a, b] : undirected_) {
        if (a == v) out.push_back(b);
        if (b == v) out.push_back(a);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<NodeId> MixedGraph::adjacents(NodeId v) const {
    std::vector<NodeId> out = parents(v);
    auto ch = children(v);
    auto nb = neighbors(v);
    out.insert(out.end(), ch.begin(), ch.end());
    out.insert(out.end(), nb.begin(), nb.end());
    std::sort(out.begin(), out.end());
    return out;
}

std::set<NamePair> MixedGraph::directed_names() const {
    std::set<NamePair> out;
    for (const auto& [a, b] : directed_) out.insert({nodes_[a], nodes_[b]});
    return out;
}

std::set<NamePair> MixedGraph::undirected_names() const {
    std::set<NamePair> out;
    for (const auto& [a, b] : undirected_) {
        const auto& x = nodes_[a];
        const auto& y = nodes_[b];
        out.insert(x < y ? NamePair{x, y} : NamePair{y, x});
    }
    return out;
}

bool MixedGraph::has_directed_cycle() const {
    std::vector<std::size_t> indegree(size(), 0);
    for (const auto& e : directed_) ++indegree[e.second];
    std::vector<NodeId> stack;
    for (NodeId v = 0; v < size(); ++v)
        if (indegree[v] == 0) stack.push_back(v);
    std::size_t seen = 0;
    while (!stack.empty()) {
        NodeId v = stack.back();
        stack.pop_back();
        ++seen;
        for (NodeId c : children(v))
            if (--indegree[c] == 0) stack.push_back(c);
    }
    return seen != size();
}

bool operator==(const MixedGraph& lhs, const MixedGraph& rhs) {
    std::set<std::string> a(lhs.nodes_.begin(), lhs.nodes_.end());
    std::set<std::string> b(rhs.nodes_.begin(), rhs.nodes_.end());
    return a == b && lhs.directed_names() == rhs.directed_names() &&
           lhs.undirected_names() == rhs.undirected_names();
}

void DomainKnowledge::validate() const {
    for (const auto& e : required) {
        if (e.first == e.second) throw KnowledgeConflict("required self-loop on '" + e.first + "'");
        if (forbidden.count(e))
            throw KnowledgeConflict("edge " + e.first + " -> " + e.second + " is both required and forbidden");
        if (root_nodes.count(e.second))
            throw KnowledgeConflict("required edge " + e.first + " -> " + e.second + " targets root node");
        if (leaf_nodes.count(e.first))
            throw KnowledgeConflict("required edge " + e.first + " -> " + e.second + " leaves leaf node");
    }
}

std::vector<NodeId> topological_order(const MixedGraph& g) {
    if (!g.undirected_edges().empty())
        throw MixedEdgeError("topological sort requires a fully directed graph");
    std::vector<std::size_t> indegree(g.size(), 0);
    for (const auto& e : g.directed_edges()) ++indegree[e.second];
    std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
    for (NodeId v = 0; v < g.size(); ++v)
        if (indegree[v] == 0) ready.push(v);
    std::vector<NodeId> order;
    order.reserve(g.size());
    while (!ready.empty()) {
        NodeId v = ready.top();
        ready.pop();
        order.push_back(v);
        for (NodeId c : g.children(v))
            if (--indegree[c] == 0) ready.push(c);
    }
    if (order.size() != g.size()) throw CycleError("graph contains a directed cycle");
    return order;
}

std::vector<std::string> topological_sort(const MixedGraph& g) {
    std::vector<std::string> out;
    for (NodeId v : topological_order(g)) out.push_back(g.name(v));
    return out;
}

std::vector<NodeId> descendant_ids(const MixedGraph& g, NodeId v) {
    std::vector<bool> seen(g.size(), false);
    std::vector<NodeId> stack = g.children(v);
    while (!stack.empty()) {
        NodeId u = stack.back();
        stack.pop_back();
        if (seen[u]) continue;
        seen[u] = true;
        for (NodeId c : g.children(u))
            if (!seen[c]) stack.push_back(c);
    }
    seen[v] = false;
    std::vector<NodeId> out;
    for (NodeId u = 0; u < g.size(); ++u)
        if (seen[u]) out.push_back(u);
    return out;
}

std::set<std::string> descendants(const MixedGraph& g, std::string_view v) {
    std::set<std::string> out;
    for (NodeId u : descendant_ids(g, g.index(v))) out.insert(g.name(u));
    return out;
}

MixedGraph orient_v_structures(const MixedGraph& skeleton, const SepsetMap& sepsets) {
    const std::size_t n = skeleton.size();
    // wanted[a][c]: some triple asks for a -> c
    std::vector<std::vector<bool>> wanted(n, std::vector<bool>(n, false));
    for (NodeId c = 0; c < n; ++c) {
        auto nb = skeleton.neighbors(c);
        for (std::size_t i = 0; i < nb.size(); ++i) {
            for (std::size_t j = i + 1; j < nb.size(); ++j) {
                NodeId a = nb[i], b = nb[j];
                if (skeleton.adjacent(a, b)) continue;
                const auto* sep = sepsets.find(a, b);
                if (sep == nullptr) continue;
                if (std::find(sep->begin(), sep->end(), c) != sep->end()) continue;
                wanted[a][c] = true;
                wanted[b][c] = true;
            }
        }
    }
    MixedGraph out = skeleton;
    for (const auto& [a, b] : skeleton.undirected_edges()) {
        if (wanted[a][b] && !wanted[b][a]) out.add_directed(a, b);
        else if (wanted[b][a] && !wanted[a][b]) out.add_directed(b, a);
    }
    return out;
}

namespace {

bool meek_r1(const MixedGraph& g, NodeId a, NodeId b) {
    // c -> a - b, c and b nonadjacent
    for (NodeId c : g.parents(a))
        if (c != b && !g.adjacent(c, b)) return true;
    return false;
}

bool meek_r2(const MixedGraph& g, NodeId a, NodeId b) {
    // a -> c -> b
    for (NodeId c : g.children(a))
        if (g.has_directed(c, b)) return true;
    return false;
}

bool meek_r3(const MixedGraph& g, NodeId a, NodeId b) {
    // a - c -> b, a - d -> b, c and d nonadjacent
    std::vector<NodeId> cands;
    for (NodeId c : g.neighbors(a))
        if (c != b && g.has_directed(c, b)) cands.push_back(c);
    for (std::size_t i = 0; i < cands.size(); ++i)
        for (std::size_t j = i + 1; j < cands.size(); ++j)
            if (!g.adjacent(cands[i], cands[j])) return true;
    return false;
}

bool meek_r4(const MixedGraph& g, NodeId a, NodeId b) {
    // a - k -> l -> b, a adjacent l, k and b nonadjacent
    for (NodeId k : g.neighbors(a)) {
        if (k == b || g.adjacent(k, b)) continue;
        for (NodeId l : g.children(k))
            if (l != a && g.has_directed(l, b) && g.adjacent(a, l)) return true;
    }
    return false;
}

// Whether `to` reaches `from` along directed edges.
bool reaches(const MixedGraph& g, NodeId from, NodeId to) {
    std::vector<bool> seen(g.size(), false);
    std::vector<NodeId> stack{from};
    while (!stack.empty()) {
        NodeId u = stack.back();
        stack.pop_back();
        if (u == to) return true;
        if (seen[u]) continue;
        seen[u] = true;
        for (NodeId c : g.children(u))
            if (!seen[c]) stack.push_back(c);
    }
    return false;
}

}  // namespace

MixedGraph meek_propagate(const MixedGraph& g) {
    MixedGraph out = g;
    bool changed = true;
    while (changed) {
        changed = false;
        const auto undirected = out.undirected_edges();
        for (const auto& [x, y] : undirected) {
            if (!out.has_undirected(x, y)) continue;
            for (auto [a, b] : {std::pair{x, y}, std::pair{y, x}}) {
                // An orientation closing a directed cycle only arises from inconsistent colliders; skip it.
                if (reaches(out, b, a)) continue;
                if (meek_r1(out, a, b) || meek_r2(out, a, b) || meek_r3(out, a, b) || meek_r4(out, a, b)) {
                    out.add_directed(a, b);
                    changed = true;
                    break;
                }
            }
        }
    }
    return out;
}

MixedGraph apply_knowledge(const MixedGraph& g, const DomainKnowledge& k) {
    k.validate();
    auto require_node = [&](const std::string& name) { g.index(name); };
    for (const auto& [a, b] : k.forbidden) require_node(a), require_node(b);
    for (const auto& [a, b] : k.required) require_node(a), require_node(b);
    for (const auto& v : k.root_nodes) require_node(v);
    for (const auto& v : k.leaf_nodes) require_node(v);

    MixedGraph out = g;
    for (const auto& [from, to] : g.directed_edges()) {
        const auto& u = g.name(from);
        const auto& v = g.name(to);
        if (k.allows(u, v)) continue;
        if (k.allows(v, u)) out.add_directed(to, from);
        else out.remove_edge(from, to);
    }
    for (const auto& [a, b] : g.undirected_edges()) {
        const bool forward = k.allows(g.name(a), g.name(b));
        const bool backward = k.allows(g.name(b), g.name(a));
        if (forward && backward) continue;
        if (forward) out.add_directed(a, b);
        else if (backward) out.add_directed(b, a);
        else out.remove_edge(a, b);
    }
    for (const auto& [u, v] : k.required) out.add_directed(u, v);
    return out;
}

SepsetMap dag_sepsets(const MixedGraph& dag) {
    const auto order = topological_order(dag);
    std::vector<std::size_t> position(dag.size());
    for (std::size_t i = 0; i < order.size(); ++i) position[order[i]] = i;
    SepsetMap out;
    for (NodeId a = 0; a < dag.size(); ++a) {
        for (NodeId b = a + 1; b < dag.size(); ++b) {
            if (dag.adjacent(a, b)) continue;
            NodeId later = position[a] > position[b] ? a : b;
            out.set(a, b, dag.parents(later));
        }
    }
    return out;
}

MixedGraph dag_to_cpdag(const MixedGraph& dag) {
    MixedGraph skeleton(dag.nodes());
    for (const auto& [a, b] : dag.directed_edges()) skeleton.add_undirected(a, b);
    return meek_propagate(orient_v_structures(skeleton, dag_sepsets(dag)));
}

MixedGraph extend_to_dag(const MixedGraph& cpdag) {
    MixedGraph out(cpdag.nodes());
    for (const auto& [a, b] : cpdag.directed_edges()) {
        if (reaches(out, b, a)) out.add_directed(b, a);
        else out.add_directed(a, b);
    }
    for (const auto& [a, b] : cpdag.undirected_edges()) {
        if (reaches(out, b, a)) out.add_directed(b, a);
        else out.add_directed(a, b);
    }
    return out;
}

}  // namespace rcaforge
