#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace rcaforge {

using NodeId = std::size_t;
using NamePair = std::pair<std::string, std::string>;

/// Graph over named metrics holding both directed and undirected edges.
///
/// One class covers DAGs, skeletons and CPDAGs. Node identity is the exact
/// (case-sensitive) name; ids are positions in `nodes()`. A node pair carries
/// at most one edge: inserting a directed edge replaces any undirected or
/// reversed edge on the same pair.
class MixedGraph {
public:
    using Edge = std::pair<NodeId, NodeId>;

    MixedGraph() = default;
    explicit MixedGraph(std::vector<std::string> nodes);

    const std::vector<std::string>& nodes() const noexcept { return nodes_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    const std::string& name(NodeId v) const { return nodes_.at(v); }

    std::optional<NodeId> find(std::string_view name) const;
    bool contains(std::string_view name) const { return find(name).has_value(); }
    /// Throws UnknownNode.
    NodeId index(std::string_view name) const;

    void add_directed(NodeId from, NodeId to);
    void add_undirected(NodeId a, NodeId b);
    void remove_edge(NodeId a, NodeId b);
    void add_directed(std::string_view from, std::string_view to) { add_directed(index(from), index(to)); }
    void add_undirected(std::string_view a, std::string_view b) { add_undirected(index(a), index(b)); }

    bool has_directed(NodeId from, NodeId to) const { return directed_.count({from, to}) > 0; }
    bool has_undirected(NodeId a, NodeId b) const { return undirected_.count(ordered(a, b)) > 0; }
    bool adjacent(NodeId a, NodeId b) const {
        return has_directed(a, b) || has_directed(b, a) || has_undirected(a, b);
    }
    bool has_directed(std::string_view from, std::string_view to) const { return has_directed(index(from), index(to)); }
    bool has_undirected(std::string_view a, std::string_view b) const { return has_undirected(index(a), index(b)); }
    bool adjacent(std::string_view a, std::string_view b) const { return adjacent(index(a), index(b)); }

    std::vector<NodeId> parents(NodeId v) const;
    std::vector<NodeId> children(NodeId v) const;
    /// Endpoints of undirected edges at v.
    std::vector<NodeId> neighbors(NodeId v) const;
    std::vector<NodeId> adjacents(NodeId v) const;

    /// (from, to) pairs.
    const std::set<Edge>& directed_edges() const noexcept { return directed_; }
    /// (min, max) pairs.
    const std::set<Edge>& undirected_edges() const noexcept { return undirected_; }
    std::size_t num_edges() const noexcept { return directed_.size() + undirected_.size(); }

    std::set<NamePair> directed_names() const;
    /// Each pair sorted lexicographically by name.
    std::set<NamePair> undirected_names() const;

    bool has_directed_cycle() const;
    bool is_dag() const { return undirected_.empty() && !has_directed_cycle(); }

    /// Same node set (order ignored) and same named edge sets.
    friend bool operator==(const MixedGraph& lhs, const MixedGraph& rhs);

private:
    static Edge ordered(NodeId a, NodeId b) { return a < b ? Edge{a, b} : Edge{b, a}; }
    void check(NodeId v) const;

    std::vector<std::string> nodes_;
    std::unordered_map<std::string, NodeId> index_;
    std::set<Edge> directed_;
    std::set<Edge> undirected_;
};

/// Expert constraints on the causal graph.
struct DomainKnowledge {
    std::set<NamePair> forbidden;
    std::set<NamePair> required;
    std::set<std::string> root_nodes;
    std::set<std::string> leaf_nodes;

    bool empty() const {
        return forbidden.empty() && required.empty() && root_nodes.empty() && leaf_nodes.empty();
    }
    bool is_forbidden(const std::string& from, const std::string& to) const {
        return forbidden.count({from, to}) > 0;
    }
    /// Whether an edge from -> to is compatible with forbids and root/leaf declarations.
    bool allows(const std::string& from, const std::string& to) const {
        return !is_forbidden(from, to) && root_nodes.count(to) == 0 && leaf_nodes.count(from) == 0;
    }
    /// Throws KnowledgeConflict when the constraints contradict each other.
    void validate() const;

    friend bool operator==(const DomainKnowledge&, const DomainKnowledge&) = default;
};

/// Separating sets found while pruning a skeleton, keyed by unordered node pair.
class SepsetMap {
public:
    void set(NodeId a, NodeId b, std::vector<NodeId> separator) {
        map_[key(a, b)] = std::move(separator);
    }
    const std::vector<NodeId>* find(NodeId a, NodeId b) const {
        auto it = map_.find(key(a, b));
        return it == map_.end() ? nullptr : &it->second;
    }
    std::size_t size() const noexcept { return map_.size(); }

private:
    static std::pair<NodeId, NodeId> key(NodeId a, NodeId b) {
        return a < b ? std::pair{a, b} : std::pair{b, a};
    }
    std::map<std::pair<NodeId, NodeId>, std::vector<NodeId>> map_;
};

/// Kahn ordering; ties go to the earliest node in `g.nodes()`.
std::vector<std::string> topological_sort(const MixedGraph& g);
std::vector<NodeId> topological_order(const MixedGraph& g);

/// Everything reachable from v along directed edges, excluding v itself.
std::set<std::string> descendants(const MixedGraph& g, std::string_view v);
std::vector<NodeId> descendant_ids(const MixedGraph& g, NodeId v);

/// Orients unshielded colliders A->C<-B whenever C is outside sepset(A,B).
/// Pairs without a recorded separator are left alone; an edge claimed in both
/// directions by different triples stays undirected.
MixedGraph orient_v_structures(const MixedGraph& skeleton, const SepsetMap& sepsets);

/// Applies Meek rules R1-R4 until no rule fires. An orientation that would
/// close a directed cycle (possible only with inconsistent colliders) is skipped.
MixedGraph meek_propagate(const MixedGraph& g);

/// Enforces domain knowledge on an estimated graph. See DomainKnowledge::allows
/// for the admissible edge directions; contradicting directed edges are
/// reversed when the reverse is admissible and dropped otherwise.
MixedGraph apply_knowledge(const MixedGraph& g, const DomainKnowledge& k);

/// Separating sets implied by a DAG: for every non-adjacent pair, the parents
/// of whichever endpoint comes later in topological order.
SepsetMap dag_sepsets(const MixedGraph& dag);

/// Markov equivalence class of a DAG as a CPDAG.
MixedGraph dag_to_cpdag(const MixedGraph& dag);

/// Deterministic DAG extension of an estimated CPDAG. Undirected edges point
/// from the lower to the higher node id. Any edge, directed ones included,
/// that would close a directed cycle given the edges placed before it (directed
/// edges first, each group in id order) is reversed, so the result is always acyclic.
MixedGraph extend_to_dag(const MixedGraph& cpdag);

}  // namespace rcaforge
