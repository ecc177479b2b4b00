#include "rcaforge/discovery.hpp"
#include "rcaforge/errors.hpp"
#include "rcaforge/simulate.hpp"
#include "rcaforge/stats.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

using namespace rcaforge;

namespace {

Eigen::MatrixXd chain_weights() {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 3);
    w(1, 0) = 1.0;
    w(2, 1) = 1.0;
    return w;
}

std::set<std::pair<std::string, std::string>> skeleton_names(const MixedGraph& g) {
    std::set<std::pair<std::string, std::string>> out;
    for (auto [a, b] : g.directed_edges()) out.insert(std::minmax(g.name(a), g.name(b)));
    for (auto [a, b] : g.undirected_edges()) out.insert(std::minmax(g.name(a), g.name(b)));
    return out;
}

// n ln(RSS/n) + (k+1) ln n through the normal equations.
double bic_oracle(const MetricFrame& f, const MixedGraph& dag) {
    double total = 0.0;
    const double n = static_cast<double>(f.rows());
    for (NodeId v = 0; v < dag.size(); ++v) {
        const auto ps = dag.parents(v);
        Eigen::MatrixXd design(f.rows(), static_cast<Eigen::Index>(ps.size()) + 1);
        design.col(0).setOnes();
        for (std::size_t k = 0; k < ps.size(); ++k)
            design.col(static_cast<Eigen::Index>(k) + 1) = f.column(dag.name(ps[k]));
        const Eigen::VectorXd y = f.column(dag.name(v));
        const Eigen::VectorXd beta = (design.transpose() * design).ldlt().solve(design.transpose() * y);
        total += n * std::log((y - design * beta).squaredNorm() / n) + static_cast<double>(ps.size() + 1) * std::log(n);
    }
    return total;
}

}  // namespace

TEST_SUITE("discovery") {

TEST_CASE("PC on chain data recovers the skeleton") {
    const auto f = testing::linear_gaussian({"X", "Y", "Z"}, chain_weights(), 5000, 1);
    const PcSkeleton s = pc_skeleton(f, {}, PcConfig{});
    CHECK(skeleton_names(s.skeleton) == std::set<std::pair<std::string, std::string>>{{"X", "Y"}, {"Y", "Z"}});
    const auto* sep = s.sepsets.find(f.index("X"), f.index("Z"));
    REQUIRE(sep != nullptr);
    CHECK(*sep == std::vector<NodeId>{static_cast<NodeId>(f.index("Y"))});
    // CI oracle: the removed pair is independent given the separator.
    const double r = partial_correlation(f, "X", "Z", {"Y"});
    CHECK(fisher_z_test(r, 5000, 1).p_value > 0.05);
    // A chain is its own equivalence class of three DAGs: nothing oriented.
    const MixedGraph g = pc_discover(f, {}, PcConfig{});
    CHECK(g.directed_edges().empty());
}

TEST_CASE("PC orients a collider") {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 3);
    w(2, 0) = 1.0;
    w(2, 1) = 1.0;
    const auto f = testing::linear_gaussian({"X", "Y", "Z"}, w, 5000, 2);
    const MixedGraph g = pc_discover(f, {}, PcConfig{});
    CHECK(g.has_directed("X", "Z"));
    CHECK(g.has_directed("Y", "Z"));
    CHECK_FALSE(g.adjacent("X", "Y"));
}

TEST_CASE("PC honours knowledge") {
    const auto f = testing::linear_gaussian({"A", "B", "C"}, Eigen::MatrixXd::Zero(3, 3), 2000, 3);
    DomainKnowledge k;
    k.required = {{"A", "B"}};
    const MixedGraph g = pc_discover(f, k, PcConfig{});
    CHECK(g.has_directed("A", "B"));

    const auto chain = testing::linear_gaussian({"X", "Y", "Z"}, chain_weights(), 3000, 4);
    DomainKnowledge forbid;
    forbid.forbidden = {{"X", "Y"}, {"Y", "X"}};
    forbid.root_nodes = {"Z"};
    const PcSkeleton s = pc_skeleton(chain, forbid, PcConfig{});
    CHECK_FALSE(s.skeleton.adjacent("X", "Y"));
    const MixedGraph out = pc_discover(chain, forbid, PcConfig{});
    CHECK_FALSE(out.adjacent("X", "Y"));
    CHECK(out.parents(out.index("Z")).empty());
}

TEST_CASE("PC preconditions") {
    const auto f = testing::linear_gaussian({"A", "B"}, Eigen::MatrixXd::Zero(2, 2), 5, 1);
    CHECK_THROWS_AS(pc_discover(f, {}, PcConfig{}), InvalidArgument);
    const auto one = testing::linear_gaussian({"A"}, Eigen::MatrixXd::Zero(1, 1), 100, 1);
    CHECK_THROWS_AS(pc_discover(one, {}, PcConfig{}), InvalidArgument);
    CHECK_THROWS_AS(pc_discover(testing::linear_gaussian({"A", "B"}, Eigen::MatrixXd::Zero(2, 2), 100, 1), {},
                                PcConfig{.alpha = 1.5}),
                    InvalidArgument);
}

TEST_CASE("PC-stable output is invariant under column permutation") {
    CaseOptions o;
    o.n_normal = 1500;
    o.n_abnormal = 10;
    const SimulatedCase c = gen_case(o, 5);
    const MixedGraph base = pc_discover(c.normal, {}, PcConfig{});
    std::vector<std::string> names = c.normal.names();
    std::mt19937_64 rng(99);
    for (int p = 0; p < 5; ++p) {
        std::shuffle(names.begin(), names.end(), rng);
        CHECK(pc_discover(c.normal.select(names), {}, PcConfig{}) == base);
    }
}

TEST_CASE("PC skeleton stays inside the allowed pairs on simulated data") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        CaseOptions o;
        o.n_normal = 1000;
        o.n_abnormal = 10;
        const SimulatedCase c = gen_case(o, seed);
        DomainKnowledge k;
        k.forbidden = {{"X00", "X01"}, {"X01", "X00"}};
        k.required = {{"X02", "X03"}};
        const MixedGraph g = pc_discover(c.normal, k, PcConfig{});
        CHECK_FALSE(g.adjacent("X00", "X01"));
        CHECK(g.has_directed("X02", "X03"));
        const MixedGraph plain = pc_discover(c.normal, {}, PcConfig{.alpha = 0.05, .max_cond_size = 3, .stable = false});
        CHECK(plain.size() == 20);
    }
}

TEST_CASE("GES: independent columns give the empty graph") {
    const auto f = testing::linear_gaussian({"A", "B"}, Eigen::MatrixXd::Zero(2, 2), 5000, 7);
    CHECK(ges_discover(f, {}, GesConfig{}).num_edges() == 0);
}

TEST_CASE("GES: chain skeleton, BIC below the empty graph, monotone traces") {
    const auto f = testing::linear_gaussian({"X", "Y", "Z"}, chain_weights(), 5000, 8);
    const GesResult r = ges_search(f, {}, GesConfig{});
    CHECK(skeleton_names(r.cpdag) == std::set<std::pair<std::string, std::string>>{{"X", "Y"}, {"Y", "Z"}});
    CHECK(r.bic <= total_bic(f, MixedGraph(f.names())));
    CHECK(r.bic == doctest::Approx(bic_oracle(f, r.dag)).epsilon(1e-9));
    for (std::size_t i = 1; i < r.forward_trace.size(); ++i) CHECK(r.forward_trace[i] < r.forward_trace[i - 1]);
    if (!r.backward_trace.empty()) CHECK(r.backward_trace.front() < r.forward_trace.back());
    for (std::size_t i = 1; i < r.backward_trace.size(); ++i) CHECK(r.backward_trace[i] < r.backward_trace[i - 1]);
    CHECK(r.dag.is_dag());
}

TEST_CASE("GES: required edges, forbidden edges and max_parents") {
    const auto f = testing::linear_gaussian({"A", "B", "C"}, Eigen::MatrixXd::Zero(3, 3), 2000, 9);
    DomainKnowledge k;
    k.required = {{"C", "A"}};
    CHECK(ges_discover(f, k, GesConfig{}).has_directed("C", "A"));

    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(4, 4);
    w(3, 0) = 1.0;
    w(3, 1) = 1.0;
    w(3, 2) = 1.0;
    const auto fan = testing::linear_gaussian(testing::names(4), w, 3000, 10);
    const GesResult capped = ges_search(fan, {}, GesConfig{.max_parents = 1});
    for (NodeId v = 0; v < capped.dag.size(); ++v) CHECK(capped.dag.parents(v).size() <= 1);

    DomainKnowledge forbid;
    forbid.forbidden = {{"A", "D"}, {"D", "A"}};
    CHECK_FALSE(ges_discover(fan, forbid, GesConfig{}).adjacent("A", "D"));

    DomainKnowledge cyclic;
    cyclic.required = {{"A", "B"}, {"B", "C"}, {"C", "A"}};
    CHECK_THROWS_AS(ges_search(f, cyclic, GesConfig{}), KnowledgeConflict);
}

TEST_CASE("GES reaches the enumerated BIC optimum on three-node problems") {
    const auto dags = testing::all_dags({"A", "B", "C"});
    REQUIRE(dags.size() == 25);
    int optimal = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const SimulatedCase c = gen_case(
            CaseOptions{.num_nodes = 3, .num_edges = static_cast<int>(seed % 4), .n_normal = 500, .n_abnormal = 2},
            seed);
        const MetricFrame renamed = MetricFrame::with_default_index({"A", "B", "C"}, c.normal.values());
        double best = std::numeric_limits<double>::infinity();
        for (const auto& d : dags) best = std::min(best, bic_oracle(renamed, d));
        const GesResult r = ges_search(renamed, {}, GesConfig{});
        if (bic_oracle(renamed, r.dag) <= best + 1e-6) ++optimal;
    }
    MESSAGE("GES optimal on " << optimal << " of 50 cases");
    CHECK(optimal >= 45);
}

}  // TEST_SUITE
