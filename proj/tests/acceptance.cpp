// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include "rcaforge/bench.hpp"
#include "rcaforge/discovery.hpp"
#include "rcaforge/errors.hpp"
#include "rcaforge/eval.hpp"
#include "rcaforge/graph.hpp"
#include "rcaforge/io.hpp"
#include "rcaforge/pipeline.hpp"
#include "rcaforge/scoring.hpp"
#include "rcaforge/simulate.hpp"
#include "rcaforge/stats.hpp"
#include "support.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace rcaforge;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
    std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* format, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, format, a, b, c, d);
    return buf;
}

double r1(const BenchReport& rep, const std::string& label) {
    const RcaRow* row = rep.row(label);
    return row ? row->recall1.mean : std::numeric_limits<double>::quiet_NaN();
}

// --- 1-6: the 50-case desk corpus -------------------------------------------

void corpus_criteria(const BenchReport& rep) {
    const RcaRow* ht = rep.row("HT");
    const double ht1 = ht ? ht->recall1.mean : NAN, ht3 = ht ? ht->recall3.mean : NAN;
    report(1, ht1 >= 0.90 && ht3 >= 0.95, fmt("HT truth graph: Recall@1 %.3f (>= 0.90), Recall@3 %.3f (>= 0.95)", ht1, ht3));

    const double htpc = r1(rep, "HT-pc");
    report(2, htpc >= 0.75, fmt("HT-pc Recall@1 %.3f (>= 0.75)", htpc));

    const double bi = r1(rep, "BI"), rw = r1(rep, "RW");
    report(3, ht1 - bi >= 0.05 && bi - rw >= 0.05,
           fmt("Recall@1 HT %.3f > BI %.3f > RW %.3f, each gap >= 0.05", ht1, bi, rw));

    const double eps = r1(rep, "epsilon-Diagnosis");
    report(4, eps <= 0.35 && ht1 - eps >= 0.5, fmt("epsilon-Diagnosis Recall@1 %.3f (<= 0.35), HT minus it %.3f (>= 0.5)",
                                                   eps, ht1 - eps));

    const double rcd = r1(rep, "RCD"), local = r1(rep, "Local-RCD");
    report(5, local >= rcd, fmt("Local-RCD Recall@1 %.3f >= RCD %.3f", local, rcd));

    const GraphRow* pc = rep.graph("pc");
    const GraphRow* ges = rep.graph("ges");
    const double pf = pc ? pc->f1.mean : NAN, gf = ges ? ges->f1.mean : NAN;
    const double ps = pc ? pc->shd.mean : NAN, gs = ges ? ges->shd.mean : NAN;
    report(6, pf >= gf + 0.10 && ps <= gs && pf >= 0.60,
           fmt("PC F1 %.3f vs GES F1 %.3f (gap >= 0.10, PC >= 0.60); SHD PC %.2f <= GES %.2f", pf, gf, ps, gs));
}

// --- 7: Fisher-z calibration ------------------------------------------------

void calibration() {
    int rejected = 0;
    const int trials = 500, n = 200;
    for (int t = 0; t < trials; ++t) {
        // Independent pair, plus an independent third column to condition on for half the trials.
        const auto f = testing::linear_gaussian({"X", "Y", "Z"}, Eigen::MatrixXd::Zero(3, 3), n,
                                                derive_seed(7, static_cast<std::uint64_t>(t)));
        const bool cond = t % 2 == 1;
        const double r = cond ? partial_correlation(f, "X", "Y", {"Z"}) : partial_correlation(f, "X", "Y", {});
        if (fisher_z_test(r, n, cond ? 1 : 0).p_value <= 0.05) ++rejected;
    }
    const double rate = static_cast<double>(rejected) / trials;
    report(7, rate >= 0.02 && rate <= 0.08, fmt("Fisher-z type-I rate %.3f at alpha 0.05 over 500 trials (in [0.02, 0.08])", rate));
}

// --- 8: exhaustive oracles ----------------------------------------------------

struct Marked {
    std::vector<int> marks;  // per pair: 0 none, 1 a->b, 2 b->a, 3 a-b
    MixedGraph graph;
};

std::vector<Marked> every_mixed_graph(int n) {
    std::vector<std::pair<NodeId, NodeId>> pairs;
    for (NodeId a = 0; a < static_cast<NodeId>(n); ++a)
        for (NodeId b = a + 1; b < static_cast<NodeId>(n); ++b) pairs.emplace_back(a, b);
    std::size_t total = 1;
    for (std::size_t i = 0; i < pairs.size(); ++i) total *= 4;
    std::vector<Marked> out;
    for (std::size_t code = 0; code < total; ++code) {
        Marked m{std::vector<int>(pairs.size()), MixedGraph(testing::names(n))};
        std::size_t c = code;
        for (std::size_t i = 0; i < pairs.size(); ++i, c /= 4) {
            m.marks[i] = static_cast<int>(c % 4);
            const auto [a, b] = pairs[i];
            if (m.marks[i] == 1) m.graph.add_directed(a, b);
            if (m.marks[i] == 2) m.graph.add_directed(b, a);
            if (m.marks[i] == 3) m.graph.add_undirected(a, b);
        }
        out.push_back(std::move(m));
    }
    return out;
}

bool matches_oracle(const Marked& est, const Marked& truth) {
    int both = 0, e = 0, t = 0, diff = 0;
    for (std::size_t i = 0; i < est.marks.size(); ++i) {
        e += est.marks[i] != 0;
        t += truth.marks[i] != 0;
        both += est.marks[i] != 0 && truth.marks[i] != 0;
        diff += est.marks[i] != truth.marks[i];
    }
    const double p = e == 0 ? 1.0 : static_cast<double>(both) / e;
    const double r = t == 0 ? 1.0 : static_cast<double>(both) / t;
    const double f = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    const AdjacencyScore s = adjacency_prf(est.graph, truth.graph);
    return shd(est.graph, truth.graph) == diff && std::abs(s.precision - p) < 1e-12 &&
           std::abs(s.recall - r) < 1e-12 && std::abs(s.f1 - f) < 1e-12;
}

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

void exhaustive() {
    long pairs = 0, mismatches = 0;
    for (int n = 1; n <= 4; ++n) {
        const auto all = every_mixed_graph(n);
        for (const auto& est : all)
            for (const auto& truth : all) {
                ++pairs;
                if (!matches_oracle(est, truth)) ++mismatches;
            }
    }

    const auto dags = testing::all_dags({"A", "B", "C"});
    int optimal = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const SimulatedCase c = gen_case(
            CaseOptions{.num_nodes = 3, .num_edges = static_cast<int>(seed % 4), .n_normal = 500, .n_abnormal = 2}, seed);
        const MetricFrame f = MetricFrame::with_default_index({"A", "B", "C"}, c.normal.values());
        double best = std::numeric_limits<double>::infinity();
        for (const auto& d : dags) best = std::min(best, bic_oracle(f, d));
        if (bic_oracle(f, ges_search(f, {}, GesConfig{}).dag) <= best + 1e-6) ++optimal;
    }
    std::ostringstream detail;
    detail << "SHD/adjacency vs brute force: " << mismatches << " mismatches in " << pairs
           << " graph pairs (<= 4 nodes); GES optimal BIC on " << optimal << "/50 three-node cases (>= 45)";
    report(8, mismatches == 0 && optimal >= 45, detail.str());
}

// --- 9: determinism -----------------------------------------------------------

void determinism(const BenchReport& first, const BenchConfig& cfg) {
    const std::string a = dump_json(report_to_json(first));
    const std::string b = dump_json(report_to_json(run_benchmark(cfg)));

    CaseOptions o = cfg.case_options;
    const SimulatedCase c = gen_case(o, 1);
    const MixedGraph base = pc_discover(c.normal, {}, PcConfig{});
    std::vector<std::string> names = c.normal.names();
    std::mt19937_64 rng(2024);
    int same = 0;
    for (int p = 0; p < 5; ++p) {
        std::shuffle(names.begin(), names.end(), rng);
        if (pc_discover(c.normal.select(names), {}, PcConfig{}) == base) ++same;
    }
    std::ostringstream detail;
    detail << "bench report " << (a == b ? "byte-identical" : "DIFFERS") << " across two runs (" << a.size()
           << " bytes); PC-stable unchanged on " << same << "/5 column permutations";
    report(9, a == b && same == 5, detail.str());
}

// --- 10: metric properties ------------------------------------------------------

void metric_properties(const BenchConfig& cfg) {
    long rankings = 0, invalid = 0, lowered = 0, monotone_checks = 0, monotone_breaks = 0;
    std::string example;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        CaseOptions o = cfg.case_options;
        o.n_root_causes = 1 + static_cast<int>(seed % 3);
        const SimulatedCase c = gen_case(o, seed);
        const ScoringContext ctx{c.scm.graph, c.normal, c.abnormal, anomalous_metrics(c.normal, c.abnormal)};
        ScorerOptions so;
        so.seed = seed;
        for (const auto& method : kScorerMethods) {
            const RcaResult r = run_scorer(method, ctx, so);
            ++rankings;
            std::set<std::string> seen;
            for (std::size_t i = 0; i < r.ranked.size(); ++i) {
                const bool ok = c.normal.find(r.ranked[i].metric).has_value() && seen.insert(r.ranked[i].metric).second &&
                                (i == 0 || r.ranked[i].score <= r.ranked[i - 1].score);
                if (!ok) {
                    ++invalid;
                    break;
                }
            }
            double last = 0.0;
            for (std::size_t k = 1; k <= 20; ++k) {
                const double v = recall_at_k(r, c.truth, k);
                ++monotone_checks;
                if (v < last) {
                    ++monotone_breaks;
                    if (example.empty())
                        example = " (first: seed " + std::to_string(seed) + ", " + r.method + ", k=" + std::to_string(k) +
                                  ", |truth|=" + std::to_string(c.truth.size()) + ")";
                }
                last = v;
            }
        }
        const RcaResult base = ht_scores(ctx, HtParams{});
        for (double lambda : {0.0, 0.5, 2.0}) {
            const RcaResult adj = ht_scores(ctx, HtParams{.adjust = true, .lambda = lambda});
            for (const auto& m : base.ranked)
                for (const auto& a : adj.ranked)
                    if (a.metric == m.metric && a.score < m.score) ++lowered;
        }
    }
    std::ostringstream detail;
    detail << rankings << " rankings: " << invalid << " invalid; adjustment lowered " << lowered
           << " scores; recall@k decreased in " << monotone_breaks << " of " << monotone_checks << " k-steps" << example;
    report(10, invalid == 0 && lowered == 0 && monotone_breaks == 0, detail.str());
}

// --- 11: round-trips ----------------------------------------------------------------

void round_trips() {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> z(0.0, 1.0);
    int frames = 0, frame_ok = 0;
    for (int t = 0; t < 100; ++t) {
        const int rows = 1 + static_cast<int>(rng() % 40), cols = 1 + static_cast<int>(rng() % 8);
        std::vector<std::string> names;
        for (int c = 0; c < cols; ++c) names.push_back(c % 3 == 2 ? "svc,\"" + std::to_string(c) + "\"" : "m" + std::to_string(c));
        Eigen::MatrixXd v(rows, cols);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) v(r, c) = z(rng) * std::pow(10.0, static_cast<double>(rng() % 60) - 30.0);
        std::vector<std::int64_t> ts;
        std::int64_t s = 1700000000;
        for (int r = 0; r < rows; ++r) ts.push_back(s += 1 + static_cast<std::int64_t>(rng() % 60));
        const MetricFrame f(ts, names, v);
        ++frames;
        if (parse_metrics(format_metrics(f)) == f) ++frame_ok;
    }

    const std::vector<std::string> pool{"cpu", "mem", "disk io", "svc:a", "true", "-x", "42", "'q'"};
    int docs = 0, doc_ok = 0;
    for (int t = 0; t < 300; ++t) {
        DomainKnowledge k;
        for (int i = 0; i < 5; ++i) {
            const auto& a = pool[rng() % pool.size()];
            const auto& b = pool[rng() % pool.size()];
            if (a != b) (rng() % 2 ? k.forbidden : k.required).insert({a, b});
        }
        if (rng() % 2) k.root_nodes.insert(pool[rng() % pool.size()]);
        if (rng() % 2) k.leaf_nodes.insert(pool[rng() % pool.size()]);
        try {
            k.validate();
        } catch (const KnowledgeConflict&) {
            continue;
        }
        ++docs;
        if (parse_knowledge(format_knowledge(k)) == k) ++doc_ok;
    }
    std::ostringstream detail;
    detail << "metric CSV " << frame_ok << "/" << frames << ", knowledge documents " << doc_ok << "/" << docs;
    report(11, frame_ok == frames && doc_ok == docs && docs > 0, detail.str());
}

}  // namespace

int main() {
    BenchConfig cfg;  // 50 cases, 20 nodes, 30 edges, 2000 normal and 200 abnormal rows, seeds 1-50
    const BenchReport rep = run_benchmark(cfg);
    std::printf("corpus: %d/%d cases completed\n", rep.completed, rep.requested);
    corpus_criteria(rep);
    calibration();
    exhaustive();
    determinism(rep, cfg);
    metric_properties(cfg);
    round_trips();
    std::printf("%d of 11 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
