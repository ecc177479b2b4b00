#include "rcaforge/simulate.hpp"

#include "rcaforge/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace rcaforge {

namespace {

enum Stream : std::uint64_t { kDag = 1, kScm = 2, kNormal = 3, kTargets = 4, kAbnormal = 5 };

double draw_noise(const NoiseSpec& spec, std::mt19937_64& rng) {
    double e = 0.0;
    switch (spec.form) {
        case NoiseForm::gaussian: e = std::normal_distribution<double>(0.0, 1.0)(rng); break;
        case NoiseForm::uniform: e = std::uniform_real_distribution<double>(-std::sqrt(3.0), std::sqrt(3.0))(rng); break;
        case NoiseForm::exponential: e = std::exponential_distribution<double>(1.0)(rng) - 1.0; break;
    }
    return spec.shift + spec.scale * e;
}

}  // namespace

std::string to_string(NoiseForm form) {
    switch (form) {
        case NoiseForm::gaussian: return "gaussian";
        case NoiseForm::uniform: return "uniform";
        case NoiseForm::exponential: return "exponential";
    }
    return "gaussian";
}

std::string to_string(Mechanism mechanism) {
    switch (mechanism) {
        case Mechanism::mean_shift: return "mean_shift";
        case Mechanism::variance_scale: return "variance_scale";
        case Mechanism::weight_rescale: return "weight_rescale";
    }
    return "mean_shift";
}

NoiseForm parse_noise_form(const std::string& text) {
    if (text == "gaussian") return NoiseForm::gaussian;
    if (text == "uniform") return NoiseForm::uniform;
    if (text == "exponential") return NoiseForm::exponential;
    throw InvalidArgument("unknown noise form '" + text + "'");
}

Mechanism parse_mechanism(const std::string& text) {
    if (text == "mean_shift") return Mechanism::mean_shift;
    if (text == "variance_scale") return Mechanism::variance_scale;
    if (text == "weight_rescale") return Mechanism::weight_rescale;
    throw InvalidArgument("unknown intervention mechanism '" + text + "'");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<std::string> default_node_names(int count) {
    const int width = std::max<int>(2, static_cast<int>(std::to_string(std::max(count - 1, 0)).size()));
    std::vector<std::string> out;
    for (int i = 0; i < count; ++i) {
        std::string digits = std::to_string(i);
        out.push_back("X" + std::string(static_cast<std::size_t>(width) - digits.size(), '0') + digits);
    }
    return out;
}

MixedGraph gen_dag(int num_nodes, int num_edges, std::uint64_t seed) {
    if (num_nodes < 1) throw InvalidArgument("a DAG needs at least one node");
    const long max_edges = static_cast<long>(num_nodes) * (num_nodes - 1) / 2;
    if (num_edges < 0 || num_edges > max_edges)
        throw TooManyEdges(std::to_string(num_edges) + " edges requested but at most " + std::to_string(max_edges) +
                           " fit on " + std::to_string(num_nodes) + " nodes");
    std::mt19937_64 rng(seed);
    std::vector<NodeId> order(static_cast<std::size_t>(num_nodes));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<std::pair<NodeId, NodeId>> pairs;
    for (std::size_t i = 0; i < order.size(); ++i)
        for (std::size_t j = i + 1; j < order.size(); ++j) pairs.emplace_back(order[i], order[j]);
    std::shuffle(pairs.begin(), pairs.end(), rng);

    MixedGraph g(default_node_names(num_nodes));
    for (int e = 0; e < num_edges; ++e) g.add_directed(pairs[static_cast<std::size_t>(e)].first,
                                                       pairs[static_cast<std::size_t>(e)].second);
    return g;
}

Scm gen_scm(const MixedGraph& dag, double weight_low, double weight_high, NoiseForm noise, std::uint64_t seed) {
    if (!(weight_low > 0.0 && weight_low <= weight_high))
        throw InvalidArgument("weight range must satisfy 0 < low <= high");
    if (!dag.is_dag()) throw InvalidArgument("structural model requires a DAG");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> magnitude(weight_low, weight_high);
    std::bernoulli_distribution negative(0.5);

    Scm scm;
    scm.graph = dag;
    for (const auto& [from, to] : dag.directed_edges()) {
        const double w = magnitude(rng);
        scm.weights[{dag.name(from), dag.name(to)}] = negative(rng) ? -w : w;
    }
    for (const auto& name : dag.nodes()) {
        scm.noise[name] = NoiseSpec{noise, 1.0, 0.0};
        scm.intercepts[name] = 0.0;
    }
    return scm;
}

MetricFrame gen_normal(const Scm& scm, int n, std::uint64_t seed) {
    if (n < 1) throw InvalidArgument("sample count must be at least 1");
    const auto& g = scm.graph;
    std::mt19937_64 rng(seed);
    Eigen::MatrixXd data(n, static_cast<Eigen::Index>(g.size()));
    for (NodeId v : topological_order(g)) {
        const auto& name = g.name(v);
        const NoiseSpec& noise = scm.noise.at(name);
        auto col = data.col(static_cast<Eigen::Index>(v));
        for (Eigen::Index i = 0; i < n; ++i) col(i) = draw_noise(noise, rng);
        col.array() += scm.intercepts.at(name);
        for (NodeId p : g.parents(v))
            col += scm.weights.at({g.name(p), name}) * data.col(static_cast<Eigen::Index>(p));
    }
    return MetricFrame::with_default_index(g.nodes(), std::move(data));
}

Scm inject_anomaly(const Scm& scm, const InterventionSpec& spec) {
    if (spec.targets.empty()) throw InvalidArgument("intervention needs at least one target");
    if (!(spec.magnitude > 0.0)) throw InvalidArgument("intervention magnitude must be positive");
    for (const auto& t : spec.targets) scm.graph.index(t);

    Scm out = scm;
    for (const auto& t : spec.targets) {
        NoiseSpec& noise = out.noise.at(t);
        switch (spec.mechanism) {
            case Mechanism::mean_shift: noise.shift += spec.magnitude * noise.scale; break;
            case Mechanism::variance_scale: noise.scale *= spec.magnitude; break;
            case Mechanism::weight_rescale: {
                const NodeId v = out.graph.index(t);
                const auto parents = out.graph.parents(v);
                if (parents.empty()) out.notes.push_back("weight_rescale on '" + t + "' has no incoming edges");
                for (NodeId p : parents) out.weights.at({out.graph.name(p), t}) *= spec.magnitude;
                break;
            }
        }
    }
    return out;
}

SimulatedCase gen_case(const CaseOptions& options, std::uint64_t seed) {
    if (options.n_root_causes < 1 || options.n_root_causes > options.num_nodes)
        throw InvalidArgument("root cause count must be between 1 and the node count");
    SimulatedCase out{
        .scm = {},
        .abnormal_scm = {},
        .intervention = {},
        .truth = {},
        .normal = {},
        .abnormal = {},
        .seed = seed,
    };
    const MixedGraph dag = gen_dag(options.num_nodes, options.num_edges, derive_seed(seed, kDag));
    out.scm = gen_scm(dag, options.weight_low, options.weight_high, options.noise, derive_seed(seed, kScm));
    out.normal = gen_normal(out.scm, options.n_normal, derive_seed(seed, kNormal));

    std::vector<std::string> names = dag.nodes();
    std::mt19937_64 rng(derive_seed(seed, kTargets));
    std::shuffle(names.begin(), names.end(), rng);
    out.truth.insert(names.begin(), names.begin() + options.n_root_causes);
    out.intervention = InterventionSpec{out.truth, options.mechanism, options.magnitude};
    out.abnormal_scm = inject_anomaly(out.scm, out.intervention);

    const MetricFrame abnormal = gen_normal(out.abnormal_scm, options.n_abnormal, derive_seed(seed, kAbnormal));
    std::vector<std::int64_t> ts(static_cast<std::size_t>(options.n_abnormal));
    std::iota(ts.begin(), ts.end(), static_cast<std::int64_t>(options.n_normal));
    out.abnormal = MetricFrame(std::move(ts), abnormal.names(), abnormal.values());
    return out;
}

}  // namespace rcaforge
