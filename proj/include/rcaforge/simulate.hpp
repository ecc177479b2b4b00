#pragma once

#include "rcaforge/frame.hpp"
#include "rcaforge/graph.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace rcaforge {

enum class NoiseForm { gaussian, uniform, exponential };
enum class Mechanism { mean_shift, variance_scale, weight_rescale };

std::string to_string(NoiseForm form);
std::string to_string(Mechanism mechanism);
NoiseForm parse_noise_form(const std::string& text);
Mechanism parse_mechanism(const std::string& text);

/// Noise term shift + scale * e where e is zero-mean with unit variance
/// (uniform on [-sqrt 3, sqrt 3], Exp(1) - 1 for the exponential form).
struct NoiseSpec {
    NoiseForm form = NoiseForm::gaussian;
    double scale = 1.0;
    double shift = 0.0;

    friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

/// Linear structural causal model over a DAG.
struct Scm {
    MixedGraph graph;
    std::map<NamePair, double> weights;
    std::map<std::string, NoiseSpec> noise;
    std::map<std::string, double> intercepts;
    /// Notes left by interventions, e.g. a no-op weight rescale.
    std::vector<std::string> notes;

    friend bool operator==(const Scm&, const Scm&) = default;
};

struct InterventionSpec {
    std::set<std::string> targets;
    Mechanism mechanism = Mechanism::mean_shift;
    double magnitude = 10.0;
};

struct SimulatedCase {
    Scm scm;
    Scm abnormal_scm;
    InterventionSpec intervention;
    std::set<std::string> truth;
    MetricFrame normal;
    MetricFrame abnormal;
    std::uint64_t seed = 0;
};

struct CaseOptions {
    int num_nodes = 20;
    int num_edges = 30;
    int n_normal = 5000;
    int n_abnormal = 500;
    int n_root_causes = 1;
    Mechanism mechanism = Mechanism::mean_shift;
    double magnitude = 10.0;
    NoiseForm noise = NoiseForm::gaussian;
    double weight_low = 0.5;
    double weight_high = 2.0;
};

/// Independent stream seed derived from a base seed (splitmix64 finaliser).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Node names X00, X01, ... padded to a common width.
std::vector<std::string> default_node_names(int count);

/// Random DAG: uniform node permutation, then `num_edges` order-respecting pairs
/// sampled without replacement.
MixedGraph gen_dag(int num_nodes, int num_edges, std::uint64_t seed);

/// Weights uniform on +-[weight_low, weight_high]; unit noise scale, zero intercepts.
Scm gen_scm(const MixedGraph& dag, double weight_low, double weight_high, NoiseForm noise, std::uint64_t seed);

/// Ancestral sampling of `n` rows; timestamps 0..n-1.
MetricFrame gen_normal(const Scm& scm, int n, std::uint64_t seed);

Scm inject_anomaly(const Scm& scm, const InterventionSpec& spec);

/// gen_dag -> gen_scm -> gen_normal -> random targets -> inject_anomaly -> gen_normal.
/// Abnormal timestamps continue after the normal ones.
SimulatedCase gen_case(const CaseOptions& options, std::uint64_t seed);

}  // namespace rcaforge
