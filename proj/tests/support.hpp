#pragma once

// Small helpers shared by the test executables.

#include "rcaforge/frame.hpp"
#include "rcaforge/graph.hpp"

#include <Eigen/Dense>

#include <random>
#include <string>
#include <vector>

namespace testing {

/// Linear-Gaussian samples from explicit structural equations, generated
/// independently of the library's simulator. `weights(i, j)` is the weight of
/// edge j -> i; nodes must be listed in topological order (j < i).
inline rcaforge::MetricFrame linear_gaussian(const std::vector<std::string>& names, const Eigen::MatrixXd& weights,
                                             int n, std::uint64_t seed, double noise_sd = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, noise_sd);
    const auto p = static_cast<Eigen::Index>(names.size());
    Eigen::MatrixXd x(n, p);
    for (int r = 0; r < n; ++r)
        for (Eigen::Index i = 0; i < p; ++i) {
            double v = z(rng);
            for (Eigen::Index j = 0; j < i; ++j) v += weights(i, j) * x(r, j);
            x(r, i) = v;
        }
    return rcaforge::MetricFrame::with_default_index(names, x);
}

/// Every DAG over `n` labelled nodes (n <= 4), by brute force over edge subsets
/// and orientations.
inline std::vector<rcaforge::MixedGraph> all_dags(const std::vector<std::string>& names) {
    const std::size_t n = names.size();
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    std::vector<rcaforge::MixedGraph> out;
    std::size_t states = 1;
    for (std::size_t k = 0; k < pairs.size(); ++k) states *= 3;
    for (std::size_t code = 0; code < states; ++code) {
        rcaforge::MixedGraph g(names);
        std::size_t c = code;
        for (const auto& [a, b] : pairs) {
            const std::size_t s = c % 3;
            c /= 3;
            if (s == 1) g.add_directed(a, b);
            if (s == 2) g.add_directed(b, a);
        }
        // Acyclicity by repeated removal of sources.
        std::vector<int> indeg(n, 0);
        for (const auto& [u, v] : g.directed_edges()) ++indeg[v];
        std::vector<bool> gone(n, false);
        std::size_t removed = 0;
        for (bool progress = true; progress;) {
            progress = false;
            for (std::size_t v = 0; v < n; ++v)
                if (!gone[v] && indeg[v] == 0) {
                    gone[v] = true;
                    ++removed;
                    progress = true;
                    for (const auto& [a, b] : g.directed_edges())
                        if (a == v) --indeg[b];
                }
        }
        if (removed == n) out.push_back(g);
    }
    return out;
}

/// Boolean reachability by Floyd-Warshall closure.
inline std::vector<std::vector<bool>> closure(const rcaforge::MixedGraph& g) {
    const std::size_t n = g.size();
    std::vector<std::vector<bool>> r(n, std::vector<bool>(n, false));
    for (const auto& [a, b] : g.directed_edges()) r[a][b] = true;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (r[i][k] && r[k][j]) r[i][j] = true;
    return r;
}

inline std::vector<std::string> names(int n) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back(std::string(1, static_cast<char>('A' + i)));
    return out;
}

}  // namespace testing
