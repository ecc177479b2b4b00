#pragma once

#include "rcaforge/frame.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace rcaforge {

struct CiTestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t conditioning_size = 0;
};

/// Inclusive row range of a detected anomaly.
struct AnomalySpan {
    Eigen::Index start_index = 0;
    Eigen::Index end_index = 0;
    double peak_score = 0.0;

    friend bool operator==(const AnomalySpan&, const AnomalySpan&) = default;
};

/// Pearson correlation of two equally sized vectors; 0 when either is constant.
template <typename A, typename B>
double pearson(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
    const auto ca = (a.array() - a.mean()).matrix();
    const auto cb = (b.array() - b.mean()).matrix();
    const double denom = std::sqrt(ca.squaredNorm() * cb.squaredNorm());
    if (denom <= 0.0) return 0.0;
    return std::clamp(ca.dot(cb) / denom, -1.0, 1.0);
}

/// Biased (1/n) covariance of the columns of `data`.
Eigen::MatrixXd covariance_matrix(const Eigen::MatrixXd& data);
Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& data);

/// Partial correlation of x and y given z via the inverse of the covariance
/// submatrix. Near-singular submatrices are ridge damped (1e-8 on the
/// diagonal) before SingularData is raised.
double partial_correlation(const MetricFrame& f, const std::string& x, const std::string& y,
                           const std::vector<std::string>& z);

/// Same computation on a precomputed covariance or correlation matrix.
double partial_correlation(const Eigen::MatrixXd& cov, Eigen::Index x, Eigen::Index y,
                           std::span<const Eigen::Index> z);

/// Gaussian conditional independence test on a (partial) correlation.
/// |r| >= 1 yields p = 0.
CiTestResult fisher_z_test(double r, std::size_t n, std::size_t cond_size);

/// n ln(RSS/n) + (k+1) ln n for OLS of `node` on `parents` with intercept. Lower is better.
double local_bic(const MetricFrame& f, const std::string& node, const std::vector<std::string>& parents);

/// Local BIC evaluated from the sample covariance with memoisation. Agrees with
/// `local_bic` up to rounding; used by score-based search.
class LocalBicCache {
public:
    explicit LocalBicCache(const MetricFrame& f);

    double score(Eigen::Index node, std::vector<Eigen::Index> parents);
    Eigen::Index num_nodes() const noexcept { return cov_.cols(); }
    Eigen::Index samples() const noexcept { return n_; }

private:
    Eigen::MatrixXd cov_;
    Eigen::Index n_;
    std::vector<std::map<std::vector<Eigen::Index>, double>> memo_;
};

/// Integer-coded data for discrete tests; every column has the same length.
struct CategoricalFrame {
    std::vector<std::string> names;
    std::vector<std::vector<int>> columns;

    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
    std::size_t index(const std::string& name) const;
};

/// Interior bin edges of `bins` equal-frequency bins over `reference`.
std::vector<double> equal_frequency_edges(std::span<const double> reference, int bins);
/// Bin code (0-based) of every value given interior edges.
std::vector<int> apply_bins(std::span<const double> values, const std::vector<double>& edges);

/// Pearson chi-square test of x _||_ y | z summed over strata of z. Strata with
/// fewer than 5 rows are skipped; degrees of freedom count only the levels
/// present inside each stratum. Throws InsufficientData if every stratum is skipped.
CiTestResult chi_square_ci(const CategoricalFrame& f, std::size_t x, std::size_t y, std::span<const std::size_t> z);
CiTestResult chi_square_ci(const CategoricalFrame& f, const std::string& x, const std::string& y,
                           const std::vector<std::string>& z);

/// One-dimensional energy distance (V-statistic form):
/// 2 E|a-b| - E|a-a'| - E|b-b'|.
double energy_distance(std::span<const double> a, std::span<const double> b);

using TwoSampleStatistic = std::function<double(std::span<const double>, std::span<const double>)>;

/// Add-one permutation p-value: (1 + #{permuted >= observed}) / (permutations + 1).
/// Draws act on the value-sorted pool, so swapping `a` and `b` leaves the
/// p-value unchanged for a symmetric statistic.
double permutation_pvalue(std::span<const double> a, std::span<const double> b, const TwoSampleStatistic& stat,
                          int permutations, std::uint64_t seed);

/// Energy-distance permutation test on the pooled sorted sample; draws the same
/// permutations as `permutation_pvalue` for a given seed, in O(N) per draw.
struct EnergyTest {
    double statistic = 0.0;
    double p_value = 1.0;
};
EnergyTest energy_permutation_test(std::span<const double> a, std::span<const double> b, int permutations,
                                   std::uint64_t seed);

/// Median and MAD * 1.4826 of a sample.
struct RobustScale {
    double location = 0.0;
    double scale = 0.0;
};
RobustScale robust_scale(std::span<const double> values);

/// Stats-threshold detector. Location/scale come from the leading
/// `train_fraction` rows (median, MAD * 1.4826; the full-column standard
/// deviation when the MAD is zero). Rows after the training prefix whose
/// deviation exceeds k_sigma * scale are merged into spans.
std::map<std::string, std::vector<AnomalySpan>> detect_anomalies(const MetricFrame& f, double train_fraction,
                                                                 double k_sigma);

}  // namespace rcaforge
