#include "rcaforge/stats.hpp"

#include "rcaforge/errors.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_map>

namespace rcaforge {

namespace {

constexpr double kRidge = 1e-8;
constexpr double kMinRcond = 1e-12;
constexpr double kRssFloor = 1e-12;

Eigen::MatrixXd centered(const Eigen::MatrixXd& data) {
    return data.rowwise() - data.colwise().mean();
}

// Precision matrix of a small covariance block, ridge damped once if needed.
Eigen::MatrixXd stable_inverse(const Eigen::MatrixXd& block) {
    Eigen::LLT<Eigen::MatrixXd> llt(block);
    if (llt.info() == Eigen::Success && llt.rcond() > kMinRcond)
        return llt.solve(Eigen::MatrixXd::Identity(block.rows(), block.cols()));
    Eigen::MatrixXd damped = block;
    damped.diagonal().array() += kRidge;
    llt.compute(damped);
    if (llt.info() != Eigen::Success || !(llt.rcond() > 0.0))
        throw SingularData("covariance submatrix is not invertible");
    return llt.solve(Eigen::MatrixXd::Identity(block.rows(), block.cols()));
}

double median_inplace(std::vector<double>& v) {
    const std::size_t n = v.size();
    const std::size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double hi = v[mid];
    if (n % 2 == 1) return hi;
    double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

// Sum over unordered pairs of |x_i - x_j| for sorted input.
double sorted_pair_sum(std::span<const double> sorted) {
    const double n = static_cast<double>(sorted.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) sum += (2.0 * static_cast<double>(i) - n + 1.0) * sorted[i];
    return sum;
}

double energy_from_sums(double pooled, double sum_a, double sum_b, double n, double m) {
    const double cross = pooled - (sum_a + sum_b);
    const double value = 2.0 * cross / (n * m) - (2.0 * sum_a / (n * n) + 2.0 * sum_b / (m * m));
    return std::max(0.0, value);
}

bool at_least(double permuted, double observed) {
    return permuted >= observed - 1e-12 * std::max(1.0, std::abs(observed));
}

}  // namespace

Eigen::MatrixXd covariance_matrix(const Eigen::MatrixXd& data) {
    const Eigen::MatrixXd c = centered(data);
    return (c.transpose() * c) / static_cast<double>(data.rows());
}

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& data) {
    Eigen::MatrixXd cov = covariance_matrix(data);
    Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
    for (Eigen::Index i = 0; i < cov.rows(); ++i) {
        for (Eigen::Index j = 0; j < cov.cols(); ++j) {
            const double d = sd(i) * sd(j);
            cov(i, j) = d > 0.0 ? cov(i, j) / d : (i == j ? 1.0 : 0.0);
        }
    }
    return cov;
}

double partial_correlation(const Eigen::MatrixXd& cov, Eigen::Index x, Eigen::Index y,
                           std::span<const Eigen::Index> z) {
    std::vector<Eigen::Index> idx{x, y};
    idx.insert(idx.end(), z.begin(), z.end());
    const Eigen::MatrixXd block = cov(idx, idx);
    const Eigen::MatrixXd precision = stable_inverse(block);
    const double denom = std::sqrt(precision(0, 0) * precision(1, 1));
    if (!(denom > 0.0)) throw SingularData("degenerate precision matrix");
    return std::clamp(-precision(0, 1) / denom, -1.0, 1.0);
}

double partial_correlation(const MetricFrame& f, const std::string& x, const std::string& y,
                           const std::vector<std::string>& z) {
    if (x == y) throw InvalidArgument("partial correlation of a metric with itself");
    for (const auto& c : z)
        if (c == x || c == y) throw InvalidArgument("conditioning set contains '" + c + "'");
    if (f.rows() <= static_cast<Eigen::Index>(z.size()) + 3)
        throw InvalidArgument("partial correlation needs more rows than |z| + 3");
    std::vector<Eigen::Index> cols{f.index(x), f.index(y)};
    for (const auto& c : z) cols.push_back(f.index(c));
    const Eigen::MatrixXd cov = covariance_matrix(f.values()(Eigen::all, cols));
    std::vector<Eigen::Index> rest(z.size());
    std::iota(rest.begin(), rest.end(), 2);
    return partial_correlation(cov, 0, 1, rest);
}

CiTestResult fisher_z_test(double r, std::size_t n, std::size_t cond_size) {
    if (n <= cond_size + 3) throw InvalidArgument("fisher z test needs n > cond_size + 3");
    CiTestResult out;
    out.conditioning_size = cond_size;
    if (std::abs(r) >= 1.0) {
        out.statistic = std::copysign(std::numeric_limits<double>::infinity(), r);
        out.p_value = 0.0;
        return out;
    }
    out.statistic = 0.5 * std::sqrt(static_cast<double>(n - cond_size - 3)) * std::log((1.0 + r) / (1.0 - r));
    out.p_value = std::clamp(std::erfc(std::abs(out.statistic) / std::sqrt(2.0)), 0.0, 1.0);
    return out;
}

double local_bic(const MetricFrame& f, const std::string& node, const std::vector<std::string>& parents) {
    if (std::find(parents.begin(), parents.end(), node) != parents.end())
        throw InvalidArgument("node '" + node + "' cannot be its own parent");
    const Eigen::Index n = f.rows();
    const auto k = static_cast<Eigen::Index>(parents.size());
    if (n <= k + 1) throw InvalidArgument("local BIC needs more rows than |parents| + 1");

    Eigen::MatrixXd design(n, k + 1);
    design.col(0).setOnes();
    for (Eigen::Index j = 0; j < k; ++j) design.col(j + 1) = f.column(parents[static_cast<std::size_t>(j)]);
    const Eigen::VectorXd target = f.column(node);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < k + 1) throw SingularData("collinear parents for '" + node + "'");
    const Eigen::VectorXd residual = target - design * qr.solve(target);
    const double nn = static_cast<double>(n);
    const double mse = std::max(residual.squaredNorm() / nn, kRssFloor);
    return nn * std::log(mse) + static_cast<double>(k + 1) * std::log(nn);
}

LocalBicCache::LocalBicCache(const MetricFrame& f)
    : cov_(covariance_matrix(f.values())), n_(f.rows()), memo_(static_cast<std::size_t>(f.cols())) {}

double LocalBicCache::score(Eigen::Index node, std::vector<Eigen::Index> parents) {
    std::sort(parents.begin(), parents.end());
    auto& memo = memo_[static_cast<std::size_t>(node)];
    if (auto it = memo.find(parents); it != memo.end()) return it->second;

    double mse = cov_(node, node);
    if (!parents.empty()) {
        const Eigen::MatrixXd spp = cov_(parents, parents);
        const Eigen::VectorXd spv = cov_(parents, node);
        Eigen::LLT<Eigen::MatrixXd> llt(spp);
        if (llt.info() != Eigen::Success || !(llt.rcond() > kMinRcond))
            throw SingularData("collinear parent set in local BIC");
        mse -= spv.dot(llt.solve(spv));
    }
    const double nn = static_cast<double>(n_);
    const double value = nn * std::log(std::max(mse, kRssFloor)) +
                         static_cast<double>(parents.size() + 1) * std::log(nn);
    memo.emplace(std::move(parents), value);
    return value;
}

std::size_t CategoricalFrame::index(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw UnknownNode("unknown metric '" + name + "'");
    return static_cast<std::size_t>(it - names.begin());
}

std::vector<double> equal_frequency_edges(std::span<const double> reference, int bins) {
    if (bins < 1) throw InvalidArgument("bin count must be positive");
    if (reference.empty()) throw InvalidArgument("cannot bin an empty reference sample");
    std::vector<double> sorted(reference.begin(), reference.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> edges;
    const std::size_t n = sorted.size();
    for (int k = 1; k < bins; ++k) {
        const std::size_t pos = std::min(n - 1, static_cast<std::size_t>(k) * n / static_cast<std::size_t>(bins));
        edges.push_back(sorted[pos]);
    }
    return edges;
}

std::vector<int> apply_bins(std::span<const double> values, const std::vector<double>& edges) {
    std::vector<int> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        out[i] = static_cast<int>(std::upper_bound(edges.begin(), edges.end(), values[i]) - edges.begin());
    return out;
}

CiTestResult chi_square_ci(const CategoricalFrame& f, std::size_t x, std::size_t y,
                           std::span<const std::size_t> z) {
    const std::size_t n = f.rows();
    const auto& cx = f.columns.at(x);
    const auto& cy = f.columns.at(y);
    const int lx = *std::max_element(cx.begin(), cx.end()) + 1;
    const int ly = *std::max_element(cy.begin(), cy.end()) + 1;

    std::vector<std::int64_t> key(n, 0);
    for (std::size_t c : z) {
        const auto& col = f.columns.at(c);
        const std::int64_t radix = *std::max_element(col.begin(), col.end()) + 1;
        for (std::size_t i = 0; i < n; ++i) key[i] = key[i] * radix + col[i];
    }
    std::unordered_map<std::int64_t, std::size_t> stratum_of;
    std::vector<std::vector<long>> tables;
    for (std::size_t i = 0; i < n; ++i) {
        auto [it, fresh] = stratum_of.emplace(key[i], tables.size());
        if (fresh) tables.emplace_back(static_cast<std::size_t>(lx * ly), 0L);
        ++tables[it->second][static_cast<std::size_t>(cx[i] * ly + cy[i])];
    }

    double statistic = 0.0;
    long dof = 0;
    bool any = false;
    for (const auto& table : tables) {
        std::vector<double> rows(static_cast<std::size_t>(lx), 0.0), cols(static_cast<std::size_t>(ly), 0.0);
        double total = 0.0;
        for (int a = 0; a < lx; ++a)
            for (int b = 0; b < ly; ++b) {
                const double c = static_cast<double>(table[static_cast<std::size_t>(a * ly + b)]);
                rows[static_cast<std::size_t>(a)] += c;
                cols[static_cast<std::size_t>(b)] += c;
                total += c;
            }
        if (total < 5.0) continue;
        any = true;
        const long r = std::count_if(rows.begin(), rows.end(), [](double v) { return v > 0; });
        const long k = std::count_if(cols.begin(), cols.end(), [](double v) { return v > 0; });
        dof += (r - 1) * (k - 1);
        for (int a = 0; a < lx; ++a) {
            for (int b = 0; b < ly; ++b) {
                const double expected = rows[static_cast<std::size_t>(a)] * cols[static_cast<std::size_t>(b)] / total;
                if (expected <= 0.0) continue;
                const double diff = static_cast<double>(table[static_cast<std::size_t>(a * ly + b)]) - expected;
                statistic += diff * diff / expected;
            }
        }
    }
    if (!any) throw InsufficientData("every stratum has fewer than 5 samples");
    CiTestResult out;
    out.statistic = statistic;
    out.conditioning_size = z.size();
    out.p_value = dof > 0 ? boost::math::gamma_q(0.5 * static_cast<double>(dof), 0.5 * statistic) : 1.0;
    return out;
}

CiTestResult chi_square_ci(const CategoricalFrame& f, const std::string& x, const std::string& y,
                           const std::vector<std::string>& z) {
    std::vector<std::size_t> zi;
    for (const auto& c : z) zi.push_back(f.index(c));
    return chi_square_ci(f, f.index(x), f.index(y), zi);
}

double energy_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw InvalidArgument("energy distance needs at least two samples per side");
    std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end()), pooled;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    pooled.reserve(sa.size() + sb.size());
    std::merge(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(pooled));
    return energy_from_sums(sorted_pair_sum(pooled), sorted_pair_sum(sa), sorted_pair_sum(sb),
                            static_cast<double>(a.size()), static_cast<double>(b.size()));
}

namespace {

// Permutation draws operate on the pooled sample sorted by value, so the
// draws do not depend on which sample was passed first. Each draw shuffles the
// pooled positions; the first min(|a|, |b|) positions form the smaller group.
// Swapping a and b therefore yields the same partitions and, for a symmetric
// statistic, the same p-value.
std::vector<double> sorted_pool(std::span<const double> a, std::span<const double> b) {
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::sort(pooled.begin(), pooled.end());
    return pooled;
}

}  // namespace

double permutation_pvalue(std::span<const double> a, std::span<const double> b, const TwoSampleStatistic& stat,
                          int permutations, std::uint64_t seed) {
    if (permutations < 1) throw InvalidArgument("permutation count must be at least 1");
    const std::vector<double> pooled = sorted_pool(a, b);
    const double observed = stat(a, b);
    const std::size_t small = std::min(a.size(), b.size());

    std::vector<std::size_t> order(pooled.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> first(small), rest(pooled.size() - small);
    std::mt19937_64 rng(seed);
    int exceed = 0;
    for (int p = 0; p < permutations; ++p) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t i = 0; i < first.size(); ++i) first[i] = pooled[order[i]];
        for (std::size_t i = 0; i < rest.size(); ++i) rest[i] = pooled[order[small + i]];
        const double permuted = a.size() <= b.size() ? stat(first, rest) : stat(rest, first);
        if (at_least(permuted, observed)) ++exceed;
    }
    return (1.0 + exceed) / (permutations + 1.0);
}

EnergyTest energy_permutation_test(std::span<const double> a, std::span<const double> b, int permutations,
                                   std::uint64_t seed) {
    if (permutations < 1) throw InvalidArgument("permutation count must be at least 1");
    const std::size_t total = a.size() + b.size();
    const std::size_t small = std::min(a.size(), b.size());
    const std::vector<double> sorted = sorted_pool(a, b);
    const double pooled_sum = sorted_pair_sum(sorted);

    // Energy distance of a split given membership of the sorted positions in
    // the first group, in a single pass over the sorted pool.
    std::vector<char> in_first(total, 0);
    auto split_energy = [&] {
        const double n1 = static_cast<double>(small), n2 = static_cast<double>(total - small);
        double s1 = 0.0, s2 = 0.0, k1 = 0.0, k2 = 0.0;
        for (std::size_t i = 0; i < total; ++i) {
            const double v = sorted[i];
            if (in_first[i]) {
                s1 += (2.0 * k1 - n1 + 1.0) * v;
                k1 += 1.0;
            } else {
                s2 += (2.0 * k2 - n2 + 1.0) * v;
                k2 += 1.0;
            }
        }
        return energy_from_sums(pooled_sum, s1, s2, n1, n2);
    };

    EnergyTest out;
    out.statistic = energy_distance(a, b);

    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    int exceed = 0;
    for (int p = 0; p < permutations; ++p) {
        std::shuffle(order.begin(), order.end(), rng);
        std::fill(in_first.begin(), in_first.end(), 0);
        for (std::size_t i = 0; i < small; ++i) in_first[order[i]] = 1;
        if (at_least(split_energy(), out.statistic)) ++exceed;
    }
    out.p_value = (1.0 + exceed) / (permutations + 1.0);
    return out;
}

RobustScale robust_scale(std::span<const double> values) {
    if (values.empty()) throw InvalidArgument("robust scale of an empty sample");
    std::vector<double> v(values.begin(), values.end());
    RobustScale out;
    out.location = median_inplace(v);
    for (auto& x : v) x = std::abs(x - out.location);
    out.scale = 1.4826 * median_inplace(v);
    return out;
}

std::map<std::string, std::vector<AnomalySpan>> detect_anomalies(const MetricFrame& f, double train_fraction,
                                                                 double k_sigma) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InvalidArgument("train_fraction must be in (0, 1)");
    if (f.rows() < 10) throw InvalidArgument("anomaly detection needs at least 10 rows");
    if (k_sigma < 0.0) throw InvalidArgument("k_sigma must be non-negative");
    const Eigen::Index n = f.rows();
    const Eigen::Index train =
        std::clamp<Eigen::Index>(static_cast<Eigen::Index>(train_fraction * static_cast<double>(n)), 1, n - 1);

    std::map<std::string, std::vector<AnomalySpan>> out;
    for (Eigen::Index j = 0; j < f.cols(); ++j) {
        const auto column = to_vector(f.column(j));
        auto& spans = out[f.names()[static_cast<std::size_t>(j)]];
        RobustScale rs = robust_scale(std::span<const double>(column).first(static_cast<std::size_t>(train)));
        if (rs.scale <= 0.0) {
            const Eigen::VectorXd c = f.column(j);
            rs.scale = std::sqrt((c.array() - c.mean()).square().mean());
        }
        if (rs.scale <= 0.0) continue;
        for (Eigen::Index i = train; i < n; ++i) {
            const double deviation = std::abs(column[static_cast<std::size_t>(i)] - rs.location);
            if (!(deviation > k_sigma * rs.scale)) continue;
            const double score = deviation / rs.scale;
            if (!spans.empty() && spans.back().end_index == i - 1) {
                spans.back().end_index = i;
                spans.back().peak_score = std::max(spans.back().peak_score, score);
            } else {
                spans.push_back({i, i, score});
            }
        }
    }
    return out;
}

}  // namespace rcaforge
