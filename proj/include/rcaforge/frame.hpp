#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rcaforge {

/// Timestamp-indexed table of named real-valued metrics, stored column-major
/// as an Eigen matrix (rows = samples, columns = metrics).
class MetricFrame {
public:
    MetricFrame() = default;
    /// Validates lengths, name uniqueness and strictly increasing timestamps.
    MetricFrame(std::vector<std::int64_t> timestamps, std::vector<std::string> names, Eigen::MatrixXd values);

    /// Frame with timestamps 0..rows-1.
    static MetricFrame with_default_index(std::vector<std::string> names, Eigen::MatrixXd values);

    Eigen::Index rows() const noexcept { return values_.rows(); }
    Eigen::Index cols() const noexcept { return values_.cols(); }
    const std::vector<std::int64_t>& timestamps() const noexcept { return timestamps_; }
    const std::vector<std::string>& names() const noexcept { return names_; }
    const Eigen::MatrixXd& values() const noexcept { return values_; }

    std::optional<Eigen::Index> find(std::string_view name) const;
    /// Throws UnknownNode.
    Eigen::Index index(std::string_view name) const;
    auto column(std::string_view name) const { return values_.col(index(name)); }
    auto column(Eigen::Index j) const { return values_.col(j); }

    /// Columns in the given order.
    MetricFrame select(const std::vector<std::string>& names) const;
    MetricFrame tail(Eigen::Index count) const;
    /// Rows of `other` appended below; column sets must match (reordered to ours).
    MetricFrame concat(const MetricFrame& other) const;

    friend bool operator==(const MetricFrame& lhs, const MetricFrame& rhs) {
        return lhs.timestamps_ == rhs.timestamps_ && lhs.names_ == rhs.names_ && lhs.values_ == rhs.values_;
    }

private:
    std::vector<std::int64_t> timestamps_;
    std::vector<std::string> names_;
    std::unordered_map<std::string, Eigen::Index> index_;
    Eigen::MatrixXd values_;
};

/// Copies an Eigen column into contiguous storage.
template <typename Derived>
std::vector<double> to_vector(const Eigen::MatrixBase<Derived>& v) {
    std::vector<double> out(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = v(i);
    return out;
}

}  // namespace rcaforge
