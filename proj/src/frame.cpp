#include "rcaforge/frame.hpp"

#include "rcaforge/errors.hpp"

#include <numeric>

namespace rcaforge {

MetricFrame::MetricFrame(std::vector<std::int64_t> timestamps, std::vector<std::string> names,
                         Eigen::MatrixXd values)
    : timestamps_(std::move(timestamps)), names_(std::move(names)), values_(std::move(values)) {
    if (values_.rows() < 1) throw InvalidArgument("metric frame needs at least one row");
    if (static_cast<Eigen::Index>(timestamps_.size()) != values_.rows())
        throw InvalidArgument("timestamp count does not match row count");
    if (static_cast<Eigen::Index>(names_.size()) != values_.cols())
        throw InvalidArgument("column name count does not match column count");
    for (std::size_t i = 1; i < timestamps_.size(); ++i) {
        if (timestamps_[i] <= timestamps_[i - 1])
            throw NonMonotonicTimestamps("timestamp at row " + std::to_string(i) + " does not increase");
    }
    for (Eigen::Index j = 0; j < values_.cols(); ++j) {
        if (!index_.emplace(names_[static_cast<std::size_t>(j)], j).second)
            throw InvalidArgument("duplicate column '" + names_[static_cast<std::size_t>(j)] + "'");
    }
}

MetricFrame MetricFrame::with_default_index(std::vector<std::string> names, Eigen::MatrixXd values) {
    std::vector<std::int64_t> ts(static_cast<std::size_t>(values.rows()));
    std::iota(ts.begin(), ts.end(), 0);
    return MetricFrame(std::move(ts), std::move(names), std::move(values));
}

std::optional<Eigen::Index> MetricFrame::find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

Eigen::Index MetricFrame::index(std::string_view name) const {
    if (auto j = find(name)) return *j;
    throw UnknownNode("unknown metric '" + std::string(name) + "'");
}

MetricFrame MetricFrame::select(const std::vector<std::string>& names) const {
    Eigen::MatrixXd out(rows(), static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = column(names[j]);
    return MetricFrame(timestamps_, names, std::move(out));
}

MetricFrame MetricFrame::tail(Eigen::Index count) const {
    count = std::min(count, rows());
    std::vector<std::int64_t> ts(timestamps_.end() - count, timestamps_.end());
    return MetricFrame(std::move(ts), names_, values_.bottomRows(count));
}

MetricFrame MetricFrame::concat(const MetricFrame& other) const {
    if (other.cols() != cols()) throw InvalidArgument("frames have different column sets");
    const MetricFrame aligned = other.select(names_);
    Eigen::MatrixXd out(rows() + other.rows(), cols());
    out.topRows(rows()) = values_;
    out.bottomRows(other.rows()) = aligned.values();
    std::vector<std::int64_t> ts = timestamps_;
    ts.insert(ts.end(), other.timestamps_.begin(), other.timestamps_.end());
    return MetricFrame(std::move(ts), names_, std::move(out));
}

}  // namespace rcaforge
