#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace cctlab {

/// Named feature columns plus the CCT target, one row per sample.
struct FeatureTable {
    std::vector<std::string> names;
    Eigen::MatrixXd x;
    Eigen::VectorXd y;

    Eigen::Index rows() const { return x.rows(); }
    Eigen::Index cols() const { return x.cols(); }

    std::optional<Eigen::Index> find(const std::string& name) const;
    bool has(const std::string& name) const { return find(name).has_value(); }

    FeatureTable select_columns(const std::vector<std::string>& keep) const;
    FeatureTable drop_columns(const std::vector<std::string>& drop) const;
    FeatureTable select_rows(const std::vector<Eigen::Index>& rows) const;
};

}  // namespace cctlab
