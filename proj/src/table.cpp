#include "cctlab/table.hpp"

#include <algorithm>
#include <stdexcept>

namespace cctlab {

std::optional<Eigen::Index> FeatureTable::find(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) return std::nullopt;
    return static_cast<Eigen::Index>(it - names.begin());
}

FeatureTable FeatureTable::select_columns(const std::vector<std::string>& keep) const {
    FeatureTable out;
    out.names = keep;
    out.x.resize(x.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        auto idx = find(keep[k]);
        if (!idx) throw std::invalid_argument("missing column '" + keep[k] + "'");
        out.x.col(static_cast<Eigen::Index>(k)) = x.col(*idx);
    }
    out.y = y;
    return out;
}

FeatureTable FeatureTable::drop_columns(const std::vector<std::string>& drop) const {
    std::vector<std::string> keep;
    for (const auto& n : names) {
        if (std::find(drop.begin(), drop.end(), n) == drop.end()) keep.push_back(n);
    }
    return select_columns(keep);
}

FeatureTable FeatureTable::select_rows(const std::vector<Eigen::Index>& rows) const {
    FeatureTable out;
    out.names = names;
    out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
    out.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        out.x.row(static_cast<Eigen::Index>(k)) = x.row(rows[k]);
        out.y(static_cast<Eigen::Index>(k)) = y(rows[k]);
    }
    return out;
}

}  // namespace cctlab
