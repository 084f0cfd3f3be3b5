#pragma once

#include "cctlab/table.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cctlab {

/// Grid budget for MIC: every (n_x, n_y) with both >= min_bins and
/// n_x * n_y < N^exponent is tried.
struct MicConfig {
    double exponent = 0.6;
    int min_bins = 2;

    void validate() const;
};

/// Maximal binned mutual information over equal-frequency grids, normalized by
/// log2(min(n_x, n_y)). Depends on the samples only through their order, so
/// strictly increasing transforms of either input leave it unchanged. A
/// constant input gives 0.
double mic(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
           const MicConfig& cfg = {});

/// Ranks starting at 1; tied values share the average of their positions.
Eigen::VectorXd average_ranks(const Eigen::Ref<const Eigen::VectorXd>& v);

/// Spearman coefficient 1 - 6 sum(d^2) / (N (N^2 - 1)) on average ranks.
/// nullopt when either side has no variance.
std::optional<double> scc(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y);

struct SelectionOptions {
    double mic_floor = 0.1;
    double scc_threshold = 0.5;
    MicConfig mic;
};

struct MicScore {
    std::string feature;
    double value = 0.0;
};

struct DroppedFeature {
    std::string feature;
    std::string reason;  // "low-mic" or "redundant-with <feature>"
};

struct SelectionReport {
    SelectionOptions options;
    std::vector<MicScore> mic_ranking;  // descending, ties by column order
    std::vector<std::string> features;  // input column order, indexes scc_matrix
    Eigen::MatrixXd scc_matrix;         // NaN where a column has no variance
    std::vector<DroppedFeature> dropped;
    std::vector<std::string> kept;      // in MIC order
};

class SelectionError : public std::runtime_error {
public:
    SelectionError(const std::string& what, SelectionReport report)
        : std::runtime_error(what), report_(std::move(report)) {}
    const SelectionReport& report() const { return report_; }

private:
    SelectionReport report_;
};

/// MIC against the target, floor filter, then a greedy pass in descending MIC
/// order keeping a feature only if |SCC| stays below the threshold against
/// everything kept so far.
SelectionReport select_features(const FeatureTable& table, const SelectionOptions& options = {});

/// Reduced table holding the kept columns in their original order.
FeatureTable apply_selection(const FeatureTable& table, const SelectionReport& report);

nlohmann::json report_json(const SelectionReport& report);
void write_scc_csv(std::ostream& os, const SelectionReport& report);

}  // namespace cctlab
