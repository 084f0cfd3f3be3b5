#pragma once

#include "cctlab/regress.hpp"
#include "cctlab/selection.hpp"
#include "cctlab/table.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace cctlab {

struct Metrics {
    std::optional<double> r2;        // absent when y_true has no variance
    double mse = 0.0;
    double mae = 0.0;
    std::optional<double> mape_pct;  // absent when some y_true <= 0
    std::size_t n = 0;
};

Metrics compute_metrics(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred);

struct ClusterStat {
    double lo = 0.0;  // exclusive, -inf for the first cluster
    double hi = 0.0;  // inclusive, +inf for the last
    std::size_t n = 0;
    std::optional<double> mse;  // absent for an empty cluster
};

inline const std::vector<double> kDefaultClusterBoundaries = {0.25, 0.4};

/// Rows partitioned by y_true into (-inf, b0], (b0, b1], ..., (b_last, inf).
std::vector<ClusterStat> cluster_eval(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred,
                                      const std::vector<double>& boundaries = kDefaultClusterBoundaries);

struct FoldResult {
    int fold = 0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    Metrics metrics;
};

struct EvalRecord {
    ModelSpec spec;
    /// r2 is the sample-weighted mean over folds where it is defined; the
    /// error metrics are sample-weighted means over all folds.
    Metrics aggregate;
    Metrics pooled;  // all out-of-fold predictions scored together
    std::vector<FoldResult> folds;
    std::vector<ClusterStat> clusters;  // on out-of-fold predictions
    Eigen::VectorXd oof;
    std::optional<std::size_t> parameter_count;  // from the first fold's model
};

struct CvOptions {
    int k = 5;
    std::uint64_t seed = 2024;
    int workers = 1;
    std::vector<double> boundaries = kDefaultClusterBoundaries;
};

/// Fold index for each row: shuffled from the seed, sizes differ by at most one.
std::vector<int> fold_assignment(std::size_t n, int k, std::uint64_t seed);

EvalRecord kfold_cv(const FeatureTable& table, const ModelSpec& spec, const CvOptions& options = {});

/// Every (model, fold) pair is an independent task spread over the workers.
std::vector<EvalRecord> run_bench(const FeatureTable& table, const std::vector<ModelSpec>& specs,
                                  const CvOptions& options = {});

/// linear, tree, knn, forest, grnn, mlp, kan with default hyperparameters.
std::vector<ModelSpec> default_model_specs(std::uint64_t seed);

enum class ExperimentMode { with_label, no_label, no_label_plus_t1 };

std::string_view to_string(ExperimentMode mode);
ExperimentMode experiment_mode_from_string(std::string_view name);

/// Columns fed to feature selection in a given mode. Throws
/// std::invalid_argument when a required column is missing.
FeatureTable experiment_table(const FeatureTable& table, ExperimentMode mode);

struct ExperimentResult {
    ExperimentMode mode = ExperimentMode::with_label;
    SelectionReport selection;
    std::vector<EvalRecord> records;
};

ExperimentResult run_experiment(const FeatureTable& table, ExperimentMode mode, const std::vector<ModelSpec>& specs,
                                const SelectionOptions& selection = {}, const CvOptions& cv = {});

// model,r2,mse,mae,mape_pct,n,parameters
void write_eval_csv(std::ostream& os, const std::vector<EvalRecord>& records);
// model,cluster,lo,hi,n,mse
void write_cluster_csv(std::ostream& os, const std::vector<EvalRecord>& records);
// model,fold,n_train,n_test,r2,mse,mae,mape_pct
void write_folds_csv(std::ostream& os, const std::vector<EvalRecord>& records);
// mode,model,features,r2,mse,mae,mape_pct
void write_experiment_csv(std::ostream& os, const std::vector<ExperimentResult>& results);
/// Aligned text table for terminals.
void print_eval_table(std::ostream& os, const std::vector<EvalRecord>& records);

}  // namespace cctlab
