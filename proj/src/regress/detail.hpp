#pragma once

#include "cctlab/regress.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <functional>
#include <random>
#include <vector>

namespace cctlab::detail {

nlohmann::json vector_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);
/// Row-major nested arrays.
nlohmann::json matrix_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);

struct AdamSchedule {
    double learning_rate = 1e-3;
    int batch_size = 200;
    int max_epochs = 1000;
    double validation_fraction = 0.1;
    int patience = 20;
    double tol = 1e-3;
    int lr_drops = 3;
    double lr_drop_factor = 0.2;
};

using LossFn = std::function<LossGradient(const Eigen::VectorXd& params, const Eigen::MatrixXd& z,
                                          const Eigen::VectorXd& t)>;
using MseFn = std::function<double(const Eigen::VectorXd& params, const Eigen::MatrixXd& z, const Eigen::VectorXd& t)>;

/// Minibatch Adam with early stopping on a held-out slice; returns the
/// parameters with the best validation error.
Eigen::VectorXd train_adam(Eigen::VectorXd params, const LossFn& loss, const MseFn& mse, const Eigen::MatrixXd& z,
                           const Eigen::VectorXd& t, const AdamSchedule& schedule, std::mt19937_64& rng);

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& rows);
Eigen::VectorXd take_rows(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& rows);

}  // namespace cctlab::detail
