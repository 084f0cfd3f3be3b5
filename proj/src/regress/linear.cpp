#include "cctlab/regress.hpp"
#include "detail.hpp"

namespace cctlab {

void LinearRegressor::fit_standardized(const Eigen::MatrixXd& z, const Eigen::VectorXd& t) {
    Eigen::MatrixXd a(z.rows(), z.cols() + 1);
    a.col(0).setOnes();
    a.rightCols(z.cols()) = z;
    // Complete orthogonal decomposition gives the least-norm solution when the
    // design is rank deficient.
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
    const Eigen::VectorXd beta = cod.solve(t);
    rank_deficient_ = cod.rank() < a.cols();
    bias_ = beta(0);
    weights_ = beta.tail(z.cols());
}

Eigen::VectorXd LinearRegressor::predict_standardized(const Eigen::MatrixXd& z) const {
    return (z * weights_).array() + bias_;
}

double LinearRegressor::intercept() const {
    const auto& sc = x_scaler();
    double acc = bias_;
    for (Eigen::Index c = 0; c < weights_.size(); ++c) acc -= weights_(c) * sc.mean(c) / sc.scale(c);
    return target_mean() + target_scale() * acc;
}

Eigen::VectorXd LinearRegressor::coefficients() const {
    return (target_scale() * weights_.array() / x_scaler().scale.transpose().array()).matrix();
}

nlohmann::json LinearRegressor::state_json() const {
    return {{"bias", bias_}, {"weights", detail::vector_json(weights_)}, {"rank_deficient", rank_deficient_}};
}

void LinearRegressor::load_state(const nlohmann::json& j) {
    bias_ = j.at("bias").get<double>();
    weights_ = detail::vector_from_json(j.at("weights"));
    rank_deficient_ = j.value("rank_deficient", false);
}

}  // namespace cctlab
