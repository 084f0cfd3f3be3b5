#include "cctlab/regress.hpp"
#include "detail.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cctlab {

namespace {

Eigen::VectorXd squared_distances(const Eigen::MatrixXd& train, const Eigen::RowVectorXd& q) {
    return (train.rowwise() - q).rowwise().squaredNorm();
}

// Nadaraya-Watson average with log-sum-exp weights so that tiny bandwidths
// pick the nearest point instead of underflowing.
double kernel_average(const Eigen::VectorXd& d2, const Eigen::VectorXd& t, double bandwidth, Eigen::Index skip = -1) {
    const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < d2.size(); ++i) {
        if (i != skip) top = std::max(top, -d2(i) * inv);
    }
    double num = 0.0;
    double den = 0.0;
    for (Eigen::Index i = 0; i < d2.size(); ++i) {
        if (i == skip) continue;
        const double w = std::exp(-d2(i) * inv - top);
        num += w * t(i);
        den += w;
    }
    return num / den;
}

}  // namespace

void KnnRegressor::fit_standardized(const Eigen::MatrixXd& z, const Eigen::VectorXd& t) {
    if (spec_.knn.k < 1) throw std::invalid_argument("knn needs k >= 1");
    train_x_ = z;
    train_t_ = t;
}

Eigen::VectorXd KnnRegressor::predict_standardized(const Eigen::MatrixXd& z) const {
    const auto n = train_x_.rows();
    const auto k = std::min<Eigen::Index>(spec_.knn.k, n);
    Eigen::VectorXd out(z.rows());
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
        const Eigen::VectorXd d2 = squared_distances(train_x_, z.row(r));
        std::iota(idx.begin(), idx.end(), 0);
        // Equal distances resolve to the lower training index.
        std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](Eigen::Index a, Eigen::Index b) {
            return d2(a) < d2(b) || (d2(a) == d2(b) && a < b);
        });
        double acc = 0.0;
        for (Eigen::Index j = 0; j < k; ++j) acc += train_t_(idx[static_cast<std::size_t>(j)]);
        out(r) = acc / static_cast<double>(k);
    }
    return out;
}

nlohmann::json KnnRegressor::state_json() const {
    return {{"x", detail::matrix_json(train_x_)}, {"t", detail::vector_json(train_t_)}};
}

void KnnRegressor::load_state(const nlohmann::json& j) {
    train_x_ = detail::matrix_from_json(j.at("x"));
    train_t_ = detail::vector_from_json(j.at("t"));
}

void GrnnRegressor::fit_standardized(const Eigen::MatrixXd& z, const Eigen::VectorXd& t) {
    train_x_ = z;
    train_t_ = t;
    if (spec_.grnn.fixed_bandwidth) {
        if (!(*spec_.grnn.fixed_bandwidth > 0.0)) throw std::invalid_argument("grnn bandwidth must be positive");
        bandwidth_ = *spec_.grnn.fixed_bandwidth;
        return;
    }
    if (spec_.grnn.bandwidth_factors.empty()) throw std::invalid_argument("grnn needs bandwidth candidates");
    const auto n = z.rows();
    const double unit = std::sqrt(static_cast<double>(std::max<Eigen::Index>(1, z.cols())));
    Eigen::MatrixXd d2(n, n);
    for (Eigen::Index i = 0; i < n; ++i) d2.col(i) = squared_distances(z, z.row(i));

    double best_err = std::numeric_limits<double>::infinity();
    for (double factor : spec_.grnn.bandwidth_factors) {
        if (!(factor > 0.0)) throw std::invalid_argument("grnn bandwidth factors must be positive");
        const double h = factor * unit;
        double err = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double r = kernel_average(d2.col(i), t, h, i) - t(i);
            err += r * r;
        }
        if (err < best_err) {
            best_err = err;
            bandwidth_ = h;
        }
    }
}

Eigen::VectorXd GrnnRegressor::predict_standardized(const Eigen::MatrixXd& z) const {
    Eigen::VectorXd out(z.rows());
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
        out(r) = kernel_average(squared_distances(train_x_, z.row(r)), train_t_, bandwidth_);
    }
    return out;
}

nlohmann::json GrnnRegressor::state_json() const {
    return {{"bandwidth", bandwidth_}, {"x", detail::matrix_json(train_x_)}, {"t", detail::vector_json(train_t_)}};
}

void GrnnRegressor::load_state(const nlohmann::json& j) {
    bandwidth_ = j.at("bandwidth").get<double>();
    train_x_ = detail::matrix_from_json(j.at("x"));
    train_t_ = detail::vector_from_json(j.at("t"));
}

}  // namespace cctlab
