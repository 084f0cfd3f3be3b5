#include "detail.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cctlab::detail {

nlohmann::json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.begin(), v.end()); }

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
    auto out = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vector_json(m.row(r).transpose()));
    return out;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    if (j.empty()) return {};
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto row = vector_from_json(j[static_cast<std::size_t>(r)]);
        if (row.size() != cols) throw std::invalid_argument("ragged matrix in model file");
        m.row(r) = row.transpose();
    }
    return m;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = m.row(rows[k]);
    return out;
}

Eigen::VectorXd take_rows(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& rows) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) out(static_cast<Eigen::Index>(k)) = v(rows[k]);
    return out;
}

Eigen::VectorXd train_adam(Eigen::VectorXd params, const LossFn& loss, const MseFn& mse, const Eigen::MatrixXd& z,
                           const Eigen::VectorXd& t, const AdamSchedule& schedule, std::mt19937_64& rng) {
    const auto n = z.rows();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    auto n_val = static_cast<Eigen::Index>(std::floor(schedule.validation_fraction * static_cast<double>(n)));
    if (n - n_val < 2) n_val = 0;
    std::vector<Eigen::Index> train(order.begin(), order.end() - n_val);
    const std::vector<Eigen::Index> val(order.end() - n_val, order.end());
    const Eigen::MatrixXd z_val = take_rows(z, val);
    const Eigen::VectorXd t_val = take_rows(t, val);
    // Without a validation slice the training error drives early stopping.
    const Eigen::MatrixXd& z_monitor = n_val > 0 ? z_val : z;
    const Eigen::VectorXd& t_monitor = n_val > 0 ? t_val : t;

    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    Eigen::VectorXd m = Eigen::VectorXd::Zero(params.size());
    Eigen::VectorXd v = Eigen::VectorXd::Zero(params.size());
    long step = 0;

    Eigen::VectorXd best = params;
    double best_score = mse(params, z_monitor, t_monitor);
    int stale = 0;
    int drops = 0;
    double rate = schedule.learning_rate;
    const auto batch = static_cast<std::size_t>(std::max(1, schedule.batch_size));

    for (int epoch = 0; epoch < schedule.max_epochs; ++epoch) {
        std::shuffle(train.begin(), train.end(), rng);
        for (std::size_t start = 0; start < train.size(); start += batch) {
            const std::vector<Eigen::Index> rows(train.begin() + static_cast<long>(start),
                                                 train.begin() + static_cast<long>(std::min(train.size(), start + batch)));
            const auto lg = loss(params, take_rows(z, rows), take_rows(t, rows));
            if (!std::isfinite(lg.loss) || !lg.gradient.allFinite()) throw RegressError("training loss is not finite");
            ++step;
            m = b1 * m + (1.0 - b1) * lg.gradient;
            v = b2 * v + (1.0 - b2) * lg.gradient.cwiseAbs2();
            const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
            params.array() -= rate * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
        }
        const double score = mse(params, z_monitor, t_monitor);
        if (!std::isfinite(score)) throw RegressError("validation error is not finite");
        // Relative plateau test, so tiny residuals keep improving too.
        if (score < best_score * (1.0 - schedule.tol)) {
            best_score = score;
            best = params;
            stale = 0;
        } else if (++stale >= schedule.patience) {
            // Plateau: restart from the best point with a smaller step, a few
            // times, before giving up.
            if (drops++ >= schedule.lr_drops) break;
            rate *= schedule.lr_drop_factor;
            params = best;
            m.setZero();
            v.setZero();
            step = 0;
            stale = 0;
        }
    }
    return best;
}

}  // namespace cctlab::detail
