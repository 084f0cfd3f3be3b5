#include "cctlab/regress.hpp"
#include "detail.hpp"

#include <cmath>
#include <random>

namespace cctlab {

namespace {

using ConstMap = Eigen::Map<const Eigen::MatrixXd>;
using ConstVecMap = Eigen::Map<const Eigen::RowVectorXd>;

// Layer l holds W (fan_in x fan_out, column-major) followed by b (fan_out).
std::vector<std::size_t> layer_offsets(const std::vector<int>& sizes) {
    std::vector<std::size_t> off{0};
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        off.push_back(off.back() + static_cast<std::size_t>(sizes[l] + 1) * static_cast<std::size_t>(sizes[l + 1]));
    }
    return off;
}

struct Forward {
    std::vector<Eigen::MatrixXd> act;  // act[0] = inputs, act.back() = output
};

Forward forward(const std::vector<int>& sizes, const Eigen::VectorXd& p, const Eigen::MatrixXd& z) {
    const auto off = layer_offsets(sizes);
    Forward f;
    f.act.push_back(z);
    const std::size_t layers = sizes.size() - 1;
    for (std::size_t l = 0; l < layers; ++l) {
        const ConstMap w(p.data() + off[l], sizes[l], sizes[l + 1]);
        const ConstVecMap b(p.data() + off[l] + static_cast<std::size_t>(sizes[l] * sizes[l + 1]), sizes[l + 1]);
        Eigen::MatrixXd h = (f.act.back() * w).rowwise() + b;
        if (l + 1 < layers) h = h.cwiseMax(0.0);
        f.act.push_back(std::move(h));
    }
    return f;
}

double mse_of(const std::vector<int>& sizes, const Eigen::VectorXd& p, const Eigen::MatrixXd& z,
              const Eigen::VectorXd& t) {
    const auto f = forward(sizes, p, z);
    return (f.act.back().col(0) - t).squaredNorm() / static_cast<double>(t.size());
}

LossGradient mlp_loss(const std::vector<int>& sizes, double alpha, const Eigen::VectorXd& p,
                      const Eigen::MatrixXd& z, const Eigen::VectorXd& t) {
    const auto off = layer_offsets(sizes);
    const auto f = forward(sizes, p, z);
    const auto n = static_cast<double>(z.rows());
    const std::size_t layers = sizes.size() - 1;

    LossGradient out;
    out.gradient = Eigen::VectorXd::Zero(p.size());
    const Eigen::VectorXd r = f.act.back().col(0) - t;
    out.loss = 0.5 * r.squaredNorm() / n;

    Eigen::MatrixXd delta = r / n;  // d loss / d pre-activation of the output
    for (std::size_t l = layers; l-- > 0;) {
        const ConstMap w(p.data() + off[l], sizes[l], sizes[l + 1]);
        out.loss += 0.5 * alpha / n * w.squaredNorm();
        Eigen::Map<Eigen::MatrixXd> gw(out.gradient.data() + off[l], sizes[l], sizes[l + 1]);
        Eigen::Map<Eigen::RowVectorXd> gb(out.gradient.data() + off[l] + static_cast<std::size_t>(sizes[l] * sizes[l + 1]),
                                          sizes[l + 1]);
        gw = f.act[l].transpose() * delta + (alpha / n) * w;
        gb = delta.colwise().sum();
        if (l > 0) {
            delta = (delta * w.transpose()).cwiseProduct((f.act[l].array() > 0.0).cast<double>().matrix());
        }
    }
    return out;
}

}  // namespace

std::vector<int> MlpRegressor::layer_sizes(Eigen::Index inputs) const {
    std::vector<int> sizes{static_cast<int>(inputs)};
    for (int h : spec_.mlp.hidden) {
        if (h < 1) throw std::invalid_argument("mlp hidden layers need at least one unit");
        sizes.push_back(h);
    }
    sizes.push_back(1);
    return sizes;
}

std::size_t MlpRegressor::count_parameters(const std::vector<int>& sizes) { return layer_offsets(sizes).back(); }

std::optional<std::size_t> MlpRegressor::parameter_count() const {
    if (sizes_.empty()) return std::nullopt;
    return count_parameters(sizes_);
}

void MlpRegressor::initialize(Eigen::Index inputs, std::uint64_t seed) {
    sizes_ = layer_sizes(inputs);
    const auto off = layer_offsets(sizes_);
    params_.resize(static_cast<Eigen::Index>(off.back()));
    std::mt19937_64 rng(seed);
    // Glorot uniform for weights and biases alike, as scikit-learn does.
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        const double bound = std::sqrt(6.0 / static_cast<double>(sizes_[l] + sizes_[l + 1]));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (std::size_t k = off[l]; k < off[l + 1]; ++k) params_(static_cast<Eigen::Index>(k)) = u(rng);
    }
}

void MlpRegressor::set_parameters(const Eigen::VectorXd& p) {
    if (sizes_.empty() || static_cast<std::size_t>(p.size()) != count_parameters(sizes_)) {
        throw std::invalid_argument("mlp parameter vector has the wrong length");
    }
    params_ = p;
}

LossGradient MlpRegressor::loss_gradient(const Eigen::MatrixXd& z, const Eigen::VectorXd& t) const {
    return mlp_loss(sizes_, spec_.mlp.alpha, params_, z, t);
}

void MlpRegressor::fit_standardized(const Eigen::MatrixXd& z, const Eigen::VectorXd& t) {
    const auto& o = spec_.mlp;
    if (o.alpha < 0.0 || !(o.learning_rate > 0.0)) throw std::invalid_argument("invalid mlp options");
    initialize(z.cols(), spec_.seed);
    std::mt19937_64 rng(spec_.seed ^ 0x9e3779b97f4a7c15ULL);
    const auto sizes = sizes_;
    const double alpha = o.alpha;
    detail::AdamSchedule schedule{o.learning_rate, o.batch_size, o.max_epochs, o.validation_fraction, o.patience, o.tol, o.lr_drops};
    params_ = detail::train_adam(
        params_,
        [&](const Eigen::VectorXd& p, const Eigen::MatrixXd& zz, const Eigen::VectorXd& tt) {
            return mlp_loss(sizes, alpha, p, zz, tt);
        },
        [&](const Eigen::VectorXd& p, const Eigen::MatrixXd& zz, const Eigen::VectorXd& tt) {
            return mse_of(sizes, p, zz, tt);
        },
        z, t, schedule, rng);
}

Eigen::VectorXd MlpRegressor::predict_standardized(const Eigen::MatrixXd& z) const {
    return forward(sizes_, params_, z).act.back().col(0);
}

nlohmann::json MlpRegressor::state_json() const {
    return {{"sizes", sizes_}, {"params", detail::vector_json(params_)}};
}

void MlpRegressor::load_state(const nlohmann::json& j) {
    sizes_ = j.at("sizes").get<std::vector<int>>();
    if (sizes_.size() < 2) throw std::invalid_argument("mlp needs at least two layers in model file");
    set_parameters(detail::vector_from_json(j.at("params")));
}

}  // namespace cctlab
