#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cctlab {

enum class ModelKind { linear, knn, tree, forest, grnn, mlp, kan };

std::string_view to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view name);

struct KnnOptions {
    int k = 5;
};

struct TreeOptions {
    int min_samples_leaf = 5;
    int max_depth = 12;
};

struct ForestOptions {
    int trees = 100;
    bool bootstrap = true;
    int max_features = 0;  // 0 -> ceil(p / 3)
    TreeOptions tree;
};

struct GrnnOptions {
    // Bandwidth candidates as multiples of sqrt(p), the typical spread of
    // standardized points; picked by leave-one-out error on the training set.
    std::vector<double> bandwidth_factors = {0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5,
                                             0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0};
    std::optional<double> fixed_bandwidth;  // skips the search when set
};

struct MlpOptions {
    std::vector<int> hidden = {15, 15, 15, 15, 15};
    double alpha = 0.01;  // L2 penalty, scaled like scikit-learn's
    double learning_rate = 1e-3;
    int batch_size = 200;
    int max_epochs = 2000;
    double validation_fraction = 0.1;
    int patience = 50;
    double tol = 1e-3;  // relative validation improvement that resets patience
    int lr_drops = 3;   // step-size cuts (x0.2) on plateaus before stopping
};

struct KanOptions {
    std::vector<int> hidden = {3, 2};
    int grid_intervals = 4;
    int degree = 3;
    double learning_rate = 1e-2;
    int batch_size = 200;
    int max_epochs = 2000;
    double validation_fraction = 0.1;
    int patience = 100;
    double tol = 1e-3;  // relative validation improvement that resets patience
    int lr_drops = 3;   // step-size cuts (x0.2) on plateaus before stopping
    double l2 = 0.0;
};

/// Model kind plus hyperparameters. Only the block matching `kind` is used.
struct ModelSpec {
    ModelKind kind = ModelKind::linear;
    std::uint64_t seed = 1;
    KnnOptions knn;
    TreeOptions tree;
    ForestOptions forest;
    GrnnOptions grnn;
    MlpOptions mlp;
    KanOptions kan;
};

void to_json(nlohmann::json& j, const ModelSpec& spec);
/// Fields left out keep their defaults.
void from_json(const nlohmann::json& j, ModelSpec& spec);

/// Per-column affine map to zero mean, unit (population) spread. Constant
/// columns keep scale 1.
struct Standardizer {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd scale;

    void fit(const Eigen::MatrixXd& x);
    Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
    Eigen::MatrixXd inverse(const Eigen::MatrixXd& z) const;
};

class RegressError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Regressor {
public:
    virtual ~Regressor() = default;

    /// Needs at least 2 rows; non-finite training loss raises RegressError.
    void fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);
    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;

    bool fitted() const { return fitted_; }
    Eigen::Index input_width() const { return x_scaler_.mean.size(); }
    const Standardizer& x_scaler() const { return x_scaler_; }
    double target_mean() const { return y_mean_; }
    double target_scale() const { return y_scale_; }
    const ModelSpec& spec() const { return spec_; }
    virtual ModelKind kind() const = 0;

    /// Trainable parameters (mlp, kan); nullopt for the non-parametric models.
    virtual std::optional<std::size_t> parameter_count() const { return std::nullopt; }

    nlohmann::json to_json() const;

protected:
    explicit Regressor(ModelSpec spec) : spec_(std::move(spec)) {}

    // Both work on standardized inputs and targets.
    virtual void fit_standardized(const Eigen::MatrixXd& z, const Eigen::VectorXd& t) = 0;
    virtual Eigen::VectorXd predict_standardized(const Eigen::MatrixXd& z) const = 0;
    virtual nlohmann::json state_json() const = 0;
    virtual void load_state(const nlohmann::json& j) = 0;

    ModelSpec spec_;

private:
    friend std::unique_ptr<Regressor> regressor_from_json(const nlohmann::json& j);

    Standardizer x_scaler_;
    double y_mean_ = 0.0;
    double y_scale_ = 1.0;
    bool fitted_ = false;
};

std::unique_ptr<Regressor> make_regressor(const ModelSpec& spec);

inline constexpr int kModelFormatVersion = 1;
std::unique_ptr<Regressor> regressor_from_json(const nlohmann::json& j);
void save_regressor(const Regressor& model, const std::filesystem::path& path);
std::unique_ptr<Regressor> load_regressor(const std::filesystem::path& path);

// Concrete models. Exposed so tests can reach model-specific state.

class LinearRegressor : public Regressor {
public:
    explicit LinearRegressor(ModelSpec spec) : Regressor(std::move(spec)) {}
    ModelKind kind() const override { return ModelKind::linear; }
    /// Intercept and slopes in original units.
    double intercept() const;
    Eigen::VectorXd coefficients() const;
    bool rank_deficient() const { return rank_deficient_; }

protected:
    void fit_standardized(const Eigen::MatrixXd& z, const Eigen::VectorXd& t) override;
    Eigen::VectorXd predict_standardized(const Eigen::MatrixXd& z) const override;
    nlohmann::json state_json() const override;
    void load_state(const nlohmann::json& j) override;

private:
    double bias_ = 0.0;
    Eigen::VectorXd weights_;
    bool rank_deficient_ = false;
};

class KnnRegressor : public Regressor {
public:
    explicit KnnRegressor(ModelSpec spec) : Regressor(std::move(spec)) {}
    ModelKind kind() const override { return ModelKind::knn; }

protected:
    void fit_standardized(const Eigen::MatrixXd& z, const Eigen::VectorXd& t) override;
    Eigen::VectorXd predict_standardized(const Eigen::MatrixXd& z) const override;
    nlohmann::json state_json() const override;
    void load_state(const nlohmann::json& j) override;

private:
    Eigen::MatrixXd train_x_;
    Eigen::VectorXd train_t_;
};

/// Flattened CART tree. Leaves have feature == -1.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    int samples = 0;
};

class TreeRegressor : public Regressor {
public:
    explicit TreeRegressor(ModelSpec spec) : Regressor(std::move(spec)) {}
    ModelKind kind() const override { return ModelKind::tree; }
    const std::vector<TreeNode>& nodes() const { return nodes_; }
    /// Leaf index reached by each row (original units).
    std::vector<int> apply(const Eigen::MatrixXd& x) const;

protected:
    void fit_standardized(const Eigen::MatrixXd& z, const Eigen::VectorXd& t) override;
    Eigen::VectorXd predict_standardized(const Eigen::MatrixXd& z) const override;
    nlohmann::json state_json() const override;
    void load_state(const nlohmann::json& j) override;

private:
    std::vector<TreeNode> nodes_;
};

class ForestRegressor : public Regressor {
public:
    explicit ForestRegressor(ModelSpec spec) : Regressor(std::move(spec)) {}
    ModelKind kind() const override { return ModelKind::forest; }

protected:
    void fit_standardized(const Eigen::MatrixXd& z, const Eigen::VectorXd& t) override;
    Eigen::VectorXd predict_standardized(const Eigen::MatrixXd& z) const override;
    nlohmann::json state_json() const override;
    void load_state(const nlohmann::json& j) override;

private:
    std::vector<std::vector<TreeNode>> trees_;
};

class GrnnRegressor : public Regressor {
public:
    explicit GrnnRegressor(ModelSpec spec) : Regressor(std::move(spec)) {}
    ModelKind kind() const override { return ModelKind::grnn; }
    double bandwidth() const { return bandwidth_; }

protected:
    void fit_standardized(const Eigen::MatrixXd& z, const Eigen::VectorXd& t) override;
    Eigen::VectorXd predict_standardized(const Eigen::MatrixXd& z) const override;
    nlohmann::json state_json() const override;
    void load_state(const nlohmann::json& j) override;

private:
    Eigen::MatrixXd train_x_;
    Eigen::VectorXd train_t_;
    double bandwidth_ = 1.0;
};

/// Loss on standardized data and its gradient with respect to the flattened
/// parameter vector. Used by training and by gradient checks.
struct LossGradient {
    double loss = 0.0;
    Eigen::VectorXd gradient;
};

class MlpRegressor : public Regressor {
public:
    explicit MlpRegressor(ModelSpec spec) : Regressor(std::move(spec)) {}
    ModelKind kind() const override { return ModelKind::mlp; }
    std::optional<std::size_t> parameter_count() const override;

    /// Layer widths including input and output.
    std::vector<int> layer_sizes(Eigen::Index inputs) const;
    static std::size_t count_parameters(const std::vector<int>& sizes);

    /// Random initialization for `inputs` features (no training).
    void initialize(Eigen::Index inputs, std::uint64_t seed);
    const Eigen::VectorXd& parameters() const { return params_; }
    void set_parameters(const Eigen::VectorXd& p);
    /// 0.5 * mean squared error + alpha / (2 n) * sum of squared weights.
    LossGradient loss_gradient(const Eigen::MatrixXd& z, const Eigen::VectorXd& t) const;

protected:
    void fit_standardized(const Eigen::MatrixXd& z, const Eigen::VectorXd& t) override;
    Eigen::VectorXd predict_standardized(const Eigen::MatrixXd& z) const override;
    nlohmann::json state_json() const override;
    void load_state(const nlohmann::json& j) override;

private:
    std::vector<int> sizes_;
    Eigen::VectorXd params_;
};

/// Degree-k B-spline bases on a uniform grid over [lo, hi] extended by k knots
/// each side. Inputs outside [lo, hi] are clamped.
struct SplineGrid {
    double lo = -1.0;
    double hi = 1.0;
    int intervals = 4;
    int degree = 3;

    int basis_count() const { return intervals + degree; }
    /// Basis values at x, plus their derivatives with respect to x when `d` is given.
    void evaluate(double x, double* values, double* d = nullptr) const;
};

class KanRegressor : public Regressor {
public:
    explicit KanRegressor(ModelSpec spec) : Regressor(std::move(spec)) {}
    ModelKind kind() const override { return ModelKind::kan; }
    std::optional<std::size_t> parameter_count() const override;

    std::vector<int> layer_sizes(Eigen::Index inputs) const;

    /// Grids from the ranges seen in `z` (standardized inputs), random
    /// coefficients, no training.
    void initialize(const Eigen::MatrixXd& z, std::uint64_t seed);
    const Eigen::VectorXd& parameters() const { return params_; }
    void set_parameters(const Eigen::VectorXd& p);
    /// 0.5 * mean squared error + l2 / 2 * sum of squared parameters.
    LossGradient loss_gradient(const Eigen::MatrixXd& z, const Eigen::VectorXd& t) const;
    const std::vector<std::vector<SplineGrid>>& grids() const { return grids_; }

protected:
    void fit_standardized(const Eigen::MatrixXd& z, const Eigen::VectorXd& t) override;
    Eigen::VectorXd predict_standardized(const Eigen::MatrixXd& z) const override;
    nlohmann::json state_json() const override;
    void load_state(const nlohmann::json& j) override;

private:
    std::vector<int> sizes_;
    std::vector<std::vector<SplineGrid>> grids_;  // per layer, per input node
    Eigen::VectorXd params_;
};

}  // namespace cctlab
