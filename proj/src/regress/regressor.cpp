#include "cctlab/regress.hpp"

#include <fstream>

namespace cctlab {

namespace {

constexpr std::string_view kKindNames[] = {"linear", "knn", "tree", "forest", "grnn", "mlp", "kan"};

nlohmann::json row_json(const Eigen::RowVectorXd& v) { return std::vector<double>(v.begin(), v.end()); }

Eigen::RowVectorXd row_from_json(const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string_view to_string(ModelKind kind) { return kKindNames[static_cast<int>(kind)]; }

ModelKind model_kind_from_string(std::string_view name) {
    for (int k = 0; k < 7; ++k) {
        if (kKindNames[k] == name) return static_cast<ModelKind>(k);
    }
    throw std::invalid_argument("unknown model kind '" + std::string(name) + "'");
}

void to_json(nlohmann::json& j, const ModelSpec& s) {
    j = nlohmann::json{{"kind", to_string(s.kind)}, {"seed", s.seed}};
    switch (s.kind) {
        case ModelKind::linear: break;
        case ModelKind::knn: j["k"] = s.knn.k; break;
        case ModelKind::tree:
            j["min_samples_leaf"] = s.tree.min_samples_leaf;
            j["max_depth"] = s.tree.max_depth;
            break;
        case ModelKind::forest:
            j["trees"] = s.forest.trees;
            j["bootstrap"] = s.forest.bootstrap;
            j["max_features"] = s.forest.max_features;
            j["min_samples_leaf"] = s.forest.tree.min_samples_leaf;
            j["max_depth"] = s.forest.tree.max_depth;
            break;
        case ModelKind::grnn:
            j["bandwidth_factors"] = s.grnn.bandwidth_factors;
            if (s.grnn.fixed_bandwidth) j["bandwidth"] = *s.grnn.fixed_bandwidth;
            break;
        case ModelKind::mlp:
            j["hidden"] = s.mlp.hidden;
            j["alpha"] = s.mlp.alpha;
            j["learning_rate"] = s.mlp.learning_rate;
            j["batch_size"] = s.mlp.batch_size;
            j["max_epochs"] = s.mlp.max_epochs;
            j["validation_fraction"] = s.mlp.validation_fraction;
            j["patience"] = s.mlp.patience;
            j["tol"] = s.mlp.tol;
            j["lr_drops"] = s.mlp.lr_drops;
            break;
        case ModelKind::kan:
            j["hidden"] = s.kan.hidden;
            j["grid_intervals"] = s.kan.grid_intervals;
            j["degree"] = s.kan.degree;
            j["learning_rate"] = s.kan.learning_rate;
            j["batch_size"] = s.kan.batch_size;
            j["max_epochs"] = s.kan.max_epochs;
            j["validation_fraction"] = s.kan.validation_fraction;
            j["patience"] = s.kan.patience;
            j["tol"] = s.kan.tol;
            j["lr_drops"] = s.kan.lr_drops;
            j["l2"] = s.kan.l2;
            break;
    }
}

void from_json(const nlohmann::json& j, ModelSpec& s) {
    s = ModelSpec{};
    s.kind = model_kind_from_string(j.at("kind").get<std::string>());
    s.seed = j.value("seed", s.seed);
    switch (s.kind) {
        case ModelKind::linear: break;
        case ModelKind::knn: s.knn.k = j.value("k", s.knn.k); break;
        case ModelKind::tree:
            s.tree.min_samples_leaf = j.value("min_samples_leaf", s.tree.min_samples_leaf);
            s.tree.max_depth = j.value("max_depth", s.tree.max_depth);
            break;
        case ModelKind::forest:
            s.forest.trees = j.value("trees", s.forest.trees);
            s.forest.bootstrap = j.value("bootstrap", s.forest.bootstrap);
            s.forest.max_features = j.value("max_features", s.forest.max_features);
            s.forest.tree.min_samples_leaf = j.value("min_samples_leaf", s.forest.tree.min_samples_leaf);
            s.forest.tree.max_depth = j.value("max_depth", s.forest.tree.max_depth);
            break;
        case ModelKind::grnn:
            s.grnn.bandwidth_factors = j.value("bandwidth_factors", s.grnn.bandwidth_factors);
            if (j.contains("bandwidth")) s.grnn.fixed_bandwidth = j.at("bandwidth").get<double>();
            break;
        case ModelKind::mlp:
            s.mlp.hidden = j.value("hidden", s.mlp.hidden);
            s.mlp.alpha = j.value("alpha", s.mlp.alpha);
            s.mlp.learning_rate = j.value("learning_rate", s.mlp.learning_rate);
            s.mlp.batch_size = j.value("batch_size", s.mlp.batch_size);
            s.mlp.max_epochs = j.value("max_epochs", s.mlp.max_epochs);
            s.mlp.validation_fraction = j.value("validation_fraction", s.mlp.validation_fraction);
            s.mlp.patience = j.value("patience", s.mlp.patience);
            s.mlp.tol = j.value("tol", s.mlp.tol);
            s.mlp.lr_drops = j.value("lr_drops", s.mlp.lr_drops);
            break;
        case ModelKind::kan:
            s.kan.hidden = j.value("hidden", s.kan.hidden);
            s.kan.grid_intervals = j.value("grid_intervals", s.kan.grid_intervals);
            s.kan.degree = j.value("degree", s.kan.degree);
            s.kan.learning_rate = j.value("learning_rate", s.kan.learning_rate);
            s.kan.batch_size = j.value("batch_size", s.kan.batch_size);
            s.kan.max_epochs = j.value("max_epochs", s.kan.max_epochs);
            s.kan.validation_fraction = j.value("validation_fraction", s.kan.validation_fraction);
            s.kan.patience = j.value("patience", s.kan.patience);
            s.kan.tol = j.value("tol", s.kan.tol);
            s.kan.lr_drops = j.value("lr_drops", s.kan.lr_drops);
            s.kan.l2 = j.value("l2", s.kan.l2);
            break;
    }
}

void Standardizer::fit(const Eigen::MatrixXd& x) {
    mean = x.colwise().mean();
    scale.resize(x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double s = std::sqrt((x.col(c).array() - mean(c)).square().mean());
        scale(c) = s > 0.0 ? s : 1.0;
    }
}

Eigen::MatrixXd Standardizer::transform(const Eigen::MatrixXd& x) const {
    if (x.cols() != mean.size()) throw std::invalid_argument("feature width differs from the fitted width");
    return (x.rowwise() - mean).array().rowwise() / scale.array();
}

Eigen::MatrixXd Standardizer::inverse(const Eigen::MatrixXd& z) const {
    return (z.array().rowwise() * scale.array()).rowwise() + mean.array();
}

void Regressor::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    if (x.rows() != y.size()) throw std::invalid_argument("row count differs between features and targets");
    if (x.rows() < 2) throw std::invalid_argument("fitting needs at least two rows");
    if (!x.allFinite() || !y.allFinite()) throw std::invalid_argument("training data contains non-finite values");
    x_scaler_.fit(x);
    y_mean_ = y.mean();
    const double s = std::sqrt((y.array() - y_mean_).square().mean());
    y_scale_ = s > 0.0 ? s : 1.0;
    const Eigen::VectorXd t = (y.array() - y_mean_) / y_scale_;
    fit_standardized(x_scaler_.transform(x), t);
    fitted_ = true;
}

Eigen::VectorXd Regressor::predict(const Eigen::MatrixXd& x) const {
    if (!fitted_) throw std::logic_error("predict called before fit");
    const Eigen::VectorXd t = predict_standardized(x_scaler_.transform(x));
    if (!t.allFinite()) throw RegressError("model produced non-finite predictions");
    return (t.array() * y_scale_ + y_mean_).matrix();
}

nlohmann::json Regressor::to_json() const {
    if (!fitted_) throw std::logic_error("only fitted models can be saved");
    nlohmann::json j;
    j["format_version"] = kModelFormatVersion;
    j["spec"] = spec_;
    j["x_mean"] = row_json(x_scaler_.mean);
    j["x_scale"] = row_json(x_scaler_.scale);
    j["y_mean"] = y_mean_;
    j["y_scale"] = y_scale_;
    j["state"] = state_json();
    return j;
}

std::unique_ptr<Regressor> make_regressor(const ModelSpec& spec) {
    switch (spec.kind) {
        case ModelKind::linear: return std::make_unique<LinearRegressor>(spec);
        case ModelKind::knn: return std::make_unique<KnnRegressor>(spec);
        case ModelKind::tree: return std::make_unique<TreeRegressor>(spec);
        case ModelKind::forest: return std::make_unique<ForestRegressor>(spec);
        case ModelKind::grnn: return std::make_unique<GrnnRegressor>(spec);
        case ModelKind::mlp: return std::make_unique<MlpRegressor>(spec);
        case ModelKind::kan: return std::make_unique<KanRegressor>(spec);
    }
    throw std::invalid_argument("unknown model kind");
}

std::unique_ptr<Regressor> regressor_from_json(const nlohmann::json& j) {
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
        throw std::invalid_argument("unsupported model format version " + std::to_string(version));
    }
    auto model = make_regressor(j.at("spec").get<ModelSpec>());
    model->x_scaler_.mean = row_from_json(j.at("x_mean"));
    model->x_scaler_.scale = row_from_json(j.at("x_scale"));
    model->y_mean_ = j.at("y_mean").get<double>();
    model->y_scale_ = j.at("y_scale").get<double>();
    model->load_state(j.at("state"));
    model->fitted_ = true;
    return model;
}

void save_regressor(const Regressor& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << model.to_json().dump(1) << '\n';
}

std::unique_ptr<Regressor> load_regressor(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return regressor_from_json(nlohmann::json::parse(in));
}

}  // namespace cctlab
