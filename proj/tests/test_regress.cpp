#include <doctest.h>

#include "cctlab/evaluation.hpp"
#include "cctlab/regress.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <sstream>

using namespace cctlab;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = u(rng);
    }
    return m;
}

// Smooth nonlinear target, strictly positive like a CCT.
Eigen::VectorXd smooth_target(const Eigen::MatrixXd& x) {
    Eigen::VectorXd y(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        y(r) = 0.3 + 0.1 * std::sin(2.0 * x(r, 0)) + 0.05 * x(r, 1) * x(r, 1);
        if (x.cols() > 2) y(r) += 0.02 * x(r, 2);
    }
    return y;
}

ModelSpec spec_of(ModelKind kind, std::uint64_t seed = 7) {
    ModelSpec s;
    s.kind = kind;
    s.seed = seed;
    return s;
}

// Cheap training schedules so the suite stays fast.
ModelSpec quick_spec(ModelKind kind, std::uint64_t seed = 7) {
    auto s = spec_of(kind, seed);
    s.mlp.max_epochs = 200;
    s.kan.max_epochs = 200;
    s.forest.trees = 20;
    return s;
}

const ModelKind kAllKinds[] = {ModelKind::linear, ModelKind::knn, ModelKind::tree, ModelKind::forest,
                               ModelKind::grnn,   ModelKind::mlp, ModelKind::kan};

// |g - fd| relative to the larger magnitude, with a floor for gradients that
// are essentially zero.
template <class LossAt>
double worst_gradient_error(const Eigen::VectorXd& params, const Eigen::VectorXd& grad, LossAt&& loss_at,
                            std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, params.size() - 1);
    const double h = 1e-5;
    double worst = 0.0;
    for (int n = 0; n < 100; ++n) {
        const auto i = pick(rng);
        Eigen::VectorXd p = params;
        p(i) += h;
        const double up = loss_at(p);
        p(i) -= 2.0 * h;
        const double down = loss_at(p);
        const double fd = (up - down) / (2.0 * h);
        const double err = std::abs(grad(i) - fd) / std::max({std::abs(grad(i)), std::abs(fd), 1e-5});
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace

TEST_CASE("linear regression recovers exact coefficients") {
    const auto x = random_matrix(50, 3, 1);
    Eigen::VectorXd y = (1.5 + 2.0 * x.col(0).array() - 3.0 * x.col(1).array() + 0.5 * x.col(2).array()).matrix();
    LinearRegressor m(spec_of(ModelKind::linear));
    m.fit(x, y);
    CHECK(std::abs(m.intercept() - 1.5) < 1e-8);
    CHECK(std::abs(m.coefficients()(0) - 2.0) < 1e-8);
    CHECK(std::abs(m.coefficients()(1) + 3.0) < 1e-8);
    CHECK(std::abs(m.coefficients()(2) - 0.5) < 1e-8);
    CHECK_FALSE(m.rank_deficient());
    const auto met = compute_metrics(y, m.predict(x));
    REQUIRE(met.r2);
    CHECK(std::abs(*met.r2 - 1.0) < 1e-12);
}

TEST_CASE("linear regression falls back to least norm on duplicate columns") {
    auto x = random_matrix(30, 2, 2);
    Eigen::MatrixXd dup(30, 3);
    dup << x, x.col(0);
    const Eigen::VectorXd y = (1.0 + 4.0 * x.col(0).array() + x.col(1).array()).matrix();
    LinearRegressor m(spec_of(ModelKind::linear));
    m.fit(dup, y);
    CHECK(m.rank_deficient());
    // Least norm splits the weight evenly across the two copies.
    CHECK(std::abs(m.coefficients()(0) - 2.0) < 1e-8);
    CHECK(std::abs(m.coefficients()(2) - 2.0) < 1e-8);
    CHECK((m.predict(dup) - y).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("mlp with five inputs has 1066 parameters") {
    MlpRegressor m(spec_of(ModelKind::mlp));
    m.initialize(5, 1);
    const std::size_t oracle = 5 * 15 + 15 + 4 * (15 * 15 + 15) + 15 + 1;
    REQUIRE(m.parameter_count());
    CHECK(*m.parameter_count() == oracle);
    CHECK(*m.parameter_count() == 1066);
    CHECK(MlpRegressor::count_parameters(m.layer_sizes(5)) == 1066);
    CHECK(m.layer_sizes(5) == std::vector<int>{5, 15, 15, 15, 15, 15, 1});
}

TEST_CASE("kan parameter layout") {
    KanRegressor m(spec_of(ModelKind::kan));
    m.initialize(random_matrix(20, 5, 3), 1);
    CHECK(m.layer_sizes(5) == std::vector<int>{5, 3, 2, 1});
    // (5*3 + 3*2 + 2*1) edges, each with 7 spline coefficients and two scales.
    REQUIRE(m.parameter_count());
    CHECK(*m.parameter_count() == (15 + 6 + 2) * 9);
    CHECK(m.grids().size() == 3);
    CHECK(m.grids()[0].size() == 5);
    CHECK(m.grids()[1].size() == 3);
}

TEST_CASE("non-parametric models report no parameter count") {
    for (auto kind : {ModelKind::linear, ModelKind::knn, ModelKind::tree, ModelKind::forest, ModelKind::grnn}) {
        auto m = make_regressor(spec_of(kind));
        CHECK_FALSE(m->parameter_count());
    }
}

TEST_CASE("knn with k = 1 reproduces training targets") {
    const auto x = random_matrix(40, 3, 4);
    const auto y = smooth_target(x);
    auto s = spec_of(ModelKind::knn);
    s.knn.k = 1;
    auto m = make_regressor(s);
    m->fit(x, y);
    // Equal up to the standardization round trip.
    CHECK((m->predict(x) - y).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("knn averages the k nearest and breaks ties by index") {
    Eigen::MatrixXd x(4, 1);
    x << 0.0, 1.0, -1.0, 3.0;
    Eigen::VectorXd y(4);
    y << 10.0, 20.0, 30.0, 40.0;
    auto s = spec_of(ModelKind::knn);
    s.knn.k = 2;
    auto m = make_regressor(s);
    m->fit(x, y);
    Eigen::MatrixXd q(1, 1);
    q << 0.0;
    // Rows 1 and 2 are equally far from the query after row 0; row 1 wins.
    CHECK(m->predict(q)(0) == doctest::Approx(15.0).epsilon(1e-14));
}

TEST_CASE("constant targets give constant predictions") {
    const auto x = random_matrix(60, 3, 5);
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(60, 0.25);
    const auto q = random_matrix(10, 3, 6);
    for (auto kind : kAllKinds) {
        CAPTURE(to_string(kind));
        auto m = make_regressor(spec_of(kind));
        m->fit(x, y);
        const auto p = m->predict(q);
        if (kind == ModelKind::mlp || kind == ModelKind::kan) {
            CHECK((p.array() - 0.25).abs().maxCoeff() < 1e-3);
        } else {
            CHECK((p.array() == 0.25).all());
        }
    }
}

TEST_CASE("grnn with a tiny bandwidth returns the training target") {
    const auto x = random_matrix(30, 2, 7);
    const auto y = smooth_target(x);
    auto s = spec_of(ModelKind::grnn);
    s.grnn.fixed_bandwidth = 1e-4;
    auto m = make_regressor(s);
    m->fit(x, y);
    CHECK((m->predict(x) - y).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("grnn bandwidth search picks a candidate") {
    const auto x = random_matrix(80, 2, 8);
    const auto y = smooth_target(x);
    GrnnRegressor m(spec_of(ModelKind::grnn));
    m.fit(x, y);
    const double unit = std::sqrt(2.0);
    bool found = false;
    for (double f : m.spec().grnn.bandwidth_factors) found = found || std::abs(m.bandwidth() - f * unit) < 1e-15;
    CHECK(found);
    // Smooth target: neither the narrowest nor the widest kernel wins.
    CHECK(m.bandwidth() > 0.05 * unit);
    CHECK(m.bandwidth() < 1.0 * unit);
}

TEST_CASE("tree prediction is the mean of its leaf") {
    const auto x = random_matrix(20, 2, 9);
    const auto y = smooth_target(x);
    auto s = spec_of(ModelKind::tree);
    s.tree.min_samples_leaf = 2;
    TreeRegressor m(s);
    m.fit(x, y);
    const auto leaves = m.apply(x);
    std::map<int, std::pair<double, int>> groups;
    for (std::size_t r = 0; r < leaves.size(); ++r) {
        groups[leaves[r]].first += y(static_cast<Eigen::Index>(r));
        groups[leaves[r]].second += 1;
    }
    CHECK(groups.size() > 1);
    for (const auto& [leaf, g] : groups) CHECK(g.second >= 2);

    const auto q = random_matrix(15, 2, 10);
    const auto q_leaves = m.apply(q);
    const auto pred = m.predict(q);
    for (Eigen::Index r = 0; r < q.rows(); ++r) {
        const auto& g = groups.at(q_leaves[static_cast<std::size_t>(r)]);
        CHECK(pred(r) == doctest::Approx(g.first / g.second).epsilon(1e-12));
    }
}

TEST_CASE("tree respects depth and leaf limits") {
    const auto x = random_matrix(200, 3, 11);
    const auto y = smooth_target(x);
    auto s = spec_of(ModelKind::tree);
    s.tree.max_depth = 3;
    s.tree.min_samples_leaf = 7;
    TreeRegressor m(s);
    m.fit(x, y);
    int leaves = 0;
    for (const auto& n : m.nodes()) {
        if (n.feature < 0) {
            ++leaves;
            CHECK(n.samples >= 7);
        }
    }
    CHECK(leaves <= 8);
    CHECK(leaves > 1);
}

TEST_CASE("forest with one full tree equals the tree") {
    const auto x = random_matrix(100, 4, 12);
    const auto y = smooth_target(x);
    auto fs = spec_of(ModelKind::forest);
    fs.forest.trees = 1;
    fs.forest.bootstrap = false;
    fs.forest.max_features = 4;
    auto ts = spec_of(ModelKind::tree);
    ts.tree = fs.forest.tree;
    auto forest = make_regressor(fs);
    auto tree = make_regressor(ts);
    forest->fit(x, y);
    tree->fit(x, y);
    const auto q = random_matrix(50, 4, 13);
    CHECK(forest->predict(q) == tree->predict(q));
}

TEST_CASE("metrics hand example") {
    Eigen::VectorXd t(2), p(2);
    t << 0.2, 0.4;
    p << 0.3, 0.3;
    const auto m = compute_metrics(t, p);
    CHECK(std::abs(m.mse - 0.01) < 1e-12);
    CHECK(std::abs(m.mae - 0.1) < 1e-12);
    REQUIRE(m.mape_pct);
    CHECK(std::abs(*m.mape_pct - 37.5) < 1e-12);
    REQUIRE(m.r2);
    CHECK(std::abs(*m.r2) < 1e-12);
    CHECK(m.n == 2);
}

TEST_CASE("perfect and mean predictors") {
    Eigen::VectorXd t(5);
    t << 0.21, 0.34, 0.29, 0.41, 0.18;
    const auto perfect = compute_metrics(t, t);
    CHECK(*perfect.r2 == 1.0);
    CHECK(perfect.mse == 0.0);
    CHECK(perfect.mae == 0.0);
    CHECK(*perfect.mape_pct == 0.0);
    const Eigen::VectorXd mean = Eigen::VectorXd::Constant(5, t.mean());
    CHECK(*compute_metrics(t, mean).r2 == 0.0);
}

TEST_CASE("degenerate metric inputs") {
    const Eigen::VectorXd flat = Eigen::VectorXd::Constant(3, 0.3);
    Eigen::VectorXd p(3);
    p << 0.2, 0.3, 0.4;
    CHECK_FALSE(compute_metrics(flat, p).r2);
    Eigen::VectorXd with_zero(3);
    with_zero << 0.0, 0.3, 0.4;
    CHECK_FALSE(compute_metrics(with_zero, p).mape_pct);
    CHECK_THROWS(compute_metrics(flat, Eigen::VectorXd::Zero(2)));
}

TEST_CASE("metric identities on random vectors") {
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> u(0.1, 0.6);
    for (int trial = 0; trial < 200; ++trial) {
        Eigen::VectorXd t(8), p(8);
        for (int i = 0; i < 8; ++i) {
            t(i) = u(rng);
            p(i) = u(rng);
        }
        const auto m = compute_metrics(t, p);
        CHECK(m.mae <= std::sqrt(m.mse) + 1e-15);
        CHECK(*m.r2 <= 1.0);
        CHECK(m.mse >= 0.0);
    }
}

TEST_CASE("cluster-wise mse") {
    Eigen::VectorXd t(6), p(6);
    t << 0.1, 0.25, 0.3, 0.4, 0.5, 0.6;
    p << 0.12, 0.22, 0.3, 0.45, 0.4, 0.6;
    const auto c = cluster_eval(t, p);
    REQUIRE(c.size() == 3);
    // (0.02^2 + 0.03^2) / 2, (0 + 0.05^2) / 2, (0.1^2 + 0) / 2
    CHECK(c[0].n == 2);
    CHECK(std::abs(*c[0].mse - 0.00065) < 1e-12);
    CHECK(c[1].n == 2);
    CHECK(std::abs(*c[1].mse - 0.00125) < 1e-12);
    CHECK(c[2].n == 2);
    CHECK(std::abs(*c[2].mse - 0.005) < 1e-12);
    CHECK(std::isinf(c[0].lo));
    CHECK(c[0].hi == 0.25);
    CHECK(std::isinf(c[2].hi));

    Eigen::VectorXd low(3);
    low << 0.1, 0.15, 0.2;
    const auto only = cluster_eval(low, low);
    CHECK(only[0].n == 3);
    CHECK(*only[0].mse == 0.0);
    CHECK_FALSE(only[1].mse);
    CHECK_FALSE(only[2].mse);
    CHECK_THROWS(cluster_eval(low, low, {0.4, 0.25}));
}

TEST_CASE("fold assignment") {
    const auto a = fold_assignment(23, 5, 3);
    CHECK(a == fold_assignment(23, 5, 3));
    CHECK(a != fold_assignment(23, 5, 4));
    std::vector<int> sizes(5, 0);
    for (int f : a) ++sizes[static_cast<std::size_t>(f)];
    CHECK(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 1);
    CHECK_THROWS(fold_assignment(4, 5, 1));
    CHECK_THROWS(fold_assignment(10, 1, 1));
}

TEST_CASE("leave-one-out cross-validation") {
    FeatureTable t;
    t.names = {"a", "b"};
    t.x = random_matrix(10, 2, 15);
    t.y = smooth_target(t.x);
    CvOptions cv;
    cv.k = 10;
    const auto rec = kfold_cv(t, spec_of(ModelKind::linear), cv);
    CHECK(rec.folds.size() == 10);
    for (const auto& f : rec.folds) {
        CHECK(f.n_test == 1);
        CHECK(f.n_train == 9);
    }
    // One-row folds have no r2; the pooled out-of-fold score still does.
    CHECK_FALSE(rec.aggregate.r2);
    CHECK(rec.pooled.r2);
    CHECK(std::abs(rec.aggregate.mse - rec.pooled.mse) < 1e-15);
}

TEST_CASE("cross-validation rejects tiny training folds") {
    FeatureTable t;
    t.names = {"a"};
    t.x = random_matrix(2, 1, 16);
    t.y = Eigen::VectorXd::Constant(2, 0.3);
    CvOptions cv;
    cv.k = 2;
    CHECK_THROWS_AS(kfold_cv(t, spec_of(ModelKind::linear), cv), std::invalid_argument);
}

TEST_CASE("cross-validation aggregates and is deterministic") {
    FeatureTable t;
    t.names = {"a", "b", "c"};
    t.x = random_matrix(120, 3, 17);
    t.y = smooth_target(t.x);
    CvOptions cv;
    cv.seed = 99;
    const auto specs = std::vector<ModelSpec>{quick_spec(ModelKind::knn), quick_spec(ModelKind::mlp)};
    const auto a = run_bench(t, specs, cv);
    cv.workers = 3;
    const auto b = run_bench(t, specs, cv);
    REQUIRE(a.size() == 2);
    for (std::size_t m = 0; m < 2; ++m) {
        CHECK(a[m].oof == b[m].oof);
        CHECK(*a[m].aggregate.r2 == *b[m].aggregate.r2);
        double weighted = 0.0;
        for (const auto& f : a[m].folds) weighted += static_cast<double>(f.n_test) * *f.metrics.r2;
        CHECK(std::abs(*a[m].aggregate.r2 - weighted / 120.0) < 1e-14);
    }
    CHECK(a[1].parameter_count);
    std::ostringstream s1, s2;
    write_eval_csv(s1, a);
    write_eval_csv(s2, b);
    CHECK(s1.str() == s2.str());
    CHECK(s1.str().rfind("model,r2,mse,mae,mape_pct,n,parameters\nknn,", 0) == 0);
}

TEST_CASE("mlp gradient matches finite differences") {
    const auto z = random_matrix(40, 5, 18);
    const auto t = smooth_target(z);
    MlpRegressor m(spec_of(ModelKind::mlp));
    m.initialize(5, 3);
    const auto lg = m.loss_gradient(z, t);
    const Eigen::VectorXd base = m.parameters();
    const double worst = worst_gradient_error(base, lg.gradient, [&](const Eigen::VectorXd& p) {
        m.set_parameters(p);
        return m.loss_gradient(z, t).loss;
    }, 19);
    CHECK(worst < 1e-5);
}

TEST_CASE("kan gradient matches finite differences") {
    const auto z = random_matrix(40, 5, 20);
    const auto t = smooth_target(z);
    auto s = spec_of(ModelKind::kan);
    s.kan.l2 = 1e-3;
    KanRegressor m(s);
    m.initialize(z, 4);
    const auto lg = m.loss_gradient(z, t);
    const Eigen::VectorXd base = m.parameters();
    const double worst = worst_gradient_error(base, lg.gradient, [&](const Eigen::VectorXd& p) {
        m.set_parameters(p);
        return m.loss_gradient(z, t).loss;
    }, 21);
    CHECK(worst < 1e-5);
}

TEST_CASE("b-spline bases form a partition of unity") {
    const SplineGrid g{-1.3, 2.1, 4, 3};
    REQUIRE(g.basis_count() == 7);
    std::vector<double> v(7), d(7);
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> u(-2.0, 3.0);
    std::vector<double> xs = {-1.3, 2.1, -1.3 + 0.85, 0.4, 1.25};
    for (int i = 0; i < 500; ++i) xs.push_back(u(rng));
    for (double x : xs) {
        g.evaluate(x, v.data(), d.data());
        double sum = 0.0, dsum = 0.0;
        for (int k = 0; k < 7; ++k) {
            CHECK(v[static_cast<std::size_t>(k)] >= -1e-15);
            sum += v[static_cast<std::size_t>(k)];
            dsum += d[static_cast<std::size_t>(k)];
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
        CHECK(std::abs(dsum) < 1e-10);
    }
}

TEST_CASE("b-spline derivative matches finite differences inside the grid") {
    const SplineGrid g{0.0, 1.0, 4, 3};
    std::vector<double> v(7), d(7), up(7), down(7);
    for (double x : {0.1, 0.33, 0.5, 0.61, 0.9}) {
        g.evaluate(x, v.data(), d.data());
        g.evaluate(x + 1e-6, up.data());
        g.evaluate(x - 1e-6, down.data());
        for (std::size_t k = 0; k < 7; ++k) CHECK(std::abs(d[k] - (up[k] - down[k]) / 2e-6) < 1e-6);
    }
    // Clamped outside the range: flat, and equal to the values at the edge.
    g.evaluate(1.5, v.data(), d.data());
    for (double dv : d) CHECK(dv == 0.0);
    g.evaluate(1.0, up.data());
    CHECK(v == up);
}

TEST_CASE("affine rescaling of an input does not change the model") {
    const auto x = random_matrix(80, 3, 23);
    const auto y = smooth_target(x);
    Eigen::MatrixXd x2 = x;
    x2.col(1) = (x.col(1).array() * 250.0 + 3.0).matrix();
    const auto q = random_matrix(20, 3, 24);
    Eigen::MatrixXd q2 = q;
    q2.col(1) = (q.col(1).array() * 250.0 + 3.0).matrix();
    for (auto kind : {ModelKind::linear, ModelKind::knn, ModelKind::grnn}) {
        CAPTURE(to_string(kind));
        auto a = make_regressor(spec_of(kind));
        auto b = make_regressor(spec_of(kind));
        a->fit(x, y);
        b->fit(x2, y);
        CHECK((a->predict(q) - b->predict(q2)).cwiseAbs().maxCoeff() < 1e-9);
    }
    for (auto kind : {ModelKind::mlp, ModelKind::kan}) {
        CAPTURE(to_string(kind));
        auto a = make_regressor(quick_spec(kind));
        a->fit(x, y);
        auto b = make_regressor(quick_spec(kind));
        b->fit(x2, y);
        // Both see the same standardized inputs.
        CHECK((a->x_scaler().transform(x) - b->x_scaler().transform(x2)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((a->predict(q) - b->predict(q2)).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("fitting is deterministic for a given seed") {
    const auto x = random_matrix(100, 3, 25);
    const auto y = smooth_target(x);
    for (auto kind : {ModelKind::forest, ModelKind::mlp, ModelKind::kan}) {
        CAPTURE(to_string(kind));
        auto a = make_regressor(quick_spec(kind, 5));
        auto b = make_regressor(quick_spec(kind, 5));
        a->fit(x, y);
        b->fit(x, y);
        CHECK(a->predict(x) == b->predict(x));
    }
}

TEST_CASE("neural models learn a smooth function") {
    const auto x = random_matrix(300, 2, 26);
    const auto y = smooth_target(x);
    const auto q = random_matrix(100, 2, 27);
    for (auto kind : {ModelKind::mlp, ModelKind::kan, ModelKind::grnn}) {
        CAPTURE(to_string(kind));
        auto m = make_regressor(spec_of(kind));
        m->fit(x, y);
        CHECK(*compute_metrics(smooth_target(q), m->predict(q)).r2 > 0.95);
    }
}

TEST_CASE("save and load round trip") {
    const auto x = random_matrix(60, 3, 28);
    const auto y = smooth_target(x);
    const auto q = random_matrix(10, 3, 29);
    const auto dir = std::filesystem::temp_directory_path() / "cctlab_test_regress";
    std::filesystem::create_directories(dir);
    for (auto kind : kAllKinds) {
        CAPTURE(to_string(kind));
        auto m = make_regressor(quick_spec(kind));
        m->fit(x, y);
        const auto path = dir / (std::string(to_string(kind)) + ".json");
        save_regressor(*m, path);
        const auto back = load_regressor(path);
        CHECK(back->kind() == kind);
        CHECK(back->predict(q) == m->predict(q));
        CHECK(back->parameter_count() == m->parameter_count());
    }
    std::filesystem::remove_all(dir);

    auto j = make_regressor(quick_spec(ModelKind::linear));
    j->fit(x, y);
    auto doc = j->to_json();
    doc["format_version"] = kModelFormatVersion + 1;
    CHECK_THROWS(regressor_from_json(doc));
}

TEST_CASE("model spec json keeps defaults for missing fields") {
    const auto s = nlohmann::json{{"kind", "mlp"}, {"alpha", 0.5}}.get<ModelSpec>();
    CHECK(s.kind == ModelKind::mlp);
    CHECK(s.mlp.alpha == 0.5);
    CHECK(s.mlp.hidden == std::vector<int>{15, 15, 15, 15, 15});
    auto round = nlohmann::json(s).get<ModelSpec>();
    CHECK(round.mlp.alpha == 0.5);
    CHECK_THROWS(nlohmann::json{{"kind", "svm"}}.get<ModelSpec>());
}

TEST_CASE("misuse is reported") {
    auto m = make_regressor(spec_of(ModelKind::linear));
    CHECK_THROWS_AS(m->predict(random_matrix(2, 2, 30)), std::logic_error);
    CHECK_THROWS(m->fit(random_matrix(1, 2, 31), Eigen::VectorXd::Constant(1, 0.3)));
    m->fit(random_matrix(10, 2, 32), Eigen::VectorXd::LinSpaced(10, 0.1, 0.5));
    CHECK_THROWS_AS(m->predict(random_matrix(2, 3, 33)), std::invalid_argument);
    Eigen::MatrixXd bad = random_matrix(10, 2, 34);
    bad(3, 1) = std::nan("");
    auto n = make_regressor(spec_of(ModelKind::linear));
    CHECK_THROWS(n->fit(bad, Eigen::VectorXd::LinSpaced(10, 0.1, 0.5)));
}

TEST_CASE("experiment tables per mode") {
    FeatureTable t;
    t.names = {"cont_no", "delta1_t0", "pg1_t0", "pg1_t1", "pg2_t1"};
    t.x = random_matrix(5, 5, 35);
    t.y = Eigen::VectorXd::Constant(5, 0.3);
    CHECK(experiment_table(t, ExperimentMode::with_label).names ==
          std::vector<std::string>{"cont_no", "delta1_t0", "pg1_t0"});
    CHECK(experiment_table(t, ExperimentMode::no_label).names == std::vector<std::string>{"delta1_t0", "pg1_t0"});
    CHECK(experiment_table(t, ExperimentMode::no_label_plus_t1).names ==
          std::vector<std::string>{"delta1_t0", "pg1_t0", "pg1_t1", "pg2_t1"});
    const auto no_t1 = t.select_columns({"cont_no", "delta1_t0"});
    CHECK_THROWS_AS(experiment_table(no_t1, ExperimentMode::no_label_plus_t1), std::invalid_argument);
    CHECK_THROWS_AS(experiment_table(t.select_columns({"delta1_t0"}), ExperimentMode::with_label),
                    std::invalid_argument);
    CHECK(experiment_mode_from_string("no-label-plus-t1") == ExperimentMode::no_label_plus_t1);
    CHECK_THROWS(experiment_mode_from_string("label"));
}
