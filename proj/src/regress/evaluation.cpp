#include "cctlab/evaluation.hpp"
#include "cctlab/dataset_io.hpp"
#include "detail.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace cctlab {

Metrics compute_metrics(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
    if (y_true.size() != y_pred.size()) throw std::invalid_argument("metrics need equal-length vectors");
    if (y_true.size() == 0) throw std::invalid_argument("metrics need at least one row");
    Metrics m;
    m.n = static_cast<std::size_t>(y_true.size());
    const double n = static_cast<double>(y_true.size());
    const Eigen::ArrayXd res = y_true.array() - y_pred.array();
    const double ss_res = res.square().sum();
    m.mse = ss_res / n;
    m.mae = res.abs().sum() / n;
    const Eigen::ArrayXd dev = y_true.array() - y_true.mean();
    const double ss_tot = dev.square().sum();
    if (ss_tot > 0.0) m.r2 = 1.0 - ss_res / ss_tot;
    if ((y_true.array() > 0.0).all()) m.mape_pct = 100.0 * (res / y_true.array()).abs().sum() / n;
    return m;
}

std::vector<ClusterStat> cluster_eval(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred,
                                      const std::vector<double>& boundaries) {
    if (y_true.size() != y_pred.size()) throw std::invalid_argument("cluster_eval needs equal-length vectors");
    if (!std::is_sorted(boundaries.begin(), boundaries.end()) ||
        std::adjacent_find(boundaries.begin(), boundaries.end()) != boundaries.end()) {
        throw std::invalid_argument("cluster boundaries must be strictly ascending");
    }
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<ClusterStat> out(boundaries.size() + 1);
    std::vector<double> sse(out.size(), 0.0);
    for (std::size_t c = 0; c < out.size(); ++c) {
        out[c].lo = c == 0 ? -inf : boundaries[c - 1];
        out[c].hi = c == boundaries.size() ? inf : boundaries[c];
    }
    for (Eigen::Index r = 0; r < y_true.size(); ++r) {
        const auto c = static_cast<std::size_t>(
            std::lower_bound(boundaries.begin(), boundaries.end(), y_true(r)) - boundaries.begin());
        const double e = y_true(r) - y_pred(r);
        sse[c] += e * e;
        ++out[c].n;
    }
    for (std::size_t c = 0; c < out.size(); ++c) {
        if (out[c].n > 0) out[c].mse = sse[c] / static_cast<double>(out[c].n);
    }
    return out;
}

std::vector<int> fold_assignment(std::size_t n, int k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("cross-validation needs k >= 2");
    if (n < static_cast<std::size_t>(k)) throw std::invalid_argument("cross-validation needs at least k rows");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> fold(n);
    for (std::size_t p = 0; p < n; ++p) fold[order[p]] = static_cast<int>(p % static_cast<std::size_t>(k));
    return fold;
}

namespace {

// Runs task(i) for i in [0, count) on up to `workers` threads; the first
// exception is rethrown after all threads finish.
template <class F>
void parallel_for(std::size_t count, int workers, F&& task) {
    const auto threads = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, workers)));
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto loop = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                task(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        loop();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(loop);
    }
    if (error) std::rethrow_exception(error);
}

struct FoldOutput {
    Eigen::VectorXd pred;
    std::optional<std::size_t> parameters;
};

struct FoldPlan {
    std::vector<int> fold;
    std::vector<std::vector<Eigen::Index>> train, test;
};

FoldPlan plan_folds(Eigen::Index n, const CvOptions& options) {
    FoldPlan plan;
    plan.fold = fold_assignment(static_cast<std::size_t>(n), options.k, options.seed);
    plan.train.resize(static_cast<std::size_t>(options.k));
    plan.test.resize(static_cast<std::size_t>(options.k));
    for (Eigen::Index r = 0; r < n; ++r) {
        for (int f = 0; f < options.k; ++f) {
            (plan.fold[static_cast<std::size_t>(r)] == f ? plan.test : plan.train)[static_cast<std::size_t>(f)].push_back(r);
        }
    }
    for (const auto& tr : plan.train) {
        if (tr.size() < 2) throw std::invalid_argument("a training fold has fewer than 2 rows");
    }
    return plan;
}

FoldOutput run_fold(const FeatureTable& table, const ModelSpec& spec, const FoldPlan& plan, int f) {
    const auto& tr = plan.train[static_cast<std::size_t>(f)];
    const auto& te = plan.test[static_cast<std::size_t>(f)];
    auto model = make_regressor(spec);
    model->fit(detail::take_rows(table.x, tr), detail::take_rows(table.y, tr));
    return {model->predict(detail::take_rows(table.x, te)), model->parameter_count()};
}

EvalRecord assemble(const FeatureTable& table, const ModelSpec& spec, const FoldPlan& plan,
                    const std::vector<FoldOutput>& outputs, const CvOptions& options) {
    EvalRecord rec;
    rec.spec = spec;
    rec.oof = Eigen::VectorXd::Zero(table.rows());
    double r2_sum = 0.0, r2_weight = 0.0, mse = 0.0, mae = 0.0, mape = 0.0;
    bool mape_ok = true;
    for (int f = 0; f < options.k; ++f) {
        const auto& te = plan.test[static_cast<std::size_t>(f)];
        const auto& pred = outputs[static_cast<std::size_t>(f)].pred;
        for (std::size_t i = 0; i < te.size(); ++i) rec.oof(te[i]) = pred(static_cast<Eigen::Index>(i));
        FoldResult fr;
        fr.fold = f;
        fr.n_train = plan.train[static_cast<std::size_t>(f)].size();
        fr.n_test = te.size();
        fr.metrics = compute_metrics(detail::take_rows(table.y, te), pred);
        const double w = static_cast<double>(fr.n_test);
        if (fr.metrics.r2) {
            r2_sum += w * *fr.metrics.r2;
            r2_weight += w;
        }
        mse += w * fr.metrics.mse;
        mae += w * fr.metrics.mae;
        if (fr.metrics.mape_pct) mape += w * *fr.metrics.mape_pct;
        else mape_ok = false;
        rec.folds.push_back(fr);
    }
    const double n = static_cast<double>(table.rows());
    rec.aggregate.n = static_cast<std::size_t>(table.rows());
    if (r2_weight > 0.0) rec.aggregate.r2 = r2_sum / r2_weight;
    rec.aggregate.mse = mse / n;
    rec.aggregate.mae = mae / n;
    if (mape_ok) rec.aggregate.mape_pct = mape / n;
    rec.pooled = compute_metrics(table.y, rec.oof);
    rec.clusters = cluster_eval(table.y, rec.oof, options.boundaries);
    rec.parameter_count = outputs.front().parameters;
    return rec;
}

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

}  // namespace

std::vector<EvalRecord> run_bench(const FeatureTable& table, const std::vector<ModelSpec>& specs,
                                  const CvOptions& options) {
    if (!table.x.allFinite() || !table.y.allFinite()) throw std::invalid_argument("bench data has missing values");
    const auto plan = plan_folds(table.rows(), options);
    const auto k = static_cast<std::size_t>(options.k);
    std::vector<FoldOutput> outputs(specs.size() * k);
    parallel_for(outputs.size(), options.workers, [&](std::size_t i) {
        outputs[i] = run_fold(table, specs[i / k], plan, static_cast<int>(i % k));
    });
    std::vector<EvalRecord> records;
    for (std::size_t s = 0; s < specs.size(); ++s) {
        const std::vector<FoldOutput> mine(outputs.begin() + static_cast<long>(s * k),
                                           outputs.begin() + static_cast<long>((s + 1) * k));
        records.push_back(assemble(table, specs[s], plan, mine, options));
    }
    return records;
}

EvalRecord kfold_cv(const FeatureTable& table, const ModelSpec& spec, const CvOptions& options) {
    return run_bench(table, {spec}, options).front();
}

std::vector<ModelSpec> default_model_specs(std::uint64_t seed) {
    std::vector<ModelSpec> specs;
    for (auto kind : {ModelKind::linear, ModelKind::tree, ModelKind::knn, ModelKind::forest, ModelKind::grnn,
                      ModelKind::mlp, ModelKind::kan}) {
        ModelSpec s;
        s.kind = kind;
        s.seed = seed;
        specs.push_back(s);
    }
    return specs;
}

namespace {
constexpr std::string_view kModeNames[] = {"with-label", "no-label", "no-label-plus-t1"};
}

std::string_view to_string(ExperimentMode mode) { return kModeNames[static_cast<int>(mode)]; }

ExperimentMode experiment_mode_from_string(std::string_view name) {
    for (int m = 0; m < 3; ++m) {
        if (kModeNames[m] == name) return static_cast<ExperimentMode>(m);
    }
    throw std::invalid_argument("unknown experiment mode '" + std::string(name) + "'");
}

FeatureTable experiment_table(const FeatureTable& table, ExperimentMode mode) {
    auto is_t1 = [](const std::string& n) { return n.size() > 3 && n.ends_with("_t1"); };
    std::vector<std::string> keep;
    bool has_t1 = false;
    for (const auto& n : table.names) {
        if (is_t1(n)) {
            has_t1 = true;
            if (mode == ExperimentMode::no_label_plus_t1) keep.push_back(n);
        } else if (n == "cont_no") {
            if (mode == ExperimentMode::with_label) keep.push_back(n);
        } else {
            keep.push_back(n);
        }
    }
    if (mode == ExperimentMode::with_label && !table.has("cont_no")) {
        throw std::invalid_argument("mode with-label needs a cont_no column");
    }
    if (mode == ExperimentMode::no_label_plus_t1 && !has_t1) {
        throw std::invalid_argument("mode no-label-plus-t1 needs the *_t1 generator power columns");
    }
    return table.select_columns(keep);
}

ExperimentResult run_experiment(const FeatureTable& table, ExperimentMode mode, const std::vector<ModelSpec>& specs,
                                const SelectionOptions& selection, const CvOptions& cv) {
    ExperimentResult out;
    out.mode = mode;
    const auto input = experiment_table(table, mode);
    out.selection = select_features(input, selection);
    out.records = run_bench(apply_selection(input, out.selection), specs, cv);
    return out;
}

void write_eval_csv(std::ostream& os, const std::vector<EvalRecord>& records) {
    os << "model,r2,mse,mae,mape_pct,n,parameters\n";
    for (const auto& r : records) {
        os << to_string(r.spec.kind) << ',' << opt_number(r.aggregate.r2) << ',' << format_number(r.aggregate.mse)
           << ',' << format_number(r.aggregate.mae) << ',' << opt_number(r.aggregate.mape_pct) << ','
           << r.aggregate.n << ',';
        if (r.parameter_count) os << *r.parameter_count;
        os << '\n';
    }
}

void write_cluster_csv(std::ostream& os, const std::vector<EvalRecord>& records) {
    os << "model,cluster,lo,hi,n,mse\n";
    for (const auto& r : records) {
        for (std::size_t c = 0; c < r.clusters.size(); ++c) {
            const auto& s = r.clusters[c];
            os << to_string(r.spec.kind) << ',' << c << ',' << (std::isinf(s.lo) ? "" : format_number(s.lo)) << ','
               << (std::isinf(s.hi) ? "" : format_number(s.hi)) << ',' << s.n << ',' << opt_number(s.mse) << '\n';
        }
    }
}

void write_folds_csv(std::ostream& os, const std::vector<EvalRecord>& records) {
    os << "model,fold,n_train,n_test,r2,mse,mae,mape_pct\n";
    for (const auto& r : records) {
        for (const auto& f : r.folds) {
            os << to_string(r.spec.kind) << ',' << f.fold << ',' << f.n_train << ',' << f.n_test << ','
               << opt_number(f.metrics.r2) << ',' << format_number(f.metrics.mse) << ','
               << format_number(f.metrics.mae) << ',' << opt_number(f.metrics.mape_pct) << '\n';
        }
    }
}

void write_experiment_csv(std::ostream& os, const std::vector<ExperimentResult>& results) {
    os << "mode,model,features,r2,mse,mae,mape_pct\n";
    for (const auto& e : results) {
        std::string features;
        for (const auto& f : e.selection.kept) features += (features.empty() ? "" : ";") + f;
        for (const auto& r : e.records) {
            os << to_string(e.mode) << ',' << to_string(r.spec.kind) << ',' << features << ','
               << opt_number(r.aggregate.r2) << ',' << format_number(r.aggregate.mse) << ','
               << format_number(r.aggregate.mae) << ',' << opt_number(r.aggregate.mape_pct) << '\n';
        }
    }
}

void print_eval_table(std::ostream& os, const std::vector<EvalRecord>& records) {
    auto cell = [](const std::optional<double>& v, int prec, bool sci) {
        if (!v) return std::string("-");
        std::ostringstream s;
        s << (sci ? std::scientific : std::fixed) << std::setprecision(prec) << *v;
        return s.str();
    };
    os << std::left << std::setw(8) << "model" << std::right << std::setw(9) << "r2" << std::setw(12) << "mse"
       << std::setw(12) << "mae" << std::setw(10) << "mape%";
    for (std::size_t c = 0; c < (records.empty() ? 0 : records.front().clusters.size()); ++c) {
        os << std::setw(12) << ("mse_c" + std::to_string(c));
    }
    os << '\n';
    for (const auto& r : records) {
        os << std::left << std::setw(8) << to_string(r.spec.kind) << std::right << std::setw(9)
           << cell(r.aggregate.r2, 4, false) << std::setw(12) << cell(r.aggregate.mse, 3, true) << std::setw(12)
           << cell(r.aggregate.mae, 3, true) << std::setw(10) << cell(r.aggregate.mape_pct, 2, false);
        for (const auto& c : r.clusters) os << std::setw(12) << cell(c.mse, 3, true);
        os << '\n';
    }
}

}  // namespace cctlab
