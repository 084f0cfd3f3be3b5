// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.
#include "cctlab/cct.hpp"
#include "cctlab/dataset_io.hpp"
#include "cctlab/evaluation.hpp"
#include "cctlab/regress.hpp"
#include "cctlab/scenario.hpp"
#include "cctlab/selection.hpp"
#include "cctlab/tds.hpp"
#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

using namespace cctlab;
using cctlab::testing::equal_area;
using cctlab::testing::make_smib;
using cctlab::testing::wscc9;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int n, bool pass, const std::string& detail) {
    if (!pass) ++failures;
    std::cout << "criterion " << std::setw(2) << n << ' ' << (pass ? "PASS" : "FAIL") << "  " << detail << std::endl;
}

// Runs one criterion; an exception counts as a failure with its message.
void criterion(int n, const std::function<std::pair<bool, std::string>()>& body) {
    try {
        const auto [pass, detail] = body();
        report(n, pass, detail);
    } catch (const std::exception& e) {
        report(n, false, std::string("exception: ") + e.what());
    }
}

std::string num(double v, int prec = 4) {
    std::ostringstream s;
    s << std::setprecision(prec) << v;
    return s.str();
}

const ContingencySpec& contingency(const CaseFile& file, int number) {
    for (const auto& c : file.contingencies) {
        if (c.number == number) return c;
    }
    throw std::runtime_error("no contingency " + std::to_string(number));
}

Eigen::VectorXd uniform(Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXd v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

template <class LossAt>
double worst_gradient_error(const Eigen::VectorXd& params, const Eigen::VectorXd& grad, LossAt&& loss_at) {
    const double h = 1e-5;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < params.size(); ++i) {
        Eigen::VectorXd p = params;
        p(i) += h;
        const double up = loss_at(p);
        p(i) -= 2.0 * h;
        const double down = loss_at(p);
        const double fd = (up - down) / (2.0 * h);
        worst = std::max(worst, std::abs(grad(i) - fd) / std::max({std::abs(grad(i)), std::abs(fd), 1e-5}));
    }
    return worst;
}

}  // namespace

int main() {
    constexpr std::uint64_t kSeed = 2024;
    constexpr unsigned kWorkers = 8;
    const auto file = wscc9();

    criterion(1, [] {
        const auto smib = make_smib(0.8, 5.0);
        const auto oracle = equal_area(smib, smib.net.omega_s());
        const auto t0 = Clock::now();
        const auto r = find_cct(smib.net, base_scenario(smib.net), smib.contingency);
        const double wall = seconds_since(t0);
        const double err = std::abs(r.value - oracle.t_clear);
        return std::pair{r.kind == CctKind::finite && err < 2e-3 && wall < 1.0,
                         "smib cct " + num(r.value, 6) + " s vs equal-area " + num(oracle.t_clear, 6) + " s, |err| " +
                             num(err, 3) + " (< 2e-3), " + num(wall, 3) + " s wall (< 1)"};
    });

    criterion(2, [] {
        MlpRegressor m(ModelSpec{.kind = ModelKind::mlp});
        m.initialize(5, 1);
        const auto count = *m.parameter_count();
        return std::pair{count == 1066, "5-input mlp has " + std::to_string(count) + " parameters (== 1066)"};
    });

    // Full-size dataset, shared by criteria 3, 4, 5, 8 and 9.
    Dataset dataset;
    double gen_seconds = 0.0;
    criterion(3, [&] {
        DatasetOptions opts;
        opts.workers = kWorkers;
        const auto t0 = Clock::now();
        dataset = build_dataset(file.network, file.contingencies, file.uncertainty, 150, kSeed, opts);
        gen_seconds = seconds_since(t0);
        const std::size_t total = file.contingencies.size() * 150;
        const double retained = static_cast<double>(dataset.rows.size()) / static_cast<double>(total);
        std::map<int, std::pair<double, int>> sums;
        for (const auto& r : dataset.rows) {
            sums[r.features.cont_no].first += r.cct;
            sums[r.features.cont_no].second += 1;
        }
        bool in_band = sums.size() == file.contingencies.size();
        std::map<int, double> mean;
        std::ostringstream means;
        for (const auto& [c, s] : sums) {
            mean[c] = s.first / s.second;
            in_band = in_band && mean[c] >= 0.1 && mean[c] <= 0.6;
            means << ' ' << c << ':' << num(mean[c], 3);
        }
        const bool ordered = mean.count(3) && mean.count(9) && mean[3] < mean[9];
        return std::pair{gen_seconds < 1800.0 && retained >= 0.95 && in_band && ordered,
                         std::to_string(dataset.rows.size()) + "/" + std::to_string(total) + " rows (>= 95%), " +
                             num(gen_seconds, 3) + " s (< 1800), means in [0.1, 0.6]:" + means.str() +
                             ", mean3 < mean9 " + (ordered ? "yes" : "no")};
    });

    criterion(4, [&] {
        if (dataset.rows.empty()) return std::pair{false, std::string("no dataset")};
        std::mt19937_64 rng(kSeed);
        std::vector<std::size_t> idx(dataset.rows.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(std::min<std::size_t>(50, idx.size()));
        const CctOptions opts;
        int ok = 0;
        for (auto i : idx) {
            const auto& row = dataset.rows[i];
            const auto study = prepare_study(file.network, row.scenario, contingency(file, row.features.cont_no));
            const bool at = check_b_stability(study.model, opts.schedule(row.cct), opts.beta_deg).stable;
            const bool above = check_b_stability(study.model, opts.schedule(row.cct + 2e-4), opts.beta_deg).stable;
            ok += (at && !above) ? 1 : 0;
        }
        return std::pair{ok == static_cast<int>(idx.size()),
                         std::to_string(ok) + "/" + std::to_string(idx.size()) +
                             " rows stable at cct and unstable at cct + 2e-4 (100%)"};
    });

    const FeatureTable full = dataset.rows.empty() ? FeatureTable{} : to_table(dataset, true);

    criterion(5, [&] {
        const auto input = experiment_table(full, ExperimentMode::with_label);
        const auto report = select_features(input);
        const auto kept = report.kept.size();

        std::vector<Eigen::Index> perm(static_cast<std::size_t>(input.rows()));
        std::iota(perm.begin(), perm.end(), 0);
        std::mt19937_64 rng(7);
        std::shuffle(perm.begin(), perm.end(), rng);
        const bool invariant =
            report_json(select_features(input.select_rows(perm))).dump() == report_json(report).dump();

        // Duplicate the top-ranked column under a new name.
        auto dup = input;
        const auto top = report.mic_ranking.front().feature;
        dup.names.push_back(top + "_copy");
        dup.x.conservativeResize(Eigen::NoChange, dup.cols() + 1);
        dup.x.col(dup.cols() - 1) = input.x.col(*input.find(top));
        const auto dr = select_features(dup);
        const auto n_orig = std::count(dr.kept.begin(), dr.kept.end(), top);
        const auto n_copy = std::count(dr.kept.begin(), dr.kept.end(), top + "_copy");
        const bool one_copy = n_orig + n_copy == 1 && dr.kept.size() == kept;

        std::string list;
        for (const auto& k : report.kept) list += (list.empty() ? "" : ",") + k;
        return std::pair{kept >= 4 && kept <= 7 && invariant && one_copy,
                         "kept " + std::to_string(kept) + " of " + std::to_string(input.cols()) + " [" + list +
                             "] (4..7), permutation invariant " + (invariant ? "yes" : "no") +
                             ", duplicate loses one copy " + (one_copy ? "yes" : "no")};
    });

    criterion(6, [] {
        const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(200, 0.0, 5.0);
        const double mono = mic(x, (x.array().exp() + x.array()).matrix());

        const Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(500, 0.0, 1.0);
        double null_worst = 0.0;
        for (std::uint64_t s = 1; s <= 20; ++s) {
            std::vector<double> tmp(u.begin(), u.end());
            std::mt19937_64 rng(s);
            std::shuffle(tmp.begin(), tmp.end(), rng);
            null_worst = std::max(null_worst, mic(u, Eigen::Map<Eigen::VectorXd>(tmp.data(), u.size())));
        }

        Eigen::VectorXd a(5), b(5);
        a << 1, 2, 3, 4, 5;
        b << 5, 6, 7, 8, 7;
        const double hand = *scc(a, b);

        const auto p = uniform(300, 11);
        const Eigen::VectorXd q = p.array().square() + 0.3 * uniform(300, 12).array();
        const Eigen::VectorXd pe = p.array().exp();
        const bool rank_inv = mic(p, q) == mic(pe, q) && *scc(p, q) == *scc(pe, q);

        return std::pair{mono >= 0.99 && null_worst <= 0.25 && std::abs(hand - 0.825) < 1e-12 && rank_inv,
                         "monotone mic " + num(mono) + " (>= 0.99), null mic max " + num(null_worst, 3) +
                             " (<= 0.25), scc hand " + num(hand, 15) + " (0.825), exp invariance " +
                             (rank_inv ? "exact" : "broken")};
    });

    criterion(7, [] {
        Eigen::VectorXd t(2), p(2);
        t << 0.2, 0.4;
        p << 0.3, 0.3;
        const auto m = compute_metrics(t, p);
        const bool hand = std::abs(m.mse - 0.01) < 1e-12 && std::abs(m.mae - 0.1) < 1e-12 && m.mape_pct &&
                          std::abs(*m.mape_pct - 37.5) < 1e-12;
        Eigen::VectorXd y(5);
        y << 0.21, 0.34, 0.29, 0.41, 0.18;
        const auto r2 = compute_metrics(y, Eigen::VectorXd::Constant(5, y.mean())).r2;
        const bool zero = r2 && *r2 == 0.0;
        return std::pair{hand && zero, std::string("hand example mse/mae/mape ") + (hand ? "exact" : "off") +
                                           ", mean predictor r2 " + (r2 ? num(*r2) : "undefined") + " (== 0)"};
    });

    CvOptions cv;
    cv.k = 5;
    cv.seed = kSeed;
    cv.workers = static_cast<int>(kWorkers);

    criterion(8, [&] {
        const auto res = run_experiment(full, ExperimentMode::with_label, default_model_specs(kSeed), {}, cv);
        std::map<ModelKind, double> r2;
        std::string table;
        for (const auto& r : res.records) {
            r2[r.spec.kind] = r.aggregate.r2.value_or(-1e9);
            table += std::string(table.empty() ? "" : " ") + std::string(to_string(r.spec.kind)) + " " +
                     num(r2[r.spec.kind]);
        }
        const double neural = std::min({r2[ModelKind::mlp], r2[ModelKind::grnn], r2[ModelKind::kan]});
        const double classic =
            std::max({r2[ModelKind::linear], r2[ModelKind::tree], r2[ModelKind::knn], r2[ModelKind::forest]});
        return std::pair{neural > classic && r2[ModelKind::mlp] >= 0.90,
                         "r2: " + table + "; min neural " + num(neural) + " > max classic " + num(classic) +
                             ", mlp >= 0.90"};
    });

    criterion(9, [&] {
        std::vector<ModelSpec> specs;
        for (const auto& s : default_model_specs(kSeed)) {
            if (s.kind == ModelKind::mlp || s.kind == ModelKind::grnn) specs.push_back(s);
        }
        const auto plain = run_experiment(full, ExperimentMode::no_label, specs, {}, cv);
        const auto t1 = run_experiment(full, ExperimentMode::no_label_plus_t1, specs, {}, cv);
        bool pass = true;
        std::string detail;
        for (std::size_t i = 0; i < specs.size(); ++i) {
            const double a = plain.records[i].aggregate.r2.value_or(-1e9);
            const double b = t1.records[i].aggregate.r2.value_or(-1e9);
            pass = pass && b >= 0.80 && b - a >= 0.1;
            detail += std::string(detail.empty() ? "" : "; ") + std::string(to_string(specs[i].kind)) +
                      " plus-t1 " + num(b) + " (>= 0.80), no-label " + num(a) + ", gain " + num(b - a, 3) +
                      " (>= 0.1)";
        }
        return std::pair{pass, detail};
    });

    criterion(10, [&] {
        const auto z = [] {
            Eigen::MatrixXd m(40, 5);
            for (Eigen::Index c = 0; c < 5; ++c) m.col(c) = uniform(40, 30 + static_cast<std::uint64_t>(c));
            return m;
        }();
        const Eigen::VectorXd t = (z.col(0).array().sin() + z.col(1).array() * z.col(2).array()).matrix();

        MlpRegressor mlp(ModelSpec{.kind = ModelKind::mlp});
        mlp.initialize(5, 3);
        const auto mg = mlp.loss_gradient(z, t);
        const Eigen::VectorXd mbase = mlp.parameters();
        const double mlp_err = worst_gradient_error(mbase, mg.gradient, [&](const Eigen::VectorXd& p) {
            mlp.set_parameters(p);
            return mlp.loss_gradient(z, t).loss;
        });

        KanRegressor kan(ModelSpec{.kind = ModelKind::kan});
        kan.initialize(z, 4);
        const auto kg = kan.loss_gradient(z, t);
        const Eigen::VectorXd kbase = kan.parameters();
        const double kan_err = worst_gradient_error(kbase, kg.gradient, [&](const Eigen::VectorXd& p) {
            kan.set_parameters(p);
            return kan.loss_gradient(z, t).loss;
        });

        const SplineGrid grid{-1.3, 2.1, 4, 3};
        std::vector<double> v(static_cast<std::size_t>(grid.basis_count()));
        double pou = 0.0;
        for (double x = -1.3; x <= 2.1; x += 0.0017) {
            grid.evaluate(x, v.data());
            pou = std::max(pou, std::abs(std::accumulate(v.begin(), v.end(), 0.0) - 1.0));
        }

        const auto study = prepare_study(file.network, base_scenario(file.network), contingency(file, 3));
        auto coarse = SimulationSchedule::for_duration(0.15);
        auto fine = coarse;
        fine.step = coarse.step / 2.0;
        const double drift = std::abs(b_stability_index(simulate(study.model, coarse), 1.0) -
                                      b_stability_index(simulate(study.model, fine), 1.0));

        const auto s1 = prepare_study(file.network, base_scenario(file.network), contingency(file, 1));
        TransientModel m = s1.model;
        for (auto* y : {&m.prefault, &m.faulton, &m.postfault}) *y = Eigen::MatrixXcd(Complex(0.0, 1.0) * y->imag());
        m.d.setZero();
        m.p_mech = electrical_power(m.prefault, m.e_mag, m.delta0);
        const auto traj = simulate(m, SimulationSchedule::for_duration(0.12));
        double momentum = 0.0;
        for (const auto& w : traj.omega_dev) {
            momentum = std::max(momentum, std::abs((2.0 * m.h).cwiseProduct(w).sum() / m.omega_s));
        }

        return std::pair{mlp_err < 1e-5 && kan_err < 1e-5 && pou < 1e-12 && drift < 0.5 && momentum < 1e-6,
                         "grad rel err mlp " + num(mlp_err, 2) + " kan " + num(kan_err, 2) + " (< 1e-5), unity " +
                             num(pou, 2) + " (< 1e-12), eta drift " + num(drift, 3) + " deg (< 0.5), momentum " +
                             num(momentum, 2) + " (< 1e-6)"};
    });

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
