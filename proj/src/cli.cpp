#include "cctlab/cli.hpp"
#include "cctlab/case_io.hpp"
#include "cctlab/dataset_io.hpp"
#include "cctlab/scenario.hpp"
#include "cctlab/tds.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

namespace cctlab {

namespace fs = std::filesystem;

void RunConfig::validate() const {
    if (n_per_contingency < 1) throw UsageError("n_per_contingency must be at least 1");
    if (workers < 1) throw UsageError("workers must be at least 1");
    if (cv_folds < 2) throw UsageError("cv folds must be at least 2");
    if (!std::is_sorted(cluster_boundaries.begin(), cluster_boundaries.end())) {
        throw UsageError("cluster boundaries must be ascending");
    }
    if (!(selection.mic_floor >= 0.0 && selection.mic_floor < 1.0)) throw UsageError("mic_floor must be in [0, 1)");
    if (!(selection.scc_threshold > 0.0 && selection.scc_threshold <= 1.0)) {
        throw UsageError("scc_threshold must be in (0, 1]");
    }
    try {
        cct.validate();
        selection.mic.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (!fs::exists(case_path)) throw UsageError("case file not found: " + case_path.string());
}

fs::path bundled_case_path() { return CCTLAB_DEFAULT_CASE; }

namespace {

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
            throw UsageError("unknown key '" + key + "' in " + where);
        }
    }
}

fs::path resolve(const fs::path& p, const fs::path& base) { return p.is_absolute() ? p : base / p; }

}  // namespace

RunConfig parse_run_config(const nlohmann::json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw UsageError("config must be a JSON object");
    reject_unknown(j,
                   {"case_path", "contingencies", "uncertainty", "seed", "n_per_contingency", "workers", "cct",
                    "selection", "models", "cv", "with_t1", "output_dir"},
                   "config");
    RunConfig c;
    try {
        c.case_path = j.contains("case_path") ? resolve(j.at("case_path").get<std::string>(), base_dir)
                                              : bundled_case_path();
        c.contingencies = j.value("contingencies", c.contingencies);
        if (j.contains("uncertainty")) c.uncertainty = j.at("uncertainty");
        c.seed = j.value("seed", c.seed);
        c.n_per_contingency = j.value("n_per_contingency", c.n_per_contingency);
        c.workers = j.value("workers", c.workers);
        if (j.contains("cct")) {
            const auto& k = j.at("cct");
            reject_unknown(k, {"beta_deg", "bracket_max", "tol", "t_fault", "horizon", "step"}, "cct");
            c.cct.beta_deg = k.value("beta_deg", c.cct.beta_deg);
            c.cct.bracket_max = k.value("bracket_max", c.cct.bracket_max);
            c.cct.tol = k.value("tol", c.cct.tol);
            c.cct.t_fault = k.value("t_fault", c.cct.t_fault);
            c.cct.horizon = k.value("horizon", c.cct.horizon);
            c.cct.step = k.value("step", c.cct.step);
        }
        if (j.contains("selection")) {
            const auto& s = j.at("selection");
            reject_unknown(s, {"mic_floor", "scc_threshold", "mic_exponent", "mic_min_bins"}, "selection");
            c.selection.mic_floor = s.value("mic_floor", c.selection.mic_floor);
            c.selection.scc_threshold = s.value("scc_threshold", c.selection.scc_threshold);
            c.selection.mic.exponent = s.value("mic_exponent", c.selection.mic.exponent);
            c.selection.mic.min_bins = s.value("mic_min_bins", c.selection.mic.min_bins);
        }
        if (j.contains("models")) {
            std::vector<ModelSpec> models;
            for (auto m : j.at("models")) {
                // Models without their own seed follow the run seed.
                if (!m.contains("seed")) m["seed"] = c.seed;
                models.push_back(m.get<ModelSpec>());
            }
            c.models = std::move(models);
        }
        if (j.contains("cv")) {
            const auto& v = j.at("cv");
            reject_unknown(v, {"folds", "cluster_boundaries"}, "cv");
            c.cv_folds = v.value("folds", c.cv_folds);
            c.cluster_boundaries = v.value("cluster_boundaries", c.cluster_boundaries);
        }
        c.with_t1 = j.value("with_t1", c.with_t1);
        if (j.contains("output_dir")) c.output_dir = resolve(j.at("output_dir").get<std::string>(), base_dir);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("config " + path.string() + ": " + e.what());
    }
    return parse_run_config(j, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

nlohmann::json run_config_json(const RunConfig& c) {
    nlohmann::json j;
    j["case_path"] = c.case_path.string();
    j["contingencies"] = c.contingencies;
    j["uncertainty"] = c.uncertainty;
    j["seed"] = c.seed;
    j["n_per_contingency"] = c.n_per_contingency;
    j["workers"] = c.workers;
    j["cct"] = {{"beta_deg", c.cct.beta_deg}, {"bracket_max", c.cct.bracket_max}, {"tol", c.cct.tol},
                {"t_fault", c.cct.t_fault},   {"horizon", c.cct.horizon},         {"step", c.cct.step}};
    j["selection"] = {{"mic_floor", c.selection.mic_floor},
                      {"scc_threshold", c.selection.scc_threshold},
                      {"mic_exponent", c.selection.mic.exponent},
                      {"mic_min_bins", c.selection.mic.min_bins}};
    if (c.models) j["models"] = *c.models;
    j["cv"] = {{"folds", c.cv_folds}, {"cluster_boundaries", c.cluster_boundaries}};
    j["with_t1"] = c.with_t1;
    j["output_dir"] = c.output_dir.string();
    return j;
}

std::vector<ModelSpec> default_models_for(ExperimentMode mode, std::uint64_t seed) {
    auto all = default_model_specs(seed);
    if (mode == ExperimentMode::with_label) return all;
    std::vector<ModelSpec> two;
    for (const auto& s : all) {
        if (s.kind == ModelKind::mlp || s.kind == ModelKind::grnn) two.push_back(s);
    }
    return two;
}

namespace {

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::optional<std::string> out_dir;
    std::string mode = "with-label";
};

RunConfig resolve_config(const Common& o) {
    RunConfig c = o.config_path.empty() ? parse_run_config(nlohmann::json::object()) : load_run_config(o.config_path);
    if (o.seed) {
        c.seed = *o.seed;
        if (c.models) {
            for (auto& m : *c.models) m.seed = *o.seed;
        }
    }
    if (o.workers) c.workers = *o.workers;
    if (o.out_dir) c.output_dir = *o.out_dir;
    c.validate();
    return c;
}

CaseFile load_case(const RunConfig& c) {
    CaseFile file;
    try {
        file = load_case_file(c.case_path);
        if (!c.uncertainty.empty()) file.uncertainty = uncertainty_from_json(c.uncertainty, file.uncertainty);
        file.uncertainty.validate();
    } catch (const GridError&) {
        throw;
    } catch (const std::exception& e) {
        throw UsageError("case " + c.case_path.string() + ": " + e.what());
    }
    if (!c.contingencies.empty()) {
        std::vector<ContingencySpec> picked;
        for (int n : c.contingencies) {
            auto it = std::find_if(file.contingencies.begin(), file.contingencies.end(),
                                   [&](const ContingencySpec& s) { return s.number == n; });
            if (it == file.contingencies.end()) throw UsageError("case has no contingency " + std::to_string(n));
            picked.push_back(*it);
        }
        file.contingencies = std::move(picked);
    }
    return file;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw UsageError("cannot write " + path.string());
    return os;
}

fs::path prepare_dir(const RunConfig& c) {
    std::error_code ec;
    fs::create_directories(c.output_dir, ec);
    if (ec) throw UsageError("cannot create output directory " + c.output_dir.string() + ": " + ec.message());
    return c.output_dir;
}

FeatureTable read_dataset(const std::string& path) {
    if (!fs::exists(path)) throw UsageError("dataset not found: " + path);
    try {
        return read_table_csv(fs::path(path));
    } catch (const std::exception& e) {
        throw UsageError("dataset " + path + ": " + e.what());
    }
}

ExperimentMode parse_mode(const std::string& name) {
    try {
        return experiment_mode_from_string(name);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

std::string fixed(double v, int prec) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(prec) << v;
    return s.str();
}

// --- simulate -------------------------------------------------------------

struct SimulateArgs {
    int contingency = 0;
    double duration = 0.1;
    std::string scenario_path;
    bool find = false;
};

Scenario scenario_override(const NetworkCase& net, const std::string& path) {
    Scenario s = base_scenario(net);
    if (path.empty()) return s;
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open scenario " + path);
    try {
        nlohmann::json j;
        in >> j;
        reject_unknown(j, {"p_loads", "p_solar", "p_wind", "seed_index"}, "scenario");
        s.p_loads = j.value("p_loads", s.p_loads);
        s.p_solar = j.value("p_solar", s.p_solar);
        s.p_wind = j.value("p_wind", s.p_wind);
        s.seed_index = j.value("seed_index", s.seed_index);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("scenario " + path + ": " + e.what());
    }
    return s;
}

int cmd_simulate(const RunConfig& c, const SimulateArgs& a, std::ostream& out) {
    const auto file = load_case(c);
    const int number = a.contingency != 0 ? a.contingency
                                          : (file.contingencies.empty() ? 0 : file.contingencies.front().number);
    auto it = std::find_if(file.contingencies.begin(), file.contingencies.end(),
                           [&](const ContingencySpec& s) { return s.number == number; });
    if (it == file.contingencies.end()) throw UsageError("case has no contingency " + std::to_string(number));
    if (!(a.duration >= 0.0) || a.duration > c.cct.horizon) throw UsageError("duration must be in [0, horizon]");
    const auto scenario = scenario_override(file.network, a.scenario_path);

    const auto study = prepare_study(file.network, scenario, *it);
    const auto schedule = c.cct.schedule(a.duration);
    const auto traj = simulate(study.model, schedule);
    const double eta = b_stability_index(traj, schedule.t_fault);
    const bool stable = is_b_stable(traj, c.cct.beta_deg, schedule.t_fault);

    const auto dir = prepare_dir(c);
    auto os = open_out(dir / "trajectory.csv");
    write_trajectory_csv(os, traj);

    out << "contingency " << number << '\n';
    out << "duration " << format_number(a.duration) << '\n';
    out << "eta_deg " << format_number(eta) << '\n';
    out << "verdict " << (stable ? "stable" : "unstable") << '\n';
    if (traj.diverged_at) out << "diverged_at " << format_number(*traj.diverged_at) << '\n';
    if (a.find) {
        const auto r = find_cct(study.model, c.cct);
        out << "cct_kind " << to_string(r.kind) << '\n';
        if (r.kind == CctKind::finite) out << "cct " << format_number(r.value) << '\n';
        out << "cct_evaluations " << r.evaluations << '\n';
    }
    out << "trajectory " << (dir / "trajectory.csv").string() << '\n';
    return 0;
}

// --- dataset --------------------------------------------------------------

int cmd_dataset(const RunConfig& c, std::ostream& out) {
    const auto file = load_case(c);
    DatasetOptions opts;
    opts.cct = c.cct;
    opts.workers = c.workers;
    const auto ds = build_dataset(file.network, file.contingencies, file.uncertainty, c.n_per_contingency, c.seed, opts);
    const auto dir = prepare_dir(c);
    const auto files = save_dataset(ds, dir, c.with_t1);

    std::vector<int> numbers;
    for (const auto& s : file.contingencies) numbers.push_back(s.number);
    const auto summary = summarize(ds, numbers);
    {
        auto os = open_out(dir / "summary.csv");
        os << "cont_no,mean,std,count\n";
        for (const auto& s : summary.per_contingency) {
            os << s.cont_no << ',' << format_number(s.mean) << ',' << format_number(s.std) << ',' << s.count << '\n';
        }
    }
    {
        auto os = open_out(dir / "histogram.csv");
        os << "bin_lo,bin_hi,count\n";
        const auto& h = summary.histogram;
        for (std::size_t b = 0; b < h.counts.size(); ++b) {
            const double lo = h.start + static_cast<double>(b) * h.bin_width;
            os << std::setprecision(10) << lo << ',' << lo + h.bin_width << ',' << h.counts[b] << '\n';
        }
    }

    const std::size_t total = numbers.size() * c.n_per_contingency;
    out << std::left << std::setw(9) << "cont_no" << std::right << std::setw(8) << "mean" << std::setw(9) << "std"
        << std::setw(7) << "n" << '\n';
    for (const auto& s : summary.per_contingency) {
        out << std::left << std::setw(9) << s.cont_no << std::right << std::setw(8) << fixed(s.mean, 3) << std::setw(9)
            << fixed(s.std, 4) << std::setw(7) << s.count << '\n';
    }
    for (const auto& n : summary.notes) out << "note " << n << '\n';
    const auto& p = ds.provenance;
    out << "retained " << ds.rows.size() << " of " << total << '\n';
    out << "excluded zero " << p.excluded_zero << " infinite " << p.excluded_infinite << " nonconverged "
        << p.excluded_nonconverged << '\n';
    out << "dataset " << files.csv.string() << '\n';
    out << "provenance " << files.provenance.string() << '\n';
    // Partial failures are fine as long as at least half the rows survive.
    return 2 * ds.rows.size() >= total ? 0 : 2;
}

// --- select ---------------------------------------------------------------

int cmd_select(const RunConfig& c, const std::string& dataset, ExperimentMode mode, std::ostream& out) {
    const auto table = read_dataset(dataset);
    FeatureTable input;
    try {
        input = experiment_table(table, mode);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const auto dir = prepare_dir(c);
    SelectionReport report;
    try {
        report = select_features(input, c.selection);
    } catch (const SelectionError& e) {
        auto os = open_out(dir / "selection.json");
        os << report_json(e.report()).dump(2) << '\n';
        throw;
    }
    {
        auto os = open_out(dir / "selection.json");
        os << report_json(report).dump(2) << '\n';
    }
    {
        auto os = open_out(dir / "scc_matrix.csv");
        write_scc_csv(os, report);
    }
    {
        auto os = open_out(dir / "selected.csv");
        write_table_csv(os, apply_selection(input, report));
    }
    out << std::left << std::setw(12) << "feature" << std::right << std::setw(8) << "mic" << "  decision\n";
    for (const auto& m : report.mic_ranking) {
        std::string decision = "kept";
        for (const auto& d : report.dropped) {
            if (d.feature == m.feature) decision = d.reason;
        }
        out << std::left << std::setw(12) << m.feature << std::right << std::setw(8) << fixed(m.value, 3) << "  "
            << decision << '\n';
    }
    out << "kept " << report.kept.size() << " of " << report.features.size() << '\n';
    out << "selected " << (dir / "selected.csv").string() << '\n';
    return 0;
}

// --- bench ----------------------------------------------------------------

int cmd_bench(const RunConfig& c, const std::string& dataset, ExperimentMode mode, const std::string& only,
              std::ostream& out) {
    const auto table = read_dataset(dataset);
    auto specs = c.models ? *c.models : default_models_for(mode, c.seed);
    if (!only.empty()) {
        std::set<ModelKind> wanted;
        std::stringstream ss(only);
        for (std::string name; std::getline(ss, name, ',');) {
            try {
                wanted.insert(model_kind_from_string(name));
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
        }
        if (!c.models) specs = default_model_specs(c.seed);
        std::erase_if(specs, [&](const ModelSpec& s) { return !wanted.count(s.kind); });
    }
    if (specs.empty()) throw UsageError("no models to run");

    CvOptions cv;
    cv.k = c.cv_folds;
    cv.seed = c.seed;
    cv.workers = static_cast<int>(c.workers);
    cv.boundaries = c.cluster_boundaries;
    try {
        experiment_table(table, mode);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (static_cast<std::size_t>(table.rows()) < static_cast<std::size_t>(cv.k)) {
        throw UsageError("dataset has fewer rows than cv folds");
    }
    const auto result = run_experiment(table, mode, specs, c.selection, cv);

    const auto dir = prepare_dir(c);
    const std::string stem = "bench_" + std::string(to_string(mode));
    {
        auto os = open_out(dir / (stem + ".csv"));
        write_eval_csv(os, result.records);
    }
    {
        auto os = open_out(dir / (stem + "_clusters.csv"));
        write_cluster_csv(os, result.records);
    }
    {
        auto os = open_out(dir / (stem + "_folds.csv"));
        write_folds_csv(os, result.records);
    }
    {
        auto os = open_out(dir / (stem + "_experiment.csv"));
        write_experiment_csv(os, {result});
    }
    {
        auto os = open_out(dir / (stem + "_selection.json"));
        os << report_json(result.selection).dump(2) << '\n';
    }
    {
        // Out-of-fold predictions for parity and cluster plots.
        auto os = open_out(dir / (stem + "_predictions.csv"));
        os << "row,cct";
        for (const auto& r : result.records) os << ',' << to_string(r.spec.kind);
        os << '\n';
        for (Eigen::Index i = 0; i < table.rows(); ++i) {
            os << i << ',' << format_number(table.y(i));
            for (const auto& r : result.records) os << ',' << format_number(r.oof(i));
            os << '\n';
        }
    }

    out << "mode " << to_string(mode) << '\n';
    out << "features";
    for (const auto& f : result.selection.kept) out << ' ' << f;
    out << '\n';
    print_eval_table(out, result.records);
    out << "results " << (dir / (stem + ".csv")).string() << '\n';
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Critical clearing time toolkit: simulation, datasets, feature selection, regression bench", "cctlab"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "Run configuration JSON");
        sub->add_option("--seed", common.seed, "Override the run seed");
        sub->add_option("--workers", common.workers, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--out-dir", common.out_dir, "Output directory");
    };
    auto add_mode = [&](CLI::App* sub) {
        sub->add_option("--mode", common.mode, "Feature set")
            ->check(CLI::IsMember({"with-label", "no-label", "no-label-plus-t1"}));
    };

    SimulateArgs sim;
    auto* simulate_cmd = app.add_subcommand("simulate", "Simulate one fault and report the B-stability verdict");
    add_common(simulate_cmd);
    simulate_cmd->add_option("--contingency", sim.contingency, "Contingency number (default: first in case)");
    simulate_cmd->add_option("--duration", sim.duration, "Fault duration in seconds");
    simulate_cmd->add_option("--scenario", sim.scenario_path, "JSON with p_loads/p_solar/p_wind overrides");
    simulate_cmd->add_flag("--find-cct", sim.find, "Also run the CCT bisection for this scenario");

    auto* dataset_cmd = app.add_subcommand("dataset", "Generate the CCT dataset over contingencies and scenarios");
    add_common(dataset_cmd);

    std::string dataset_path;
    auto* select_cmd = app.add_subcommand("select", "MIC+SCC feature selection on a dataset CSV");
    add_common(select_cmd);
    add_mode(select_cmd);
    select_cmd->add_option("dataset", dataset_path, "Dataset CSV")->required();

    std::string only;
    auto* bench_cmd = app.add_subcommand("bench", "Cross-validated regression bench on a dataset CSV");
    add_common(bench_cmd);
    add_mode(bench_cmd);
    bench_cmd->add_option("dataset", dataset_path, "Dataset CSV")->required();
    bench_cmd->add_option("--models", only, "Comma-separated subset, e.g. mlp,grnn");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    try {
        const auto config = resolve_config(common);
        if (simulate_cmd->parsed()) return cmd_simulate(config, sim, out);
        if (dataset_cmd->parsed()) return cmd_dataset(config, out);
        if (select_cmd->parsed()) return cmd_select(config, dataset_path, parse_mode(common.mode), out);
        return cmd_bench(config, dataset_path, parse_mode(common.mode), only, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const GridError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const RegressError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const SelectionError& e) {
        err << "selection failed: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "failure: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace cctlab
