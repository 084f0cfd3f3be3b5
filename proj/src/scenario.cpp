#include "cctlab/scenario.hpp"

#include "cctlab/case_io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <random>
#include <stdexcept>
#include <thread>

namespace cctlab {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double weibull_cv(double shape) {
    const double g1 = std::tgamma(1.0 + 1.0 / shape);
    const double g2 = std::tgamma(1.0 + 2.0 / shape);
    return std::sqrt(g2 / (g1 * g1) - 1.0);
}

}  // namespace

WeibullParams weibull_from_moments(double mean, double cv) {
    if (!(mean > 0.0) || !(cv > 0.0)) throw std::invalid_argument("Weibull mean and cv must be positive");
    // cv is strictly decreasing in the shape parameter.
    double lo = 0.05;
    double hi = 200.0;
    if (cv > weibull_cv(lo) || cv < weibull_cv(hi)) throw std::invalid_argument("Weibull cv out of range");
    for (int i = 0; i < 200 && hi - lo > 1e-13 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (weibull_cv(mid) > cv) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    WeibullParams out;
    out.shape = 0.5 * (lo + hi);
    out.scale = mean / std::tgamma(1.0 + 1.0 / out.shape);
    return out;
}

void UncertaintySpec::validate() const {
    for (const auto& l : loads) {
        if (!(l.lo_frac < l.hi_frac)) throw std::invalid_argument("load bounds need lo_frac < hi_frac");
        if (!(l.sigma_frac > 0.0)) throw std::invalid_argument("load sigma_frac must be positive");
        if (l.base < 0.0) throw std::invalid_argument("load base must be non-negative");
    }
    if (solar) {
        if (!(solar->lo_frac < solar->hi_frac)) throw std::invalid_argument("solar bounds need lo_frac < hi_frac");
        if (!(solar->alpha > 0.0) || !(solar->beta_shape > 0.0)) {
            throw std::invalid_argument("solar Beta shapes must be positive");
        }
    }
    if (wind) {
        if (!(wind->cv > 0.0)) throw std::invalid_argument("wind cv must be positive");
        if (!(wind->base > 0.0)) throw std::invalid_argument("wind base must be positive");
    }
}

UncertaintySpec default_uncertainty(const NetworkCase& net) {
    UncertaintySpec spec;
    for (auto idx : net.load_buses()) spec.loads.push_back(LoadUncertainty{.base = net.buses[idx].p_load});
    for (const auto& inj : net.injections) {
        if (inj.source == InjectionSource::solar) spec.solar = SolarUncertainty{.base = inj.p};
        if (inj.source == InjectionSource::wind) spec.wind = WindUncertainty{.base = inj.p};
    }
    return spec;
}

std::vector<Scenario> sample_scenarios(const UncertaintySpec& spec, std::size_t n, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(seed);
    std::optional<WeibullParams> wind;
    if (spec.wind) wind = weibull_from_moments(spec.wind->base, spec.wind->cv);

    std::vector<Scenario> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        Scenario s;
        s.seed_index = k;
        for (const auto& load : spec.loads) {
            if (load.base == 0.0) {
                s.p_loads.push_back(0.0);
                continue;
            }
            std::normal_distribution<double> gauss(load.base, load.sigma_frac * load.base);
            const double lo = load.lo_frac * load.base;
            const double hi = load.hi_frac * load.base;
            double value = gauss(rng);
            while (value < lo || value > hi) value = gauss(rng);
            s.p_loads.push_back(value);
        }
        if (spec.solar) {
            std::gamma_distribution<double> ga(spec.solar->alpha, 1.0);
            std::gamma_distribution<double> gb(spec.solar->beta_shape, 1.0);
            const double x = ga(rng);
            const double y = gb(rng);
            const double unit = x / (x + y);
            s.p_solar =
                spec.solar->base * (spec.solar->lo_frac + (spec.solar->hi_frac - spec.solar->lo_frac) * unit);
        }
        if (wind) {
            std::weibull_distribution<double> weibull(wind->shape, wind->scale);
            s.p_wind = weibull(rng);
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::uint64_t contingency_seed(std::uint64_t seed, int cont_no) {
    return splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(cont_no));
}

Dataset build_dataset(const NetworkCase& net, const std::vector<ContingencySpec>& contingencies,
                      const UncertaintySpec& spec, std::size_t n_per_contingency, std::uint64_t seed,
                      const DatasetOptions& options) {
    net.validate();
    spec.validate();
    options.cct.validate();
    for (const auto& c : contingencies) validate_contingency(net, c);

    Dataset dataset;
    auto& prov = dataset.provenance;
    prov.seed = seed;
    prov.case_hash = case_fingerprint(net);
    prov.n_per_contingency = n_per_contingency;
    prov.cct = options.cct;
    for (const auto& c : contingencies) prov.contingencies.push_back(c.number);

    struct Task {
        const ContingencySpec* contingency;
        Scenario scenario;
    };
    std::vector<Task> tasks;
    tasks.reserve(contingencies.size() * n_per_contingency);
    for (const auto& c : contingencies) {
        for (auto& s : sample_scenarios(spec, n_per_contingency, contingency_seed(seed, c.number))) {
            tasks.push_back(Task{&c, std::move(s)});
        }
    }

    struct Outcome {
        std::optional<DatasetRow> row;
        std::string excluded_reason;
    };
    std::vector<Outcome> outcomes(tasks.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1)) {
            const auto& task = tasks[i];
            auto& outcome = outcomes[i];
            try {
                const Study study = prepare_study(net, task.scenario, *task.contingency);
                const CctResult cct = find_cct(study.model, options.cct);
                if (cct.kind == CctKind::zero) {
                    outcome.excluded_reason = "zero";
                } else if (cct.kind == CctKind::infinite) {
                    outcome.excluded_reason = "infinite";
                } else {
                    outcome.row = DatasetRow{capture_features(study, *task.contingency), cct.value, task.scenario};
                }
            } catch (const GridError& e) {
                outcome.excluded_reason = std::string("nonconverged: ") + e.what();
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };

    const unsigned workers = std::max(1u, options.workers);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    for (std::size_t i = 0; i < tasks.size(); ++i) {
        auto& outcome = outcomes[i];
        if (outcome.row) {
            dataset.rows.push_back(std::move(*outcome.row));
            continue;
        }
        const auto& reason = outcome.excluded_reason;
        if (reason == "zero") {
            ++prov.excluded_zero;
        } else if (reason == "infinite") {
            ++prov.excluded_infinite;
        } else {
            ++prov.excluded_nonconverged;
        }
        prov.excluded.push_back(ExcludedRow{tasks[i].contingency->number, tasks[i].scenario.seed_index, reason});
    }
    return dataset;
}

DatasetSummary summarize(const Dataset& dataset, double bin_width) {
    return summarize(dataset, dataset.provenance.contingencies, bin_width);
}

DatasetSummary summarize(const Dataset& dataset, const std::vector<int>& contingencies, double bin_width) {
    if (!(bin_width > 0.0)) throw std::invalid_argument("histogram bin width must be positive");
    DatasetSummary out;
    std::map<int, std::vector<double>> groups;
    for (const auto& row : dataset.rows) groups[row.features.cont_no].push_back(row.cct);

    std::vector<int> order = contingencies;
    for (const auto& [cont, _] : groups) {
        if (std::find(order.begin(), order.end(), cont) == order.end()) order.push_back(cont);
    }
    for (int cont : order) {
        auto it = groups.find(cont);
        if (it == groups.end() || it->second.empty()) {
            out.notes.push_back("contingency " + std::to_string(cont) + " has no retained rows");
            continue;
        }
        const auto& values = it->second;
        ContingencyStats stats;
        stats.cont_no = cont;
        stats.count = values.size();
        double sum = 0.0;
        for (double v : values) sum += v;
        stats.mean = sum / static_cast<double>(values.size());
        if (values.size() > 1) {
            double ss = 0.0;
            for (double v : values) ss += (v - stats.mean) * (v - stats.mean);
            stats.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
        }
        out.per_contingency.push_back(stats);
    }

    out.histogram.bin_width = bin_width;
    if (!dataset.rows.empty()) {
        double lo = dataset.rows.front().cct;
        double hi = lo;
        for (const auto& row : dataset.rows) {
            lo = std::min(lo, row.cct);
            hi = std::max(hi, row.cct);
        }
        out.histogram.start = std::floor(lo / bin_width) * bin_width;
        const auto bins = static_cast<std::size_t>(std::floor((hi - out.histogram.start) / bin_width)) + 1;
        out.histogram.counts.assign(bins, 0);
        for (const auto& row : dataset.rows) {
            auto b = static_cast<std::size_t>(std::floor((row.cct - out.histogram.start) / bin_width));
            out.histogram.counts[std::min(b, bins - 1)]++;
        }
    }
    return out;
}

}  // namespace cctlab
