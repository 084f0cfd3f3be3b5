#include "cctlab/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "cctlab/dataset_io.hpp"

namespace cctlab {

namespace {

// Sorted position of the first member of each sample's tie group. Equal-
// frequency bins are cut on this, so ties never straddle a bin edge and the
// binning depends only on the order of the values.
std::vector<std::size_t> tie_starts(const Eigen::Ref<const Eigen::VectorXd>& v) {
    const auto n = static_cast<std::size_t>(v.size());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v(a) < v(b); });
    std::vector<std::size_t> start(n);
    std::size_t group = 0;
    for (std::size_t p = 0; p < n; ++p) {
        if (p > 0 && v(order[p]) != v(order[p - 1])) group = p;
        start[order[p]] = group;
    }
    return start;
}

std::vector<int> equal_frequency_bins(const std::vector<std::size_t>& starts, int bins) {
    const auto n = starts.size();
    std::vector<int> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<int>(starts[i] * static_cast<std::size_t>(bins) / n);
    return out;
}

// Mutual information in bits. Cell terms are summed in sorted order so that
// swapping the roles of x and y reproduces the value bit for bit.
double binned_mi(const std::vector<int>& bx, int nx, const std::vector<int>& by, int ny, std::vector<double>& terms) {
    const auto n = bx.size();
    std::vector<std::size_t> joint(static_cast<std::size_t>(nx * ny), 0);
    std::vector<std::size_t> mx(static_cast<std::size_t>(nx), 0);
    std::vector<std::size_t> my(static_cast<std::size_t>(ny), 0);
    for (std::size_t i = 0; i < n; ++i) {
        ++joint[static_cast<std::size_t>(bx[i] * ny + by[i])];
        ++mx[static_cast<std::size_t>(bx[i])];
        ++my[static_cast<std::size_t>(by[i])];
    }
    const double total = static_cast<double>(n);
    terms.clear();
    for (int a = 0; a < nx; ++a) {
        for (int b = 0; b < ny; ++b) {
            const auto c = joint[static_cast<std::size_t>(a * ny + b)];
            if (c == 0) continue;
            const double pab = static_cast<double>(c) / total;
            const double pa = static_cast<double>(mx[static_cast<std::size_t>(a)]) / total;
            const double pb = static_cast<double>(my[static_cast<std::size_t>(b)]) / total;
            terms.push_back(pab * std::log2(pab / (pa * pb)));
        }
    }
    std::sort(terms.begin(), terms.end());
    double sum = 0.0;
    for (double t : terms) sum += t;
    return sum;
}

bool constant(const Eigen::Ref<const Eigen::VectorXd>& v) { return v.size() == 0 || v.minCoeff() == v.maxCoeff(); }

}  // namespace

void MicConfig::validate() const {
    if (!(exponent > 0.0 && exponent <= 1.0)) throw std::invalid_argument("MIC exponent must lie in (0, 1]");
    if (min_bins < 2) throw std::invalid_argument("MIC needs at least two bins per axis");
}

double mic(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
           const MicConfig& cfg) {
    cfg.validate();
    if (x.size() != y.size()) throw std::invalid_argument("MIC inputs differ in length");
    const double budget = std::pow(static_cast<double>(x.size()), cfg.exponent);
    if (static_cast<double>(cfg.min_bins * cfg.min_bins) >= budget) {
        throw std::invalid_argument("too few samples for any admissible MIC grid");
    }
    if (constant(x) || constant(y)) return 0.0;

    const auto sx = tie_starts(x);
    const auto sy = tie_starts(y);
    std::vector<double> terms;
    double best = 0.0;
    for (int nx = cfg.min_bins; static_cast<double>(nx * cfg.min_bins) < budget; ++nx) {
        const auto bx = equal_frequency_bins(sx, nx);
        for (int ny = cfg.min_bins; static_cast<double>(nx * ny) < budget; ++ny) {
            const auto by = equal_frequency_bins(sy, ny);
            const double mi = binned_mi(bx, nx, by, ny, terms);
            best = std::max(best, mi / std::log2(static_cast<double>(std::min(nx, ny))));
        }
    }
    return std::min(best, 1.0);
}

Eigen::VectorXd average_ranks(const Eigen::Ref<const Eigen::VectorXd>& v) {
    const auto n = static_cast<std::size_t>(v.size());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v(a) < v(b); });
    Eigen::VectorXd ranks(v.size());
    std::size_t p = 0;
    while (p < n) {
        std::size_t q = p + 1;
        while (q < n && v(order[q]) == v(order[p])) ++q;
        // Positions p..q-1 (0-based) share rank ((p+1) + q) / 2.
        const double r = 0.5 * static_cast<double>(p + 1 + q);
        for (std::size_t k = p; k < q; ++k) ranks(static_cast<Eigen::Index>(order[k])) = r;
        p = q;
    }
    return ranks;
}

std::optional<double> scc(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("SCC inputs differ in length");
    if (x.size() < 2) throw std::invalid_argument("SCC needs at least two samples");
    if (constant(x) || constant(y)) return std::nullopt;
    const Eigen::VectorXd d = average_ranks(x) - average_ranks(y);
    const double n = static_cast<double>(x.size());
    // Ranks are multiples of 1/2, so this sum is exact in any order.
    const double d2 = d.squaredNorm();
    return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

SelectionReport select_features(const FeatureTable& table, const SelectionOptions& options) {
    options.mic.validate();
    if (table.cols() < 1) throw std::invalid_argument("feature selection needs at least one feature");
    if (table.y.size() != table.rows()) throw std::invalid_argument("target length differs from row count");

    SelectionReport report;
    report.options = options;
    report.features = table.names;
    const auto p = table.cols();

    std::vector<double> scores(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) scores[static_cast<std::size_t>(j)] = mic(table.x.col(j), table.y, options.mic);

    std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
    });
    for (auto j : order) report.mic_ranking.push_back({table.names[static_cast<std::size_t>(j)], scores[static_cast<std::size_t>(j)]});

    report.scc_matrix = Eigen::MatrixXd::Constant(p, p, std::numeric_limits<double>::quiet_NaN());
    for (Eigen::Index a = 0; a < p; ++a) {
        for (Eigen::Index b = a; b < p; ++b) {
            const auto r = scc(table.x.col(a), table.x.col(b));
            if (!r) continue;
            report.scc_matrix(a, b) = *r;
            report.scc_matrix(b, a) = *r;
        }
    }

    std::vector<Eigen::Index> kept;
    for (auto j : order) {
        const auto& name = table.names[static_cast<std::size_t>(j)];
        if (scores[static_cast<std::size_t>(j)] <= options.mic_floor) {
            report.dropped.push_back({name, "low-mic"});
            continue;
        }
        auto clash = std::find_if(kept.begin(), kept.end(), [&](Eigen::Index k) {
            const double r = report.scc_matrix(j, k);
            return !std::isnan(r) && std::abs(r) >= options.scc_threshold;
        });
        if (clash != kept.end()) {
            report.dropped.push_back({name, "redundant-with " + table.names[static_cast<std::size_t>(*clash)]});
            continue;
        }
        kept.push_back(j);
        report.kept.push_back(name);
    }
    if (report.kept.empty()) throw SelectionError("every feature was dropped", std::move(report));
    return report;
}

FeatureTable apply_selection(const FeatureTable& table, const SelectionReport& report) {
    std::vector<std::string> keep;
    for (const auto& name : table.names) {
        if (std::find(report.kept.begin(), report.kept.end(), name) != report.kept.end()) keep.push_back(name);
    }
    return table.select_columns(keep);
}

nlohmann::json report_json(const SelectionReport& report) {
    nlohmann::json j;
    j["mic_floor"] = report.options.mic_floor;
    j["scc_threshold"] = report.options.scc_threshold;
    j["mic_exponent"] = report.options.mic.exponent;
    j["mic_ranking"] = nlohmann::json::array();
    for (const auto& s : report.mic_ranking) j["mic_ranking"].push_back({{"feature", s.feature}, {"mic", s.value}});
    j["features"] = report.features;
    auto matrix = nlohmann::json::array();
    for (Eigen::Index a = 0; a < report.scc_matrix.rows(); ++a) {
        auto row = nlohmann::json::array();
        for (Eigen::Index b = 0; b < report.scc_matrix.cols(); ++b) {
            const double v = report.scc_matrix(a, b);
            row.push_back(std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v));
        }
        matrix.push_back(row);
    }
    j["scc_matrix"] = matrix;
    j["dropped"] = nlohmann::json::array();
    for (const auto& d : report.dropped) j["dropped"].push_back({{"feature", d.feature}, {"reason", d.reason}});
    j["kept"] = report.kept;
    return j;
}

void write_scc_csv(std::ostream& os, const SelectionReport& report) {
    os << "feature";
    for (const auto& f : report.features) os << ',' << f;
    os << '\n';
    for (std::size_t a = 0; a < report.features.size(); ++a) {
        os << report.features[a];
        for (std::size_t b = 0; b < report.features.size(); ++b) {
            const double v = report.scc_matrix(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
            os << ',' << (std::isnan(v) ? std::string("nan") : format_number(v));
        }
        os << '\n';
    }
}

}  // namespace cctlab
