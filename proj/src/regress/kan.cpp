#include "cctlab/regress.hpp"
#include "detail.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace cctlab {

void SplineGrid::evaluate(double x, double* values, double* d) const {
    const int k = degree;
    const int nb = basis_count();
    const double h = (hi - lo) / intervals;
    const bool outside = x < lo || x > hi;
    x = std::clamp(x, lo, hi);
    // Knot i sits at lo + (i - k) h; span s = j + k covers [t_s, t_{s+1}).
    const int j = std::clamp(static_cast<int>(std::floor((x - lo) / h)), 0, intervals - 1);
    const int s = j + k;
    auto knot = [&](int i) { return lo + (i - k) * h; };

    std::vector<double> n(static_cast<std::size_t>(k + 1), 0.0), prev(static_cast<std::size_t>(k + 1), 0.0);
    std::vector<double> left(static_cast<std::size_t>(k + 1)), right(static_cast<std::size_t>(k + 1));
    n[0] = 1.0;
    for (int p = 1; p <= k; ++p) {
        prev = n;
        left[static_cast<std::size_t>(p)] = x - knot(s + 1 - p);
        right[static_cast<std::size_t>(p)] = knot(s + p) - x;
        double saved = 0.0;
        for (int r = 0; r < p; ++r) {
            const double temp = n[static_cast<std::size_t>(r)] /
                                (right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(p - r)]);
            n[static_cast<std::size_t>(r)] = saved + right[static_cast<std::size_t>(r + 1)] * temp;
            saved = left[static_cast<std::size_t>(p - r)] * temp;
        }
        n[static_cast<std::size_t>(p)] = saved;
    }
    std::fill(values, values + nb, 0.0);
    for (int r = 0; r <= k; ++r) values[s - k + r] = n[static_cast<std::size_t>(r)];
    if (!d) return;
    std::fill(d, d + nb, 0.0);
    if (k == 0 || outside) return;
    // prev holds the degree k-1 bases B_{s-k+1 .. s}.
    for (int r = 0; r <= k; ++r) {
        const double a = r >= 1 ? prev[static_cast<std::size_t>(r - 1)] : 0.0;
        const double b = r < k ? prev[static_cast<std::size_t>(r)] : 0.0;
        d[s - k + r] = (a - b) / h;
    }
}

namespace {

double silu(double x) { return x / (1.0 + std::exp(-x)); }

double silu_prime(double x) {
    const double sg = 1.0 / (1.0 + std::exp(-x));
    return sg * (1.0 + x * (1.0 - sg));
}

struct LayerCache {
    Eigen::MatrixXd x;            // inputs to the layer
    std::vector<double> basis;    // [row][node][basis]
    std::vector<double> dbasis;
};

struct Net {
    const std::vector<int>& sizes;
    const std::vector<std::vector<SplineGrid>>& grids;

    int nb() const { return grids.front().front().basis_count(); }
    std::size_t edge_width() const { return static_cast<std::size_t>(nb() + 2); }

    std::size_t layer_offset(std::size_t l) const {
        std::size_t off = 0;
        for (std::size_t m = 0; m < l; ++m) off += static_cast<std::size_t>(sizes[m] * sizes[m + 1]) * edge_width();
        return off;
    }

    Eigen::MatrixXd run(const Eigen::VectorXd& p, const Eigen::MatrixXd& z, std::vector<LayerCache>* cache) const {
        Eigen::MatrixXd a = z;
        const int B = nb();
        const auto E = edge_width();
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
            const int nin = sizes[l], nout = sizes[l + 1];
            const auto rows = a.rows();
            std::vector<double> basis(static_cast<std::size_t>(rows * nin * B));
            std::vector<double> dbasis(cache ? basis.size() : 0);
            for (Eigen::Index r = 0; r < rows; ++r) {
                for (int i = 0; i < nin; ++i) {
                    const auto at = static_cast<std::size_t>((r * nin + i) * B);
                    grids[l][static_cast<std::size_t>(i)].evaluate(a(r, i), basis.data() + at,
                                                                   cache ? dbasis.data() + at : nullptr);
                }
            }
            Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, nout);
            const auto off = layer_offset(l);
            for (Eigen::Index r = 0; r < rows; ++r) {
                for (int i = 0; i < nin; ++i) {
                    const double* bv = basis.data() + (r * nin + i) * B;
                    const double sx = silu(a(r, i));
                    for (int j = 0; j < nout; ++j) {
                        const double* e = p.data() + off + static_cast<std::size_t>(i * nout + j) * E;
                        double spline = 0.0;
                        for (int k = 0; k < B; ++k) spline += e[k] * bv[k];
                        out(r, j) += e[B] * sx + e[B + 1] * spline;
                    }
                }
            }
            if (cache) cache->push_back(LayerCache{a, std::move(basis), std::move(dbasis)});
            a = std::move(out);
        }
        return a;
    }
};

double kan_mse(const Net& net, const Eigen::VectorXd& p, const Eigen::MatrixXd& z, const Eigen::VectorXd& t) {
    return (net.run(p, z, nullptr).col(0) - t).squaredNorm() / static_cast<double>(t.size());
}

LossGradient kan_loss(const Net& net, double l2, const Eigen::VectorXd& p, const Eigen::MatrixXd& z,
                      const Eigen::VectorXd& t) {
    std::vector<LayerCache> cache;
    const Eigen::VectorXd y = net.run(p, z, &cache).col(0);
    const auto n = static_cast<double>(z.rows());
    const Eigen::VectorXd res = y - t;
    LossGradient out;
    out.loss = 0.5 * res.squaredNorm() / n + 0.5 * l2 * p.squaredNorm();
    out.gradient = l2 * p;

    const int B = net.nb();
    const auto E = net.edge_width();
    Eigen::MatrixXd g = res / n;  // d loss / d layer output
    for (std::size_t l = cache.size(); l-- > 0;) {
        const auto& c = cache[l];
        const int nin = net.sizes[l], nout = net.sizes[l + 1];
        const auto off = net.layer_offset(l);
        Eigen::MatrixXd gin = Eigen::MatrixXd::Zero(c.x.rows(), nin);
        for (Eigen::Index r = 0; r < c.x.rows(); ++r) {
            for (int i = 0; i < nin; ++i) {
                const double x = c.x(r, i);
                const double* bv = c.basis.data() + (r * nin + i) * B;
                const double* dv = c.dbasis.data() + (r * nin + i) * B;
                const double sx = silu(x), ds = silu_prime(x);
                for (int j = 0; j < nout; ++j) {
                    const double go = g(r, j);
                    const auto base = off + static_cast<std::size_t>(i * nout + j) * E;
                    const double* e = p.data() + base;
                    double* ge = out.gradient.data() + base;
                    double spline = 0.0, dspline = 0.0;
                    for (int k = 0; k < B; ++k) {
                        spline += e[k] * bv[k];
                        dspline += e[k] * dv[k];
                        ge[k] += go * e[B + 1] * bv[k];
                    }
                    ge[B] += go * sx;
                    ge[B + 1] += go * spline;
                    gin(r, i) += go * (e[B] * ds + e[B + 1] * dspline);
                }
            }
        }
        g = std::move(gin);
    }
    return out;
}

SplineGrid grid_over(double lo, double hi, double margin, const KanOptions& o) {
    double span = hi - lo;
    if (!(span > 1e-12)) {
        lo -= 1.0;
        hi += 1.0;
        span = 2.0;
    }
    return SplineGrid{lo - margin * span, hi + margin * span, o.grid_intervals, o.degree};
}

}  // namespace

std::vector<int> KanRegressor::layer_sizes(Eigen::Index inputs) const {
    std::vector<int> sizes{static_cast<int>(inputs)};
    for (int h : spec_.kan.hidden) {
        if (h < 1) throw std::invalid_argument("kan hidden layers need at least one node");
        sizes.push_back(h);
    }
    sizes.push_back(1);
    return sizes;
}

std::optional<std::size_t> KanRegressor::parameter_count() const {
    if (sizes_.empty()) return std::nullopt;
    return static_cast<std::size_t>(params_.size());
}

void KanRegressor::initialize(const Eigen::MatrixXd& z, std::uint64_t seed) {
    const auto& o = spec_.kan;
    if (o.grid_intervals < 1 || o.degree < 0) throw std::invalid_argument("invalid kan grid");
    if (z.rows() < 1) throw std::invalid_argument("kan initialization needs data");
    sizes_ = layer_sizes(z.cols());
    const int B = o.grid_intervals + o.degree;
    const auto E = static_cast<std::size_t>(B + 2);
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) total += static_cast<std::size_t>(sizes_[l] * sizes_[l + 1]) * E;
    params_.resize(static_cast<Eigen::Index>(total));

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::size_t at = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        const double base_scale = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
        for (int e = 0; e < sizes_[l] * sizes_[l + 1]; ++e) {
            for (int k = 0; k < B; ++k) params_(static_cast<Eigen::Index>(at++)) = 0.1 * u(rng);
            params_(static_cast<Eigen::Index>(at++)) = base_scale * u(rng);  // w_b
            params_(static_cast<Eigen::Index>(at++)) = 1.0;                  // w_s
        }
    }

    // First-layer grids span the data; deeper grids span the initial
    // activations with room for them to drift during training.
    grids_.clear();
    Eigen::MatrixXd a = z;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        std::vector<SplineGrid> layer;
        const double margin = l == 0 ? 0.0 : 0.5;
        for (Eigen::Index i = 0; i < a.cols(); ++i) layer.push_back(grid_over(a.col(i).minCoeff(), a.col(i).maxCoeff(), margin, o));
        grids_.push_back(std::move(layer));
        // Propagate through the layers built so far.
        const std::vector<int> head(sizes_.begin(), sizes_.begin() + static_cast<long>(l) + 2);
        const Net net{head, grids_};
        a = net.run(params_, z, nullptr);
    }
}

void KanRegressor::set_parameters(const Eigen::VectorXd& p) {
    if (sizes_.empty() || p.size() != params_.size()) throw std::invalid_argument("kan parameter vector has the wrong length");
    params_ = p;
}

LossGradient KanRegressor::loss_gradient(const Eigen::MatrixXd& z, const Eigen::VectorXd& t) const {
    return kan_loss(Net{sizes_, grids_}, spec_.kan.l2, params_, z, t);
}

void KanRegressor::fit_standardized(const Eigen::MatrixXd& z, const Eigen::VectorXd& t) {
    const auto& o = spec_.kan;
    if (o.l2 < 0.0 || !(o.learning_rate > 0.0)) throw std::invalid_argument("invalid kan options");
    initialize(z, spec_.seed);
    std::mt19937_64 rng(spec_.seed ^ 0x9e3779b97f4a7c15ULL);
    const Net net{sizes_, grids_};
    const double l2 = o.l2;
    detail::AdamSchedule schedule{o.learning_rate, o.batch_size, o.max_epochs, o.validation_fraction, o.patience, o.tol, o.lr_drops};
    params_ = detail::train_adam(
        params_,
        [&](const Eigen::VectorXd& p, const Eigen::MatrixXd& zz, const Eigen::VectorXd& tt) {
            return kan_loss(net, l2, p, zz, tt);
        },
        [&](const Eigen::VectorXd& p, const Eigen::MatrixXd& zz, const Eigen::VectorXd& tt) {
            return kan_mse(net, p, zz, tt);
        },
        z, t, schedule, rng);
}

Eigen::VectorXd KanRegressor::predict_standardized(const Eigen::MatrixXd& z) const {
    return Net{sizes_, grids_}.run(params_, z, nullptr).col(0);
}

nlohmann::json KanRegressor::state_json() const {
    auto grids = nlohmann::json::array();
    for (const auto& layer : grids_) {
        auto row = nlohmann::json::array();
        for (const auto& g : layer) row.push_back({g.lo, g.hi, g.intervals, g.degree});
        grids.push_back(row);
    }
    return {{"sizes", sizes_}, {"grids", grids}, {"params", detail::vector_json(params_)}};
}

void KanRegressor::load_state(const nlohmann::json& j) {
    sizes_ = j.at("sizes").get<std::vector<int>>();
    grids_.clear();
    for (const auto& layer : j.at("grids")) {
        std::vector<SplineGrid> row;
        for (const auto& g : layer) {
            row.push_back(SplineGrid{g.at(0).get<double>(), g.at(1).get<double>(), g.at(2).get<int>(), g.at(3).get<int>()});
        }
        grids_.push_back(std::move(row));
    }
    if (sizes_.size() < 2 || grids_.size() + 1 != sizes_.size()) throw std::invalid_argument("inconsistent kan model file");
    params_ = detail::vector_from_json(j.at("params"));
}

}  // namespace cctlab
