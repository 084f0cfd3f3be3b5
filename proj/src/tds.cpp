#include "cctlab/tds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

namespace cctlab {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double spread(const Eigen::VectorXd& delta) { return delta.maxCoeff() - delta.minCoeff(); }

// Per-phase coupling coefficients E_i E_j G_ij and E_i E_j B_ij.
struct PhaseCoupling {
    Eigen::MatrixXd g;
    Eigen::MatrixXd b;

    PhaseCoupling(const Eigen::MatrixXcd& y, const Eigen::VectorXd& e) {
        const Eigen::MatrixXd ee = e * e.transpose();
        g = ee.cwiseProduct(y.real());
        b = ee.cwiseProduct(y.imag());
    }

    void power(const Eigen::VectorXd& delta, Eigen::VectorXd& pe) const {
        const auto m = delta.size();
        for (Eigen::Index i = 0; i < m; ++i) {
            double acc = g(i, i);
            for (Eigen::Index j = 0; j < m; ++j) {
                if (j == i) continue;
                const double dij = delta(i) - delta(j);
                acc += g(i, j) * std::cos(dij) + b(i, j) * std::sin(dij);
            }
            pe(i) = acc;
        }
    }
};

class SwingIntegrator {
public:
    explicit SwingIntegrator(const TransientModel& model)
        : model_(model),
          phases_{PhaseCoupling(model.prefault, model.e_mag), PhaseCoupling(model.faulton, model.e_mag),
                  PhaseCoupling(model.postfault, model.e_mag)},
          accel_(model.omega_s * (2.0 * model.h).cwiseInverse()) {
        const auto m = model.machine_count();
        pe_.resize(m);
        for (auto* v : {&k1d_, &k2d_, &k3d_, &k4d_, &k1w_, &k2w_, &k3w_, &k4w_, &tmp_d_, &tmp_w_}) v->resize(m);
    }

    const PhaseCoupling& phase(int k) const { return phases_[k]; }

    void derivative(int phase, const Eigen::VectorXd& delta, const Eigen::VectorXd& omega, Eigen::VectorXd& dd,
                    Eigen::VectorXd& dw) {
        phases_[phase].power(delta, pe_);
        dd = omega;
        dw = accel_.cwiseProduct(model_.p_mech - pe_ - model_.d.cwiseProduct(omega));
    }

    void rk4_step(int phase, double dt, Eigen::VectorXd& delta, Eigen::VectorXd& omega) {
        derivative(phase, delta, omega, k1d_, k1w_);
        tmp_d_ = delta + 0.5 * dt * k1d_;
        tmp_w_ = omega + 0.5 * dt * k1w_;
        derivative(phase, tmp_d_, tmp_w_, k2d_, k2w_);
        tmp_d_ = delta + 0.5 * dt * k2d_;
        tmp_w_ = omega + 0.5 * dt * k2w_;
        derivative(phase, tmp_d_, tmp_w_, k3d_, k3w_);
        tmp_d_ = delta + dt * k3d_;
        tmp_w_ = omega + dt * k3w_;
        derivative(phase, tmp_d_, tmp_w_, k4d_, k4w_);
        delta += (dt / 6.0) * (k1d_ + 2.0 * k2d_ + 2.0 * k3d_ + k4d_);
        omega += (dt / 6.0) * (k1w_ + 2.0 * k2w_ + 2.0 * k3w_ + k4w_);
    }

private:
    const TransientModel& model_;
    PhaseCoupling phases_[3];
    Eigen::VectorXd accel_;
    Eigen::VectorXd pe_;
    Eigen::VectorXd k1d_, k2d_, k3d_, k4d_, k1w_, k2w_, k3w_, k4w_, tmp_d_, tmp_w_;
};

// Drives the integrator across the schedule and hands every grid sample to
// `on_sample(t, delta, omega, pe)`; a false return stops the run.
template <typename Callback>
void run_schedule(const TransientModel& model, const SimulationSchedule& schedule, Callback&& on_sample) {
    schedule.validate();
    if (model.machine_count() == 0) throw std::invalid_argument("transient model has no machines");

    SwingIntegrator integrator(model);
    Eigen::VectorXd delta = model.delta0;
    Eigen::VectorXd omega = Eigen::VectorXd::Zero(model.machine_count());
    Eigen::VectorXd pe(model.machine_count());

    struct Segment {
        double begin;
        double end;
        int phase;
    };
    const Segment segments[] = {{schedule.t_start, schedule.t_fault, 0},
                                {schedule.t_fault, schedule.t_clear, 1},
                                {schedule.t_clear, schedule.t_end, 2}};

    // Network in force immediately after time t (right limit).
    auto active_phase_after = [&](double t) {
        if (t < schedule.t_fault) return 0;
        if (t < schedule.t_clear) return 1;
        return 2;
    };

    integrator.phase(active_phase_after(schedule.t_start)).power(delta, pe);
    if (!on_sample(schedule.t_start, delta, omega, pe)) return;

    for (const auto& seg : segments) {
        const double length = seg.end - seg.begin;
        if (length <= 0.0) continue;
        const auto steps = std::max<long>(1, static_cast<long>(std::ceil(length / schedule.step - 1e-9)));
        const double dt = length / static_cast<double>(steps);
        for (long k = 1; k <= steps; ++k) {
            integrator.rk4_step(seg.phase, dt, delta, omega);
            const double t = k == steps ? seg.end : seg.begin + static_cast<double>(k) * dt;
            integrator.phase(active_phase_after(t)).power(delta, pe);
            if (!on_sample(t, delta, omega, pe)) return;
        }
    }
}

}  // namespace

void SimulationSchedule::validate() const {
    if (!(step > 0.0)) throw std::invalid_argument("simulation step must be positive");
    // t_clear == t_fault is an instantaneous clear: the fault-on phase is skipped.
    if (!(t_start < t_fault && t_fault <= t_clear && t_clear < t_end)) {
        throw std::invalid_argument("schedule requires t_start < t_fault <= t_clear < t_end");
    }
}

SimulationSchedule SimulationSchedule::for_duration(double duration, double t_fault, double horizon, double step) {
    SimulationSchedule s;
    s.t_start = 0.0;
    s.t_fault = t_fault;
    s.t_clear = t_fault + duration;
    s.t_end = t_fault + horizon;
    s.step = step;
    return s;
}

Eigen::VectorXd electrical_power(const Eigen::MatrixXcd& y_reduced, const Eigen::VectorXd& e_mag,
                                 const Eigen::VectorXd& delta) {
    Eigen::VectorXd pe(delta.size());
    PhaseCoupling(y_reduced, e_mag).power(delta, pe);
    return pe;
}

TransientModel build_transient_model(const NetworkCase& resolved, const PowerFlowSolution& pf,
                                     const MachineInitState& init, const ContingencySpec& contingency) {
    TransientModel model;
    const auto m = static_cast<Eigen::Index>(resolved.machines.size());
    model.h.resize(m);
    model.d.resize(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        model.h(k) = resolved.machines[k].h;
        model.d(k) = resolved.machines[k].d;
    }
    model.p_mech = init.p_mech;
    model.e_mag = init.e_mag;
    model.delta0 = init.delta0;
    model.omega_s = resolved.omega_s();

    const FaultShunt fault{contingency.fault_bus, contingency.fault_admittance};
    model.prefault = reduce_to_internal_nodes(resolved, pf, {}, std::nullopt, NetworkPhase::prefault).y_reduced;
    model.faulton = reduce_to_internal_nodes(resolved, pf, {}, fault, NetworkPhase::faulton).y_reduced;
    model.postfault =
        reduce_to_internal_nodes(resolved, pf, contingency.cleared_lines, std::nullopt, NetworkPhase::postfault)
            .y_reduced;
    return model;
}

Study prepare_study(const NetworkCase& net, const Scenario& scenario, const ContingencySpec& contingency,
                    const PowerFlowOptions& pf_options) {
    Study study;
    study.resolved = apply_scenario(net, scenario);
    study.pf = solve_power_flow(study.resolved, pf_options);
    study.init = init_machines(study.resolved, study.pf);
    study.model = build_transient_model(study.resolved, study.pf, study.init, contingency);
    return study;
}

Trajectory simulate(const TransientModel& model, const SimulationSchedule& schedule) {
    Trajectory traj;
    const auto expected = static_cast<std::size_t>((schedule.t_end - schedule.t_start) / schedule.step) + 4;
    traj.times.reserve(expected);
    traj.delta.reserve(expected);
    traj.omega_dev.reserve(expected);
    traj.p_elec.reserve(expected);
    run_schedule(model, schedule,
                 [&](double t, const Eigen::VectorXd& delta, const Eigen::VectorXd& omega, const Eigen::VectorXd& pe) {
                     traj.times.push_back(t);
                     traj.delta.push_back(delta);
                     traj.omega_dev.push_back(omega);
                     traj.p_elec.push_back(pe);
                     if (!delta.allFinite() || spread(delta) > kDivergenceSpread) {
                         traj.diverged_at = t;
                         return false;
                     }
                     return true;
                 });
    return traj;
}

double b_stability_index(const Trajectory& traj, double from_t) {
    if (traj.delta.empty() || traj.delta.front().size() < 2) {
        throw std::invalid_argument("B-stability index needs at least two machines");
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        if (traj.times[k] < from_t) continue;
        const double s = spread(traj.delta[k]);
        if (!std::isfinite(s)) return std::numeric_limits<double>::infinity();
        worst = std::max(worst, s);
    }
    return worst * kRadToDeg;
}

bool is_b_stable(const Trajectory& traj, double beta_deg, double from_t) {
    if (traj.diverged_at) return false;
    return b_stability_index(traj, from_t) <= beta_deg;
}

StabilityCheck check_b_stability(const TransientModel& model, const SimulationSchedule& schedule, double beta_deg) {
    if (model.machine_count() < 2) throw std::invalid_argument("B-stability index needs at least two machines");
    StabilityCheck out;
    const double beta_rad = beta_deg / kRadToDeg;
    double worst = 0.0;
    run_schedule(model, schedule,
                 [&](double t, const Eigen::VectorXd& delta, const Eigen::VectorXd&, const Eigen::VectorXd&) {
                     const double s = spread(delta);
                     if (!std::isfinite(s)) {
                         out.stable = false;
                         worst = std::numeric_limits<double>::infinity();
                         return false;
                     }
                     if (t >= schedule.t_fault) worst = std::max(worst, s);
                     if (worst > beta_rad || s > kDivergenceSpread) {
                         out.stable = false;
                         return false;
                     }
                     return true;
                 });
    out.eta_deg = worst * kRadToDeg;
    return out;
}

std::size_t FeatureRecord::base_width() const {
    return 1 + static_cast<std::size_t>(delta_t0_deg.size() + pg_t0.size() + qg_t0.size() + pd_t0.size());
}

namespace {

FeatureRecord t0_features(const Study& study, const ContingencySpec& contingency) {
    FeatureRecord rec;
    rec.cont_no = contingency.number;
    rec.delta_t0_deg = study.init.delta0 * kRadToDeg;
    rec.pg_t0 = study.pf.p_gen;
    rec.qg_t0 = study.pf.q_gen;
    const auto loads = study.resolved.load_buses();
    rec.pd_t0.resize(static_cast<Eigen::Index>(loads.size()));
    for (std::size_t k = 0; k < loads.size(); ++k) {
        rec.pd_t0(static_cast<Eigen::Index>(k)) = study.resolved.buses[loads[k]].p_load;
    }
    return rec;
}

}  // namespace

FeatureRecord capture_features(const Study& study, const Trajectory& traj, const ContingencySpec& contingency,
                               double t_fault) {
    FeatureRecord rec = t0_features(study, contingency);
    auto it = std::lower_bound(traj.times.begin(), traj.times.end(), t_fault);
    if (it == traj.times.end()) throw std::invalid_argument("trajectory does not reach the fault instant");
    const auto k = static_cast<std::size_t>(it - traj.times.begin());
    rec.pg_t1 = traj.p_elec[k];
    return rec;
}

FeatureRecord capture_features(const Study& study, const ContingencySpec& contingency) {
    FeatureRecord rec = t0_features(study, contingency);
    rec.pg_t1 = electrical_power(study.model.faulton, study.model.e_mag, study.model.delta0);
    return rec;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    const auto m = traj.delta.empty() ? 0 : traj.delta.front().size();
    os << "t";
    for (Eigen::Index i = 1; i <= m; ++i) os << ",delta_" << i << "_deg";
    for (Eigen::Index i = 1; i <= m; ++i) os << ",omega_" << i;
    for (Eigen::Index i = 1; i <= m; ++i) os << ",pe_" << i;
    os << '\n';
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, ",%.10g", v);
        os << buf;
    };
    for (std::size_t k = 0; k < traj.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.6f", traj.times[k]);
        os << buf;
        for (Eigen::Index i = 0; i < m; ++i) put(traj.delta[k](i) * kRadToDeg);
        for (Eigen::Index i = 0; i < m; ++i) put(traj.omega_dev[k](i));
        for (Eigen::Index i = 0; i < m; ++i) put(traj.p_elec[k](i));
        os << '\n';
    }
}

}  // namespace cctlab
