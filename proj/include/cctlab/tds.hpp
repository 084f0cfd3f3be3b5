#pragma once

#include "cctlab/grid.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <vector>

namespace cctlab {

/// Everything the swing integrator needs for one (operating point, contingency)
/// pair: machine constants plus the reduced admittance of each topology phase.
struct TransientModel {
    Eigen::VectorXd h;
    Eigen::VectorXd d;
    Eigen::VectorXd p_mech;
    Eigen::VectorXd e_mag;
    Eigen::VectorXd delta0;
    double omega_s = 0.0;
    Eigen::MatrixXcd prefault;
    Eigen::MatrixXcd faulton;
    Eigen::MatrixXcd postfault;

    Eigen::Index machine_count() const { return h.size(); }
};

/// Operating point and transient model assembled from a case, a scenario and a
/// contingency. Power-flow failure propagates as NonConvergence.
struct Study {
    NetworkCase resolved;
    PowerFlowSolution pf;
    MachineInitState init;
    TransientModel model;
};

Study prepare_study(const NetworkCase& net, const Scenario& scenario, const ContingencySpec& contingency,
                    const PowerFlowOptions& pf_options = {});

TransientModel build_transient_model(const NetworkCase& resolved, const PowerFlowSolution& pf,
                                     const MachineInitState& init, const ContingencySpec& contingency);

/// Electrical power of every machine for the given internal admittance and angles.
Eigen::VectorXd electrical_power(const Eigen::MatrixXcd& y_reduced, const Eigen::VectorXd& e_mag,
                                 const Eigen::VectorXd& delta);

struct SimulationSchedule {
    double t_start = 0.0;
    double t_fault = 1.0;
    double t_clear = 1.1;
    double t_end = 11.0;
    double step = 2e-3;

    void validate() const;

    /// Fault at `t_fault`, cleared `duration` later, horizon `t_fault + horizon`.
    static SimulationSchedule for_duration(double duration, double t_fault = 1.0, double horizon = 10.0,
                                           double step = 2e-3);
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> delta;
    std::vector<Eigen::VectorXd> omega_dev;
    // Electrical power after any switching at that instant (right limit).
    std::vector<Eigen::VectorXd> p_elec;
    std::optional<double> diverged_at;

    std::size_t size() const { return times.size(); }
};

/// Angle spread above which a run is declared divergent and stopped.
inline constexpr double kDivergenceSpread = 4.0 * 3.14159265358979323846;

/// Fixed-step RK4 through the three topology phases. Each phase is split into
/// an integer number of equal steps no longer than `schedule.step`, so the
/// switching instants are grid points.
Trajectory simulate(const TransientModel& model, const SimulationSchedule& schedule);

/// Maximum pairwise angle separation, in degrees, over samples at or after `from_t`.
double b_stability_index(const Trajectory& traj, double from_t);

bool is_b_stable(const Trajectory& traj, double beta_deg, double from_t);

struct StabilityCheck {
    bool stable = true;
    double eta_deg = 0.0;  // index over the simulated part; partial when stopped early
};

/// Same integration as simulate() but keeps no history and stops as soon as the
/// spread after the fault exceeds `beta_deg`.
StabilityCheck check_b_stability(const TransientModel& model, const SimulationSchedule& schedule,
                                 double beta_deg);

struct FeatureRecord {
    int cont_no = 0;
    Eigen::VectorXd delta_t0_deg;
    Eigen::VectorXd pg_t0;
    Eigen::VectorXd qg_t0;
    Eigen::VectorXd pd_t0;
    Eigen::VectorXd pg_t1;

    std::size_t base_width() const;
    std::size_t width(bool with_t1) const { return base_width() + (with_t1 ? pg_t1.size() : 0); }
};

/// t0 values from the operating point; pg_t1 from the fault-on network at the
/// fault instant.
FeatureRecord capture_features(const Study& study, const Trajectory& traj, const ContingencySpec& contingency,
                               double t_fault);

/// Variant that needs no trajectory: angles at t_fault equal delta0 because the
/// pre-fault interval is an equilibrium.
FeatureRecord capture_features(const Study& study, const ContingencySpec& contingency);

void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace cctlab
