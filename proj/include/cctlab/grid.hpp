#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cctlab {

using Complex = std::complex<double>;

class GridError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Newton iteration failed to reach the mismatch tolerance. Treated upstream as
/// an infeasible operating point rather than a program error.
class NonConvergence : public GridError {
public:
    NonConvergence(const std::string& what, int iterations, double mismatch)
        : GridError(what), iterations_(iterations), mismatch_(mismatch) {}
    int iterations() const { return iterations_; }
    double mismatch() const { return mismatch_; }

private:
    int iterations_;
    double mismatch_;
};

enum class BusKind { slack, pv, pq };

struct Bus {
    int id = 0;
    BusKind kind = BusKind::pq;
    double v_setpoint = 1.0;
    double p_load = 0.0;
    double q_load = 0.0;
};

struct Line {
    int id = 0;
    int from_bus = 0;
    int to_bus = 0;
    double r = 0.0;
    double x = 0.0;
    double b_shunt_total = 0.0;
};

/// Classical machine: constant EMF behind xd'. `p_gen` is the scheduled active
/// output for PV buses; the slack machine picks up the balance.
struct Machine {
    int id = 0;
    int bus = 0;
    double h = 0.0;
    double xd_prime = 0.0;
    double d = 0.0;
    double p_gen = 0.0;
};

enum class InjectionSource { fixed, solar, wind };

struct Injection {
    int bus = 0;
    double p = 0.0;
    double q = 0.0;
    InjectionSource source = InjectionSource::fixed;
};

struct NetworkCase {
    double system_base = 100.0;
    double frequency = 60.0;
    std::vector<Bus> buses;
    std::vector<Line> lines;
    std::vector<Machine> machines;
    std::vector<Injection> injections;

    /// Throws GridError when the structural invariants are violated.
    void validate() const;

    std::size_t bus_index(int bus_id) const;
    std::size_t line_index(int line_id) const;
    std::optional<std::size_t> find_bus(int bus_id) const;
    std::optional<std::size_t> find_line(int line_id) const;
    std::size_t slack_index() const;

    /// Buses carrying a nonzero base load, in case order. Scenario load vectors
    /// are indexed against this list.
    std::vector<std::size_t> load_buses() const;

    double omega_s() const;
};

struct ContingencySpec {
    int number = 0;
    int fault_bus = 0;
    std::vector<int> cleared_lines;
    double fault_admittance = 1e6;
};

/// Checks bus/line references and that clearing keeps all machines in one island.
void validate_contingency(const NetworkCase& net, const ContingencySpec& contingency);

/// One draw of the uncertain injections. `p_loads` follows NetworkCase::load_buses().
struct Scenario {
    std::vector<double> p_loads;
    double p_solar = 0.0;
    double p_wind = 0.0;
    std::size_t seed_index = 0;
};

/// Scenario reproducing the case's own base values.
Scenario base_scenario(const NetworkCase& net);

/// Copy of `net` with scenario loads and renewable outputs written in. Reactive
/// load scales with the active load ratio.
NetworkCase apply_scenario(const NetworkCase& net, const Scenario& scenario);

struct FaultShunt {
    int bus = 0;
    double admittance = 0.0;
};

struct BusAdmittance {
    Eigen::MatrixXcd y;
    bool connected = true;
};

BusAdmittance build_ybus(const NetworkCase& net, std::span<const int> removed_lines = {},
                         std::optional<FaultShunt> fault = std::nullopt);

bool is_connected(const NetworkCase& net, std::span<const int> removed_lines = {});

/// True when every machine bus lies in one island. Machine-free islands left by
/// clearing are de-energized and drop out of the dynamics.
bool machines_connected(const NetworkCase& net, std::span<const int> removed_lines = {});

struct PowerFlowOptions {
    double tolerance = 1e-10;
    int max_iterations = 30;
};

struct PowerFlowSolution {
    Eigen::VectorXd v;
    Eigen::VectorXd theta;
    // Per machine, in NetworkCase::machines order.
    Eigen::VectorXd p_gen;
    Eigen::VectorXd q_gen;
    // Per bus net injection computed from the solved voltages.
    Eigen::VectorXd p_injection;
    Eigen::VectorXd q_injection;
    double max_mismatch = 0.0;
    int iterations = 0;

    Eigen::VectorXcd voltage() const;
};

/// Newton-Raphson from flat start on a case with the scenario already applied.
PowerFlowSolution solve_power_flow(const NetworkCase& resolved, const PowerFlowOptions& options = {});
PowerFlowSolution solve_power_flow(const NetworkCase& net, const Scenario& scenario,
                                   const PowerFlowOptions& options = {});

struct MachineInitState {
    Eigen::VectorXd e_mag;
    Eigen::VectorXd delta0;  // rad
    Eigen::VectorXd p_mech;
};

MachineInitState init_machines(const NetworkCase& resolved, const PowerFlowSolution& pf);

enum class NetworkPhase { prefault, faulton, postfault };

struct ReducedNetwork {
    NetworkPhase phase = NetworkPhase::prefault;
    Eigen::MatrixXcd y_reduced;
};

/// Augments the bus network with constant-impedance loads (from the solved
/// voltages) and machine internal branches, then Kron-eliminates every
/// non-internal node.
ReducedNetwork reduce_to_internal_nodes(const NetworkCase& resolved, const PowerFlowSolution& pf,
                                        std::span<const int> removed_lines, std::optional<FaultShunt> fault,
                                        NetworkPhase phase);

/// The augmented (buses + internal nodes) admittance matrix before elimination.
/// Internal nodes occupy the trailing indices in machine order.
Eigen::MatrixXcd augmented_admittance(const NetworkCase& resolved, const PowerFlowSolution& pf,
                                      std::span<const int> removed_lines, std::optional<FaultShunt> fault);

}  // namespace cctlab
