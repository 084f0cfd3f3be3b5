#include "cctlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <set>

namespace cctlab {

namespace {

constexpr Complex kJ{0.0, 1.0};

bool contains(std::span<const int> ids, int id) {
    return std::find(ids.begin(), ids.end(), id) != ids.end();
}

}  // namespace

std::optional<std::size_t> NetworkCase::find_bus(int bus_id) const {
    for (std::size_t i = 0; i < buses.size(); ++i) {
        if (buses[i].id == bus_id) return i;
    }
    return std::nullopt;
}

std::optional<std::size_t> NetworkCase::find_line(int line_id) const {
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].id == line_id) return i;
    }
    return std::nullopt;
}

std::size_t NetworkCase::bus_index(int bus_id) const {
    if (auto idx = find_bus(bus_id)) return *idx;
    throw GridError("unknown bus id " + std::to_string(bus_id));
}

std::size_t NetworkCase::line_index(int line_id) const {
    if (auto idx = find_line(line_id)) return *idx;
    throw GridError("unknown line id " + std::to_string(line_id));
}

std::size_t NetworkCase::slack_index() const {
    for (std::size_t i = 0; i < buses.size(); ++i) {
        if (buses[i].kind == BusKind::slack) return i;
    }
    throw GridError("case has no slack bus");
}

std::vector<std::size_t> NetworkCase::load_buses() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < buses.size(); ++i) {
        if (buses[i].p_load != 0.0 || buses[i].q_load != 0.0) out.push_back(i);
    }
    return out;
}

double NetworkCase::omega_s() const { return 2.0 * std::numbers::pi * frequency; }

void NetworkCase::validate() const {
    if (buses.empty()) throw GridError("case has no buses");
    if (system_base <= 0.0 || frequency <= 0.0) throw GridError("system base and frequency must be positive");

    std::set<int> bus_ids;
    int slack_count = 0;
    for (const auto& bus : buses) {
        if (!bus_ids.insert(bus.id).second) throw GridError("duplicate bus id " + std::to_string(bus.id));
        if (bus.kind == BusKind::slack) ++slack_count;
        if (bus.kind != BusKind::pq && bus.v_setpoint <= 0.0) {
            throw GridError("bus " + std::to_string(bus.id) + " has non-positive voltage setpoint");
        }
    }
    if (slack_count != 1) throw GridError("case must have exactly one slack bus");

    std::set<int> line_ids;
    for (const auto& line : lines) {
        if (!line_ids.insert(line.id).second) throw GridError("duplicate line id " + std::to_string(line.id));
        if (!find_bus(line.from_bus) || !find_bus(line.to_bus)) {
            throw GridError("line " + std::to_string(line.id) + " references an unknown bus");
        }
        if (line.from_bus == line.to_bus) throw GridError("line " + std::to_string(line.id) + " is a self loop");
        if (line.r < 0.0 || line.x <= 0.0) {
            throw GridError("line " + std::to_string(line.id) + " needs r >= 0 and x > 0");
        }
    }

    std::set<int> machine_buses;
    bool slack_has_machine = false;
    for (const auto& m : machines) {
        auto idx = find_bus(m.bus);
        if (!idx) throw GridError("machine " + std::to_string(m.id) + " references an unknown bus");
        if (!machine_buses.insert(m.bus).second) {
            throw GridError("bus " + std::to_string(m.bus) + " hosts more than one machine");
        }
        if (buses[*idx].kind == BusKind::pq) {
            throw GridError("machine " + std::to_string(m.id) + " sits on a PQ bus");
        }
        if (buses[*idx].kind == BusKind::slack) slack_has_machine = true;
        if (m.h <= 0.0 || m.xd_prime <= 0.0 || m.d < 0.0) {
            throw GridError("machine " + std::to_string(m.id) + " needs h > 0, xd' > 0, d >= 0");
        }
    }
    if (!slack_has_machine) throw GridError("slack bus has no machine");
    for (const auto& bus : buses) {
        if (bus.kind == BusKind::pv && !machine_buses.contains(bus.id)) {
            throw GridError("PV bus " + std::to_string(bus.id) + " has no machine");
        }
    }
    for (const auto& inj : injections) {
        if (!find_bus(inj.bus)) throw GridError("injection references unknown bus " + std::to_string(inj.bus));
    }
    if (!is_connected(*this)) throw GridError("base network is not connected");
}

void validate_contingency(const NetworkCase& net, const ContingencySpec& c) {
    const std::string tag = "contingency " + std::to_string(c.number);
    if (!net.find_bus(c.fault_bus)) throw GridError(tag + ": unknown fault bus " + std::to_string(c.fault_bus));
    if (c.cleared_lines.empty()) throw GridError(tag + ": no cleared lines");
    for (int id : c.cleared_lines) {
        if (!net.find_line(id)) throw GridError(tag + ": unknown line " + std::to_string(id));
    }
    if (c.fault_admittance < 0.0) throw GridError(tag + ": negative fault admittance");
    if (!machines_connected(net, c.cleared_lines)) {
        throw GridError(tag + ": clearing splits the machines into separate islands");
    }
}

Scenario base_scenario(const NetworkCase& net) {
    Scenario s;
    for (auto idx : net.load_buses()) s.p_loads.push_back(net.buses[idx].p_load);
    for (const auto& inj : net.injections) {
        if (inj.source == InjectionSource::solar) s.p_solar = inj.p;
        if (inj.source == InjectionSource::wind) s.p_wind = inj.p;
    }
    return s;
}

NetworkCase apply_scenario(const NetworkCase& net, const Scenario& scenario) {
    const auto loads = net.load_buses();
    if (scenario.p_loads.size() != loads.size()) {
        throw GridError("scenario has " + std::to_string(scenario.p_loads.size()) + " loads, case has " +
                        std::to_string(loads.size()));
    }
    NetworkCase out = net;
    for (std::size_t k = 0; k < loads.size(); ++k) {
        auto& bus = out.buses[loads[k]];
        const double base = net.buses[loads[k]].p_load;
        const double p = scenario.p_loads[k];
        // Constant power factor; a purely reactive base load keeps its Q.
        if (base != 0.0) bus.q_load = net.buses[loads[k]].q_load * (p / base);
        bus.p_load = p;
    }
    for (auto& inj : out.injections) {
        if (inj.source == InjectionSource::solar) inj.p = scenario.p_solar;
        if (inj.source == InjectionSource::wind) inj.p = scenario.p_wind;
    }
    return out;
}

namespace {

// Component label per bus over the lines still in service.
std::vector<std::size_t> components(const NetworkCase& net, std::span<const int> removed_lines) {
    const std::size_t n = net.buses.size();
    std::vector<std::vector<std::size_t>> adj(n);
    for (const auto& line : net.lines) {
        if (contains(removed_lines, line.id)) continue;
        const auto f = net.bus_index(line.from_bus);
        const auto t = net.bus_index(line.to_bus);
        adj[f].push_back(t);
        adj[t].push_back(f);
    }
    constexpr auto kUnset = static_cast<std::size_t>(-1);
    std::vector<std::size_t> label(n, kUnset);
    std::size_t next = 0;
    for (std::size_t root = 0; root < n; ++root) {
        if (label[root] != kUnset) continue;
        std::queue<std::size_t> frontier;
        frontier.push(root);
        label[root] = next;
        while (!frontier.empty()) {
            const auto u = frontier.front();
            frontier.pop();
            for (auto v : adj[u]) {
                if (label[v] == kUnset) {
                    label[v] = next;
                    frontier.push(v);
                }
            }
        }
        ++next;
    }
    return label;
}

}  // namespace

bool machines_connected(const NetworkCase& net, std::span<const int> removed_lines) {
    if (net.machines.empty()) return true;
    const auto label = components(net, removed_lines);
    const auto first = label[net.bus_index(net.machines.front().bus)];
    for (const auto& m : net.machines) {
        if (label[net.bus_index(m.bus)] != first) return false;
    }
    return true;
}

bool is_connected(const NetworkCase& net, std::span<const int> removed_lines) {
    const auto label = components(net, removed_lines);
    return std::all_of(label.begin(), label.end(), [](std::size_t l) { return l == 0; });
}

BusAdmittance build_ybus(const NetworkCase& net, std::span<const int> removed_lines,
                         std::optional<FaultShunt> fault) {
    for (int id : removed_lines) net.line_index(id);

    const auto n = static_cast<Eigen::Index>(net.buses.size());
    BusAdmittance out;
    out.y = Eigen::MatrixXcd::Zero(n, n);
    for (const auto& line : net.lines) {
        if (contains(removed_lines, line.id)) continue;
        const auto f = static_cast<Eigen::Index>(net.bus_index(line.from_bus));
        const auto t = static_cast<Eigen::Index>(net.bus_index(line.to_bus));
        const Complex y_series = 1.0 / Complex(line.r, line.x);
        const Complex y_half_shunt = kJ * (line.b_shunt_total / 2.0);
        out.y(f, f) += y_series + y_half_shunt;
        out.y(t, t) += y_series + y_half_shunt;
        out.y(f, t) -= y_series;
        out.y(t, f) -= y_series;
    }
    if (fault) {
        // Bolted fault modelled as a large inductive shunt.
        const auto k = static_cast<Eigen::Index>(net.bus_index(fault->bus));
        out.y(k, k) += -kJ * fault->admittance;
    }
    out.connected = is_connected(net, removed_lines);
    return out;
}

Eigen::VectorXcd PowerFlowSolution::voltage() const {
    Eigen::VectorXcd out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = std::polar(v(i), theta(i));
    return out;
}

PowerFlowSolution solve_power_flow(const NetworkCase& net, const Scenario& scenario,
                                   const PowerFlowOptions& options) {
    return solve_power_flow(apply_scenario(net, scenario), options);
}

PowerFlowSolution solve_power_flow(const NetworkCase& net, const PowerFlowOptions& options) {
    const auto ybus = build_ybus(net);
    if (!ybus.connected) throw GridError("power flow on a disconnected network");
    const Eigen::MatrixXcd& Y = ybus.y;
    const auto n = static_cast<Eigen::Index>(net.buses.size());

    Eigen::VectorXd p_spec = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd q_spec = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        p_spec(i) -= net.buses[i].p_load;
        q_spec(i) -= net.buses[i].q_load;
    }
    for (const auto& inj : net.injections) {
        const auto k = static_cast<Eigen::Index>(net.bus_index(inj.bus));
        p_spec(k) += inj.p;
        q_spec(k) += inj.q;
    }
    for (const auto& m : net.machines) {
        const auto k = static_cast<Eigen::Index>(net.bus_index(m.bus));
        if (net.buses[k].kind == BusKind::pv) p_spec(k) += m.p_gen;
    }

    // Unknown ordering: angles of non-slack buses, then magnitudes of PQ buses.
    std::vector<Eigen::Index> angle_buses;
    std::vector<Eigen::Index> mag_buses;
    Eigen::VectorXd vm(n);
    Eigen::VectorXd va = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& bus = net.buses[i];
        vm(i) = bus.kind == BusKind::pq ? 1.0 : bus.v_setpoint;
        if (bus.kind != BusKind::slack) angle_buses.push_back(i);
        if (bus.kind == BusKind::pq) mag_buses.push_back(i);
    }
    const auto na = static_cast<Eigen::Index>(angle_buses.size());
    const auto nm = static_cast<Eigen::Index>(mag_buses.size());

    auto complex_voltage = [&] {
        Eigen::VectorXcd V(n);
        for (Eigen::Index i = 0; i < n; ++i) V(i) = std::polar(vm(i), va(i));
        return V;
    };
    auto mismatch_vector = [&](const Eigen::VectorXcd& S) {
        Eigen::VectorXd f(na + nm);
        for (Eigen::Index k = 0; k < na; ++k) f(k) = S(angle_buses[k]).real() - p_spec(angle_buses[k]);
        for (Eigen::Index k = 0; k < nm; ++k) f(na + k) = S(mag_buses[k]).imag() - q_spec(mag_buses[k]);
        return f;
    };

    PowerFlowSolution sol;
    Eigen::VectorXcd V = complex_voltage();
    Eigen::VectorXcd I = Y * V;
    Eigen::VectorXcd S = V.cwiseProduct(I.conjugate());
    Eigen::VectorXd f = mismatch_vector(S);
    double worst = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
    int iter = 0;
    while (worst > options.tolerance) {
        if (iter >= options.max_iterations) {
            throw NonConvergence("power flow did not converge in " + std::to_string(iter) + " iterations", iter,
                                 worst);
        }
        // Complex power sensitivities in polar coordinates.
        const Eigen::VectorXcd Vnorm = V.array() / V.array().abs();
        const Eigen::MatrixXcd dS_dVa =
            kJ * V.asDiagonal() * (Eigen::MatrixXcd(I.asDiagonal()) - Y * V.asDiagonal()).conjugate();
        const Eigen::MatrixXcd dS_dVm = V.asDiagonal() * (Y * Vnorm.asDiagonal()).conjugate() +
                                        Eigen::MatrixXcd(I.conjugate().asDiagonal()) * Vnorm.asDiagonal();

        Eigen::MatrixXd J(na + nm, na + nm);
        for (Eigen::Index r = 0; r < na; ++r) {
            for (Eigen::Index c = 0; c < na; ++c) J(r, c) = dS_dVa(angle_buses[r], angle_buses[c]).real();
            for (Eigen::Index c = 0; c < nm; ++c) J(r, na + c) = dS_dVm(angle_buses[r], mag_buses[c]).real();
        }
        for (Eigen::Index r = 0; r < nm; ++r) {
            for (Eigen::Index c = 0; c < na; ++c) J(na + r, c) = dS_dVa(mag_buses[r], angle_buses[c]).imag();
            for (Eigen::Index c = 0; c < nm; ++c) J(na + r, na + c) = dS_dVm(mag_buses[r], mag_buses[c]).imag();
        }
        const Eigen::VectorXd dx = J.partialPivLu().solve(-f);
        if (!dx.allFinite()) {
            throw NonConvergence("power flow Jacobian is singular", iter, worst);
        }
        for (Eigen::Index k = 0; k < na; ++k) va(angle_buses[k]) += dx(k);
        for (Eigen::Index k = 0; k < nm; ++k) vm(mag_buses[k]) += dx(na + k);
        ++iter;

        V = complex_voltage();
        I = Y * V;
        S = V.cwiseProduct(I.conjugate());
        f = mismatch_vector(S);
        worst = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
        if (!std::isfinite(worst)) throw NonConvergence("power flow diverged", iter, worst);
    }

    sol.v = vm;
    sol.theta = va;
    sol.p_injection = S.real();
    sol.q_injection = S.imag();
    sol.max_mismatch = worst;
    sol.iterations = iter;

    const auto m = static_cast<Eigen::Index>(net.machines.size());
    sol.p_gen.resize(m);
    sol.q_gen.resize(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const auto b = static_cast<Eigen::Index>(net.bus_index(net.machines[k].bus));
        double p_other = -net.buses[b].p_load;
        double q_other = -net.buses[b].q_load;
        for (const auto& inj : net.injections) {
            if (inj.bus == net.machines[k].bus) {
                p_other += inj.p;
                q_other += inj.q;
            }
        }
        // PV output is the schedule; the residual mismatch is below tolerance and
        // would only add rounding noise to features.
        sol.p_gen(k) = net.buses[b].kind == BusKind::pv ? net.machines[k].p_gen : S(b).real() - p_other;
        sol.q_gen(k) = S(b).imag() - q_other;
    }
    return sol;
}

MachineInitState init_machines(const NetworkCase& net, const PowerFlowSolution& pf) {
    const auto m = static_cast<Eigen::Index>(net.machines.size());
    MachineInitState out;
    out.e_mag.resize(m);
    out.delta0.resize(m);
    out.p_mech.resize(m);
    const Eigen::VectorXcd V = pf.voltage();
    for (Eigen::Index k = 0; k < m; ++k) {
        const auto& machine = net.machines[k];
        const auto b = static_cast<Eigen::Index>(net.bus_index(machine.bus));
        const Complex s_gen(pf.p_gen(k), pf.q_gen(k));
        const Complex current = std::conj(s_gen / V(b));
        const Complex emf = V(b) + kJ * machine.xd_prime * current;
        out.e_mag(k) = std::abs(emf);
        out.delta0(k) = std::arg(emf);
        out.p_mech(k) = (emf * std::conj(current)).real();
    }
    return out;
}

Eigen::MatrixXcd augmented_admittance(const NetworkCase& net, const PowerFlowSolution& pf,
                                      std::span<const int> removed_lines, std::optional<FaultShunt> fault) {
    const auto n = static_cast<Eigen::Index>(net.buses.size());
    const auto m = static_cast<Eigen::Index>(net.machines.size());
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n + m, n + m);
    y.topLeftCorner(n, n) = build_ybus(net, removed_lines, fault).y;

    // Loads (net of renewable injections) become constant impedances at the solved voltage.
    for (Eigen::Index i = 0; i < n; ++i) {
        Complex s_load(net.buses[i].p_load, net.buses[i].q_load);
        for (const auto& inj : net.injections) {
            if (net.bus_index(inj.bus) == static_cast<std::size_t>(i)) s_load -= Complex(inj.p, inj.q);
        }
        if (s_load != Complex{}) y(i, i) += std::conj(s_load) / (pf.v(i) * pf.v(i));
    }
    for (Eigen::Index k = 0; k < m; ++k) {
        const auto b = static_cast<Eigen::Index>(net.bus_index(net.machines[k].bus));
        const Complex y_int = 1.0 / Complex(0.0, net.machines[k].xd_prime);
        y(n + k, n + k) += y_int;
        y(b, b) += y_int;
        y(n + k, b) -= y_int;
        y(b, n + k) -= y_int;
    }
    return y;
}

ReducedNetwork reduce_to_internal_nodes(const NetworkCase& net, const PowerFlowSolution& pf,
                                        std::span<const int> removed_lines, std::optional<FaultShunt> fault,
                                        NetworkPhase phase) {
    const auto n = static_cast<Eigen::Index>(net.buses.size());
    const auto m = static_cast<Eigen::Index>(net.machines.size());
    const Eigen::MatrixXcd y = augmented_admittance(net, pf, removed_lines, fault);

    const Eigen::MatrixXcd y_bb = y.topLeftCorner(n, n);
    const Eigen::MatrixXcd y_bg = y.topRightCorner(n, m);
    const Eigen::MatrixXcd y_gb = y.bottomLeftCorner(m, n);
    const Eigen::MatrixXcd y_gg = y.bottomRightCorner(m, m);

    Eigen::FullPivLU<Eigen::MatrixXcd> lu(y_bb);
    if (!lu.isInvertible()) throw GridError("network elimination block is singular");

    ReducedNetwork out;
    out.phase = phase;
    out.y_reduced = y_gg - y_gb * lu.solve(y_bg);
    return out;
}

}  // namespace cctlab
