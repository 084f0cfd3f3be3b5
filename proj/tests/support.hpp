#pragma once

#include "cctlab/case_io.hpp"
#include "cctlab/grid.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace cctlab::testing {

inline std::string data_path(const std::string& name) { return std::string(CCTLAB_DATA_DIR) + "/" + name; }

inline CaseFile wscc9() { return load_case_file(data_path("wscc9.json")); }

/// Single machine against a stiff source standing in for the infinite bus. The
/// tie is two parallel lines of reactance `2 * x_tie`; contingency 1 faults the
/// machine terminal and trips one of them.
struct SmibSetup {
    NetworkCase net;
    ContingencySpec contingency;
    double p_m = 0.8;
    double h = 5.0;
    double xd = 0.3;
    double x_tie = 0.2;
    double infinite_xd = 1e-6;
};

inline SmibSetup make_smib(double p_m = 0.8, double h = 5.0) {
    SmibSetup s;
    s.p_m = p_m;
    s.h = h;
    s.net.frequency = 60.0;
    s.net.buses = {Bus{1, BusKind::pv, 1.0, 0.0, 0.0}, Bus{2, BusKind::slack, 1.0, 0.0, 0.0}};
    s.net.lines = {Line{1, 1, 2, 0.0, 2.0 * s.x_tie, 0.0}, Line{2, 1, 2, 0.0, 2.0 * s.x_tie, 0.0}};
    s.net.machines = {Machine{1, 1, h, s.xd, 0.0, p_m}, Machine{2, 2, 1e7, s.infinite_xd, 0.0, 0.0}};
    s.contingency = ContingencySpec{1, 1, {2}, 1e6};
    return s;
}

/// Equal-area critical clearing time for a machine whose electrical output is
/// zero while the fault is on. Works from the terminal phasors only.
struct EqualAreaOracle {
    double delta0 = 0.0;
    double delta_clear = 0.0;
    double t_clear = 0.0;
};

inline EqualAreaOracle equal_area(const SmibSetup& s, double omega_s) {
    // Terminal angle from P = V1 V2 sin(theta) / x_tie with both voltages at 1.
    const double theta = std::asin(s.p_m * s.x_tie);
    const std::complex<double> v1 = std::polar(1.0, theta);
    const std::complex<double> current = (v1 - 1.0) / std::complex<double>(0.0, s.x_tie);
    const std::complex<double> emf = v1 + std::complex<double>(0.0, s.xd) * current;
    EqualAreaOracle out;
    out.delta0 = std::arg(emf);
    const double p_max_post = std::abs(emf) / (s.xd + 2.0 * s.x_tie + s.infinite_xd);
    const double delta_max = std::numbers::pi - std::asin(s.p_m / p_max_post);
    const double cos_dc = (s.p_m * (delta_max - out.delta0) + p_max_post * std::cos(delta_max)) / p_max_post;
    out.delta_clear = std::acos(cos_dc);
    out.t_clear = std::sqrt(4.0 * s.h * (out.delta_clear - out.delta0) / (omega_s * s.p_m));
    return out;
}

}  // namespace cctlab::testing
