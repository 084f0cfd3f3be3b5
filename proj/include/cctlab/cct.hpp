#pragma once

#include "cctlab/grid.hpp"
#include "cctlab/tds.hpp"

#include <array>
#include <string_view>

namespace cctlab {

struct CctOptions {
    double beta_deg = 180.0;
    double bracket_max = 2.0;  // s of fault duration
    double tol = 2e-4;         // s
    double t_fault = 1.0;
    double horizon = 10.0;  // simulated time after the fault instant
    double step = 2e-3;

    void validate() const;
    SimulationSchedule schedule(double duration) const {
        return SimulationSchedule::for_duration(duration, t_fault, horizon, step);
    }
};

enum class CctKind { finite, zero, infinite };

std::string_view to_string(CctKind kind);

struct CctResult {
    CctKind kind = CctKind::finite;
    double value = 0.0;  // fault duration, finite kind only
    int evaluations = 0;
    std::array<double, 2> bracket{0.0, 0.0};  // [last stable, first unstable]
};

/// Bisection on the fault duration. The shortest admissible duration is one
/// integration step; a run unstable there yields kind=zero, a run stable at
/// bracket_max yields kind=infinite.
CctResult find_cct(const TransientModel& model, const CctOptions& options = {});

CctResult find_cct(const NetworkCase& net, const Scenario& scenario, const ContingencySpec& contingency,
                   const CctOptions& options = {});

/// Upper bound on simulations used by find_cct for the given options.
int max_cct_evaluations(const CctOptions& options);

}  // namespace cctlab
