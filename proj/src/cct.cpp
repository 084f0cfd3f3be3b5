#include "cctlab/cct.hpp"

#include <cmath>
#include <stdexcept>

namespace cctlab {

std::string_view to_string(CctKind kind) {
    switch (kind) {
        case CctKind::finite: return "finite";
        case CctKind::zero: return "zero";
        case CctKind::infinite: return "infinite";
    }
    return "unknown";
}

void CctOptions::validate() const {
    if (!(tol > 0.0) || !(step > 0.0)) throw std::invalid_argument("cct tolerance and step must be positive");
    if (!(bracket_max > step)) throw std::invalid_argument("cct bracket must exceed one integration step");
    if (!(horizon > bracket_max)) throw std::invalid_argument("simulation horizon must exceed the cct bracket");
    if (!(t_fault > 0.0)) throw std::invalid_argument("fault instant must be positive");
    if (!(beta_deg > 0.0)) throw std::invalid_argument("stability level must be positive");
}

int max_cct_evaluations(const CctOptions& options) {
    return static_cast<int>(std::ceil(std::log2(options.bracket_max / options.tol))) + 2;
}

CctResult find_cct(const TransientModel& model, const CctOptions& options) {
    options.validate();
    CctResult result;
    auto stable_at = [&](double duration) {
        ++result.evaluations;
        return check_b_stability(model, options.schedule(duration), options.beta_deg).stable;
    };

    double lo = options.step;
    double hi = options.bracket_max;
    if (!stable_at(lo)) {
        result.kind = CctKind::zero;
        result.bracket = {0.0, lo};
        return result;
    }
    if (stable_at(hi)) {
        result.kind = CctKind::infinite;
        result.bracket = {hi, hi};
        return result;
    }
    // Invariant: lo tested stable, hi tested unstable.
    while (hi - lo > options.tol) {
        const double mid = 0.5 * (lo + hi);
        if (stable_at(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    result.kind = CctKind::finite;
    result.value = lo;
    result.bracket = {lo, hi};
    return result;
}

CctResult find_cct(const NetworkCase& net, const Scenario& scenario, const ContingencySpec& contingency,
                   const CctOptions& options) {
    const Study study = prepare_study(net, scenario, contingency);
    return find_cct(study.model, options);
}

}  // namespace cctlab
