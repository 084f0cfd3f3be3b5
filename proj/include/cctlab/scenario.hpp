#pragma once

#include "cctlab/cct.hpp"
#include "cctlab/grid.hpp"
#include "cctlab/tds.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cctlab {

/// Gaussian around the base value, hard-truncated to [lo_frac, hi_frac] x base.
struct LoadUncertainty {
    double base = 0.0;
    double lo_frac = 0.8;
    double hi_frac = 1.2;
    double sigma_frac = 0.2 / 3.0;
};

/// Beta(alpha, beta_shape) mapped onto [lo_frac, hi_frac] x base.
struct SolarUncertainty {
    double base = 0.0;
    double lo_frac = 0.75;
    double hi_frac = 1.15;
    double alpha = 2.0;
    double beta_shape = 2.0;
};

/// Weibull with mean = base and standard deviation = cv x base.
struct WindUncertainty {
    double base = 0.0;
    double cv = 0.15;
};

struct WeibullParams {
    double shape = 0.0;
    double scale = 0.0;
};

/// Shape from the coefficient of variation (Gamma-function moment identity),
/// scale from the mean.
WeibullParams weibull_from_moments(double mean, double cv);

struct UncertaintySpec {
    std::vector<LoadUncertainty> loads;
    std::optional<SolarUncertainty> solar;
    std::optional<WindUncertainty> wind;

    void validate() const;
};

/// Spec whose bases are the case's own load and renewable values.
UncertaintySpec default_uncertainty(const NetworkCase& net);

std::vector<Scenario> sample_scenarios(const UncertaintySpec& spec, std::size_t n, std::uint64_t seed);

struct DatasetRow {
    FeatureRecord features;
    double cct = 0.0;
    Scenario scenario;
};

struct ExcludedRow {
    int cont_no = 0;
    std::size_t seed_index = 0;
    std::string reason;  // "zero", "infinite", "nonconverged: ..."
};

struct Provenance {
    std::uint64_t seed = 0;
    std::string case_hash;
    std::vector<int> contingencies;
    std::size_t n_per_contingency = 0;
    std::size_t excluded_zero = 0;
    std::size_t excluded_infinite = 0;
    std::size_t excluded_nonconverged = 0;
    std::vector<ExcludedRow> excluded;
    CctOptions cct;
};

struct Dataset {
    std::vector<DatasetRow> rows;
    Provenance provenance;
};

struct DatasetOptions {
    CctOptions cct;
    unsigned workers = 1;
};

/// Seed used for the scenarios of one contingency.
std::uint64_t contingency_seed(std::uint64_t seed, int cont_no);

/// Runs power flow, initialization, CCT search and feature capture for every
/// (contingency, scenario) pair. Rows come back ordered by (contingency,
/// seed_index) whatever the worker count.
Dataset build_dataset(const NetworkCase& net, const std::vector<ContingencySpec>& contingencies,
                      const UncertaintySpec& spec, std::size_t n_per_contingency, std::uint64_t seed,
                      const DatasetOptions& options = {});

struct ContingencyStats {
    int cont_no = 0;
    double mean = 0.0;
    double std = 0.0;  // n-1 denominator
    std::size_t count = 0;
};

struct Histogram {
    double start = 0.0;
    double bin_width = 0.02;
    std::vector<std::size_t> counts;
};

struct DatasetSummary {
    std::vector<ContingencyStats> per_contingency;
    Histogram histogram;
    std::vector<std::string> notes;
};

/// Per-contingency moments over `contingencies` (groups without rows are
/// omitted with a note) and a global CCT histogram.
DatasetSummary summarize(const Dataset& dataset, const std::vector<int>& contingencies, double bin_width = 0.02);
DatasetSummary summarize(const Dataset& dataset, double bin_width = 0.02);

}  // namespace cctlab
