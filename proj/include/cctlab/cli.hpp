#pragma once

#include "cctlab/cct.hpp"
#include "cctlab/evaluation.hpp"
#include "cctlab/regress.hpp"
#include "cctlab/selection.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cctlab {

/// Bad flags, unreadable or inconsistent config. Maps to exit code 1.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Everything a command needs, from one JSON document. Every field has a
/// default, so an empty document runs the bundled WSCC case.
struct RunConfig {
    std::filesystem::path case_path;
    std::vector<int> contingencies;             // empty -> every contingency in the case
    nlohmann::json uncertainty = nlohmann::json::object();  // overrides on top of the case
    std::uint64_t seed = 2024;
    std::size_t n_per_contingency = 150;
    unsigned workers = 1;
    CctOptions cct;
    SelectionOptions selection;
    std::optional<std::vector<ModelSpec>> models;  // unset -> per-mode defaults
    int cv_folds = 5;
    std::vector<double> cluster_boundaries = kDefaultClusterBoundaries;
    bool with_t1 = true;
    std::filesystem::path output_dir = "out";

    void validate() const;
};

std::filesystem::path bundled_case_path();

/// Relative paths inside the document resolve against `base_dir`.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = ".");
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json run_config_json(const RunConfig& config);

/// Model list used by `bench` when the config names none: all seven for
/// with-label, mlp and grnn for the two ablation modes.
std::vector<ModelSpec> default_models_for(ExperimentMode mode, std::uint64_t seed);

/// Entry point behind the `cctlab` binary; args excludes the program name.
/// Returns 0 on success, 1 on usage/config errors, 2 on numerical failures.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cctlab
