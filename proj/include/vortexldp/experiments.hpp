#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "vortexldp/control.hpp"

namespace vortexldp {

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"chaos_convergence", "dissipation",    "tilted_sampling",
                                                "inequality_validate", "action_roundtrip", "heat_checks"};
    return names;
}

/// Preset name plus every parameter it reads. The output directory is not part
/// of the hashed configuration, so reruns elsewhere reproduce the hash.
struct ExperimentConfig {
    std::string preset;
    nlohmann::json params = nlohmann::json::object();
    std::string out_dir = "out";

    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
    std::string hash() const;
};

/// Default parameters for a preset; unknown names throw ConfigError.
nlohmann::json preset_defaults(const std::string& name);
/// Defaults merged with overrides. Keys absent from the defaults are rejected.
ExperimentConfig make_experiment(const std::string& name, const nlohmann::json& overrides = nlohmann::json::object(),
                                 std::string out_dir = "out");
/// Applies "a.b=value" to j. The value is parsed as JSON, else taken as a string.
void apply_set(nlohmann::json& j, const std::string& assignment);

struct PresetResult {
    std::string name;
    std::string hash;
    nlohmann::json summary = nlohmann::json::object();
    std::vector<std::string> failures;
    std::vector<std::string> artifacts;

    bool pass() const { return failures.empty(); }
    int exit_code() const { return pass() ? 0 : 3; }
};

/// Runs a preset, writing its artifacts (CSV, JSON, JSONL, records) to out_dir.
PresetResult run_preset(const ExperimentConfig& cfg);

/// Weak tube around a target density path: the event holds when every
/// Fourier coefficient with 0 < |k|∞ ≤ kmax of the empirical measure stays
/// within eps of the target's at every snapshot.
struct TubeEvent {
    double eps = 0.05;
    int kmax = 1;
    bool always = false;  // null event
};

struct TiltedSpec {
    int n = 64;
    double nu = 0.1;
    double T = 0.2;
    double dt = 1e-3;
    int snapshot_stride = 20;
    int paths = 400;
    int direct_paths = 400;
    uint64_t seed = 1;
    int pde_M = 64;
    nlohmann::json initial = {{"M", 64}, {"modes", {{{"amp", 0.3}, {"k", {1, 0}}, {"phase", 0.0}}}}};
    ControlField control = ControlField::from_modes({ControlMode{0.15, 0, 1, 0.0}});
    TubeEvent event;
    bool direct_mc = true;
};

struct TiltedEstimate {
    double estimate = 0.0;
    double ci_half = 0.0;  // 95% normal interval
    double ess = 0.0;
    bool unreliable = false;  // ess < 10
    int tilted_hits = 0;
    bool direct_run = false;
    double direct = 0.0;
    double direct_ci_half = 0.0;
    bool direct_valid = false;  // direct estimate ≥ 1e-2
    bool consistent = true;     // intervals overlap (when direct_valid)
    /// (1/4ν) E^v ∫⟨|v|², ρ_n⟩ dt and its standard error.
    double entropy_proxy = 0.0;
    double entropy_proxy_se = 0.0;
    /// The same proxy averaged over tilted paths inside the tube.
    double entropy_proxy_event = 0.0;
    /// Action of the controlled mean-field path the tube surrounds.
    double target_action = 0.0;

    nlohmann::json to_json() const;
};

/// Importance-sampling estimate of P(event) for the uncontrolled particle
/// system, from paths driven by the control and weighted by 1/Z^v.
TiltedEstimate tilted_sampling(const TiltedSpec& spec);

}  // namespace vortexldp
