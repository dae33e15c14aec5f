#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "vortexldp/control.hpp"
#include "vortexldp/kernels.hpp"
#include "vortexldp/mollify.hpp"
#include "vortexldp/pairwise.hpp"
#include "vortexldp/record.hpp"
#include "vortexldp/rng.hpp"

namespace vortexldp {

struct ParticleState {
    std::vector<TorusPoint> x;
    double t = 0.0;
    /// log of the likelihood ratio dP^v/dP accumulated along the path.
    double log_weight = 0.0;

    int n() const { return static_cast<int>(x.size()); }
};

enum class DriftKind { direct_singular, mollified, tabulated, none };

struct DriftMode {
    DriftKind kind = DriftKind::mollified;
    int level = 0;       // mollifier level; 0 means "the particle count"
    double r_min = 1e-6;  // collision guard for direct_singular

    static DriftMode direct(double r_min = 1e-6) { return {DriftKind::direct_singular, 0, r_min}; }
    static DriftMode mollified(int level = 0) { return {DriftKind::mollified, level, 1e-6}; }
};

std::string to_string(DriftKind k);
DriftKind drift_kind_from_string(const std::string& s);

/// Binds a drift mode to kernel tables for a fixed particle count.
class DriftEvaluator {
public:
    DriftEvaluator(DriftMode mode, int n, std::shared_ptr<const KernelTable> kt = KernelTable::shared(),
                   const MollifierFamily& fam = MollifierFamily::standard(), Exec exec = Exec::parallel);

    std::vector<Vec2> operator()(const std::vector<TorusPoint>& X) const;
    const DriftMode& mode() const { return mode_; }
    int m() const { return m_; }
    const KernelTable& kernels() const { return *kt_; }
    const MollifierProfile& profile() const { return fam_->profile(); }
    /// The same evaluator with a mollified drift at this evaluator's level.
    DriftEvaluator mollified_fallback() const;

private:
    DriftMode mode_;
    int n_, m_;
    std::shared_ptr<const KernelTable> kt_;
    const MollifierFamily* fam_;
    std::shared_ptr<const MollifiedKernelTable> tab_;
    Exec exec_;
};

/// Drift for a state with the shared default tables.
std::vector<Vec2> drift(const ParticleState& s, const DriftMode& mode, Exec exec = Exec::parallel);

/// How a control enters the likelihood ratio.
enum class GirsanovMode {
    drive,     // the control is in the dynamics; E^v[1/Z] = 1
    reweight,  // paths follow the uncontrolled law; E[Z] = 1
};

/// One Euler–Maruyama step. noise holds 2n standard normals.
ParticleState step_em(const ParticleState& s, double dt, std::span<const double> noise, double nu,
                      const DriftEvaluator& drift, const ControlField* control = nullptr,
                      GirsanovMode gm = GirsanovMode::drive);
/// Classical RK4 for the deterministic (ν = 0) flow, control included.
ParticleState step_rk4(const ParticleState& s, double dt, const DriftEvaluator& drift,
                       const ControlField* control = nullptr);

enum class Integrator { euler_maruyama, rk4 };
enum class CollisionPolicy { halve_then_mollify, halve_only, fail };

struct SimConfig {
    int n = 64;
    double nu = 0.1;
    double T = 0.1;
    double dt = 1e-3;
    int snapshot_stride = 10;
    uint64_t seed = 1;
    DriftMode drift;
    Integrator integrator = Integrator::euler_maruyama;
    ControlField control;
    GirsanovMode girsanov = GirsanovMode::drive;
    CollisionPolicy policy = CollisionPolicy::halve_then_mollify;
    int max_halvings = 4;
    /// Mollifier level for energy monitors (0: n, negative: off).
    int monitor_level = 0;
    /// Test function for the linear martingale monitor (empty: off).
    std::vector<FourierMode> test_function{{1.0, 1, 0, 0.0}, {0.5, 1, 1, 0.3}};
    /// "uniform" | "positions" | "density"
    std::string initial = "uniform";
    std::vector<TorusPoint> initial_positions;
    GridField initial_density;
    /// Spec the density was built from ({"M", "modes"} or {"file"}); recorded verbatim.
    nlohmann::json initial_density_spec;
    bool store_snapshots = true;

    nlohmann::json to_json() const;
    static SimConfig from_json(const nlohmann::json& j);
    void validate() const;
    int monitor_m() const;
};

/// Runs the particle system. Deterministic for a given configuration.
TrajectoryRecord simulate(const SimConfig& cfg);
/// The state at the end of simulate() without building a record.
ParticleState simulate_final(const SimConfig& cfg);

/// ½ Σ_{i≠j} [φ(X_i) − φ(X_j)]·𝒦(X_i − X_j)/n², evaluated through the bounded
/// kernel w = r𝒦.
double symmetrized_pairing(const std::vector<TorusPoint>& X, const std::function<Vec2(const TorusPoint&)>& phi,
                           const KernelTable& kt = *KernelTable::shared());
/// Σ_i φ(X_i)·b_i / n with the direct drift (the unsymmetrized route).
double direct_pairing(const std::vector<TorusPoint>& X, const std::function<Vec2(const TorusPoint&)>& phi,
                      const KernelTable& kt = *KernelTable::shared());

/// Compensated linear functional along a particle record:
/// M(t) = ⟨φ,ρ_n(t)⟩ − ⟨φ,ρ_n(0)⟩ − ∫[⟨∇φ, R⟩ + ν⟨Δφ,ρ_n⟩] and its exponential
/// version n[M − ν∫⟨|∇φ|²,ρ_n⟩], trapezoid on snapshots.
struct MonitorSeries {
    std::vector<double> t, value, exp_log;
    bool coarse = false;  // snapshot spacing exceeded the tolerance
};
MonitorSeries martingale_monitor(const TrajectoryRecord& rec, const SmoothFunction& phi, double spacing_tol = 1e-2);
/// e(ζ_n∗ρ_n) + ν∫‖ζ_n∗ρ_n − 1‖² − ∫⟨∇𝒩_n∗ρ_n, R⟩ − ω_n t on the snapshots.
MonitorSeries energy_compensator_monitor(const TrajectoryRecord& rec, int level, double spacing_tol = 1e-2);
/// ω_n = (ν/n)(G_n(0) − 1).
double omega_n(double nu, int n, int m);

/// Uniform i.i.d. positions from the counter RNG.
std::vector<TorusPoint> uniform_positions(int n, uint64_t seed, uint32_t stream = 0);

}  // namespace vortexldp
