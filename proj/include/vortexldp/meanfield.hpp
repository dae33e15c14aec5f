#pragma once

#include <cstdint>

#include "json.hpp"
#include "vortexldp/control.hpp"
#include "vortexldp/record.hpp"
#include "vortexldp/torus.hpp"
#include "vortexldp/vortex.hpp"

namespace vortexldp {

enum class TimeScheme { imex_euler, imex_rk2 };

struct PdeConfig {
    int M = 64;
    double dt = 1e-3;
    double T = 0.5;
    double nu = 0.1;
    bool dealias = true;
    ControlField control;
    TimeScheme scheme = TimeScheme::imex_rk2;
    /// false drops the self-advection by 𝒦∗ρ (heat flow plus control only).
    bool interaction = true;
    double cfl = 0.5;
    int snapshot_stride = 10;
    double blowup = 1e6;
    /// Initial density: {"modes": [{"amp", "k", "phase"}]} for 1 + Σ amp cos(2πk·x + phase),
    /// or {"file": path} for a GridField binary.
    nlohmann::json initial = {{"modes", {{{"amp", 0.2}, {"k", {1, 0}}, {"phase", 0.0}}}}};

    nlohmann::json to_json() const;
    static PdeConfig from_json(const nlohmann::json& j);
    void validate() const;
    int steps() const;
};

/// Density built from an initial-condition spec (see PdeConfig::initial).
GridField density_from_json(const nlohmann::json& spec, const PeriodicGrid& g);
/// 1 + Σ amp cos(2πk·x + phase).
GridField cosine_density(const PeriodicGrid& g, const std::vector<FourierMode>& modes);

struct PdeState {
    GridField rho;
    double t = 0.0;
    double nu = 0.0;
};

/// u = 𝒦∗ρ, spectrally.
GridField velocity_from_vorticity(const GridField& rho);

/// One step of size cfg.dt: exact diffusion factor, explicit advection by
/// 𝒦∗ρ + v with 2/3 dealiasing. Throws NumericError on a CFL violation or blow-up.
PdeState step_pde(const PdeState& s, const PdeConfig& cfg);

/// Density trajectory from gamma. Observables per snapshot: t, e, l2_dev, S, I,
/// dissipation (∫‖ρ−1‖²), work (∫∫∇(𝒩∗ρ)·v ρ), min_rho, Q. The running integrals
/// use the trapezoid rule on every solver step.
TrajectoryRecord solve(const GridField& gamma, const PdeConfig& cfg);
TrajectoryRecord solve(const GridField& gamma, const ControlField& control, double T, PdeConfig cfg);

/// sup over snapshots of (Q_t − e(γ))/t, the measured constant of the a-priori bound.
double measured_C_v(const TrajectoryRecord& rec);

/// Per snapshot: t, residual of e(ρ(t)) − e(γ) + ν∫‖ρ−1‖² − ∫∫∇(𝒩∗ρ)·vρ since t=0,
/// the same residual over the last snapshot interval, and both relative to e(γ).
Series dissipation_residual(const TrajectoryRecord& rec);

/// n i.i.d. draws from a grid density, bilinear within cells.
ParticleState sample_initial(const GridField& gamma, int n, uint64_t seed);

}  // namespace vortexldp
