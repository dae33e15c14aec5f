#pragma once

#include <vector>

#include "json.hpp"
#include "vortexldp/control.hpp"
#include "vortexldp/record.hpp"
#include "vortexldp/torus.hpp"

namespace vortexldp {

struct WeightedSolveOptions {
    double mu_min = 1e-8;
    double rtol = 1e-10;
    int max_iter = 5000;
};

/// Solution of −div(μ∇φ) = m with zero-mean φ.
struct WeightedSolve {
    GridField phi;
    GridField grad_phi;
    /// ⟨|∇φ|², μ⟩ = ‖m‖²_{−1,μ}.
    double norm_sq = 0.0;
    /// 2⟨φ, m⟩ − ⟨|∇φ|², μ⟩, the dual value at the maximizer.
    double dual_value = 0.0;
    int iterations = 0;
    double residual = 0.0;
    long floor_hits = 0;
};

/// Preconditioned CG with the constant-coefficient inverse Laplacian as
/// preconditioner. m must have zero mean; modes invisible to the spectral
/// gradient (pure Nyquist) are dropped.
WeightedSolve weighted_h1neg_solve(const GridField& m, const GridField& mu, const WeightedSolveOptions& opt = {});
double weighted_h1neg_norm(const GridField& m, const GridField& mu, const WeightedSolveOptions& opt = {});

/// ∂ₜρ − νΔρ + div(ρ(𝒦∗ρ)) given ∂ₜρ.
GridField pde_residual(const GridField& rho, const GridField& drho_dt, double nu);

struct ControlSlice {
    double t = 0.0;
    double norm_sq = 0.0;
    double norm_sq_richardson = 0.0;
    int cg_iters = 0;
    long floor_hits = 0;
    bool skipped = false;
    GridField p;
    GridField grad_p;
};

struct RecoveredControl {
    std::vector<ControlSlice> slices;
    /// (1/4ν)∫‖m‖²_{−1,ρ} dt (trapezoid over slices).
    double action = 0.0;
    double action_richardson = 0.0;
    double nu = 0.0;
    std::vector<double> times;
    /// m(t) per slice, kept for the variational lower bound.
    std::vector<GridField> residuals;
};

/// Per-slice Riesz representative of the PDE residual of a density path.
/// Second-order differences in time (one-sided at the ends); the fourth-order
/// Richardson combination is reported alongside where the stencil fits.
RecoveredControl recover_control(const TrajectoryRecord& rec, const WeightedSolveOptions& opt = {});
RecoveredControl recover_control(const std::vector<double>& times, const std::vector<GridField>& rho, double nu,
                                 const WeightedSolveOptions& opt = {});

/// Space-time test direction φ(t, x) = P_l(2t/T − 1)·f(x).
struct TestDirection {
    int legendre = 0;
    SmoothFunction f;
};
/// Fourier modes cos/sin of the four shortest wavevectors times Legendre P₀…P₃.
std::vector<TestDirection> default_test_family();

/// sup of L(φ) − ν∫⟨|∇φ|², ρ⟩ over the span of the family, plus the recovered
/// potential direction when include_recovered is set.
double action_bar_lower(const RecoveredControl& rc, const std::vector<GridField>& rho,
                        const std::vector<TestDirection>& family, bool include_recovered = true);

/// ∫∇φ·γ(𝒦∗γ) by grid quadrature.
double symmetrized_pairing_density(const GridField& gamma, const SmoothFunction& phi);
/// ½∫∫(∇φ(x) − ∇φ(y))·𝒦(x − y) γ(x)γ(y) off the diagonal on a coarsened grid.
double symmetrized_pairing_density_double(const GridField& gamma, const SmoothFunction& phi, int coarse_M = 32);

struct ActionReport {
    double A_T = 0.0;
    double A_T_richardson = 0.0;
    double A_bar_lower = 0.0;
    bool has_control_energy = false;
    double control_energy = 0.0;
    /// Weighted L² distance of recovered control to the true one, relative.
    double control_rel_error = -1.0;
    std::vector<ControlSlice> slices;
    nlohmann::json to_json() const;
};

/// Action report for a density record; when the record's config carries a
/// control, its energy (1/4ν)∫∫|v|²dρ and the recovery error are included.
ActionReport action_report(const TrajectoryRecord& rec, const WeightedSolveOptions& opt = {});

struct NiceTrajectory {
    TrajectoryRecord path;
    std::vector<double> piece_action;  // four pieces
    double action = 0.0;
    double target_action = 0.0;
    double sup_w2 = 0.0;  // sup over target times of the squared-Wasserstein gap
};

/// Heat-gluing construction: uncontrolled flow on [0,t₁), heat flow on
/// [t₁,t₁+t₂), time-reversed heat-mollified flow on [t₁+t₂,2t₁+t₂), then the
/// heat-mollified target shifted by 2t₁+t₂. t₁ and t₂ must be multiples of
/// the target snapshot spacing. Throws NumericError when a slice that must be
/// elliptic falls below mu_min.
NiceTrajectory nice_trajectory(const GridField& gamma, const TrajectoryRecord& target, double t1, double t2,
                               const WeightedSolveOptions& opt = {});

}  // namespace vortexldp
