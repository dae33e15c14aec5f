#pragma once

#include <vector>

#include "vortexldp/kernels.hpp"
#include "vortexldp/mollify.hpp"
#include "vortexldp/pairwise.hpp"
#include "vortexldp/record.hpp"
#include "vortexldp/torus.hpp"

namespace vortexldp {

/// Off-diagonal empirical energy (1/2n²) Σ_{i≠j} 𝒩(X_i − X_j).
double energy_e0(const std::vector<TorusPoint>& X, const KernelTable& kt = *KernelTable::shared(),
                 Exec exec = Exec::parallel);
/// ½⟨𝒩∗f, f⟩ = Σ_{k≠0} |f̂(k)|²/(8π²|k|²) for any grid function.
double energy_quadratic(const GridField& f);
/// e(γ) for a grid density (mean 1, non-negative up to tol).
double energy_e(const GridField& density, double tol = 1e-6);
/// ½‖∇𝒩∗f‖₂² by grid quadrature of the spectral gradient.
double energy_gradient_route(const GridField& f);

/// e(ζ_n∗ρ_n) = (1/2n²) Σ_{i,j} (G_n∗𝒩)(X_i − X_j), diagonal included.
double mollified_energy(const std::vector<TorusPoint>& X, int level,
                        const MollifierFamily& fam = MollifierFamily::standard(),
                        const KernelTable& kt = *KernelTable::shared());
double mollified_energy_m(const std::vector<TorusPoint>& X, int m, const KernelTable& kt = *KernelTable::shared());
/// ‖ζ_n∗ρ_n‖₂² = Σ_{i,j} G_n(X_i − X_j)/n².
double mollified_l2_sq_m(const std::vector<TorusPoint>& X, int m);

/// C with (G_n∗𝒩)(0) − log(m)/(2π) ≤ C and G_n∗𝒩 − 𝒩 ≤ C/m² for every m ≥ m_min.
double energy_bound_constant(const KernelTable& kt = *KernelTable::shared(),
                             const MollifierProfile& p = *MollifierProfile::shared(), int m_min = 5);
/// C_𝒩 = −2π min 𝒩₀, the smallest constant with C_𝒩 + 2π𝒩(x) ≥ −log|x|.
double green_log_constant(const KernelTable& kt = *KernelTable::shared());

struct EnergyReport {
    int m = 0;
    double e0 = 0.0;
    double e_moll = 0.0;
    double l2_dev_sq = 0.0;
    /// e0 + log(m)/(2πn) + C/(2n) + C/(2m²)
    double bound_rhs = 0.0;
    bool holds(double tol = 1e-6) const { return e_moll <= bound_rhs + tol; }
};
EnergyReport energy_report(const std::vector<TorusPoint>& X, int level,
                           const MollifierFamily& fam = MollifierFamily::standard());

/// sup_t e(ρ(t)) + (ν/2)∫₀ᵗ‖ρ − 1‖₂², trapezoid on snapshots. Density records
/// use the grid functionals; particle records use the mollified route at
/// `level` (0: the particle count).
double q_functional(const TrajectoryRecord& rec, int level = 0);

/// Density floor applied before logarithms and ratios.
inline constexpr double kDensityFloor = 1e-12;

/// ∫ρ log ρ by grid quadrature.
double entropy_S(const GridField& rho, long* floor_hits = nullptr);
/// ∫|∇ρ|²/ρ with spectral gradients.
double fisher_I(const GridField& rho, long* floor_hits = nullptr);

struct PairConcentration {
    double delta = 0.0;
    double mass = 0.0;       // (γ⊗γ)({r ≤ δ}) including the diagonal
    double e_moll = 0.0;     // energy used in the bounds
    double bound_single = 0.0;  // (C_𝒩 + 4πe)/(−log δ)
    double bound_mollified = 0.0;  // (2C_𝒩 + 8πe)/(−log δ)
    bool level_ok = false;   // the mollified kernel meets the lower bounds the second bound needs
};
PairConcentration pair_concentration(const std::vector<TorusPoint>& X, double delta, int level = 0);

/// |⟨∇(G_n∗𝒩)∗γ, γ(𝒦∗γ)⟩| / ‖ζ_n∗γ‖₂² for a grid density at scale m.
double pairing_ratio(const GridField& gamma, int m);

}  // namespace vortexldp
