#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "vortexldp/torus.hpp"

namespace vortexldp {

using Vec2 = std::array<double, 2>;

/// Smooth cutoff ψ(|x|): 1 on |x| ≤ inner, 0 on |x| ≥ outer, with the
/// C∞ step f(1−s)/(f(1−s)+f(s)), f(u) = e^{−1/u}, in between.
struct BumpPsi {
    double inner = 0.25;
    double outer = 1.0 / 3.0;
    double operator()(double r) const;
};

enum class GreenMode { spectral_sum, split };

/// Lattice sum 𝒩(x) = Σ_{k≠0} e^{2πik·x}/(4π²|k|²) resummed through the heat
/// kernel: 𝒩 = ∫₀^τ (Φ_s − 1) ds + Σ_{k≠0} e^{−4π²|k|²τ} e^{2πik·x}/(4π²|k|²).
/// τ is tied to the Fourier cutoff L so the discarded tail is below e^{−40};
/// the short-time part is a sum of exponential integrals over lattice images.
class EwaldGreen {
public:
    explicit EwaldGreen(int cutoff);

    int cutoff() const { return L_; }
    double tau() const { return tau_; }
    /// Split parameter used for a given cutoff.
    static double tau_for_cutoff(int L);

    /// 𝒩(x) for x ≠ 0 (x is any representative).
    double value(double d1, double d2) const;
    /// 𝒩₀(x) = 𝒩(x) + log|x|/(2π), finite at 0; x is taken literally (no wrapping).
    double smooth_value(double d1, double d2) const;
    /// ∇𝒩₀ at x (literal coordinates).
    Vec2 smooth_gradient(double d1, double d2) const;

    /// Short-time part only (all images, origin term regularized) and its gradient.
    double real_space_smooth(double d1, double d2) const;
    Vec2 real_space_smooth_gradient(double d1, double d2) const;
    /// Fourier coefficient e^{−4π²|k|²τ}/(4π²|k|²), 0 at k = 0.
    double fourier_coefficient(int k1, int k2) const;

private:
    double fourier_part(double d1, double d2, Vec2* grad) const;

    int L_;
    double tau_;
    int images_;
    std::vector<double> a_;  // (2L+1)² coefficients
};

/// Tabulated 𝒩 and 𝒦 = −∇⊥𝒩 = (−∂₂𝒩, ∂₁𝒩).
///
/// The table stores the smooth part 𝒩₀ = 𝒩 + log|x|/(2π) and its gradient on
/// the unit cell plus a 3-node margin; evaluation adds the closed-form log term
/// back. In the notation of the log-split, σ₁ = 𝒩₀ + (ψ − 1) log|x|/(2π).
class KernelTable {
public:
    KernelTable(int M = 256, int cutoff = 256);

    /// Process-wide instance for the default parameters.
    static std::shared_ptr<const KernelTable> shared();
    /// Load from cache file if parameters match, else build and write it.
    static KernelTable load_or_build(const std::string& path, int M, int cutoff);
    static KernelTable load(const std::string& path);
    void save(const std::string& path) const;

    const PeriodicGrid& grid() const { return grid_; }
    int fourier_cutoff() const { return cutoff_; }
    double near_field_radius() const { return 0.25; }

    double green(const Displacement& x, GreenMode mode = GreenMode::split) const;
    Vec2 K(const Displacement& x) const;
    /// 𝒦 without the singularity check; returns 0 at x = 0.
    Vec2 K_unchecked(double d1, double d2) const;
    double N_unchecked(double d1, double d2) const;

    double N0(double d1, double d2) const;
    Vec2 grad_N0(double d1, double d2) const;
    double sigma1(const Displacement& x) const;

    /// 𝒩 sampled at the nodes; the origin node holds the value that makes
    /// the grid mean exactly zero (singular-cell correction).
    const GridField& N_values() const { return N_values_; }
    /// 𝒦 sampled at the nodes, zero at the origin.
    const GridField& K_values() const { return K_values_; }

    const EwaldGreen& oracle() const { return *oracle_; }

private:
    struct Empty {};
    explicit KernelTable(Empty) {}
    void build_from_samples();
    void build_fresh();

    PeriodicGrid grid_;
    int cutoff_ = 0;
    int pad_ = 3;
    int stride_ = 0;
    std::vector<double> n0_, g1_, g2_;
    GridField N_values_, K_values_;
    std::shared_ptr<EwaldGreen> oracle_;
};

/// r(x,y)·𝒦(x−y); zero on the diagonal.
Vec2 bounded_w(const KernelTable& kt, const TorusPoint& x, const TorusPoint& y);

enum class HeatMode { fourier, images };

/// Periodic heat kernel Φ(t,x) solving ∂_tΦ = ΔΦ.
double heat_kernel(double t, const Displacement& x, HeatMode mode);
GridField heat_kernel_field(double t, const PeriodicGrid& g, HeatMode mode);
/// Spectral multiplication by e^{−4π²|k|²t}.
GridField heat_convolve(double t, const GridField& f);

/// Velocity 𝒦∗ρ computed spectrally: û(k) = 2πi(−k₂,k₁)ρ̂(k)/(4π²|k|²).
GridField biot_savart_velocity(const GridField& rho);
/// ∇𝒩∗ρ computed spectrally.
GridField green_gradient(const GridField& rho);

}  // namespace vortexldp
