#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "vortexldp/kernels.hpp"
#include "vortexldp/torus.hpp"

namespace vortexldp {

/// m_n = max(m_min, ceil(c·n^p)).
struct MollifierSchedule {
    double c = 5.0;
    double p = 0.4;
    int m_min = 5;
    int m(int n) const;
};

/// Base profile ζ(r) = C e^{−1/(1−4r²)} on [0, 1/2), its radial self-convolution
/// G = ζ⊛ζ on [0, 1), and the radial moments of G used by the mollified kernels:
///   E(s) = ∫₀^s ρG dρ,  D(s) = ∫_s^1 ρG dρ,  P(s) = ∫_s^1 ρG log ρ dρ,
///   B = (π/2)∫₀^1 ρ³G dρ.
class MollifierProfile {
public:
    static constexpr int kSamples = 4096;

    MollifierProfile();
    static std::shared_ptr<const MollifierProfile> shared();

    double C() const { return C_; }
    double zeta(double r) const;
    double zeta_prime(double r) const;
    double G(double s) const;
    double G0() const { return G0_; }
    double E(double s) const;
    double D(double s) const;
    double P(double s) const;
    /// E(s)/s², finite at 0 (→ G(0)/2).
    double E_over_s2(double s) const;
    double B() const { return B_; }
    /// 2-D Fourier transform of ζ at frequency |k| = kappa.
    double zeta_hat(double kappa) const;
    /// sup over s ∈ [0, s_max] of D(s)/G(s): the constant C₀ with D ≤ C₀G.
    double lemma_constant(double s_max = 0.95) const;

private:
    double table_eval(const std::vector<double>& t, double s) const;
    void build_zeta_hat() const;

    double C_ = 0.0, G0_ = 0.0, B_ = 0.0, Etot_ = 0.0;
    std::vector<double> G_, E_, P_;
    mutable std::vector<double> zhat_;
    mutable double zhat_dk_ = 0.0;
    mutable std::once_flag zhat_once_;
};

/// Mollifier family ζ_n(x) = m_n² ζ(m_n|x|), G_n = ζ_n∗ζ_n.
class MollifierFamily {
public:
    explicit MollifierFamily(MollifierSchedule s = {});
    static const MollifierFamily& standard();

    const MollifierSchedule& schedule() const { return sched_; }
    const MollifierProfile& profile() const { return *prof_; }
    int m(int n) const { return sched_.m(n); }

    double zeta_m(double r, int m) const;
    double G_m(double r, int m) const;

private:
    MollifierSchedule sched_;
    std::shared_ptr<const MollifierProfile> prof_;
};

double zeta_eval(const MollifierFamily& fam, double r, int n);
double G_eval(const MollifierFamily& fam, double r, int n);

/// G_n∗𝒩 at scale m (defined at x = 0). Equals 𝒩 + B/m² for r ≥ 1/m.
double mollified_green_m(const KernelTable& kt, const MollifierProfile& p, const Displacement& x, int m);
/// G_n∗𝒦 at scale m; equals 𝒦 for r ≥ 1/m and vanishes at 0.
Vec2 mollified_K_m(const KernelTable& kt, const MollifierProfile& p, const Displacement& x, int m);
double mollified_green(const KernelTable& kt, const MollifierFamily& fam, const Displacement& x, int n);
Vec2 mollified_K(const KernelTable& kt, const MollifierFamily& fam, const Displacement& x, int n);

enum class DepositMode {
    sampled,   // ζ_n sampled at nodes, renormalized to exact mass 1/n per particle
    spectral,  // exact Fourier coefficients ζ̂_n(k)ρ̂_n(k) for the grid's modes
};

/// ζ_n∗ρ_n on the grid. Sampled mode requires h ≤ 1/(8m_n).
GridField mollify_empirical(const std::vector<TorusPoint>& X, int n, const PeriodicGrid& g,
                            const MollifierFamily& fam, DepositMode mode = DepositMode::sampled);
GridField mollify_empirical_m(const std::vector<TorusPoint>& X, int m, const PeriodicGrid& g,
                              const MollifierProfile& p, DepositMode mode = DepositMode::sampled);
/// Serial reference for the sampled deposit.
GridField mollify_empirical_serial(const std::vector<TorusPoint>& X, int m, const PeriodicGrid& g,
                                   const MollifierProfile& p);
/// Smallest power-of-two M resolving scale m (h ≤ 1/(8m)).
int required_grid_size(int m);

/// G_n∗𝒩 and G_n∗𝒦 sampled on a grid for one level.
class MollifiedKernelTable {
public:
    MollifiedKernelTable(const KernelTable& kt, const MollifierFamily& fam, int level, int M = 0);
    static MollifiedKernelTable load(const std::string& path);
    void save(const std::string& path) const;

    int level() const { return level_; }
    int m() const { return m_; }
    const GridField& N_values() const { return N_; }
    const GridField& K_values() const { return K_; }
    /// Bicubic interpolation of the tabulated G_n∗𝒦.
    Vec2 K(const Displacement& x) const;
    double N(const Displacement& x) const;

private:
    MollifiedKernelTable() = default;
    int level_ = 0, m_ = 0, cutoff_ = 0;
    GridField N_, K_;
};

}  // namespace vortexldp
