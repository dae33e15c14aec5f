#include "vortexldp/observables.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "vortexldp/errors.hpp"
#include "vortexldp/spectral.hpp"

namespace vortexldp {

namespace {

constexpr double kPi = 3.14159265358979323846;

double grid_l2_dev_sq(const GridField& rho) {
    const int M = rho.M();
    double s = 0.0;
    for (double v : rho.values()) s += (v - 1.0) * (v - 1.0);
    return s / (double(M) * M);
}

}  // namespace

double energy_e0(const std::vector<TorusPoint>& X, const KernelTable& kt, Exec exec) {
    const double n = static_cast<double>(X.size());
    if (X.size() < 2) return 0.0;
    return pair_sum_green(X, kt, exec) / (2.0 * n * n);
}

double energy_quadratic(const GridField& f) {
    const Spectrum S = to_spectral(f);
    return S.weighted_norm_sq([](int k1, int k2) {
        const double k2n = double(k1) * k1 + double(k2) * k2;
        return k2n == 0.0 ? 0.0 : 1.0 / (8.0 * kPi * kPi * k2n);
    });
}

double energy_e(const GridField& density, double tol) {
    require_density(density, tol, "energy_e input");
    return energy_quadratic(density);
}

double energy_gradient_route(const GridField& f) {
    const GridField g = green_gradient(f);
    return 0.5 * (spectral::inner(g, g, 0, 0) + spectral::inner(g, g, 1, 1));
}

double mollified_energy_m(const std::vector<TorusPoint>& X, int m, const KernelTable& kt) {
    const double n = static_cast<double>(X.size());
    return pair_sum_mollified_green(X, kt, *MollifierProfile::shared(), m) / (2.0 * n * n);
}

double mollified_energy(const std::vector<TorusPoint>& X, int level, const MollifierFamily& fam,
                        const KernelTable& kt) {
    const double n = static_cast<double>(X.size());
    return pair_sum_mollified_green(X, kt, fam.profile(), fam.m(level)) / (2.0 * n * n);
}

double mollified_l2_sq_m(const std::vector<TorusPoint>& X, int m) {
    const double n = static_cast<double>(X.size());
    return pair_sum_G(X, *MollifierProfile::shared(), m) / (n * n);
}

double energy_bound_constant(const KernelTable& kt, const MollifierProfile& p, int m_min) {
    const double tail = p.B() / (double(m_min) * m_min);
    return std::max(kt.N0(0.0, 0.0) - p.P(0.0) + tail, p.B());
}

double green_log_constant(const KernelTable& kt) {
    static std::once_flag once;
    static double cached = 0.0;
    auto compute = [&kt] {
        constexpr int S = 512;
        double mn = kt.N0(0.0, 0.0);
        for (int i = 0; i <= S; ++i)
            for (int j = 0; j <= S; ++j) mn = std::min(mn, kt.N0(-0.5 + double(i) / S, -0.5 + double(j) / S));
        // 𝒩₀ is smooth; the grid minimum is within 1e-6 of the true one.
        return -2.0 * kPi * mn + 1e-5;
    };
    if (&kt == KernelTable::shared().get()) {
        std::call_once(once, [&] { cached = compute(); });
        return cached;
    }
    return compute();
}

EnergyReport energy_report(const std::vector<TorusPoint>& X, int level, const MollifierFamily& fam) {
    const KernelTable& kt = *KernelTable::shared();
    EnergyReport r;
    const double n = static_cast<double>(X.size());
    r.m = fam.m(level);
    r.e0 = energy_e0(X, kt);
    r.e_moll = mollified_energy(X, level, fam, kt);
    r.l2_dev_sq = pair_sum_G(X, fam.profile(), r.m) / (n * n) - 1.0;
    const double C = energy_bound_constant(kt, fam.profile(), fam.schedule().m_min);
    const double m = r.m;
    r.bound_rhs = r.e0 + std::log(m) / (2.0 * kPi * n) + C / (2.0 * n) + C / (2.0 * m * m);
    return r;
}

double q_functional(const TrajectoryRecord& rec, int level) {
    const double nu = rec.config.value("nu", 0.0);
    const std::size_t S = rec.times.size();
    if (S == 0) return 0.0;
    std::vector<double> e(S), d(S);
    if (rec.kind == TrajectoryRecord::Kind::density) {
        for (std::size_t s = 0; s < S; ++s) {
            e[s] = energy_quadratic(rec.densities[s]);
            d[s] = grid_l2_dev_sq(rec.densities[s]);
        }
    } else {
        const int n = static_cast<int>(rec.particles[0].size());
        const int m = MollifierFamily::standard().m(level > 0 ? level : n);
        for (std::size_t s = 0; s < S; ++s) {
            e[s] = mollified_energy_m(rec.particles[s], m);
            d[s] = mollified_l2_sq_m(rec.particles[s], m) - 1.0;
        }
    }
    double integral = 0.0, q = e[0];
    for (std::size_t s = 1; s < S; ++s) {
        integral += 0.5 * (rec.times[s] - rec.times[s - 1]) * (d[s] + d[s - 1]);
        q = std::max(q, e[s] + 0.5 * nu * integral);
    }
    return q;
}

double entropy_S(const GridField& rho, long* floor_hits) {
    long hits = 0;
    double s = 0.0;
    for (double v : rho.values()) {
        if (v < kDensityFloor) {
            ++hits;
            v = kDensityFloor;
        }
        s += v * std::log(v);
    }
    if (floor_hits) *floor_hits = hits;
    const double M = rho.M();
    return s / (M * M);
}

double fisher_I(const GridField& rho, long* floor_hits) {
    const GridField g = spectral::gradient(rho);
    const int M = rho.M();
    long hits = 0;
    double s = 0.0;
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) {
            double v = rho(i, j);
            if (v < kDensityFloor) {
                ++hits;
                v = kDensityFloor;
            }
            s += (g(i, j, 0) * g(i, j, 0) + g(i, j, 1) * g(i, j, 1)) / v;
        }
    if (floor_hits) *floor_hits = hits;
    return s / (double(M) * M);
}

PairConcentration pair_concentration(const std::vector<TorusPoint>& X, double delta, int level) {
    if (!(delta > 0.0 && delta < 0.5)) throw ConfigError("pair_concentration: delta must lie in (0, 1/2)");
    if (X.empty()) throw ConfigError("pair_concentration: empty configuration");
    const KernelTable& kt = *KernelTable::shared();
    const MollifierFamily& fam = MollifierFamily::standard();
    const double n = static_cast<double>(X.size());
    const int m = fam.m(level > 0 ? level : static_cast<int>(X.size()));

    PairConcentration pc;
    pc.delta = delta;
    pc.mass = (static_cast<double>(pair_count_within(X, delta)) + n) / (n * n);
    pc.e_moll = mollified_energy_m(X, m, kt);
    const double CN = green_log_constant(kt);
    const double L = -std::log(delta);
    pc.bound_single = (CN + 4.0 * kPi * pc.e_moll) / L;
    pc.bound_mollified = (2.0 * CN + 8.0 * kPi * pc.e_moll) / L;

    // G_n∗𝒩 = 𝒩₀ + f(r) with f radial; bound 𝒩₀ below by its minimum and scan f.
    const double n0_min = -CN / (2.0 * kPi);
    const MollifierProfile& p = fam.profile();
    auto f = [&](double r) { return mollified_green_m(kt, p, displacement(r, 0.0), m) - kt.N0(r, 0.0); };
    double near_min = f(0.0);
    constexpr int R = 400;
    for (int k = 1; k <= R; ++k) near_min = std::min(near_min, f(delta * k / R));
    // Beyond δ the kernel is at least 𝒩 (up to the B/m² offset), so C_𝒩 + 2π G_n∗𝒩 ≥ −log r > 0.
    pc.level_ok = CN + 2.0 * kPi * (n0_min + near_min) >= -0.5 * std::log(delta);
    return pc;
}

double pairing_ratio(const GridField& gamma, int m) {
    const int M = gamma.M();
    const MollifierProfile& p = *MollifierProfile::shared();
    Spectrum S = to_spectral(gamma);
    const double denom = S.weighted_norm_sq([&](int k1, int k2) {
        const double z = p.zeta_hat(std::sqrt(double(k1) * k1 + double(k2) * k2) / m);
        return z * z;
    });
    S.apply([&](int k1, int k2) {
        const double k2n = double(k1) * k1 + double(k2) * k2;
        if (k2n == 0.0) return 0.0;
        const double z = p.zeta_hat(std::sqrt(k2n) / m);
        return z * z / (4.0 * kPi * kPi * k2n);
    });
    const GridField psi = from_spectral(S);
    const GridField gpsi = spectral::gradient(psi);
    const GridField u = biot_savart_velocity(gamma);
    double num = 0.0;
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j)
            num += gamma(i, j) * (gpsi(i, j, 0) * u(i, j, 0) + gpsi(i, j, 1) * u(i, j, 1));
    num /= double(M) * M;
    return std::abs(num) / denom;
}

}  // namespace vortexldp
