#include "vortexldp/inequalities.hpp"

#include <boost/math/special_functions/bessel.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vortexldp/action.hpp"
#include "vortexldp/errors.hpp"
#include "vortexldp/frozen_constants.hpp"
#include "vortexldp/kernels.hpp"
#include "vortexldp/meanfield.hpp"
#include "vortexldp/mollify.hpp"
#include "vortexldp/observables.hpp"
#include "vortexldp/rng.hpp"
#include "vortexldp/spectral.hpp"
#include "vortexldp/vortex.hpp"

namespace vortexldp {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr uint32_t kStreamModes = 0x1E0u;
constexpr uint32_t kStreamPoints = 0x1E1u;

double l2_sq(const GridField& f) {
    double s = 0.0;
    for (double v : f.values()) s += v * v;
    return s / (double(f.M()) * f.M());
}

double l2_dev_sq(const GridField& f) {
    double s = 0.0;
    for (double v : f.values()) s += (v - 1.0) * (v - 1.0);
    return s / (double(f.M()) * f.M());
}

GridField difference(const GridField& a, const GridField& b) {
    GridField d = a;
    for (std::size_t q = 0; q < d.values().size(); ++q) d.values()[q] -= b.values()[q];
    return d;
}

/// ∫|v|² dμ for a two-component v.
double weighted_sq(const GridField& v, const GridField& mu) {
    double s = 0.0;
    for (std::size_t q = 0; q < mu.values().size(); ++q)
        s += mu.values()[q] * (v.values()[2 * q] * v.values()[2 * q] + v.values()[2 * q + 1] * v.values()[2 * q + 1]);
    return s / (double(mu.M()) * mu.M());
}

GridField vector_field(const PeriodicGrid& g, const std::vector<FourierMode>& a, const std::vector<FourierMode>& b) {
    GridField v(g, 2);
    v.set_component(0, SmoothFunction::modes(a).sample(g));
    v.set_component(1, SmoothFunction::modes(b).sample(g));
    return v;
}

GridField multiply_symbol(const GridField& f, const std::function<double(double)>& sym) {
    GridField out(f.grid(), f.components());
    for (int c = 0; c < f.components(); ++c) {
        Spectrum s = to_spectral(f, c);
        s.apply([&](int k1, int k2) { return sym(std::sqrt(double(k1) * k1 + double(k2) * k2)); });
        out.set_component(c, from_spectral(s));
    }
    return out;
}

GridField zeta_smooth(const GridField& f, int m) {
    const MollifierProfile& p = *MollifierProfile::shared();
    return multiply_symbol(f, [&](double k) { return p.zeta_hat(k / m); });
}

GridField heat_smooth(const GridField& f, double t) {
    return multiply_symbol(f, [t](double k) { return std::exp(-4.0 * kPi * kPi * k * k * t); });
}

GridField times_field(const GridField& mu, const GridField& v) {
    GridField out(v.grid(), 2);
    for (std::size_t q = 0; q < mu.values().size(); ++q) {
        out.values()[2 * q] = mu.values()[q] * v.values()[2 * q];
        out.values()[2 * q + 1] = mu.values()[q] * v.values()[2 * q + 1];
    }
    return out;
}

/// Hessian bound Σ 4π²|a||k|² for the gradient of a mode sum.
double hessian_bound(const std::vector<FourierMode>& modes) {
    double s = 0.0;
    for (const auto& m : modes) s += 4.0 * kPi * kPi * std::abs(m.amp) * (double(m.k1) * m.k1 + double(m.k2) * m.k2);
    return s;
}

double chi_hat(double delta, double k) {
    if (k == 0.0) return kPi * delta * delta;
    return delta * boost::math::cyl_bessel_j(1, 2.0 * kPi * delta * k) / k;
}

std::string tag(const char* kind, std::size_t i) { return std::string(kind) + "#" + std::to_string(i); }

}  // namespace

nlohmann::json InequalityCheck::to_json() const {
    return {{"name", name}, {"lhs", lhs},     {"rhs", rhs},   {"margin", margin()},
            {"tol", tol},   {"pass", pass()}, {"sample", sample}};
}

void InequalityReport::add(std::string name, double lhs, double rhs, double tol, std::string sample) {
    checks.push_back({std::move(name), lhs, rhs, tol, std::move(sample)});
}

bool InequalityReport::all_pass() const { return failures() == 0; }

std::size_t InequalityReport::failures() const {
    return static_cast<std::size_t>(std::count_if(checks.begin(), checks.end(), [](const auto& c) { return !c.pass(); }));
}

void InequalityReport::write_jsonl(std::ostream& os) const {
    for (const auto& c : checks) os << c.to_json().dump() << '\n';
}

nlohmann::json InequalityReport::summary() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& c : checks) {
        auto& e = j[c.name];
        if (e.is_null()) e = {{"checks", 0}, {"passed", 0}, {"worst_margin", c.margin()}};
        e["checks"] = e["checks"].get<int>() + 1;
        e["passed"] = e["passed"].get<int>() + (c.pass() ? 1 : 0);
        e["worst_margin"] = std::min(e["worst_margin"].get<double>(), c.margin());
    }
    return j;
}

std::vector<FourierMode> random_modes(uint64_t seed, int index, int count, int kmax, double amp) {
    const CounterRng rng(seed);
    std::vector<FourierMode> modes;
    for (int q = 0; q < count; ++q) {
        const auto u = rng.uniform2(static_cast<uint64_t>(index), static_cast<uint32_t>(2 * q), kStreamModes);
        const auto w = rng.uniform2(static_cast<uint64_t>(index), static_cast<uint32_t>(2 * q + 1), kStreamModes);
        int k1 = static_cast<int>(std::floor(u[0] * (2 * kmax + 1))) - kmax;
        int k2 = static_cast<int>(std::floor(u[1] * (kmax + 1)));
        if (k1 == 0 && k2 == 0) k2 = 1;
        const double kk = std::sqrt(double(k1) * k1 + double(k2) * k2);
        modes.push_back({amp * (2.0 * w[0] - 1.0) / kk, k1, k2, 2.0 * kPi * w[1]});
    }
    return modes;
}

GridField random_density(const PeriodicGrid& g, uint64_t seed, int index, double strength, int kmax) {
    const auto modes = random_modes(seed, index, 8, kmax, strength);
    const SmoothFunction f = SmoothFunction::modes(modes);
    GridField d = f.sample(g);
    for (double& v : d.values()) v = std::exp(v);
    const double mean = d.mean();
    for (double& v : d.values()) v /= mean;
    return d;
}

InequalityCorpus make_corpus(int count, uint64_t seed, int M, int n_particles) {
    InequalityCorpus c;
    c.M = M;
    c.seed = seed;
    const PeriodicGrid g(M);
    for (int i = 0; i < count; ++i) {
        const double strength = 0.3 + 2.7 * double(i) / std::max(1, count - 1);
        c.densities.push_back(random_density(g, seed, i, strength));
        c.configs.push_back(sample_initial(c.densities.back(), n_particles, seed + 1000 + i).x);
        c.fields.push_back(random_modes(seed ^ 0xF1E1Dull, i, 4, 3, 0.5));
    }
    return c;
}

InequalityCorpus pinned_corpus() { return make_corpus(20, 20240611ull); }
InequalityCorpus calibration_corpus() { return make_corpus(20, 7770001ull); }

double biot_savart_l4_sq(const GridField& f) {
    const GridField u = biot_savart_velocity(f);
    double s = 0.0;
    for (std::size_t q = 0; q < f.values().size(); ++q) {
        const double a = u.values()[2 * q] * u.values()[2 * q] + u.values()[2 * q + 1] * u.values()[2 * q + 1];
        s += a * a;
    }
    return std::sqrt(s / (double(f.M()) * f.M()));
}

double density_pair_mass(const GridField& gamma, double delta) {
    const Spectrum S = to_spectral(gamma);
    return S.weighted_norm_sq([delta](int k1, int k2) { return chi_hat(delta, std::sqrt(double(k1) * k1 + double(k2) * k2)); });
}

double density_ball_mass_sup(const GridField& gamma, double delta) {
    return multiply_symbol(gamma, [delta](double k) { return chi_hat(delta, k); }).max();
}

double sample_bounded_w_sup(int samples, uint64_t seed) {
    const KernelTable& kt = *KernelTable::shared();
    const CounterRng rng(seed);
    double sup = 0.0;
    for (int q = 0; q < samples; ++q) {
        const auto a = rng.uniform2(static_cast<uint64_t>(q), 0, kStreamPoints);
        const auto b = rng.uniform2(static_cast<uint64_t>(q), 1, kStreamPoints);
        const TorusPoint x(a[0] - 0.5, a[1] - 0.5), y(b[0] - 0.5, b[1] - 0.5);
        const Vec2 w = bounded_w(kt, x, y);
        sup = std::max(sup, std::hypot(w[0], w[1]));
    }
    return sup;
}

nlohmann::json calibrate_constants(const InequalityCorpus& corpus) {
    double c1 = 0.0, c2 = 0.0;
    const std::size_t N = corpus.densities.size();
    for (std::size_t i = 0; i < N; ++i) {
        const GridField& g = corpus.densities[i];
        const GridField& h = corpus.densities[(i + 1) % N];
        const GridField d = difference(g, h);
        c1 = std::max(c1, biot_savart_l4_sq(d) / std::sqrt(l2_sq(d)));
        const GridField u = biot_savart_velocity(g);
        c2 = std::max(c2, weighted_sq(u, g) / l2_dev_sq(g));
    }
    return {{"C_1", c1},
            {"C_2", c2},
            {"C_K", sample_bounded_w_sup(1000000, 99)},
            {"C_0", MollifierProfile::shared()->lemma_constant()},
            {"C_N", green_log_constant()},
            {"C_energy", energy_bound_constant()}};
}

InequalityReport inequality_suite(const InequalityCorpus& corpus, const SuiteOptions& opt) {
    using namespace frozen;
    InequalityReport rep;
    const KernelTable& kt = *KernelTable::shared();
    const MollifierProfile& prof = *MollifierProfile::shared();
    const std::size_t N = corpus.densities.size();
    const PeriodicGrid g(corpus.M);
    const double C_cor = std::max(C_1, C_2);

    for (std::size_t i = 0; i < N; ++i) {
        const GridField& gam = corpus.densities[i];
        const GridField& eta = corpus.densities[(i + 1) % N];
        const std::string s = tag("density", i);

        // Ladyzhenskaya-type bounds.
        const GridField diff = difference(gam, eta);
        const double dsq = l2_sq(diff);
        rep.add("ladyzhenskaya_l4", biot_savart_l4_sq(diff), C_1 * std::sqrt(dsq), 1e-12, s);
        const GridField u = biot_savart_velocity(gam);
        rep.add("kinetic_weighted", weighted_sq(u, gam), C_2 * l2_dev_sq(gam), 1e-12, s);

        // Mollified pairing bound with J = ζ_m.
        const auto& fm = corpus.fields[i];
        const GridField phi = vector_field(g, fm, random_modes(corpus.seed ^ 0xABCull, int(i), 4, 3, 0.5));
        const GridField Jg = zeta_smooth(gam, 8);
        const GridField JJu = zeta_smooth(zeta_smooth(u, 8), 8);
        double pair = 0.0;
        for (std::size_t q = 0; q < gam.values().size(); ++q)
            pair += gam.values()[q] * (phi.values()[2 * q] * JJu.values()[2 * q] + phi.values()[2 * q + 1] * JJu.values()[2 * q + 1]);
        pair = std::abs(pair / (double(corpus.M) * corpus.M));
        for (double delta : {0.1, 1.0})
            rep.add("mollified_pairing_delta" + std::to_string(delta).substr(0, 3), pair,
                    delta * l2_dev_sq(Jg) + C_cor / (4.0 * delta) * weighted_sq(phi, gam), 1e-12, s);

        // Entropy of a mollified density against its L² deviation.
        const GridField Hg = heat_smooth(gam, 1e-3);
        rep.add("entropy_l2", entropy_S(Hg), std::log(l2_dev_sq(Hg) + 1.0), 1e-12, s);

        // Weighted negative Sobolev norm facts.
        GridField mdiv = spectral::divergence(times_field(gam, phi));
        for (double& v : mdiv.values()) v = -v;
        rep.add("div_weighted_norm", weighted_h1neg_norm(mdiv, gam), weighted_sq(phi, gam), 1e-10, s);
        const double lapnorm = weighted_h1neg_norm(spectral::laplacian(gam), gam);
        const double fi = fisher_I(gam);
        rep.add("laplacian_norm_fisher", std::abs(lapnorm - fi), 1e-4 * std::max(1.0, fi), 0.0, s);

        GridField mdat = SmoothFunction::modes(random_modes(corpus.seed ^ 0xDA7Aull, int(i), 5, 4, 1.0)).sample(g);
        const double mm = mdat.mean();
        for (double& v : mdat.values()) v -= mm;
        const double tJ = 0.01;
        const GridField Jmu = heat_smooth(gam, tJ), Jv = heat_smooth(phi, tJ), Jm = heat_smooth(mdat, tJ);
        // The flux is mollified as a whole: J∗(μ·(J∗v)).
        GridField lhs_dat = spectral::divergence(heat_smooth(times_field(gam, Jv), tJ));
        for (std::size_t q = 0; q < lhs_dat.values().size(); ++q) lhs_dat.values()[q] += Jm.values()[q];
        GridField rhs_dat = spectral::divergence(times_field(gam, phi));
        for (std::size_t q = 0; q < rhs_dat.values().size(); ++q) rhs_dat.values()[q] += mdat.values()[q];
        const GridField dv = difference(Jv, phi);
        const double delta = 0.5;
        rep.add("mollified_norm", weighted_h1neg_norm(lhs_dat, Jmu),
                weighted_h1neg_norm(rhs_dat, gam) / (1.0 - delta) + weighted_sq(dv, gam) / delta, 1e-10, s);

        // Energy identity: spectral quadratic form against the gradient route.
        const double twice_e = 2.0 * energy_quadratic(gam);
        const double grad_sq = 2.0 * energy_gradient_route(gam);
        rep.add("energy_gradient_identity", std::abs(twice_e - grad_sq), 1e-8 * std::max(1.0, twice_e), 0.0, s);

        // Pair concentration of densities.
        const double e = energy_quadratic(gam);
        for (double dl : {0.01, 0.05, 0.1}) {
            const std::string sd = s + " delta=" + std::to_string(dl).substr(0, 4);
            rep.add("pair_concentration", density_pair_mass(gam, dl), (C_N + 4.0 * kPi * e) / -std::log(dl), 1e-10, sd);
            rep.add("ball_concentration", density_ball_mass_sup(gam, dl),
                    std::sqrt((C_N + 4.0 * kPi * e) / -std::log(2.0 * dl)), 1e-10, sd);
        }
    }

    // Particle configurations: bounded symmetrized pairing and mollified concentration.
    for (std::size_t i = 0; i < corpus.configs.size(); ++i) {
        const auto& X = corpus.configs[i];
        const std::string s = tag("config", i);
        const auto& fm = corpus.fields[i];
        const SmoothFunction f = SmoothFunction::modes(fm);
        const double val = symmetrized_pairing(X, [&](const TorusPoint& x) { return f.grad(x); }, kt);
        rep.add("symmetrized_pairing_bound", std::abs(val), 0.5 * C_K * hessian_bound(fm), 1e-12, s);
        for (double dl : {0.02, 0.05, 0.1}) {
            const PairConcentration pc = pair_concentration(X, dl);
            if (pc.level_ok)
                rep.add("pair_concentration_mollified", pc.mass, pc.bound_mollified, 1e-12,
                        s + " delta=" + std::to_string(dl).substr(0, 4));
        }
    }

    // Pointwise kernel bounds on random points at several scales.
    const CounterRng rng(corpus.seed);
    for (int m : {5, 12, 35}) {
        double worst32 = -1e300, l32 = 0.0, r32 = 0.0;
        double worst_lemma = -1e300, ll = 0.0, rl = 0.0;
        for (int q = 0; q < 2000; ++q) {
            const auto u = rng.uniform2(static_cast<uint64_t>(m), static_cast<uint32_t>(q), kStreamPoints);
            // Half the points inside the mollifier support, half anywhere.
            const double r = (q % 2 == 0) ? u[0] / m : u[0] * 0.7;
            const double th = 2.0 * kPi * u[1];
            const Displacement d = displacement(r * std::cos(th), r * std::sin(th));
            if (d.r < 1e-9) continue;
            const double gap = mollified_green_m(kt, prof, d, m) - kt.green(d);
            const double bound = C_energy / (double(m) * m);
            if (gap - bound > worst32) {
                worst32 = gap - bound;
                l32 = gap;
                r32 = bound;
            }
            const Vec2 a = mollified_K_m(kt, prof, d, m), b = kt.K(d);
            const double lhs = d.r * std::hypot(a[0] - b[0], a[1] - b[1]);
            const double rhs = C_0 * prof.G(m * d.r);
            if (lhs - rhs > worst_lemma) {
                worst_lemma = lhs - rhs;
                ll = lhs;
                rl = rhs;
            }
        }
        rep.add("mollified_green_excess", l32, r32, 1e-10, "m=" + std::to_string(m));
        rep.add("mollified_kernel_gap", ll, rl, 1e-9, "m=" + std::to_string(m));
    }

    if (opt.include_entropy_decay) {
        // Entropy decay along a controlled path: S(ρ(t)) ≤ 2Ā + log(2Q/(νt) + 1),
        // with the variational lower bound for Ā (so the check is conservative).
        PdeConfig cfg;
        cfg.M = 32;
        cfg.dt = 2e-3;
        cfg.T = 0.2;
        cfg.nu = 0.1;
        cfg.snapshot_stride = 5;
        const GridField gam0 = random_density(PeriodicGrid(cfg.M), corpus.seed, 0, 1.0);
        const ControlField v = ControlField::from_modes({ControlMode{0.05, 0, 1, 0.0}});
        const TrajectoryRecord rec = solve(gam0, v, cfg.T, cfg);
        const ActionReport ar = action_report(rec);
        const double Q = q_functional(rec);
        for (std::size_t s = 1; s < rec.size(); ++s) {
            const double t = rec.times[s];
            rep.add("entropy_decay", entropy_S(rec.densities[s]),
                    2.0 * ar.A_bar_lower + std::log(2.0 * Q / (cfg.nu * t) + 1.0), 1e-12,
                    "controlled path t=" + std::to_string(t).substr(0, 5));
        }
    }
    return rep;
}

}  // namespace vortexldp
