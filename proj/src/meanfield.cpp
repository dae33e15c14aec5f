#include "vortexldp/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vortexldp/errors.hpp"
#include "vortexldp/kernels.hpp"
#include "vortexldp/observables.hpp"
#include "vortexldp/rng.hpp"
#include "vortexldp/spectral.hpp"

namespace vortexldp {

namespace {

constexpr double kPi = 3.14159265358979323846;

const char* scheme_name(TimeScheme s) { return s == TimeScheme::imex_euler ? "imex_euler" : "imex_rk2"; }

void mask_band(Spectrum& s) {
    const int M = s.M();
    s.apply([M](int k1, int k2) { return spectral::in_dealiased_band(k1, k2, M) ? 1.0 : 0.0; });
}

double l2_dev_sq(const GridField& rho) {
    double s = 0.0;
    for (double v : rho.values()) s += (v - 1.0) * (v - 1.0);
    return s / (double(rho.M()) * rho.M());
}

/// Advection right-hand side −div(ρ(u + v)) in spectral form, with the
/// fields it was built from kept for diagnostics.
class Advection {
public:
    explicit Advection(const PdeConfig& cfg) : cfg_(cfg), grid_(cfg.M) {}

    Spectrum operator()(const Spectrum& rhat, double t) {
        const int M = grid_.M();
        Spectrum p = rhat;
        if (cfg_.dealias) mask_band(p);
        const GridField rho = from_spectral(p);

        GridField w(grid_, 2, 0.0);
        if (cfg_.interaction) {
            Spectrum u1(M), u2(M);
            for (int i = 0; i < M; ++i) {
                const int k1 = Spectrum::wavenumber(i, M);
                for (int j = 0; j < p.nk2(); ++j) {
                    const double k2n = double(k1) * k1 + double(j) * j;
                    if (k2n == 0.0) continue;
                    const cplx psi = p.at(i, j) / (4.0 * kPi * kPi * k2n);
                    u1.at(i, j) = -spectral::d_symbol(j, M) * psi;
                    u2.at(i, j) = spectral::d_symbol(k1, M) * psi;
                }
            }
            w.set_component(0, from_spectral(u1));
            w.set_component(1, from_spectral(u2));
        }
        if (cfg_.control.active()) {
            GridField v = cfg_.control.sample(t, grid_);
            for (int c = 0; c < 2; ++c) {
                GridField vc = v.component(c);
                if (cfg_.dealias) {
                    Spectrum s = to_spectral(vc);
                    mask_band(s);
                    vc = from_spectral(s);
                }
                for (std::size_t q = 0; q < vc.values().size(); ++q) w.values()[2 * q + c] += vc.values()[q];
            }
        }

        double umax = 0.0;
        GridField f1(grid_), f2(grid_);
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < M; ++j) {
                umax = std::max(umax, std::hypot(w(i, j, 0), w(i, j, 1)));
                f1(i, j) = rho(i, j) * w(i, j, 0);
                f2(i, j) = rho(i, j) * w(i, j, 1);
            }
        max_speed = umax;
        const Spectrum F1 = to_spectral(f1), F2 = to_spectral(f2);
        Spectrum out(M);
        for (int i = 0; i < M; ++i) {
            const int k1 = Spectrum::wavenumber(i, M);
            for (int j = 0; j < out.nk2(); ++j)
                out.at(i, j) = -(spectral::d_symbol(k1, M) * F1.at(i, j) + spectral::d_symbol(j, M) * F2.at(i, j));
        }
        if (cfg_.dealias) mask_band(out);
        return out;
    }

    double max_speed = 0.0;

private:
    const PdeConfig& cfg_;
    PeriodicGrid grid_;
};

Spectrum diffusion_factor(const PdeConfig& cfg) {
    Spectrum E(cfg.M);
    for (auto& c : E.data()) c = 1.0;
    const double a = 4.0 * kPi * kPi * cfg.nu * cfg.dt;
    E.apply([a](int k1, int k2) { return std::exp(-a * (double(k1) * k1 + double(k2) * k2)); });
    return E;
}

void check_cfl(double umax, const PdeConfig& cfg, double t) {
    const double h = 1.0 / cfg.M;
    if (umax * cfg.dt / h > cfg.cfl) {
        std::ostringstream os;
        os << "CFL violated at t=" << t << ": max|u|=" << umax << ", suggested dt <= " << 0.9 * cfg.cfl * h / umax;
        throw NumericError(os.str(), umax * cfg.dt / h);
    }
}

/// One step in spectral form; returns the advected spectrum.
Spectrum advance(const Spectrum& r, double t, const PdeConfig& cfg, const Spectrum& E, Advection& adv) {
    const int M = cfg.M;
    const std::size_t K = r.data().size();
    Spectrum N0 = adv(r, t);
    check_cfl(adv.max_speed, cfg, t);
    Spectrum out(M);
    if (cfg.scheme == TimeScheme::imex_euler) {
        for (std::size_t q = 0; q < K; ++q) out.data()[q] = E.data()[q] * (r.data()[q] + cfg.dt * N0.data()[q]);
        return out;
    }
    Spectrum a(M);
    for (std::size_t q = 0; q < K; ++q) a.data()[q] = E.data()[q] * (r.data()[q] + cfg.dt * N0.data()[q]);
    const Spectrum N1 = adv(a, t + cfg.dt);
    for (std::size_t q = 0; q < K; ++q)
        out.data()[q] = E.data()[q] * r.data()[q] + 0.5 * cfg.dt * (E.data()[q] * N0.data()[q] + N1.data()[q]);
    return out;
}

/// ∫∇(𝒩∗ρ)·v ρ on the grid.
double control_work(const GridField& rho, const ControlField& control, double t) {
    if (!control.active()) return 0.0;
    const GridField g = green_gradient(rho);
    const GridField v = control.sample(t, rho.grid());
    double s = 0.0;
    const int M = rho.M();
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) s += rho(i, j) * (g(i, j, 0) * v(i, j, 0) + g(i, j, 1) * v(i, j, 1));
    return s / (double(M) * M);
}

}  // namespace

nlohmann::json PdeConfig::to_json() const {
    return {{"M", M},
            {"dt", dt},
            {"T", T},
            {"nu", nu},
            {"dealias", dealias},
            {"control", control.to_json()},
            {"scheme", scheme_name(scheme)},
            {"interaction", interaction},
            {"cfl", cfl},
            {"snapshot_stride", snapshot_stride},
            {"blowup", blowup},
            {"initial", initial}};
}

PdeConfig PdeConfig::from_json(const nlohmann::json& j) {
    PdeConfig c;
    try {
        c.M = j.value("M", c.M);
        c.dt = j.value("dt", c.dt);
        c.T = j.value("T", c.T);
        c.nu = j.value("nu", c.nu);
        c.dealias = j.value("dealias", c.dealias);
        if (j.contains("control")) c.control = ControlField::from_json(j.at("control"));
        const std::string s = j.value("scheme", std::string("imex_rk2"));
        if (s == "imex_rk2") c.scheme = TimeScheme::imex_rk2;
        else if (s == "imex_euler") c.scheme = TimeScheme::imex_euler;
        else throw ConfigError("unknown time scheme '" + s + "'");
        c.interaction = j.value("interaction", c.interaction);
        c.cfl = j.value("cfl", c.cfl);
        c.snapshot_stride = j.value("snapshot_stride", c.snapshot_stride);
        c.blowup = j.value("blowup", c.blowup);
        if (j.contains("initial")) c.initial = j.at("initial");
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad pde config: ") + e.what());
    }
    c.validate();
    return c;
}

void PdeConfig::validate() const {
    if (M < 8 || (M & (M - 1)) != 0) throw ConfigError("pde: M must be a power of two >= 8");
    if (!(dt > 0.0) || !(T >= 0.0)) throw ConfigError("pde: need dt > 0 and T >= 0");
    if (!(nu >= 0.0)) throw ConfigError("pde: nu must be nonnegative");
    if (snapshot_stride < 1) throw ConfigError("pde: snapshot_stride must be >= 1");
    const double r = T / dt;
    if (std::abs(r - std::round(r)) > 1e-9 * std::max(1.0, r)) throw ConfigError("pde: T must be a multiple of dt");
}

int PdeConfig::steps() const { return static_cast<int>(std::lround(T / dt)); }

GridField cosine_density(const PeriodicGrid& g, const std::vector<FourierMode>& modes) {
    GridField f(g, 1, 0.0);
    f.fill_with([&](double x1, double x2) {
        double v = 1.0;
        for (const auto& m : modes) v += m.amp * std::cos(2.0 * kPi * (m.k1 * x1 + m.k2 * x2) + m.phase);
        return v;
    });
    return f;
}

GridField density_from_json(const nlohmann::json& spec, const PeriodicGrid& g) {
    try {
        if (spec.contains("file")) {
            GridField f = load_grid_field(spec.at("file").get<std::string>());
            if (f.M() != g.M()) throw ConfigError("initial density file has M=" + std::to_string(f.M()));
            return f;
        }
        std::vector<FourierMode> modes;
        for (const auto& m : spec.at("modes")) {
            const auto k = m.at("k").get<std::vector<int>>();
            if (k.size() != 2) throw ConfigError("initial mode wavevector must have two entries");
            modes.push_back({m.at("amp").get<double>(), k[0], k[1], m.value("phase", 0.0)});
        }
        return cosine_density(g, modes);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad initial density spec: ") + e.what());
    }
}

GridField velocity_from_vorticity(const GridField& rho) { return biot_savart_velocity(rho); }

PdeState step_pde(const PdeState& s, const PdeConfig& cfg) {
    if (s.rho.M() != cfg.M) throw ConfigError("step_pde: grid size does not match config");
    Advection adv(cfg);
    const Spectrum E = diffusion_factor(cfg);
    PdeState out;
    out.rho = from_spectral(advance(to_spectral(s.rho), s.t, cfg, E, adv));
    out.t = s.t + cfg.dt;
    out.nu = cfg.nu;
    if (out.rho.max() > cfg.blowup) throw NumericError("density blow-up", out.rho.max());
    return out;
}

TrajectoryRecord solve(const GridField& gamma, const PdeConfig& cfg) {
    cfg.validate();
    if (gamma.M() != cfg.M) throw ConfigError("solve: initial density grid does not match config M");
    require_density(gamma, 1e-8, "initial density");

    TrajectoryRecord rec;
    rec.kind = TrajectoryRecord::Kind::density;
    rec.config = cfg.to_json();
    rec.hash = config_hash(rec.config);
    rec.observables.names = {"t", "e", "l2_dev", "S", "I", "dissipation", "work", "min_rho", "Q"};

    Advection adv(cfg);
    const Spectrum E = diffusion_factor(cfg);
    Spectrum r = to_spectral(gamma);
    GridField rho = gamma;
    const double e0 = energy_quadratic(gamma);
    double diss = 0.0, work = 0.0, q = e0;
    double d_prev = l2_dev_sq(rho), w_prev = control_work(rho, cfg.control, 0.0);

    auto record = [&](double t, double e) {
        rec.times.push_back(t);
        rec.densities.push_back(rho);
        rec.observables.rows.push_back(
            {t, e, l2_dev_sq(rho), entropy_S(rho), fisher_I(rho), diss, work, rho.min(), q});
    };
    record(0.0, e0);

    const int steps = cfg.steps();
    long floor_events = 0;
    for (int s = 1; s <= steps; ++s) {
        const double t0 = (s - 1) * cfg.dt, t = s * cfg.dt;
        r = advance(r, t0, cfg, E, adv);
        rho = from_spectral(r);
        if (!(rho.max() <= cfg.blowup)) {
            std::ostringstream os;
            os << "density blow-up at t=" << t << " (max " << rho.max() << ")";
            throw NumericError(os.str(), rho.max());
        }
        if (rho.min() < -1e-8) ++floor_events;
        const double d = l2_dev_sq(rho), w = control_work(rho, cfg.control, t);
        diss += 0.5 * cfg.dt * (d + d_prev);
        work += 0.5 * cfg.dt * (w + w_prev);
        d_prev = d;
        w_prev = w;
        const double e = energy_quadratic(rho);
        q = std::max(q, e + 0.5 * cfg.nu * diss);
        if (s % cfg.snapshot_stride == 0 || s == steps) record(t, e);
    }
    if (floor_events > 0)
        rec.events.push_back("steps with min(rho) below -1e-8: " + std::to_string(floor_events));
    std::ostringstream os;
    os.precision(17);
    os << "measured C_v = " << measured_C_v(rec);
    rec.events.push_back(os.str());
    return rec;
}

TrajectoryRecord solve(const GridField& gamma, const ControlField& control, double T, PdeConfig cfg) {
    cfg.control = control;
    cfg.T = T;
    return solve(gamma, cfg);
}

double measured_C_v(const TrajectoryRecord& rec) {
    const std::size_t ie = rec.observables.column_index("e"), iq = rec.observables.column_index("Q");
    const double e0 = rec.observables.rows.at(0)[ie];
    double c = 0.0;
    for (std::size_t s = 1; s < rec.observables.rows.size(); ++s) {
        const double t = rec.times[s];
        if (t > 0.0) c = std::max(c, (rec.observables.rows[s][iq] - e0) / t);
    }
    return c;
}

Series dissipation_residual(const TrajectoryRecord& rec) {
    const double nu = rec.config.value("nu", 0.0);
    const auto e = rec.observables.column("e");
    const auto d = rec.observables.column("dissipation");
    const auto w = rec.observables.column("work");
    Series out;
    out.names = {"t", "residual", "interval_residual", "relative", "interval_relative"};
    const double scale = std::max(std::abs(e.at(0)), 1e-300);
    for (std::size_t s = 0; s < e.size(); ++s) {
        const double res = e[s] - e[0] + nu * d[s] - w[s];
        double ires = 0.0;
        if (s > 0) ires = e[s] - e[s - 1] + nu * (d[s] - d[s - 1]) - (w[s] - w[s - 1]);
        const double iscale = s > 0 ? std::max(std::abs(e[s - 1] - e[s]) + nu * (d[s] - d[s - 1]), 1e-300) : 1.0;
        out.rows.push_back({rec.times[s], res, ires, res / scale, ires / iscale});
    }
    return out;
}

ParticleState sample_initial(const GridField& gamma, int n, uint64_t seed) {
    require_density(gamma, 1e-6, "sampling density");
    const int M = gamma.M();
    const double h = 1.0 / M;
    std::vector<double> cdf(static_cast<std::size_t>(M) * M);
    double acc = 0.0;
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) {
            const int i1 = (i + 1) % M, j1 = (j + 1) % M;
            acc += std::max(0.0, gamma(i, j)) + std::max(0.0, gamma(i1, j)) + std::max(0.0, gamma(i, j1)) +
                   std::max(0.0, gamma(i1, j1));
            cdf[static_cast<std::size_t>(i) * M + j] = acc;
        }
    // Inverse CDF of the density proportional to a + (b − a)s on [0, 1].
    auto linear_inverse = [](double a, double b, double u) {
        const double den = a + std::sqrt(std::max(0.0, a * a + (b - a) * (a + b) * u));
        return den > 0.0 ? std::clamp(u * (a + b) / den, 0.0, 1.0) : u;
    };
    const CounterRng rng(seed);
    ParticleState st;
    st.x.resize(n);
    for (int q = 0; q < n; ++q) {
        const auto u = rng.uniform2(0, static_cast<uint32_t>(q), 0x5A11u);
        const auto w = rng.uniform2(1, static_cast<uint32_t>(q), 0x5A11u);
        const double target = u[0] * acc;
        const std::size_t c = std::min<std::size_t>(
            static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), target) - cdf.begin()), cdf.size() - 1);
        const int i = static_cast<int>(c / M), j = static_cast<int>(c % M);
        const int i1 = (i + 1) % M, j1 = (j + 1) % M;
        const double f00 = std::max(0.0, gamma(i, j)), f10 = std::max(0.0, gamma(i1, j));
        const double f01 = std::max(0.0, gamma(i, j1)), f11 = std::max(0.0, gamma(i1, j1));
        const double s = linear_inverse(f00 + f01, f10 + f11, u[1]);
        const double t = linear_inverse((1 - s) * f00 + s * f10, (1 - s) * f01 + s * f11, w[0]);
        st.x[q] = TorusPoint(-0.5 + (i + s) * h, -0.5 + (j + t) * h);
    }
    return st;
}

}  // namespace vortexldp
