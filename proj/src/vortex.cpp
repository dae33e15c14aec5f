#include "vortexldp/vortex.hpp"

#include <cmath>
#include <limits>

#include "vortexldp/errors.hpp"
#include "vortexldp/meanfield.hpp"

namespace vortexldp {

namespace {

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();
// Stream tags for the counter RNG.
constexpr uint32_t kStreamStep = 0;
constexpr uint32_t kStreamInit = 0x494e4954u;

}  // namespace

std::string to_string(DriftKind k) {
    switch (k) {
        case DriftKind::direct_singular: return "direct_singular";
        case DriftKind::mollified: return "mollified";
        case DriftKind::tabulated: return "tabulated";
        case DriftKind::none: return "none";
    }
    return "?";
}

DriftKind drift_kind_from_string(const std::string& s) {
    if (s == "direct_singular" || s == "direct") return DriftKind::direct_singular;
    if (s == "mollified") return DriftKind::mollified;
    if (s == "tabulated") return DriftKind::tabulated;
    if (s == "none") return DriftKind::none;
    throw ConfigError("unknown drift mode '" + s + "'");
}

// ---------------------------------------------------------------------------

DriftEvaluator::DriftEvaluator(DriftMode mode, int n, std::shared_ptr<const KernelTable> kt,
                               const MollifierFamily& fam, Exec exec)
    : mode_(mode), n_(n), m_(fam.m(mode.level > 0 ? mode.level : n)), kt_(std::move(kt)), fam_(&fam), exec_(exec) {
    if (mode_.kind == DriftKind::direct_singular && !(mode_.r_min > 0.0))
        throw ConfigError("direct drift needs r_min > 0");
    if (mode_.kind == DriftKind::tabulated)
        tab_ = std::make_shared<MollifiedKernelTable>(*kt_, fam, mode.level > 0 ? mode.level : n);
}

std::vector<Vec2> DriftEvaluator::operator()(const std::vector<TorusPoint>& X) const {
    switch (mode_.kind) {
        case DriftKind::direct_singular: return drift_direct(X, *kt_, mode_.r_min, exec_);
        case DriftKind::mollified: return drift_mollified(X, *kt_, fam_->profile(), m_, exec_);
        case DriftKind::tabulated: return drift_tabulated(X, *tab_, exec_);
        case DriftKind::none: return std::vector<Vec2>(X.size(), Vec2{0.0, 0.0});
    }
    return {};
}

DriftEvaluator DriftEvaluator::mollified_fallback() const {
    DriftMode m = mode_;
    m.kind = DriftKind::mollified;
    return DriftEvaluator(m, n_, kt_, *fam_, exec_);
}

std::vector<Vec2> drift(const ParticleState& s, const DriftMode& mode, Exec exec) {
    return DriftEvaluator(mode, s.n(), KernelTable::shared(), MollifierFamily::standard(), exec)(s.x);
}

// ---------------------------------------------------------------------------

namespace {

void check_control(const ControlField* control, double nu) {
    if (control && control->active() && !(nu > 0.0))
        throw ConfigError("a control requires ν > 0 (the likelihood ratio is undefined at ν = 0)");
}

ParticleState em_update(const ParticleState& s, double dt, std::span<const double> noise, double nu,
                        const std::vector<Vec2>& b, const ControlField* control, GirsanovMode gm) {
    const int n = s.n();
    if (static_cast<int>(noise.size()) < 2 * n) throw ConfigError("step_em needs 2n normals");
    const bool ctl = control && control->active();
    const bool drive = ctl && gm == GirsanovMode::drive;
    const double amp = std::sqrt(2.0 * nu * dt);
    ParticleState out;
    out.x.resize(n);
    out.t = s.t + dt;
    double lw = 0.0, quad = 0.0;
    for (int i = 0; i < n; ++i) {
        const double xi1 = noise[2 * i], xi2 = noise[2 * i + 1];
        Vec2 v{0.0, 0.0};
        if (ctl) {
            v = control->v(s.t, s.x[i]);
            lw += v[0] * xi1 + v[1] * xi2;
            quad += v[0] * v[0] + v[1] * v[1];
        }
        const double u1 = b[i][0] + (drive ? v[0] : 0.0);
        const double u2 = b[i][1] + (drive ? v[1] : 0.0);
        out.x[i] = TorusPoint(s.x[i].x1 + u1 * dt + amp * xi1, s.x[i].x2 + u2 * dt + amp * xi2);
    }
    out.log_weight = s.log_weight;
    if (ctl) {
        const double sign = drive ? 1.0 : -1.0;
        out.log_weight += lw * std::sqrt(dt / (2.0 * nu)) + sign * dt / (4.0 * nu) * quad;
    }
    return out;
}

std::vector<Vec2> total_velocity(const std::vector<TorusPoint>& X, double t, const DriftEvaluator& drift,
                                 const ControlField* control) {
    std::vector<Vec2> b = drift(X);
    if (control && control->active())
        for (std::size_t i = 0; i < X.size(); ++i) {
            const Vec2 v = control->v(t, X[i]);
            b[i][0] += v[0];
            b[i][1] += v[1];
        }
    return b;
}

}  // namespace

ParticleState step_em(const ParticleState& s, double dt, std::span<const double> noise, double nu,
                      const DriftEvaluator& drift, const ControlField* control, GirsanovMode gm) {
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (nu < 0.0) throw ConfigError("ν must be non-negative");
    check_control(control, nu);
    return em_update(s, dt, noise, nu, drift(s.x), control, gm);
}

ParticleState step_rk4(const ParticleState& s, double dt, const DriftEvaluator& drift, const ControlField* control) {
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    const int n = s.n();
    auto shifted = [&](const std::vector<Vec2>& k, double h) {
        std::vector<TorusPoint> y(n);
        for (int i = 0; i < n; ++i) y[i] = TorusPoint(s.x[i].x1 + h * k[i][0], s.x[i].x2 + h * k[i][1]);
        return y;
    };
    const auto k1 = total_velocity(s.x, s.t, drift, control);
    const auto k2 = total_velocity(shifted(k1, 0.5 * dt), s.t + 0.5 * dt, drift, control);
    const auto k3 = total_velocity(shifted(k2, 0.5 * dt), s.t + 0.5 * dt, drift, control);
    const auto k4 = total_velocity(shifted(k3, dt), s.t + dt, drift, control);
    ParticleState out;
    out.x.resize(n);
    out.t = s.t + dt;
    out.log_weight = s.log_weight;
    for (int i = 0; i < n; ++i)
        out.x[i] = TorusPoint(s.x[i].x1 + dt / 6.0 * (k1[i][0] + 2.0 * k2[i][0] + 2.0 * k3[i][0] + k4[i][0]),
                              s.x[i].x2 + dt / 6.0 * (k1[i][1] + 2.0 * k2[i][1] + 2.0 * k3[i][1] + k4[i][1]));
    return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string integrator_name(Integrator i) { return i == Integrator::rk4 ? "rk4" : "euler_maruyama"; }
std::string girsanov_name(GirsanovMode g) { return g == GirsanovMode::drive ? "drive" : "reweight"; }
std::string policy_name(CollisionPolicy p) {
    switch (p) {
        case CollisionPolicy::halve_then_mollify: return "halve_then_mollify";
        case CollisionPolicy::halve_only: return "halve_only";
        case CollisionPolicy::fail: return "fail";
    }
    return "?";
}

uint64_t fnv_bytes(const void* data, std::size_t len, uint64_t h = 1469598103934665603ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

int SimConfig::monitor_m() const {
    if (monitor_level < 0) return 0;
    return MollifierFamily::standard().m(monitor_level > 0 ? monitor_level : n);
}

void SimConfig::validate() const {
    if (n < 1) throw ConfigError("n must be ≥ 1");
    if (nu < 0.0) throw ConfigError("ν must be non-negative");
    if (!(T > 0.0) || !(dt > 0.0)) throw ConfigError("T and dt must be positive");
    if (dt > T) throw ConfigError("dt exceeds T");
    if (snapshot_stride < 1) throw ConfigError("snapshot_stride must be ≥ 1");
    if (integrator == Integrator::rk4 && nu != 0.0) throw ConfigError("rk4 integrator is for the ν = 0 flow only");
    if (control.active() && !(nu > 0.0)) throw ConfigError("a control requires ν > 0");
    if (max_halvings < 0 || max_halvings > 16) throw ConfigError("max_halvings out of range");
    if (initial == "positions" && static_cast<int>(initial_positions.size()) != n)
        throw ConfigError("initial positions do not match n");
    if (initial == "density" && initial_density.M() == 0) throw ConfigError("initial density missing");
    if (initial != "uniform" && initial != "positions" && initial != "density")
        throw ConfigError("unknown initial condition '" + initial + "'");
}

nlohmann::json SimConfig::to_json() const {
    nlohmann::json j;
    j["n"] = n;
    j["nu"] = nu;
    j["T"] = T;
    j["dt"] = dt;
    j["snapshot_stride"] = snapshot_stride;
    j["seed"] = seed;
    j["drift"] = {{"kind", to_string(drift.kind)}, {"level", drift.level}, {"r_min", drift.r_min}};
    j["integrator"] = integrator_name(integrator);
    j["control"] = control.to_json();
    j["girsanov"] = girsanov_name(girsanov);
    j["policy"] = policy_name(policy);
    j["max_halvings"] = max_halvings;
    j["monitor_level"] = monitor_level;
    j["test_function"] = nlohmann::json::array();
    for (const auto& m : test_function)
        j["test_function"].push_back({{"amp", m.amp}, {"k", {m.k1, m.k2}}, {"phase", m.phase}});
    j["initial"] = initial;
    if (initial == "positions") {
        nlohmann::json p = nlohmann::json::array();
        for (const auto& x : initial_positions) p.push_back({x.x1, x.x2});
        j["positions"] = p;
    }
    if (initial == "density" && !initial_density_spec.is_null()) {
        j["initial_density"] = initial_density_spec;
    } else if (initial == "density") {
        const auto& d = initial_density.values();
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(fnv_bytes(d.data(), d.size() * sizeof(double))));
        j["initial_density"] = {{"M", initial_density.M()}, {"fnv1a", buf}};
    }
    j["store_snapshots"] = store_snapshots;
    return j;
}

SimConfig SimConfig::from_json(const nlohmann::json& j) {
    SimConfig c;
    try {
        c.n = j.value("n", c.n);
        c.nu = j.value("nu", c.nu);
        c.T = j.value("T", c.T);
        c.dt = j.value("dt", c.dt);
        c.snapshot_stride = j.value("snapshot_stride", c.snapshot_stride);
        c.seed = j.value("seed", c.seed);
        if (j.contains("drift")) {
            const auto& d = j.at("drift");
            if (d.is_string()) {
                c.drift.kind = drift_kind_from_string(d.get<std::string>());
            } else {
                c.drift.kind = drift_kind_from_string(d.value("kind", std::string("mollified")));
                c.drift.level = d.value("level", 0);
                c.drift.r_min = d.value("r_min", 1e-6);
            }
        }
        const std::string integ = j.value("integrator", std::string("euler_maruyama"));
        if (integ == "rk4") c.integrator = Integrator::rk4;
        else if (integ == "euler_maruyama" || integ == "em") c.integrator = Integrator::euler_maruyama;
        else throw ConfigError("unknown integrator '" + integ + "'");
        if (j.contains("control")) c.control = ControlField::from_json(j.at("control"));
        const std::string g = j.value("girsanov", std::string("drive"));
        if (g == "drive") c.girsanov = GirsanovMode::drive;
        else if (g == "reweight") c.girsanov = GirsanovMode::reweight;
        else throw ConfigError("unknown girsanov mode '" + g + "'");
        const std::string p = j.value("policy", std::string("halve_then_mollify"));
        if (p == "halve_then_mollify") c.policy = CollisionPolicy::halve_then_mollify;
        else if (p == "halve_only") c.policy = CollisionPolicy::halve_only;
        else if (p == "fail") c.policy = CollisionPolicy::fail;
        else throw ConfigError("unknown collision policy '" + p + "'");
        c.max_halvings = j.value("max_halvings", c.max_halvings);
        c.monitor_level = j.value("monitor_level", c.monitor_level);
        if (j.contains("test_function")) {
            c.test_function.clear();
            for (const auto& m : j.at("test_function")) {
                const auto k = m.at("k").get<std::vector<int>>();
                if (k.size() != 2) throw ConfigError("test function wavevector must have two entries");
                c.test_function.push_back({m.at("amp").get<double>(), k[0], k[1], m.value("phase", 0.0)});
            }
        }
        c.initial = j.value("initial", c.initial);
        if (c.initial == "positions")
            for (const auto& p2 : j.at("positions")) c.initial_positions.emplace_back(p2.at(0).get<double>(), p2.at(1).get<double>());
        if (c.initial == "density" && j.contains("initial_density") && !j.at("initial_density").contains("fnv1a")) {
            c.initial_density_spec = j.at("initial_density");
            c.initial_density =
                density_from_json(c.initial_density_spec, PeriodicGrid(c.initial_density_spec.value("M", 64)));
        }
        c.store_snapshots = j.value("store_snapshots", true);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad simulation config: ") + e.what());
    }
    return c;
}

std::vector<TorusPoint> uniform_positions(int n, uint64_t seed, uint32_t stream) {
    const CounterRng rng(seed);
    std::vector<TorusPoint> x(n);
    for (int i = 0; i < n; ++i) {
        const auto u = rng.uniform2(0xFFFFFFFF00000000ull | stream, static_cast<uint32_t>(i), kStreamInit);
        x[i] = TorusPoint(u[0] - 0.5, u[1] - 0.5);
    }
    return x;
}

double omega_n(double nu, int n, int m) {
    return nu / n * (double(m) * m * MollifierProfile::shared()->G0() - 1.0);
}

// ---------------------------------------------------------------------------

namespace {

struct MonitorTerms {
    double lin_value = 0.0, lin_drift = 0.0, lin_quad = 0.0;
    double e_moll = nan_value, l2 = nan_value, pairing = nan_value;
};

// Integrands of the monitors at one state; beta is the velocity of the
// dynamics (interaction + control when it drives).
// b is the interaction part alone, produced by `drift`.
MonitorTerms monitor_terms(const std::vector<TorusPoint>& X, const std::vector<Vec2>& b,
                           const std::vector<Vec2>& beta, double nu, const SmoothFunction* phi, int m,
                           const DriftEvaluator& drift, bool b_from_drift) {
    MonitorTerms mt;
    const int n = static_cast<int>(X.size());
    if (phi) {
        double v = 0.0, d = 0.0, q = 0.0;
        for (int i = 0; i < n; ++i) {
            const Vec2 g = phi->grad(X[i]);
            v += phi->value(X[i]);
            d += g[0] * beta[i][0] + g[1] * beta[i][1] + nu * phi->lap(X[i]);
            q += g[0] * g[0] + g[1] * g[1];
        }
        mt.lin_value = v / n;
        mt.lin_drift = d / n;
        mt.lin_quad = nu * q / n;
    }
    if (m > 0) {
        const KernelTable& kt = drift.kernels();
        const MollifierProfile& p = drift.profile();
        const double n2 = double(n) * n;
        mt.e_moll = pair_sum_mollified_green(X, kt, p, m) / (2.0 * n2);
        mt.l2 = pair_sum_G(X, p, m) / n2 - 1.0;
        // ∇𝒩_n = (K_n,2, −K_n,1) with K_n = G_n∗𝒦.
        const bool same = b_from_drift && drift.mode().kind == DriftKind::mollified && drift.m() == m;
        const std::vector<Vec2> bn = same ? std::vector<Vec2>{} : drift_mollified(X, kt, p, m);
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            const Vec2& k = same ? b[i] : bn[i];
            // When the dynamics is the mollified flow at this level the
            // interaction part cancels exactly; only the control part remains.
            s += beta[i][0] * k[1] - beta[i][1] * k[0];
        }
        mt.pairing = s / n;
    }
    return mt;
}

struct Runner {
    const SimConfig& cfg;
    TrajectoryRecord* rec;
    DriftEvaluator drift;
    std::optional<DriftEvaluator> fallback;
    CounterRng rng;
    const ControlField* control;
    std::optional<SmoothFunction> phi;
    int m_mon;
    long long fallbacks = 0, halvings = 0;

    Runner(const SimConfig& c, TrajectoryRecord* r)
        : cfg(c), rec(r), drift(c.drift, c.n), rng(c.seed), control(c.control.active() ? &c.control : nullptr),
          m_mon(c.monitor_m()) {
        if (!c.test_function.empty()) phi = SmoothFunction::modes(c.test_function);
    }

    std::vector<double> noise(uint64_t step, uint32_t stream) const {
        std::vector<double> z(2 * cfg.n);
        for (int i = 0; i < cfg.n; ++i) {
            const auto g = rng.normal2(step, static_cast<uint32_t>(i), stream);
            z[2 * i] = g[0];
            z[2 * i + 1] = g[1];
        }
        return z;
    }

    std::vector<Vec2> beta(const ParticleState& s, const std::vector<Vec2>& b) const {
        std::vector<Vec2> out = b;
        if (control && cfg.girsanov == GirsanovMode::drive)
            for (int i = 0; i < s.n(); ++i) {
                const Vec2 v = control->v(s.t, s.x[i]);
                out[i][0] += v[0];
                out[i][1] += v[1];
            }
        return out;
    }

    ParticleState plain_step(const ParticleState& s, double h, uint64_t step, uint32_t stream,
                             const DriftEvaluator& d, const std::vector<Vec2>* b0) {
        if (cfg.integrator == Integrator::rk4) return step_rk4(s, h, d, control);
        const std::vector<double> z = noise(step, stream);
        return em_update(s, h, z, cfg.nu, b0 ? *b0 : d(s.x), control, cfg.girsanov);
    }

    ParticleState advance(const ParticleState& s, uint64_t k, const std::vector<Vec2>* b0) {
        try {
            return plain_step(s, cfg.dt, k, kStreamStep, drift, b0);
        } catch (const CollisionError& e) {
            if (cfg.policy == CollisionPolicy::fail) throw;
            for (int h = 1; h <= cfg.max_halvings; ++h) {
                try {
                    const int sub = 1 << h;
                    ParticleState y = s;
                    for (int q = 0; q < sub; ++q)
                        y = plain_step(y, cfg.dt / sub, k, (uint32_t(h) << 20) | uint32_t(q + 1), drift, nullptr);
                    ++halvings;
                    log("step " + std::to_string(k) + ": near collision (" + e.what() + "), recovered with dt/" +
                        std::to_string(sub));
                    return y;
                } catch (const CollisionError&) {
                }
            }
            if (cfg.policy != CollisionPolicy::halve_then_mollify) throw;
            if (!fallback) fallback.emplace(drift.mollified_fallback());
            ++fallbacks;
            log("step " + std::to_string(k) + ": near collision (" + e.what() +
                "), step taken with mollified drift at m=" + std::to_string(fallback->m()));
            return plain_step(s, cfg.dt, k, kStreamStep, *fallback, nullptr);
        }
    }

    void log(const std::string& msg) {
        if (rec) rec->events.push_back(msg);
    }
};

ParticleState run(const SimConfig& cfg, TrajectoryRecord* rec) {
    cfg.validate();
    const long long nsteps = std::llround(cfg.T / cfg.dt);
    if (std::abs(nsteps * cfg.dt - cfg.T) > 1e-9 * cfg.T) throw ConfigError("T must be a multiple of dt");

    Runner R(cfg, rec);
    ParticleState s;
    if (cfg.initial == "positions") s.x = cfg.initial_positions;
    else if (cfg.initial == "density") s.x = sample_initial(cfg.initial_density, cfg.n, cfg.seed).x;
    else s.x = uniform_positions(cfg.n, cfg.seed);

    const bool monitors = rec != nullptr;
    const KernelTable& kt = R.drift.kernels();
    const double omega = R.m_mon > 0 ? omega_n(cfg.nu, cfg.n, R.m_mon) : 0.0;
    const std::vector<Vec2> zero(cfg.n, Vec2{0.0, 0.0});
    const double lin0 = R.phi ? monitor_terms(s.x, zero, zero, 0.0, &*R.phi, 0, R.drift, false).lin_value : 0.0;
    double int_lin = 0.0, int_quad = 0.0, int_l2 = 0.0, int_pair = 0.0;
    MonitorTerms prev;

    if (rec) {
        rec->kind = TrajectoryRecord::Kind::particles;
        rec->config = cfg.to_json();
        rec->hash = config_hash(rec->config);
        rec->seed = cfg.seed;
        rec->observables.names = {"t", "e0", "e_moll", "l2_dev", "compensator", "logZ"};
        if (R.phi) rec->monitors.names = {"t", "linear", "linear_exp_log"};
    }
    auto record = [&](const ParticleState& st, const MonitorTerms& mt) {
        if (!rec) return;
        rec->times.push_back(st.t);
        if (cfg.store_snapshots) rec->particles.push_back(st.x);
        double e0 = nan_value;
        try {
            e0 = pair_sum_green(st.x, kt) / (2.0 * double(cfg.n) * cfg.n);
        } catch (const CollisionError&) {
        }
        const double comp = R.m_mon > 0 ? mt.e_moll + cfg.nu * int_l2 - int_pair - omega * st.t : nan_value;
        rec->observables.rows.push_back({st.t, e0, mt.e_moll, mt.l2, comp, st.log_weight});
        if (R.phi) {
            const double M = mt.lin_value - lin0 - int_lin;
            rec->monitors.rows.push_back({st.t, M, cfg.n * (M - int_quad)});
        }
    };

    for (long long k = 0; k <= nsteps; ++k) {
        // Velocity at the current state, reused by the step when possible.
        std::vector<Vec2> b;
        bool have_b = false;
        try {
            if (cfg.integrator == Integrator::euler_maruyama || monitors) {
                b = R.drift(s.x);
                have_b = true;
            }
        } catch (const CollisionError&) {
            have_b = false;
        }
        if (monitors) {
            MonitorTerms mt;
            const SmoothFunction* phi = R.phi ? &*R.phi : nullptr;
            if (have_b) {
                mt = monitor_terms(s.x, b, R.beta(s, b), cfg.nu, phi, R.m_mon, R.drift, true);
            } else {
                if (!R.fallback) R.fallback.emplace(R.drift.mollified_fallback());
                const auto bf = (*R.fallback)(s.x);
                mt = monitor_terms(s.x, bf, R.beta(s, bf), cfg.nu, phi, R.m_mon, R.drift, false);
            }
            if (k > 0) {
                const double h = 0.5 * cfg.dt;
                int_lin += h * (prev.lin_drift + mt.lin_drift);
                int_quad += h * (prev.lin_quad + mt.lin_quad);
                if (R.m_mon > 0) {
                    int_l2 += h * (prev.l2 + mt.l2);
                    int_pair += h * (prev.pairing + mt.pairing);
                }
            }
            prev = mt;
            if (k % cfg.snapshot_stride == 0 || k == nsteps) record(s, mt);
        }
        if (k == nsteps) break;
        s = R.advance(s, static_cast<uint64_t>(k), have_b && cfg.integrator == Integrator::euler_maruyama ? &b : nullptr);
        s.t = (k + 1) * cfg.dt;
    }
    if (rec && (R.halvings || R.fallbacks))
        rec->events.push_back("summary: " + std::to_string(R.halvings) + " halved steps, " +
                              std::to_string(R.fallbacks) + " mollified fallbacks");
    return s;
}

}  // namespace

TrajectoryRecord simulate(const SimConfig& cfg) {
    TrajectoryRecord rec;
    run(cfg, &rec);
    rec.events.insert(rec.events.begin(), "collision guard: r_min=" + std::to_string(cfg.drift.r_min) +
                                              ", policy=" + policy_name(cfg.policy) +
                                              " (engineering choice, no quantitative collision gap is known)");
    return rec;
}

ParticleState simulate_final(const SimConfig& cfg) { return run(cfg, nullptr); }

// ---------------------------------------------------------------------------

double symmetrized_pairing(const std::vector<TorusPoint>& X, const std::function<Vec2(const TorusPoint&)>& phi,
                           const KernelTable& kt) {
    const int n = static_cast<int>(X.size());
    std::vector<Vec2> f(n);
    for (int i = 0; i < n; ++i) f[i] = phi(X[i]);
    std::vector<double> rows(n, 0.0);
#pragma omp parallel for schedule(dynamic, 8)
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = i + 1; j < n; ++j) {
            const Displacement d = min_image(X[i], X[j]);
            if (d.r == 0.0) continue;
            const Vec2 w = bounded_w(kt, X[i], X[j]);
            s += ((f[i][0] - f[j][0]) * w[0] + (f[i][1] - f[j][1]) * w[1]) / d.r;
        }
        rows[i] = s;
    }
    double s = 0.0;
    for (double r : rows) s += r;
    return s / (double(n) * n);
}

double direct_pairing(const std::vector<TorusPoint>& X, const std::function<Vec2(const TorusPoint&)>& phi,
                      const KernelTable& kt) {
    const int n = static_cast<int>(X.size());
    const auto b = drift_direct(X, kt, 0.0 + std::numeric_limits<double>::min());
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        const Vec2 f = phi(X[i]);
        s += f[0] * b[i][0] + f[1] * b[i][1];
    }
    return s / n;
}

// ---------------------------------------------------------------------------

namespace {

struct RecordContext {
    SimConfig cfg;
    DriftEvaluator drift;
    explicit RecordContext(const TrajectoryRecord& rec)
        : cfg(SimConfig::from_json(rec.config)), drift(cfg.drift, cfg.n) {
        if (rec.kind != TrajectoryRecord::Kind::particles || rec.particles.size() != rec.times.size())
            throw ConfigError("monitor needs a particle record with stored snapshots");
    }
    // Interaction drift, full velocity, and whether the drift came from the
    // configured evaluator.
    MonitorTerms terms(const std::vector<TorusPoint>& X, double t, const SmoothFunction* phi, int m) const {
        std::vector<Vec2> b;
        bool own = true;
        try {
            b = drift(X);
        } catch (const CollisionError&) {
            b = drift.mollified_fallback()(X);
            own = false;
        }
        std::vector<Vec2> beta = b;
        if (cfg.control.active() && cfg.girsanov == GirsanovMode::drive)
            for (std::size_t i = 0; i < X.size(); ++i) {
                const Vec2 v = cfg.control.v(t, X[i]);
                beta[i][0] += v[0];
                beta[i][1] += v[1];
            }
        return monitor_terms(X, b, beta, cfg.nu, phi, m, drift, own);
    }
};

bool spacing_coarse(const std::vector<double>& t, double tol) {
    for (std::size_t i = 1; i < t.size(); ++i)
        if (t[i] - t[i - 1] > tol) return true;
    return false;
}

}  // namespace

MonitorSeries martingale_monitor(const TrajectoryRecord& rec, const SmoothFunction& phi, double spacing_tol) {
    const RecordContext ctx(rec);
    MonitorSeries out;
    out.coarse = spacing_coarse(rec.times, spacing_tol);
    double lin0 = 0.0, int_lin = 0.0, int_quad = 0.0;
    MonitorTerms prev;
    for (std::size_t k = 0; k < rec.times.size(); ++k) {
        const auto& X = rec.particles[k];
        const MonitorTerms mt = ctx.terms(X, rec.times[k], &phi, 0);
        if (k == 0) lin0 = mt.lin_value;
        else {
            const double h = 0.5 * (rec.times[k] - rec.times[k - 1]);
            int_lin += h * (prev.lin_drift + mt.lin_drift);
            int_quad += h * (prev.lin_quad + mt.lin_quad);
        }
        prev = mt;
        const double M = mt.lin_value - lin0 - int_lin;
        out.t.push_back(rec.times[k]);
        out.value.push_back(M);
        out.exp_log.push_back(ctx.cfg.n * (M - int_quad));
    }
    return out;
}

MonitorSeries energy_compensator_monitor(const TrajectoryRecord& rec, int level, double spacing_tol) {
    const RecordContext ctx(rec);
    const int m = MollifierFamily::standard().m(level);
    MonitorSeries out;
    out.coarse = spacing_coarse(rec.times, spacing_tol);
    const double omega = omega_n(ctx.cfg.nu, ctx.cfg.n, m);
    double int_l2 = 0.0, int_pair = 0.0;
    MonitorTerms prev;
    for (std::size_t k = 0; k < rec.times.size(); ++k) {
        const auto& X = rec.particles[k];
        const MonitorTerms mt = ctx.terms(X, rec.times[k], nullptr, m);
        if (k > 0) {
            const double h = 0.5 * (rec.times[k] - rec.times[k - 1]);
            int_l2 += h * (prev.l2 + mt.l2);
            int_pair += h * (prev.pairing + mt.pairing);
        }
        prev = mt;
        out.t.push_back(rec.times[k]);
        out.value.push_back(mt.e_moll + ctx.cfg.nu * int_l2 - int_pair - omega * rec.times[k]);
    }
    return out;
}

}  // namespace vortexldp
