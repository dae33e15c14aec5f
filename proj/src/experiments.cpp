#include "vortexldp/experiments.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vortexldp/action.hpp"
#include "vortexldp/errors.hpp"
#include "vortexldp/inequalities.hpp"
#include "vortexldp/kernels.hpp"
#include "vortexldp/meanfield.hpp"
#include "vortexldp/mollify.hpp"
#include "vortexldp/record.hpp"
#include "vortexldp/vortex.hpp"
#include "vortexldp/wasserstein.hpp"

namespace vortexldp {

namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;
using cplx = std::complex<double>;

nlohmann::json mode_list(std::initializer_list<std::tuple<double, int, int, double>> modes) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& [amp, k1, k2, ph] : modes) a.push_back({{"amp", amp}, {"k", {k1, k2}}, {"phase", ph}});
    return a;
}

/// Defaults must list every key a preset reads so overrides can be validated.
nlohmann::json defaults_for(const std::string& name) {
    using J = nlohmann::json;
    if (name == "heat_checks")
        return {{"M", 64}, {"t", 0.05}, {"s", 0.03}, {"samples", 64},
                {"tol_mass", 1e-10}, {"tol_semigroup", 1e-10}, {"tol_series", 1e-12}};
    if (name == "inequality_validate")
        return {{"count", 20}, {"seed", 20240611}, {"M", 64}, {"n_particles", 256}, {"entropy_decay", true}};
    if (name == "dissipation")
        return {{"M", 128}, {"dt", 1e-3}, {"T", 1.0}, {"nu", 0.1}, {"snapshot_stride", 50}, {"tol", 1e-3},
                {"initial", {{"modes", mode_list({{0.3, 1, 0, 0.0}, {0.2, 1, 1, 0.5}})}}}};
    if (name == "action_roundtrip")
        return {{"M", 64}, {"dt", 1e-3}, {"T", 0.5}, {"nu", 0.1}, {"snapshot_stride", 10},
                {"control", {{"modes", J::array({{{"amp", 0.05}, {"k", {0, 1}}, {"phase", 0.0}}})}}},
                {"initial", {{"modes", mode_list({{0.2, 1, 0, 0.0}})}}},
                {"tol", 0.01}, {"uncontrolled_tol", 1e-6}};
    if (name == "chaos_convergence")
        return {{"n", {64, 256, 1024}}, {"seeds", 8}, {"seed", 1}, {"T", 0.3}, {"dt", 1e-3}, {"nu", 0.1},
                {"M", 64}, {"eps", 5e-3},
                {"initial", {{"M", 64}, {"modes", mode_list({{0.5, 1, 0, 0.0}, {0.3, 0, 1, 0.7}})}}}};
    if (name == "tilted_sampling")
        return {{"n", 64}, {"nu", 0.1}, {"T", 0.2}, {"dt", 1e-3}, {"snapshot_stride", 20}, {"paths", 400},
                {"direct_paths", 400}, {"seed", 1}, {"pde_M", 64}, {"kmax", 1}, {"eps", {0.3, 0.25, 0.2}},
                {"control", {{"modes", J::array({{{"amp", 0.15}, {"k", {0, 1}}, {"phase", 0.0}}})}}},
                {"initial", {{"M", 64}, {"modes", mode_list({{0.3, 1, 0, 0.0}})}}}};
    throw ConfigError("unknown preset '" + name + "'");
}

void check_keys(const nlohmann::json& defaults, const nlohmann::json& over, const std::string& where) {
    if (over.is_null()) return;
    if (!over.is_object()) throw ConfigError("overrides for " + where + " must be an object");
    for (auto it = over.begin(); it != over.end(); ++it)
        if (!defaults.contains(it.key())) throw ConfigError("unknown parameter '" + it.key() + "' for " + where);
}

struct Output {
    fs::path dir;
    std::string hash;
    PresetResult* res;

    std::string path(const std::string& name) const {
        res->artifacts.push_back(name);
        return (dir / name).string();
    }
    void csv(const std::string& name, const Series& s) const { s.write_csv(path(name), hash); }
    void json(const std::string& name, nlohmann::json j) const {
        j["config_hash"] = hash;
        j["version"] = kCodeVersion;
        std::ofstream(path(name)) << j.dump(2) << "\n";
    }
    void expect(bool ok, const std::string& what) const {
        if (!ok) res->failures.push_back(what);
    }
};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

PdeConfig pde_from(const nlohmann::json& p) {
    PdeConfig c;
    c.M = p.at("M").get<int>();
    c.dt = p.at("dt").get<double>();
    c.T = p.at("T").get<double>();
    c.nu = p.at("nu").get<double>();
    c.snapshot_stride = p.at("snapshot_stride").get<int>();
    c.initial = p.at("initial");
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------

void heat_checks(const nlohmann::json& p, const Output& out) {
    const PeriodicGrid g(p.at("M").get<int>());
    const double t = p.at("t").get<double>(), s = p.at("s").get<double>();
    const double h2 = g.h() * g.h();
    nlohmann::json sum;

    const GridField four = heat_kernel_field(t, g, HeatMode::fourier);
    const GridField imag = heat_kernel_field(t, g, HeatMode::images);
    double mass_f = 0.0, mass_i = 0.0, series = 0.0;
    for (std::size_t q = 0; q < g.size(); ++q) {
        mass_f += h2 * four.values()[q];
        mass_i += h2 * imag.values()[q];
        series = std::max(series, std::abs(four.values()[q] - imag.values()[q]));
    }
    sum["mass_error"] = std::max(std::abs(mass_f - 1.0), std::abs(mass_i - 1.0));
    sum["series_max_diff"] = series;

    // Φ_t∗Φ_s by trapezoid quadrature on the image series, against Φ_{t+s} from the Fourier series.
    const int samples = p.at("samples").get<int>();
    const GridField phs = heat_kernel_field(s, g, HeatMode::images);
    Series rows;
    rows.names = {"x1", "x2", "convolution", "direct", "abs_diff"};
    rows.rows.resize(samples);
    double semi = 0.0;
#pragma omp parallel for schedule(static) reduction(max : semi)
    for (int q = 0; q < samples; ++q) {
        const double x1 = -0.5 + (q + 0.5) / samples, x2 = 0.37 * std::sin(7.0 * q);
        double conv = 0.0;
        for (int i = 0; i < g.M(); ++i)
            for (int j = 0; j < g.M(); ++j)
                conv += heat_kernel(t, displacement(x1 - g.node(i), x2 - g.node(j)), HeatMode::images) * phs(i, j);
        conv *= h2;
        const double direct = heat_kernel(t + s, displacement(x1, x2), HeatMode::fourier);
        rows.rows[q] = {x1, x2, conv, direct, std::abs(conv - direct)};
        semi = std::max(semi, std::abs(conv - direct));
    }
    sum["semigroup_max_diff"] = semi;
    out.csv("heat_semigroup.csv", rows);

    Series prof;
    prof.names = {"x1", "fourier", "images"};
    for (int i = 0; i < g.M(); ++i) prof.rows.push_back({g.node(i), four(i, g.M() / 2), imag(i, g.M() / 2)});
    out.csv("heat_profile.csv", prof);

    out.expect(sum["mass_error"].get<double>() <= p.at("tol_mass").get<double>(), "heat kernel mass " + fmt(sum["mass_error"]));
    out.expect(semi <= p.at("tol_semigroup").get<double>(), "semigroup " + fmt(semi));
    out.expect(series <= p.at("tol_series").get<double>(), "series agreement " + fmt(series));
    out.res->summary = sum;
    out.json("heat_checks.json", sum);
}

void inequality_validate(const nlohmann::json& p, const Output& out) {
    const InequalityCorpus corpus = make_corpus(p.at("count").get<int>(), p.at("seed").get<uint64_t>(),
                                                p.at("M").get<int>(), p.at("n_particles").get<int>());
    SuiteOptions opt;
    opt.include_entropy_decay = p.at("entropy_decay").get<bool>();
    const InequalityReport rep = inequality_suite(corpus, opt);
    {
        std::ofstream os(out.path("inequalities.jsonl"));
        for (const auto& c : rep.checks) {
            nlohmann::json j = c.to_json();
            j["config_hash"] = out.hash;
            j["version"] = kCodeVersion;
            os << j.dump() << "\n";
        }
    }
    for (const auto& c : rep.checks)
        out.expect(c.pass(), c.name + " [" + c.sample + "] lhs=" + fmt(c.lhs) + " rhs=" + fmt(c.rhs));
    out.res->summary = {{"checks", rep.checks.size()}, {"failures", rep.failures()}, {"by_name", rep.summary()}};
    out.json("inequality_summary.json", out.res->summary);
}

void dissipation(const nlohmann::json& p, const Output& out) {
    const PdeConfig cfg = pde_from(p);
    const GridField gamma = density_from_json(cfg.initial, PeriodicGrid(cfg.M));
    const TrajectoryRecord rec = solve(gamma, cfg);
    rec.save((out.dir / "pde").string());
    out.res->artifacts.push_back("pde/");
    const Series r = dissipation_residual(rec);
    out.csv("dissipation.csv", r);
    const double rel = std::abs(r.rows.back()[r.column_index("relative")]);
    out.res->summary = {{"final_relative_residual", rel}, {"e0", rec.observables.rows.front()[1]}};
    out.expect(rel < p.at("tol").get<double>(), "dissipation residual " + fmt(rel));
    out.json("dissipation.json", out.res->summary);
}

void action_roundtrip(const nlohmann::json& p, const Output& out) {
    PdeConfig cfg = pde_from(p);
    const ControlField v = ControlField::from_json(p.at("control"));
    const GridField gamma = density_from_json(cfg.initial, PeriodicGrid(cfg.M));
    const TrajectoryRecord rec = solve(gamma, v, cfg.T, cfg);
    rec.save((out.dir / "controlled").string());
    out.res->artifacts.push_back("controlled/");
    const ActionReport ar = action_report(rec);

    Series slices;
    slices.names = {"t", "norm_sq", "norm_sq_richardson", "cg_iters"};
    for (const auto& s : ar.slices) slices.rows.push_back({s.t, s.norm_sq, s.norm_sq_richardson, double(s.cg_iters)});
    out.csv("action_slices.csv", slices);

    const TrajectoryRecord free = solve(gamma, ControlField{}, cfg.T, cfg);
    const ActionReport af = action_report(free);
    const double tol = p.at("tol").get<double>();
    const double rel_action = std::abs(ar.A_T - ar.control_energy) / ar.control_energy;
    nlohmann::json sum = ar.to_json();
    sum["relative_action_error"] = rel_action;
    sum["uncontrolled_action"] = af.A_T;
    out.res->summary = sum;
    out.json("action_report.json", sum);
    out.expect(rel_action <= tol, "action vs control energy " + fmt(rel_action));
    out.expect(ar.control_rel_error <= tol, "recovered control " + fmt(ar.control_rel_error));
    out.expect(af.A_T < p.at("uncontrolled_tol").get<double>(), "uncontrolled action " + fmt(af.A_T));
}

void chaos_convergence(const nlohmann::json& p, const Output& out) {
    const auto ns = p.at("n").get<std::vector<int>>();
    const int seeds = p.at("seeds").get<int>();
    const uint64_t seed0 = p.at("seed").get<uint64_t>();
    const int M = p.at("M").get<int>();
    const PeriodicGrid g(M);
    const nlohmann::json init = p.at("initial");
    const GridField gamma = density_from_json(init, PeriodicGrid(init.value("M", M)));

    PdeConfig pc;
    pc.M = gamma.M();
    pc.dt = p.at("dt").get<double>();
    pc.T = p.at("T").get<double>();
    pc.nu = p.at("nu").get<double>();
    pc.snapshot_stride = pc.steps();
    pc.initial = init;
    const TrajectoryRecord pde = solve(gamma, pc);
    const GridField target = pde.densities.back().M() == M ? pde.densities.back()
                                                            : coarsen(pde.densities.back(), pde.densities.back().M() / M);

    EntropicOptions eo;
    eo.eps = p.at("eps").get<double>();
    eo.tol = 1e-7;
    Series runs, trend;
    runs.names = {"n", "m", "seed", "w2_sq", "sinkhorn_iters"};
    trend.names = {"n", "m", "mean_w2_sq", "se"};
    std::vector<double> means;
    for (int n : ns) {
        const int m = MollifierFamily::standard().m(n);
        const int Mg = std::max(M, required_grid_size(m));
        std::vector<double> w(seeds);
        for (int s = 0; s < seeds; ++s) {
            SimConfig sc;
            sc.n = n;
            sc.nu = pc.nu;
            sc.T = pc.T;
            sc.dt = pc.dt;
            sc.seed = seed0 + 1000003ull * s + n;
            sc.drift = DriftMode::mollified();
            sc.initial = "density";
            sc.initial_density = gamma;
            sc.initial_density_spec = init;
            sc.monitor_level = -1;
            sc.test_function.clear();
            const ParticleState fin = simulate_final(sc);
            GridField dep = mollify_empirical_m(fin.x, m, PeriodicGrid(Mg), MollifierFamily::standard().profile());
            if (Mg != M) dep = coarsen(dep, Mg / M);
            const EntropicResult r = wasserstein2_entropic(dep, target, eo);
            w[s] = r.cost;
            runs.rows.push_back({double(n), double(m), double(sc.seed), r.cost, double(r.iterations)});
        }
        double mean = 0.0, var = 0.0;
        for (double x : w) mean += x / seeds;
        for (double x : w) var += (x - mean) * (x - mean) / std::max(1, seeds - 1);
        means.push_back(mean);
        trend.rows.push_back({double(n), double(m), mean, std::sqrt(var / seeds)});
    }
    out.csv("chaos_runs.csv", runs);
    out.csv("chaos_trend.csv", trend);
    nlohmann::json sum = {{"n", ns}, {"mean_w2_sq", means}};
    for (std::size_t i = 1; i < means.size(); ++i)
        out.expect(means[i] < means[i - 1], "W2 trend not decreasing at n=" + std::to_string(ns[i]));
    out.res->summary = sum;
    out.json("chaos_summary.json", sum);
}

void tilted_preset(const nlohmann::json& p, const Output& out) {
    TiltedSpec spec;
    spec.n = p.at("n").get<int>();
    spec.nu = p.at("nu").get<double>();
    spec.T = p.at("T").get<double>();
    spec.dt = p.at("dt").get<double>();
    spec.snapshot_stride = p.at("snapshot_stride").get<int>();
    spec.paths = p.at("paths").get<int>();
    spec.direct_paths = p.at("direct_paths").get<int>();
    spec.seed = p.at("seed").get<uint64_t>();
    spec.pde_M = p.at("pde_M").get<int>();
    spec.initial = p.at("initial");
    spec.control = ControlField::from_json(p.at("control"));
    spec.event.kmax = p.at("kmax").get<int>();

    Series rows;
    rows.names = {"eps", "estimate", "ci_half", "ess", "unreliable", "direct", "direct_ci_half",
                  "consistent", "entropy_proxy", "entropy_proxy_se", "entropy_proxy_event", "target_action"};
    nlohmann::json sum = nlohmann::json::array();
    auto run = [&](double eps, bool always) {
        TiltedSpec s = spec;
        s.event.eps = eps;
        s.event.always = always;
        s.direct_mc = !always;
        const TiltedEstimate e = tilted_sampling(s);
        rows.rows.push_back({always ? -1.0 : eps, e.estimate, e.ci_half, e.ess, double(e.unreliable), e.direct,
                             e.direct_ci_half, double(e.consistent), e.entropy_proxy, e.entropy_proxy_se,
                             e.entropy_proxy_event, e.target_action});
        nlohmann::json j = e.to_json();
        j["eps"] = always ? nlohmann::json("null_event") : nlohmann::json(eps);
        sum.push_back(j);
        return e;
    };
    const TiltedEstimate null = run(0.0, true);
    out.expect(std::abs(null.estimate - 1.0) <= null.ci_half, "null event estimate " + fmt(null.estimate));
    for (double eps : p.at("eps").get<std::vector<double>>()) {
        const TiltedEstimate e = run(eps, false);
        out.expect(!e.direct_valid || e.unreliable || e.consistent, "tilted vs direct MC at eps=" + fmt(eps));
    }
    out.csv("tilted.csv", rows);
    out.res->summary = {{"runs", sum}};
    out.json("tilted.json", out.res->summary);
}

/// Fourier coefficients ∫e^{−2πik·x}dμ over the half-plane set 0 < |k|∞ ≤ kmax.
std::vector<std::pair<int, int>> tube_modes(int kmax) {
    std::vector<std::pair<int, int>> ks;
    for (int k1 = -kmax; k1 <= kmax; ++k1)
        for (int k2 = 0; k2 <= kmax; ++k2)
            if (k2 > 0 || k1 > 0) ks.push_back({k1, k2});
    return ks;
}

std::vector<cplx> empirical_coefficients(const std::vector<TorusPoint>& X, const std::vector<std::pair<int, int>>& ks) {
    std::vector<cplx> c(ks.size());
    for (std::size_t q = 0; q < ks.size(); ++q) {
        cplx s = 0.0;
        for (const auto& x : X) s += std::polar(1.0, -2.0 * kPi * (ks[q].first * x.x1 + ks[q].second * x.x2));
        c[q] = s / double(X.size());
    }
    return c;
}

std::vector<cplx> density_coefficients(const GridField& f, const std::vector<std::pair<int, int>>& ks) {
    const PeriodicGrid& g = f.grid();
    std::vector<cplx> c(ks.size());
    for (std::size_t q = 0; q < ks.size(); ++q) {
        cplx s = 0.0;
        for (int i = 0; i < g.M(); ++i)
            for (int j = 0; j < g.M(); ++j)
                s += f(i, j) * std::polar(1.0, -2.0 * kPi * (ks[q].first * g.node(i) + ks[q].second * g.node(j)));
        c[q] = s * g.h() * g.h();
    }
    return c;
}

}  // namespace

// ---------------------------------------------------------------------------

nlohmann::json ExperimentConfig::to_json() const { return {{"preset", preset}, {"params", params}}; }

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    if (!j.contains("preset")) throw ConfigError("experiment config needs a 'preset'");
    return make_experiment(j.at("preset").get<std::string>(), j.value("params", nlohmann::json::object()),
                           j.value("out", std::string("out")));
}

std::string ExperimentConfig::hash() const { return config_hash(to_json()); }

nlohmann::json preset_defaults(const std::string& name) { return defaults_for(name); }

ExperimentConfig make_experiment(const std::string& name, const nlohmann::json& overrides, std::string out_dir) {
    ExperimentConfig c;
    c.preset = name;
    c.params = defaults_for(name);
    check_keys(c.params, overrides, name);
    if (!overrides.is_null()) c.params.merge_patch(overrides);
    c.out_dir = std::move(out_dir);
    return c;
}

void apply_set(nlohmann::json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + assignment + "'");
    const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
    nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    nlohmann::json* node = &j;
    std::size_t start = 0;
    for (;;) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("empty key segment in '" + key + "'");
        if (!node->is_object()) *node = nlohmann::json::object();
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

PresetResult run_preset(const ExperimentConfig& cfg) {
    PresetResult res;
    res.name = cfg.preset;
    res.hash = cfg.hash();
    fs::create_directories(cfg.out_dir);
    const Output out{cfg.out_dir, res.hash, &res};
    {
        nlohmann::json j = cfg.to_json();
        j["config_hash"] = res.hash;
        j["version"] = kCodeVersion;
        std::ofstream(out.path("experiment.json")) << j.dump(2) << "\n";
    }
    const auto& p = cfg.params;
    try {
        if (cfg.preset == "heat_checks") heat_checks(p, out);
        else if (cfg.preset == "inequality_validate") inequality_validate(p, out);
        else if (cfg.preset == "dissipation") dissipation(p, out);
        else if (cfg.preset == "action_roundtrip") action_roundtrip(p, out);
        else if (cfg.preset == "chaos_convergence") chaos_convergence(p, out);
        else if (cfg.preset == "tilted_sampling") tilted_preset(p, out);
        else throw ConfigError("unknown preset '" + cfg.preset + "'");
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("preset " + cfg.preset + ": bad parameter: " + e.what());
    }
    std::ofstream os(out.path("result.json"));
    os << nlohmann::json{{"preset", res.name}, {"config_hash", res.hash}, {"version", kCodeVersion},
                         {"pass", res.pass()}, {"failures", res.failures}}
              .dump(2)
       << "\n";
    return res;
}

// ---------------------------------------------------------------------------

nlohmann::json TiltedEstimate::to_json() const {
    return {{"estimate", estimate},
            {"ci_half", ci_half},
            {"ess", ess},
            {"unreliable", unreliable},
            {"tilted_hits", tilted_hits},
            {"direct_run", direct_run},
            {"direct", direct},
            {"direct_ci_half", direct_ci_half},
            {"direct_valid", direct_valid},
            {"consistent", consistent},
            {"entropy_proxy", entropy_proxy},
            {"entropy_proxy_se", entropy_proxy_se},
            {"entropy_proxy_event", entropy_proxy_event},
            {"target_action", target_action}};
}

TiltedEstimate tilted_sampling(const TiltedSpec& spec) {
    if (spec.paths < 2 || spec.n < 1) throw ConfigError("tilted_sampling needs at least two paths");
    const GridField gamma = density_from_json(spec.initial, PeriodicGrid(spec.initial.value("M", spec.pde_M)));

    // Target: the controlled mean-field path on the particle snapshot times.
    PdeConfig pc;
    pc.M = spec.pde_M;
    pc.dt = spec.dt;
    pc.T = spec.T;
    pc.nu = spec.nu;
    pc.snapshot_stride = spec.snapshot_stride;
    pc.initial = spec.initial;
    const GridField g0 = gamma.M() == pc.M ? gamma : density_from_json(spec.initial, PeriodicGrid(pc.M));
    const TrajectoryRecord target = solve(g0, spec.control, spec.T, pc);
    const auto ks = tube_modes(spec.event.kmax);
    std::vector<std::vector<cplx>> target_c;
    for (const auto& d : target.densities) target_c.push_back(density_coefficients(d, ks));

    TiltedEstimate est;
    est.target_action = action_report(target).control_energy;

    SimConfig base;
    base.n = spec.n;
    base.nu = spec.nu;
    base.T = spec.T;
    base.dt = spec.dt;
    base.snapshot_stride = spec.snapshot_stride;
    base.drift = DriftMode::mollified();
    base.initial = "density";
    base.initial_density = gamma;
    base.initial_density_spec = spec.initial;
    base.monitor_level = -1;
    base.test_function.clear();

    auto in_tube = [&](const TrajectoryRecord& rec) {
        if (spec.event.always) return true;
        if (rec.size() != target.size()) throw Error("particle and target snapshot times differ");
        for (std::size_t s = 0; s < rec.size(); ++s) {
            if (std::abs(rec.times[s] - target.times[s]) > 1e-9) throw Error("particle and target snapshot times differ");
            const auto c = empirical_coefficients(rec.particles[s], ks);
            for (std::size_t q = 0; q < ks.size(); ++q)
                if (std::abs(c[q] - target_c[s][q]) > spec.event.eps) return false;
        }
        return true;
    };

    // Tilted law: controlled dynamics, weight 1/Z^v on the event.
    std::vector<double> w(spec.paths), proxy(spec.paths);
    std::vector<char> hit(spec.paths);
    for (int p = 0; p < spec.paths; ++p) {
        SimConfig c = base;
        c.seed = spec.seed + static_cast<uint64_t>(p);
        c.control = spec.control;
        c.girsanov = GirsanovMode::drive;
        const TrajectoryRecord rec = simulate(c);
        hit[p] = in_tube(rec);
        const double logZ = rec.observables.rows.back()[rec.observables.column_index("logZ")];
        w[p] = hit[p] ? std::exp(-logZ) : 0.0;
        double integral = 0.0, prev = 0.0;
        for (std::size_t s = 0; s < rec.size(); ++s) {
            double q = 0.0;
            for (const auto& x : rec.particles[s]) {
                const Vec2 v = spec.control.v(rec.times[s], x);
                q += v[0] * v[0] + v[1] * v[1];
            }
            q /= spec.n;
            if (s > 0) integral += 0.5 * (rec.times[s] - rec.times[s - 1]) * (prev + q);
            prev = q;
        }
        proxy[p] = integral / (4.0 * spec.nu);
    }
    double sw = 0.0, sw2 = 0.0, sp = 0.0, sp2 = 0.0, sp_hit = 0.0;
    for (int p = 0; p < spec.paths; ++p) {
        sw += w[p];
        sw2 += w[p] * w[p];
        sp += proxy[p];
        sp2 += proxy[p] * proxy[p];
        est.tilted_hits += hit[p];
        if (hit[p]) sp_hit += proxy[p];
    }
    const double N = spec.paths;
    est.estimate = sw / N;
    est.ci_half = 1.96 * std::sqrt(std::max(0.0, sw2 / N - est.estimate * est.estimate) / (N - 1));
    est.ess = sw2 > 0.0 ? sw * sw / sw2 : 0.0;
    est.unreliable = est.ess < 10.0;
    est.entropy_proxy = sp / N;
    est.entropy_proxy_event = est.tilted_hits ? sp_hit / est.tilted_hits : 0.0;
    est.entropy_proxy_se = std::sqrt(std::max(0.0, sp2 / N - est.entropy_proxy * est.entropy_proxy) / (N - 1));

    if (spec.direct_mc && spec.direct_paths > 1) {
        int hits = 0;
        for (int p = 0; p < spec.direct_paths; ++p) {
            SimConfig c = base;
            c.seed = spec.seed + 0x9E3779B9ull + static_cast<uint64_t>(p);
            hits += in_tube(simulate(c));
        }
        const double D = spec.direct_paths;
        est.direct_run = true;
        est.direct = hits / D;
        est.direct_ci_half = 1.96 * std::sqrt(est.direct * (1.0 - est.direct) / D);
        est.direct_valid = est.direct >= 1e-2;
        if (est.direct_valid)
            est.consistent = std::abs(est.estimate - est.direct) <= est.ci_half + est.direct_ci_half;
    }
    return est;
}

}  // namespace vortexldp
