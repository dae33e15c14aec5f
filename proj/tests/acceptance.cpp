// Acceptance run: one PASS/FAIL line per criterion, with the measured numbers.
//   acceptance [--only N] [--work DIR]
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vortexldp/action.hpp"
#include "vortexldp/experiments.hpp"
#include "vortexldp/frozen_constants.hpp"
#include "vortexldp/kernels.hpp"
#include "vortexldp/meanfield.hpp"
#include "vortexldp/mollify.hpp"
#include "vortexldp/observables.hpp"
#include "vortexldp/rng.hpp"
#include "vortexldp/spectral.hpp"
#include "vortexldp/vortex.hpp"

using namespace vortexldp;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

fs::path g_work;

// 1. Green function: 4π²|k|²𝒩̂(k) = 1, ∫𝒩 = 0, split vs spectral-sum evaluation.
Outcome kernel_identities() {
    const KernelTable& kt = *KernelTable::shared();
    // 𝒩 = σ₁ − ψ log r/(2π) with σ₁ smooth and periodic: trapezoid for σ₁,
    // a radial Bessel integral for the compactly supported log part.
    const int M = 512;
    const PeriodicGrid g(M);
    GridField s1(g);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) s1(i, j) = kt.sigma1(displacement(g.node(i), g.node(j)));
    boost::math::quadrature::tanh_sinh<double> ts;
    const BumpPsi psi;
    auto coefficient = [&](int k1, int k2) {
        double s = 0.0;
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < M; ++j) s += s1(i, j) * std::cos(2.0 * kPi * (k1 * g.node(i) + k2 * g.node(j)));
        s /= double(M) * M;
        const double kk = std::hypot(k1, k2);
        const double radial = ts.integrate(
            [&](double r) { return psi(r) * r * std::log(r) * boost::math::cyl_bessel_j(0, 2.0 * kPi * kk * r); }, 0.0,
            psi.outer);
        return s - radial;
    };
    double coef_err = 0.0;
    for (auto [k1, k2] : std::vector<std::pair<int, int>>{{1, 0}, {1, 1}, {2, 1}, {0, 3}, {4, -2}, {7, 5}})
        coef_err = std::max(coef_err, std::abs(4.0 * kPi * kPi * (k1 * k1 + k2 * k2) * coefficient(k1, k2) - 1.0));
    const double mean = std::abs(coefficient(0, 0));

    const double h = 1.0 / 256.0;
    const CounterRng rng(11);
    double split = 0.0;
    for (int q = 0; q < 400; ++q) {
        const auto u = rng.uniform2(q, 0, 1);
        const Displacement d = displacement(u[0] - 0.5, u[1] - 0.5);
        if (d.r <= 2.0 * h) continue;
        split = std::max(split, std::abs(kt.green(d, GreenMode::split) - kt.green(d, GreenMode::spectral_sum)));
    }
    return {coef_err < 1e-6 && mean < 1e-6 && split < 1e-8,
            fmt("max|4pi^2|k|^2 N^(k) - 1| = %.2e, |int N| = %.2e, split vs spectral sum %.2e", coef_err, mean,
                split)};
}

// 2. Heat kernel mass, semigroup, two-series agreement.
Outcome heat_kernel_checks() {
    const PresetResult r = run_preset(make_experiment("heat_checks", {}, (g_work / "heat").string()));
    return {r.pass(), fmt("mass %.2e, semigroup %.2e, series %.2e", r.summary["mass_error"].get<double>(),
                          r.summary["semigroup_max_diff"].get<double>(), r.summary["series_max_diff"].get<double>())};
}

// 3. Symmetrized vs direct pairing, and the bounded-kernel estimate.
Outcome delort_identity() {
    const KernelTable& kt = *KernelTable::shared();
    double worst_rel = 0.0, worst_ratio = 0.0;
    const int sizes[] = {2, 16, 64, 128, 256, 512};
    for (int c = 0; c < 100; ++c) {
        const int n = sizes[c % 6];
        const auto X = uniform_positions(n, 9000 + c);
        const std::vector<FourierMode> modes{{0.7, 1 + c % 3, c % 2, 0.1 * c}, {0.3, -1, 2, 0.5}};
        const SmoothFunction f = SmoothFunction::modes(modes);
        auto phi = [&](const TorusPoint& x) { return f.grad(x); };
        const double sym = symmetrized_pairing(X, phi, kt);
        const double dir = direct_pairing(X, phi, kt);
        worst_rel = std::max(worst_rel, std::abs(sym - dir) / std::max(1.0, std::abs(dir)));
        double hess = 0.0;
        for (const auto& m : modes) hess += 4.0 * kPi * kPi * std::abs(m.amp) * (m.k1 * m.k1 + m.k2 * m.k2);
        worst_ratio = std::max(worst_ratio, std::abs(sym) / (0.5 * frozen::C_K * hess));
    }
    return {worst_rel <= 1e-12 && worst_ratio <= 1.0,
            fmt("max |sym - direct| = %.2e, max |<phi,R>| / (C_K/2 |grad phi|) = %.3f", worst_rel, worst_ratio)};
}

// 4. Mollified energy bound on random configurations.
Outcome energy_bound() {
    int violations = 0, total = 0;
    double worst = -1e300;
    for (int n : {16, 64, 256}) {
        for (int c = 0; c < 1000; ++c) {
            std::vector<TorusPoint> X = uniform_positions(n, 100000ull * n + c);
            // A third of the samples are clustered, which stresses the diagonal term.
            if (c % 3 == 0)
                for (auto& x : X) x = TorusPoint(0.1 * x.x1, 0.1 * x.x2);
            const EnergyReport r = energy_report(X, n);
            ++total;
            violations += !r.holds(1e-6);
            worst = std::max(worst, r.e_moll - r.bound_rhs);
        }
    }
    return {violations == 0, fmt("%.0f violations in %.0f configurations, max(e_moll - bound) = %.3e", violations,
                                 total, worst)};
}

// 5. Single shear mode against the closed form.
Outcome shear_mode() {
    PdeConfig cfg;
    cfg.M = 64;
    cfg.dt = 1e-3;
    cfg.T = 0.5;
    cfg.nu = 0.1;
    cfg.snapshot_stride = 50;
    const double a = 0.2;
    const GridField gamma = cosine_density(PeriodicGrid(64), {{a, 1, 0, 0.0}});
    const TrajectoryRecord rec = solve(gamma, cfg);
    double err = 0.0;
    for (std::size_t s = 0; s < rec.size(); ++s) {
        const double decay = a * std::exp(-4.0 * kPi * kPi * cfg.nu * rec.times[s]);
        const GridField& r = rec.densities[s];
        for (int i = 0; i < 64; ++i)
            for (int j = 0; j < 64; ++j)
                err = std::max(err, std::abs(r(i, j) - 1.0 - decay * std::cos(2.0 * kPi * r.grid().node(i))));
    }
    return {err < 1e-6, fmt("max error %.2e over %.0f snapshots", err, double(rec.size()))};
}

// 6. Energy dissipation identity.
Outcome dissipation() {
    const PresetResult r = run_preset(make_experiment("dissipation", {}, (g_work / "dissipation").string()));
    return {r.pass(), fmt("relative residual %.2e (M=128, T=1)", r.summary["final_relative_residual"].get<double>())};
}

// 7. Weighted negative norm: uniform-weight closed form and the Fisher identity.
Outcome weighted_norm() {
    const PeriodicGrid g(64);
    GridField m = SmoothFunction::modes({{0.4, 1, 0, 0.2}, {0.3, 2, -1, 1.0}, {0.1, 3, 3, 0.0}}).sample(g);
    const Spectrum S = to_spectral(m);
    const double closed = S.weighted_norm_sq([](int k1, int k2) {
        const double q = double(k1) * k1 + double(k2) * k2;
        return q == 0.0 ? 0.0 : 1.0 / (4.0 * kPi * kPi * q);
    });
    const double cg = weighted_h1neg_norm(m, GridField(g, 1, 1.0));
    const double e1 = std::abs(cg - closed) / closed;

    const double a = 0.3;
    const GridField mu = cosine_density(g, {{a, 1, 0, 0.0}});
    // I(1 + a cos 2πx₁) = 4π²(1 − √(1 − a²)).
    const double fisher = 4.0 * kPi * kPi * (1.0 - std::sqrt(1.0 - a * a));
    const double lap = weighted_h1neg_norm(spectral::laplacian(mu), mu);
    const double e2 = std::abs(lap - fisher) / fisher;
    return {e1 < 1e-8 && e2 < 1e-4, fmt("uniform weight rel. error %.2e, |lap mu|^2 vs I(mu) rel. error %.2e", e1, e2)};
}

// 8. Action round trip.
Outcome action_roundtrip() {
    const PresetResult r = run_preset(make_experiment("action_roundtrip", {}, (g_work / "action").string()));
    return {r.pass(), fmt("action vs control energy %.2e, control recovery %.2e, uncontrolled action %.2e",
                          r.summary["relative_action_error"].get<double>(), r.summary["control_rel_error"].get<double>(),
                          r.summary["uncontrolled_action"].get<double>())};
}

// 9. Propagation-of-chaos trend.
Outcome chaos_trend() {
    const PresetResult r = run_preset(make_experiment("chaos_convergence", {}, (g_work / "chaos").string()));
    const auto m = r.summary["mean_w2_sq"].get<std::vector<double>>();
    return {r.pass(), fmt("mean W2^2 at n=64,256,1024: %.3e, %.3e, %.3e", m[0], m[1], m[2])};
}

// 10. Compensated linear functional and Girsanov weight over 1000 paths.
Outcome martingales() {
    const int paths = 1000;
    double s_lin = 0, s_lin2 = 0, s_z = 0, s_z2 = 0;
    for (int p = 0; p < paths; ++p) {
        SimConfig c;
        c.n = 64;
        c.nu = 0.1;
        c.T = 0.1;
        c.dt = 1e-3;
        c.snapshot_stride = 100;
        c.seed = 777000 + p;
        c.monitor_level = -1;
        c.store_snapshots = false;
        c.control = ControlField::from_modes({ControlMode{0.5, 1, 1, 0.3}});
        c.girsanov = GirsanovMode::reweight;
        const TrajectoryRecord rec = simulate(c);
        const double lin = rec.monitors.rows.back()[rec.monitors.column_index("linear")];
        const double z = std::exp(rec.observables.rows.back()[rec.observables.column_index("logZ")]);
        s_lin += lin;
        s_lin2 += lin * lin;
        s_z += z;
        s_z2 += z * z;
    }
    const double ml = s_lin / paths, se_l = std::sqrt((s_lin2 / paths - ml * ml) / (paths - 1));
    const double mz = s_z / paths, se_z = std::sqrt((s_z2 / paths - mz * mz) / (paths - 1));
    return {std::abs(ml) <= 3 * se_l && std::abs(mz - 1.0) <= 3 * se_z,
            fmt("linear functional mean %.2e (SE %.2e), E[Z] = %.4f (SE %.4f)", ml, se_l, mz, se_z)};
}

// 11. Inequality suite on the pinned corpus.
Outcome inequalities() {
    const PresetResult r =
        run_preset(make_experiment("inequality_validate", {}, (g_work / "inequalities").string()));
    return {r.pass(), fmt("%.0f checks, %.0f failures", r.summary["checks"].get<double>(),
                          r.summary["failures"].get<double>())};
}

// 12. The mollified-pairing ratio decreases with the mollifier scale on a fixed-energy corpus.
Outcome pairing_trend() {
    const PeriodicGrid g(256);
    const CounterRng rng(5);
    const int levels[] = {8, 32, 128};
    int monotone = 0;
    const int samples = 10;
    std::string last;
    for (int c = 0; c < samples; ++c) {
        // Three elongated Gaussian blobs, mixed with the uniform density to energy 0.02.
        GridField f(g);
        for (int q = 0; q < 3; ++q) {
            const auto u = rng.uniform2(c, q, 7), a = rng.uniform2(c, q, 8);
            const double th = kPi * a[0], cs = std::cos(th), sn = std::sin(th);
            for (int i = 0; i < g.M(); ++i)
                for (int j = 0; j < g.M(); ++j) {
                    double dx = g.node(i) - (u[0] - 0.5), dy = g.node(j) - (u[1] - 0.5);
                    dx -= std::round(dx);
                    dy -= std::round(dy);
                    const double p = cs * dx + sn * dy, r = -sn * dx + cs * dy;
                    f(i, j) += std::exp(-p * p / (2 * 0.02 * 0.02) - r * r / (2 * 0.05 * 0.05));
                }
        }
        const double mean = f.mean();
        for (double& v : f.values()) v /= mean;
        const double lam = std::sqrt(0.02 / energy_quadratic(f));
        for (double& v : f.values()) v = 1.0 - lam + lam * v;
        double prev = 1e300;
        bool ok = true;
        std::vector<double> r;
        for (int n : levels) {
            r.push_back(pairing_ratio(f, MollifierFamily::standard().m(n)));
            ok = ok && r.back() < prev;
            prev = r.back();
        }
        monotone += ok;
        last = fmt("last sample: %.2e, %.2e, %.2e", r[0], r[1], r[2]);
    }
    return {monotone == samples, fmt("%.0f of %.0f samples decrease across n = 8, 32, 128; ", monotone, samples) + last};
}

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    int only = 0;
    std::string work = (fs::temp_directory_path() / "vortexldp_acceptance").string();
    app.add_option("--only", only, "run a single criterion (1-12)");
    app.add_option("--work", work, "scratch directory for preset outputs");
    CLI11_PARSE(app, argc, argv);
    g_work = work;

    const std::vector<Criterion> all{
        {1, "kernel identities", 30, kernel_identities},
        {2, "heat kernel", 10, heat_kernel_checks},
        {3, "symmetrized pairing", 60, delort_identity},
        {4, "mollified energy bound", 300, energy_bound},
        {5, "single shear mode", 60, shear_mode},
        {6, "energy dissipation", 300, dissipation},
        {7, "weighted negative norm", 60, weighted_norm},
        {8, "action round trip", 600, action_roundtrip},
        {9, "propagation of chaos trend", 1800, chaos_trend},
        {10, "martingale checks", 900, martingales},
        {11, "inequality suite", 600, inequalities},
        {12, "mollified pairing trend", 600, pairing_trend},
    };
    int failed = 0, ran = 0;
    for (const auto& c : all) {
        if (only && c.id != only) continue;
        ++ran;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool ok = o.pass && secs <= c.budget_s;
        failed += !ok;
        std::printf("[%s] %2d %s: %s (%.1f s, budget %.0f s)\n", ok ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                    secs, c.budget_s);
        std::fflush(stdout);
    }
    if (!ran) {
        std::fprintf(stderr, "no criterion %d\n", only);
        return 2;
    }
    return failed ? 1 : 0;
}
