// Particle system, observables and the martingale monitors.
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "vortexldp/frozen_constants.hpp"
#include "vortexldp/meanfield.hpp"
#include "vortexldp/observables.hpp"
#include "vortexldp/vortex.hpp"

using namespace vortexldp;
using std::numbers::pi;

namespace {

const KernelTable& kt() { return *KernelTable::shared(); }

double dist(const std::vector<TorusPoint>& X) { return min_image(X[0], X[1]).r; }

double ks_uniform(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    double d = 0.0;
    const double n = static_cast<double>(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double F = v[i] + 0.5;
        d = std::max({d, std::abs((i + 1) / n - F), std::abs(i / n - F)});
    }
    return d;
}

}  // namespace

TEST_CASE("two-particle drift is antisymmetric") {
    const std::vector<TorusPoint> X{{0.1, 0.2}, {-0.15, 0.05}};
    const auto b = drift_direct(X, kt(), 1e-9);
    const Vec2 k = kt().K(min_image(X[0], X[1]));
    CHECK(b[0][0] == doctest::Approx(k[0] / 2).epsilon(1e-14));
    CHECK(b[0][1] == doctest::Approx(k[1] / 2).epsilon(1e-14));
    CHECK(b[1][0] == doctest::Approx(-b[0][0]).epsilon(1e-12));
    CHECK(b[1][1] == doctest::Approx(-b[0][1]).epsilon(1e-12));
}

TEST_CASE("direct drift sums to zero and a symmetric square rotates rigidly") {
    const auto X = uniform_positions(200, 4);
    const auto b = drift_direct(X, kt(), 1e-9);
    double s1 = 0.0, s2 = 0.0;
    for (const auto& v : b) {
        s1 += v[0];
        s2 += v[1];
    }
    CHECK(std::abs(s1) < 1e-12);
    CHECK(std::abs(s2) < 1e-12);

    const double a = 0.15;
    const std::vector<TorusPoint> sq{{a, a}, {-a, a}, {-a, -a}, {a, -a}};
    const auto bs = drift_direct(sq, kt(), 1e-9);
    const double speed = std::hypot(bs[0][0], bs[0][1]);
    for (int i = 0; i < 4; ++i) {
        CHECK(std::hypot(bs[i][0], bs[i][1]) == doctest::Approx(speed).epsilon(1e-10));
        CHECK(std::abs(bs[i][0] * sq[i].x1 + bs[i][1] * sq[i].x2) < 1e-10 * speed);
    }
}

TEST_CASE("mollified drift equals the direct drift for well separated particles") {
    const std::vector<TorusPoint> X{{0.0, 0.0}, {0.3, 0.1}, {-0.2, 0.35}, {0.1, -0.3}};
    const int m = 20;
    const auto d = drift_direct(X, kt(), 1e-9);
    const auto mo = drift_mollified(X, kt(), *MollifierProfile::shared(), m);
    for (int i = 0; i < 4; ++i) {
        CHECK(std::abs(d[i][0] - mo[i][0]) < 1e-9);
        CHECK(std::abs(d[i][1] - mo[i][1]) < 1e-9);
    }
}

TEST_CASE("symmetrized pairing equals the direct route and obeys its bound") {
    const auto phi = SmoothFunction::modes({{0.7, 1, 2, 0.3}, {0.4, -2, 1, 1.1}});
    auto g = [&](const TorusPoint& x) { return phi.grad(x); };
    for (uint64_t s = 0; s < 5; ++s) {
        const auto X = uniform_positions(64, 100 + s);
        const double a = symmetrized_pairing(X, g), b = direct_pairing(X, g);
        CHECK(std::abs(a - b) < 1e-12 * std::max(1.0, std::abs(b)));
        CHECK(std::abs(a) <= 0.5 * frozen::C_K * phi.grad_sup() * 2.0);
    }
    const auto X = uniform_positions(32, 7);
    CHECK(symmetrized_pairing(X, [](const TorusPoint&) { return Vec2{0.0, 0.0}; }) == 0.0);
}

TEST_CASE("same seed reproduces the record bit for bit") {
    SimConfig c;
    c.n = 32;
    c.T = 0.05;
    c.seed = 9;
    const auto r1 = simulate(c), r2 = simulate(c);
    REQUIRE(r1.particles.size() == r2.particles.size());
    for (std::size_t s = 0; s < r1.particles.size(); ++s)
        for (int i = 0; i < c.n; ++i) {
            CHECK(r1.particles[s][i].x1 == r2.particles[s][i].x1);
            CHECK(r1.particles[s][i].x2 == r2.particles[s][i].x2);
        }
    CHECK(r1.hash == r2.hash);
    c.seed = 10;
    CHECK(simulate(c).particles.back()[0].x1 != r1.particles.back()[0].x1);
}

// On the torus the separation x = X₁ − X₂ follows dx/dt = 𝒦(x), a Hamiltonian
// flow of 𝒩: the level of 𝒩 is conserved exactly and |x| only approximately.
TEST_CASE("inviscid two-vortex motion conserves the pair potential") {
    const DriftEvaluator ev(DriftMode::direct(), 2);
    ParticleState s;
    s.x = {{0.05, 0.0}, {-0.05, 0.0}};
    const double d0 = dist(s.x);
    const double n0 = KernelTable::shared()->green(min_image(s.x[0], s.x[1]));
    const double dt = 1e-4;
    for (int k = 0; k < 10000; ++k) s = step_rk4(s, dt, ev);
    CHECK(std::abs(KernelTable::shared()->green(min_image(s.x[0], s.x[1])) - n0) < 1e-6);
    CHECK(std::abs(dist(s.x) - d0) < 1e-3 * d0);
    // The pair co-rotates: the midpoint stays fixed.
    CHECK(std::abs(min_image(s.x[0], TorusPoint(-s.x[1].x1, -s.x[1].x2)).r) < 1e-9);
}

TEST_CASE("inviscid point vortex energy is conserved") {
    SimConfig c;
    c.n = 6;
    c.nu = 0.0;
    c.T = 1.0;
    c.dt = 1e-4;
    c.snapshot_stride = 1000;
    c.integrator = Integrator::rk4;
    c.drift = DriftMode::direct();
    c.initial = "positions";
    c.initial_positions = {{0.1, 0.0}, {-0.1, 0.05}, {0.3, 0.3}, {-0.3, -0.25}, {0.0, 0.4}, {0.2, -0.3}};
    const auto rec = simulate(c);
    const double e0 = energy_e0(rec.particles.front()), e1 = energy_e0(rec.particles.back());
    CHECK(std::abs(e1 - e0) < 1e-4 * std::abs(e0));
}

TEST_CASE("without drift the increments are gaussian with variance 2 nu dt") {
    const int n = 20000;
    const double nu = 0.1, dt = 1e-3;
    ParticleState s;
    s.x.assign(n, TorusPoint(0.0, 0.0));
    const CounterRng rng(3);
    std::vector<double> noise(2 * n);
    for (int i = 0; i < n; ++i) {
        const auto z = rng.normal2(0, static_cast<uint32_t>(i));
        noise[2 * i] = z[0];
        noise[2 * i + 1] = z[1];
    }
    const DriftEvaluator none({DriftKind::none, 0, 1e-6}, n);
    const auto t = step_em(s, dt, noise, nu, none);
    double m = 0.0, v = 0.0;
    for (const auto& x : t.x) {
        m += x.x1 + x.x2;
        v += x.x1 * x.x1 + x.x2 * x.x2;
    }
    m /= 2 * n;
    v /= 2 * n;
    CHECK(std::abs(m) < 4 * std::sqrt(2 * nu * dt / (2 * n)));
    CHECK(std::abs(v / (2 * nu * dt) - 1.0) < 4 * std::sqrt(2.0 / (2 * n)));
}

TEST_CASE("girsanov weight of a driven path has unit reciprocal mean") {
    SimConfig c;
    c.n = 4;
    c.T = 0.05;
    c.dt = 1e-3;
    c.control = ControlField::from_modes({ControlMode{0.3, 0, 1, 0.0}});
    c.store_snapshots = false;
    c.monitor_level = -1;
    c.test_function.clear();
    const int paths = 2000;
    double s = 0.0, s2 = 0.0;
    for (int p = 0; p < paths; ++p) {
        c.seed = 1000 + p;
        const double w = std::exp(-simulate_final(c).log_weight);
        s += w;
        s2 += w * w;
    }
    const double mean = s / paths, se = std::sqrt((s2 / paths - mean * mean) / paths);
    CHECK(std::abs(mean - 1.0) < 4 * se + 1e-12);
}

TEST_CASE("mollified runs finish without collisions") {
    SimConfig c;
    c.n = 256;
    c.T = 0.5;
    c.snapshot_stride = 100;
    c.test_function.clear();
    const auto rec = simulate(c);
    CHECK(rec.times.back() == doctest::Approx(0.5));
    CHECK(std::none_of(rec.events.begin(), rec.events.end(),
                       [](const std::string& e) { return e.find("near collision") != std::string::npos; }));
}

TEST_CASE("linear martingale monitor vanishes for deterministic flow") {
    SimConfig c;
    c.n = 2;
    c.nu = 0.0;
    c.T = 0.2;
    c.dt = 1e-4;
    c.snapshot_stride = 10;
    c.integrator = Integrator::rk4;
    c.drift = DriftMode::direct();
    c.initial = "positions";
    c.initial_positions = {{0.1, 0.0}, {-0.1, 0.0}};
    const auto rec = simulate(c);
    const auto mon = martingale_monitor(rec, SmoothFunction::modes({{1.0, 1, 0, 0.0}, {0.5, 1, 1, 0.3}}));
    double worst = 0.0;
    for (double v : mon.value) worst = std::max(worst, std::abs(v));
    CHECK(worst < 1e-4);
}

TEST_CASE("martingale monitor has zero ensemble mean") {
    SimConfig c;
    c.n = 16;
    c.T = 0.05;
    c.snapshot_stride = 5;
    const auto phi = SmoothFunction::modes({{1.0, 1, 0, 0.0}});
    const int seeds = 300;
    double s = 0.0, s2 = 0.0;
    for (int k = 0; k < seeds; ++k) {
        c.seed = 500 + k;
        const double v = martingale_monitor(simulate(c), phi).value.back();
        s += v;
        s2 += v * v;
    }
    const double mean = s / seeds, se = std::sqrt((s2 / seeds - mean * mean) / seeds);
    CHECK(std::abs(mean) < 3.5 * se);
}

TEST_CASE("omega_n shrinks along the schedule") {
    const MollifierFamily& fam = MollifierFamily::standard();
    double prev = 1e300;
    for (int n : {64, 256, 1024, 4096}) {
        const double w = omega_n(0.1, n, fam.m(n));
        CHECK(w > 0.0);
        CHECK(w < prev);
        prev = w;
    }
}

TEST_CASE("off-diagonal empirical energy") {
    CHECK(energy_e0({TorusPoint(0.1, 0.1)}) == 0.0);
    const std::vector<TorusPoint> X{{0.0, 0.0}, {0.2, 0.0}};
    CHECK(energy_e0(X) == doctest::Approx(kt().green(displacement(0.2, 0.0)) / 4).epsilon(1e-14));
    double prev = 1e300;
    for (int M : {4, 8, 16}) {
        std::vector<TorusPoint> L;
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < M; ++j) L.emplace_back(-0.5 + (i + 0.5) / M, -0.5 + (j + 0.5) / M);
        const double e = std::abs(energy_e0(L));
        CHECK(e < prev);
        prev = e;
    }
}

TEST_CASE("density energy, entropy and fisher information") {
    const PeriodicGrid g(64);
    CHECK(energy_e(GridField(g, 1, 1.0)) == 0.0);
    const double a = 0.1;
    const GridField f = cosine_density(g, {{a, 1, 0, 0.0}});
    CHECK(energy_e(f) == doctest::Approx(a * a / (16 * pi * pi)).epsilon(1e-12));
    CHECK(energy_gradient_route(f) == doctest::Approx(energy_e(f)).epsilon(1e-10));

    // 1-D midpoint quadrature oracle (spectrally accurate for periodic integrands).
    const int N = 4096;
    double S = 0.0;
    for (int i = 0; i < N; ++i) {
        const double r = 1 + a * std::cos(2 * pi * (i + 0.5) / N);
        S += r * std::log(r) / N;
    }
    CHECK(entropy_S(f) == doctest::Approx(S).epsilon(1e-10));
    CHECK(S == doctest::Approx(a * a / 4).epsilon(0.01));
    CHECK(fisher_I(f) == doctest::Approx(4 * pi * pi * (1 - std::sqrt(1 - a * a))).epsilon(1e-8));
    CHECK(entropy_S(GridField(g, 1, 1.0)) == 0.0);
    CHECK(fisher_I(GridField(g, 1, 1.0)) == 0.0);
}

TEST_CASE("mollified energy by pair sums and by the deposited field") {
    for (uint64_t s : {1, 2, 3}) {
        const auto X = uniform_positions(40, s);
        const int m = 12;
        const GridField z = mollify_empirical_m(X, m, PeriodicGrid(required_grid_size(m)), *MollifierProfile::shared(),
                                                DepositMode::spectral);
        CHECK(std::abs(mollified_energy_m(X, m) - energy_quadratic(z)) < 1e-6);
        const EnergyReport r = energy_report(X, 40);
        CHECK(r.holds());
    }
}

TEST_CASE("pair concentration counts") {
    std::vector<TorusPoint> cluster;
    for (int i = 0; i < 10; ++i) cluster.emplace_back(0.001 * i, 0.0);
    CHECK(pair_concentration(cluster, 0.05).mass == doctest::Approx(1.0));
    std::vector<TorusPoint> lattice;
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) lattice.emplace_back(i / 8.0, j / 8.0);
    CHECK(pair_concentration(lattice, 0.1).mass == doctest::Approx(1.0 / 64));
    const auto pc = pair_concentration(uniform_positions(128, 5), 0.05);
    CHECK(pc.mass <= pc.bound_single);
}

TEST_CASE("initial samples from a uniform density are uniform") {
    const int n = 4000;
    const auto s = sample_initial(GridField(PeriodicGrid(32), 1, 1.0), n, 17);
    std::vector<double> a, b;
    for (const auto& x : s.x) {
        a.push_back(x.x1);
        b.push_back(x.x2);
    }
    CHECK(ks_uniform(a) < 1.63 / std::sqrt(n));
    CHECK(ks_uniform(b) < 1.63 / std::sqrt(n));
}
