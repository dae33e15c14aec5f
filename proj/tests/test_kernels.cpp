// Green's function, Biot–Savart kernel, heat kernel, mollifiers.
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "vortexldp/frozen_constants.hpp"
#include "vortexldp/kernels.hpp"
#include "vortexldp/meanfield.hpp"
#include "vortexldp/mollify.hpp"
#include "vortexldp/pairwise.hpp"
#include "vortexldp/spectral.hpp"

using namespace vortexldp;
using namespace vortexldp::spectral;
using std::numbers::pi;

namespace {

const KernelTable& kt() { return *KernelTable::shared(); }
const MollifierProfile& prof() { return *MollifierProfile::shared(); }

std::vector<TorusPoint> random_points(int n, uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    std::vector<TorusPoint> X;
    for (int i = 0; i < n; ++i) X.emplace_back(u(gen), u(gen));
    return X;
}

double max_abs_diff(const GridField& a, const GridField& b) {
    double e = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) e = std::max(e, std::abs(a.values()[i] - b.values()[i]));
    return e;
}

}  // namespace

TEST_CASE("green function is even and matches the lattice sum") {
    const EwaldGreen ew(512);
    for (double d : {0.01, 0.1, 0.3, 0.45}) {
        CHECK(kt().green(displacement(d, 0.0)) == doctest::Approx(kt().green(displacement(-d, 0.0))).epsilon(1e-12));
        CHECK(kt().green(displacement(d, 0.7 * d)) == doctest::Approx(kt().green(displacement(-d, -0.7 * d))).epsilon(1e-12));
        // Near the origin the remainder past the log term stays bounded.
        const double rem = kt().green(displacement(d, 0.0)) + std::log(d) / (2 * pi);
        CHECK(std::abs(rem - kt().N0(d, 0.0)) < 1e-10);
    }
    for (auto [d1, d2] : {std::pair{0.2, 0.1}, {0.35, -0.4}, {0.05, 0.45}}) {
        const Displacement x = displacement(d1, d2);
        CHECK(std::abs(kt().green(x, GreenMode::split) - kt().green(x, GreenMode::spectral_sum)) < 1e-8);
        CHECK(std::abs(kt().green(x) - ew.value(d1, d2)) < 1e-8);
    }
}

TEST_CASE("green function symbol inverts the negative laplacian") {
    const EwaldGreen ew(64);
    for (int k1 = -3; k1 <= 3; ++k1)
        for (int k2 = -3; k2 <= 3; ++k2) {
            if (k1 == 0 && k2 == 0) continue;
            const double k2n = k1 * k1 + k2 * k2;
            CHECK(ew.fourier_coefficient(k1, k2) * 4 * pi * pi * k2n ==
                  doctest::Approx(std::exp(-4 * pi * pi * k2n * ew.tau())).epsilon(1e-14));
        }
    CHECK(ew.fourier_coefficient(0, 0) == 0.0);
}

TEST_CASE("biot-savart kernel is odd, tangential and the perpendicular gradient") {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int t = 0; t < 1000; ++t) {
        const double a = u(gen), b = u(gen);
        if (std::hypot(a, b) < 1e-3) continue;
        const Vec2 k = kt().K(displacement(a, b)), km = kt().K(displacement(-a, -b));
        CHECK(std::abs(k[0] + km[0]) < 1e-10 * (1 + std::abs(k[0])));
        CHECK(std::abs(k[1] + km[1]) < 1e-10 * (1 + std::abs(k[1])));
    }
    // (−∂₂𝒩, ∂₁𝒩) by central differences.
    const double h = 1e-5;
    for (auto [a, b] : {std::pair{0.1, 0.05}, {-0.3, 0.2}, {0.02, -0.01}}) {
        const Vec2 k = kt().K(displacement(a, b));
        const double d1 = (kt().green(displacement(a + h, b)) - kt().green(displacement(a - h, b))) / (2 * h);
        const double d2 = (kt().green(displacement(a, b + h)) - kt().green(displacement(a, b - h))) / (2 * h);
        CHECK(std::abs(k[0] + d2) < 1e-5 * (1 + std::abs(k[0])));
        CHECK(std::abs(k[1] - d1) < 1e-5 * (1 + std::abs(k[1])));
    }
    // Leading singular term at x = (0.01, 0).
    const Vec2 k = kt().K(displacement(0.01, 0.0));
    CHECK(std::abs(k[0]) < 1.0);
    CHECK(std::abs(std::abs(k[1]) - 1.0 / (2 * pi * 0.01)) < 1.0);
    // The radial component vanishes faster than the tangential one as r ↓ 0.
    double prev = 1e300;
    for (double r : {1e-2, 1e-3, 1e-4}) {
        const double c = std::cos(0.7), s = std::sin(0.7);
        const Vec2 kr = kt().K(displacement(r * c, r * s));
        const double radial = std::abs(kr[0] * c + kr[1] * s) / std::hypot(kr[0], kr[1]);
        CHECK(radial <= prev);
        prev = radial;
    }
    CHECK(prev < 1e-5);
}

TEST_CASE("bounded kernel w = r K") {
    const auto X = random_points(2000, 23);
    double sup = 0.0;
    for (int i = 0; i + 1 < static_cast<int>(X.size()); i += 2) {
        const Vec2 w = bounded_w(kt(), X[i], X[i + 1]), wr = bounded_w(kt(), X[i + 1], X[i]);
        CHECK(std::abs(w[0] + wr[0]) < 1e-12);
        CHECK(std::abs(w[1] + wr[1]) < 1e-12);
        sup = std::max(sup, std::hypot(w[0], w[1]));
    }
    CHECK(sup <= frozen::C_K);
    const Vec2 w0 = bounded_w(kt(), {0.0, 1e-6}, {0.0, 0.0});
    CHECK(std::hypot(w0[0], w0[1]) == doctest::Approx(1.0 / (2 * pi)).epsilon(1e-4));
}

TEST_CASE("heat kernel series agree, integrate to one and form a semigroup") {
    for (double t : {0.01, 0.1}) {
        CHECK(heat_kernel_field(t, PeriodicGrid(64), HeatMode::fourier).mean() == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(heat_kernel_field(t, PeriodicGrid(64), HeatMode::images).mean() == doctest::Approx(1.0).epsilon(1e-10));
    }
    for (auto [a, b] : {std::pair{0.0, 0.0}, {0.2, -0.1}, {0.5, 0.5}}) {
        const Displacement x = displacement(a, b);
        const double f = heat_kernel(0.05, x, HeatMode::fourier), g = heat_kernel(0.05, x, HeatMode::images);
        CHECK(f > 0.0);
        CHECK(std::abs(f - g) < 1e-12);
    }
    // Φ_t ∗ Φ_s = Φ_{t+s}: heat_convolve applies the symbol of Φ_s to the samples of Φ_t.
    const PeriodicGrid g(64);
    const GridField lhs = heat_convolve(0.03, heat_kernel_field(0.02, g, HeatMode::images));
    CHECK(max_abs_diff(lhs, heat_kernel_field(0.05, g, HeatMode::images)) < 1e-10);
}

TEST_CASE("heat_convolve decays single modes and solves the heat equation") {
    const PeriodicGrid g(32);
    const double a = 0.4, t = 0.01;
    const GridField f = cosine_density(g, {{a, 1, 0, 0.0}});
    CHECK(max_abs_diff(heat_convolve(0.0, f), f) < 1e-14);
    CHECK(max_abs_diff(heat_convolve(t, f), cosine_density(g, {{a * std::exp(-4 * pi * pi * t), 1, 0, 0.0}})) < 1e-14);

    const GridField r = cosine_density(g, {{0.3, 1, 2, 0.4}, {0.2, 1, 0, 1.0}});
    const double dt = 1e-5;
    GridField fd = heat_convolve(t + dt, r);
    const GridField fm = heat_convolve(t - dt, r), lap = laplacian(heat_convolve(t, r));
    double res = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < fd.values().size(); ++i) {
        res = std::max(res, std::abs((fd.values()[i] - fm.values()[i]) / (2 * dt) - lap.values()[i]));
        scale = std::max(scale, std::abs(lap.values()[i]));
    }
    CHECK(res < 1e-6 * scale);
}

TEST_CASE("velocity of a density is divergence free with curl rho - 1") {
    const PeriodicGrid g(64);
    const GridField rho = cosine_density(g, {{0.3, 1, 2, 0.4}, {0.2, 3, -1, 1.0}, {0.1, 0, 5, 0.0}});
    const GridField u = biot_savart_velocity(rho);
    const GridField div = divergence(u), c = curl(u);
    double e_div = 0.0, e_curl = 0.0;
    for (std::size_t i = 0; i < rho.values().size(); ++i) {
        e_div = std::max(e_div, std::abs(div.values()[i]));
        e_curl = std::max(e_curl, std::abs(c.values()[i] - (rho.values()[i] - 1.0)));
    }
    CHECK(e_div < 1e-10);
    CHECK(e_curl < 1e-10);

    // Single shear mode: u = (0, −a sin(2πx₁)/(2π)).
    const double a = 0.25;
    const GridField us = biot_savart_velocity(cosine_density(g, {{a, 1, 0, 0.0}}));
    double e = 0.0;
    for (int i = 0; i < 64; ++i)
        for (int j = 0; j < 64; ++j)
            e = std::max({e, std::abs(us(i, j, 0)), std::abs(us(i, j, 1) + a * std::sin(2 * pi * g.node(i)) / (2 * pi))});
    CHECK(e < 1e-14);
}

TEST_CASE("mollifier profile: support, mass and self-convolution at zero") {
    const MollifierProfile& p = prof();
    CHECK(p.zeta(0.5) == 0.0);
    CHECK(p.zeta(0.6) == 0.0);
    CHECK(p.zeta(0.1) > 0.0);
    CHECK(p.G(0.0) == doctest::Approx(2.16726).epsilon(1e-5));
    CHECK(p.G(1.0) == doctest::Approx(0.0).epsilon(1e-12));

    for (int m : {5, 12, 35}) {
        const int M = required_grid_size(m);
        CHECK(1.0 / M <= 1.0 / (8.0 * m));
        const GridField z = mollify_empirical_m({TorusPoint(0.0, 0.0)}, m, PeriodicGrid(M), p);
        CHECK(z.mean() == doctest::Approx(1.0).epsilon(1e-8));
        // Support: nothing at nodes farther than 1/(2m).
        double outside = 0.0, inside_err = 0.0;
        const double h = 1.0 / M;
        double mass_raw = 0.0;
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < M; ++j) {
                const double r = std::hypot(z.grid().node(i), z.grid().node(j));
                if (r >= 0.5 / m) outside = std::max(outside, std::abs(z(i, j)));
                mass_raw += m * m * p.zeta(m * r) * h * h;
            }
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < M; ++j) {
                const double r = std::hypot(z.grid().node(i), z.grid().node(j));
                inside_err = std::max(inside_err, std::abs(z(i, j) - m * m * p.zeta(m * r) / mass_raw));
            }
        CHECK(outside == 0.0);
        CHECK(inside_err < 1e-9 * m * m);
        CHECK(mass_raw == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("G(0) equals the L2 norm of zeta by brute-force quadrature") {
    const MollifierProfile& p = prof();
    const int N = 2000;
    double s = 0.0;
    const double h = 1.0 / N;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            const double z = p.zeta(std::hypot(-0.5 + (i + 0.5) * h, -0.5 + (j + 0.5) * h));
            s += z * z * h * h;
        }
    CHECK(s == doctest::Approx(p.G(0.0)).epsilon(1e-4));
}

TEST_CASE("mollified green function") {
    const MollifierProfile& p = prof();
    for (int m : {5, 12, 35}) {
        // Outside 1/m the convolution equals 𝒩 + B/m² and the kernel is unchanged.
        for (double r : {1.2 / m, 2.0 / m, 0.4}) {
            const Displacement x = displacement(r * std::cos(0.3), r * std::sin(0.3));
            CHECK(mollified_green_m(kt(), p, x, m) - kt().green(x) == doctest::Approx(p.B() / (m * m)).epsilon(1e-6));
            const Vec2 a = mollified_K_m(kt(), p, x, m), b = kt().K(x);
            CHECK(std::abs(a[0] - b[0]) < 1e-9 * (1 + std::abs(b[0])));
            CHECK(std::abs(a[1] - b[1]) < 1e-9 * (1 + std::abs(b[1])));
        }
        const double at0 = mollified_green_m(kt(), p, displacement(0.0, 0.0), m);
        CHECK(at0 <= std::log(m) / (2 * pi) + frozen::C_energy);
        const Vec2 k0 = mollified_K_m(kt(), p, displacement(0.0, 0.0), m);
        CHECK(k0[0] == 0.0);
        CHECK(k0[1] == 0.0);
    }
}

TEST_CASE("mollified energy bound constant on random points") {
    const MollifierProfile& p = prof();
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int m : {5, 12}) {
        for (int t = 0; t < 10000; ++t) {
            const Displacement x = displacement(u(gen), u(gen));
            CHECK(mollified_green_m(kt(), p, x, m) - kt().green(x) <= frozen::C_energy / (m * m) + 1e-12);
        }
    }
}

TEST_CASE("deposit conserves mass and matches the pair-sum identity") {
    const MollifierProfile& p = prof();
    const auto X = random_points(50, 31);
    const int m = 12, M = required_grid_size(m);
    const GridField z = mollify_empirical_m(X, m, PeriodicGrid(M), p);
    CHECK(z.mean() == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(z.min() >= 0.0);
    double l2 = 0.0;
    for (double v : z.values()) l2 += v * v;
    l2 /= static_cast<double>(M) * M;
    const double pair = pair_sum_G(X, p, m) / (50.0 * 50.0);
    CHECK(l2 == doctest::Approx(pair).epsilon(1e-3));

    // The spectral deposit gives the same identity through Parseval.
    const GridField zs = mollify_empirical_m(X, m, PeriodicGrid(M), p, DepositMode::spectral);
    CHECK(to_spectral(zs).norm_sq() == doctest::Approx(pair).epsilon(1e-3));
    CHECK_THROWS(mollify_empirical_m(X, m, PeriodicGrid(M / 4), p));
}

TEST_CASE("serial and parallel pair loops are bitwise identical") {
    const MollifierProfile& p = prof();
    const auto X = random_points(300, 77);
    const int m = 20;
    CHECK(drift_direct(X, kt(), 1e-9, Exec::serial) == drift_direct(X, kt(), 1e-9, Exec::parallel));
    CHECK(drift_mollified(X, kt(), p, m, Exec::serial) == drift_mollified(X, kt(), p, m, Exec::parallel));
    CHECK(pair_sum_green(X, kt(), Exec::serial) == pair_sum_green(X, kt(), Exec::parallel));
    CHECK(pair_sum_mollified_green(X, kt(), p, m, Exec::serial) == pair_sum_mollified_green(X, kt(), p, m, Exec::parallel));
    CHECK(pair_sum_G(X, p, m, Exec::serial) == pair_sum_G(X, p, m, Exec::parallel));
    CHECK(pair_count_within(X, 0.05, Exec::serial) == pair_count_within(X, 0.05, Exec::parallel));
    const PeriodicGrid g(required_grid_size(m));
    CHECK(mollify_empirical_serial(X, m, g, p).values() == mollify_empirical_m(X, m, g, p).values());
}

TEST_CASE("mollifier schedule grows slowly") {
    const MollifierFamily& fam = MollifierFamily::standard();
    int prev = 0;
    for (int n : {8, 32, 64, 128, 256, 1024}) {
        const int m = fam.m(n);
        CHECK(m >= prev);
        CHECK(m >= 5);
        prev = m;
    }
    CHECK(fam.m(8) == 12);
    CHECK(fam.m(1024) == 80);
}
