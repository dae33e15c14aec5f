// Torus geometry, grid fields, spectral transforms, transport costs, RNG.
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "doctest.h"
#include "vortexldp/errors.hpp"
#include "vortexldp/rng.hpp"
#include "vortexldp/spectral.hpp"
#include "vortexldp/torus.hpp"
#include "vortexldp/wasserstein.hpp"

using namespace vortexldp;
using namespace vortexldp::spectral;
using std::numbers::pi;

namespace {

GridField random_field(int M, uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    GridField f{PeriodicGrid(M)};
    for (auto& v : f.values()) v = u(gen);
    return f;
}

// c_k = h² Σ f(x) e^{-2πik·x} at the physical node positions.
cplx direct_dft(const GridField& f, int k1, int k2) {
    const PeriodicGrid& g = f.grid();
    cplx s = 0.0;
    for (int i = 0; i < g.M(); ++i)
        for (int j = 0; j < g.M(); ++j)
            s += f(i, j) * std::polar(1.0, -2.0 * pi * (k1 * g.node(i) + k2 * g.node(j)));
    return s * g.h() * g.h();
}

}  // namespace

TEST_CASE("min_image picks the shortest representative") {
    const Displacement d = min_image({0.4, 0.0}, {-0.4, 0.0});
    CHECK(d.d1 == doctest::Approx(-0.2));
    CHECK(d.r == doctest::Approx(0.2));
    CHECK(min_image({0.1, 0.3}, {0.1, 0.3}).r == 0.0);
    CHECK(min_image({0.25, 0.25}, {-0.25, -0.25}).r == doctest::Approx(std::sqrt(2.0) / 2));
}

TEST_CASE("torus distance satisfies the triangle inequality") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int t = 0; t < 10000; ++t) {
        const TorusPoint x(u(gen), u(gen)), y(u(gen), u(gen)), z(u(gen), u(gen));
        CHECK(min_image(x, z).r <= min_image(x, y).r + min_image(y, z).r + 1e-15);
        CHECK(min_image(x, y).r <= std::sqrt(0.5) + 1e-15);
    }
}

TEST_CASE("grid field serialization round-trips") {
    const GridField f = random_field(16, 5);
    const auto path = std::filesystem::temp_directory_path() / "vortexldp_field_test.bin";
    save_grid_field(f, path.string());
    const GridField g = load_grid_field(path.string());
    std::filesystem::remove(path);
    CHECK(g.M() == 16);
    CHECK(g.values() == f.values());
}

TEST_CASE("spectral transform matches a direct DFT and inverts") {
    const GridField f = random_field(16, 11);
    const Spectrum s = to_spectral(f);
    double worst = 0.0;
    for (int k1 = -8; k1 < 8; ++k1)
        for (int k2 = -8; k2 < 8; ++k2) worst = std::max(worst, std::abs(s.coef(k1, k2) - direct_dft(f, k1, k2)));
    CHECK(worst < 1e-13);

    const GridField back = from_spectral(s);
    double err = 0.0;
    for (std::size_t i = 0; i < f.values().size(); ++i) err = std::max(err, std::abs(back.values()[i] - f.values()[i]));
    CHECK(err < 1e-12);

    double l2 = 0.0;
    for (double v : f.values()) l2 += v * v;
    l2 /= 256.0;
    CHECK(std::abs(s.norm_sq() - l2) < 1e-12 * l2);
}

TEST_CASE("constant and cosine fields have the expected coefficients") {
    GridField one(PeriodicGrid(32), 1, 1.0);
    const Spectrum s1 = to_spectral(one);
    CHECK(std::abs(s1.coef(0, 0) - 1.0) < 1e-14);
    CHECK(std::abs(s1.norm_sq() - 1.0) < 1e-13);

    GridField c(PeriodicGrid(32));
    c.fill_with([](double x1, double) { return std::cos(2 * pi * x1); });
    const Spectrum s2 = to_spectral(c);
    CHECK(std::abs(s2.coef(1, 0) - 0.5) < 1e-14);
    CHECK(std::abs(s2.coef(-1, 0) - 0.5) < 1e-14);
    CHECK(std::abs(s2.norm_sq() - 0.5) < 1e-13);
}

TEST_CASE("spectral derivatives of a trigonometric field") {
    GridField f(PeriodicGrid(32));
    f.fill_with([](double x1, double x2) { return std::sin(2 * pi * (x1 + 2 * x2)); });
    const GridField g = gradient(f), lap = laplacian(f), div = divergence(g), curlg = curl(g);
    double e_grad = 0.0, e_lap = 0.0, e_div = 0.0, e_curl = 0.0;
    const PeriodicGrid& grid = f.grid();
    for (int i = 0; i < 32; ++i)
        for (int j = 0; j < 32; ++j) {
            const double c = std::cos(2 * pi * (grid.node(i) + 2 * grid.node(j)));
            e_grad = std::max({e_grad, std::abs(g(i, j, 0) - 2 * pi * c), std::abs(g(i, j, 1) - 4 * pi * c)});
            e_lap = std::max(e_lap, std::abs(lap(i, j) + 20 * pi * pi * f(i, j)));
            e_div = std::max(e_div, std::abs(div(i, j) - lap(i, j)));
            e_curl = std::max(e_curl, std::abs(curlg(i, j)));
        }
    CHECK(e_grad < 1e-11);
    CHECK(e_lap < 1e-9);
    CHECK(e_div < 1e-9);
    CHECK(e_curl < 1e-10);

    const GridField u = inverse_neg_laplacian(lap);
    double e_inv = 0.0;
    for (std::size_t i = 0; i < u.values().size(); ++i) e_inv = std::max(e_inv, std::abs(u.values()[i] + f.values()[i]));
    CHECK(e_inv < 1e-12);
}

TEST_CASE("coarsen preserves the mean and interpolate reproduces smooth fields") {
    GridField f(PeriodicGrid(64));
    f.fill_with([](double x1, double x2) { return 1.0 + 0.3 * std::cos(2 * pi * x1) * std::sin(2 * pi * x2); });
    CHECK(coarsen(f, 4).mean() == doctest::Approx(f.mean()).epsilon(1e-14));
    const TorusPoint x(0.123, -0.377);
    const double exact = 1.0 + 0.3 * std::cos(2 * pi * x.x1) * std::sin(2 * pi * x.x2);
    CHECK(std::abs(interpolate(f, x) - exact) < 1e-5);
}

TEST_CASE("require_density rejects non-densities") {
    GridField f(PeriodicGrid(8), 1, 1.0);
    CHECK_NOTHROW(require_density(f));
    f(0, 0) = -1.0;
    CHECK_THROWS(require_density(f));
}

TEST_CASE("philox4x32-10 known answer") {
    const auto b = philox4x32({0, 0, 0, 0}, {0, 0});
    CHECK(b[0] == 0x6627e8d5u);
    CHECK(b[1] == 0xe169c58du);
    CHECK(b[2] == 0xbc57ac4cu);
    CHECK(b[3] == 0x9b00dbd8u);
    const auto c = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    CHECK(c[0] == 0x408f276du);
    CHECK(c[1] == 0x41c83b0eu);
    CHECK(c[2] == 0xa20bc7c6u);
    CHECK(c[3] == 0x6d5451fdu);
}

TEST_CASE("counter rng normals have unit moments") {
    const CounterRng rng(42);
    double s = 0.0, s2 = 0.0;
    const int N = 100000;
    for (int i = 0; i < N; ++i) {
        const auto z = rng.normal2(7, static_cast<uint32_t>(i));
        s += z[0] + z[1];
        s2 += z[0] * z[0] + z[1] * z[1];
    }
    CHECK(std::abs(s / (2 * N)) < 5.0 / std::sqrt(2.0 * N));
    CHECK(std::abs(s2 / (2 * N) - 1.0) < 5.0 * std::sqrt(2.0 / (2 * N)));
    CHECK(rng.uniform2(1, 2, 3) == CounterRng(42).uniform2(1, 2, 3));
}

TEST_CASE("exact transport on small measures") {
    const TorusPoint x(0.1, 0.2), y(-0.3, 0.4);
    CHECK(wasserstein2(DiscreteMeasure::uniform({x}), DiscreteMeasure::uniform({y})) ==
          doctest::Approx(std::pow(min_image(x, y).r, 2)));

    const std::vector<TorusPoint> pts{{0.1, 0.1}, {-0.2, 0.3}, {0.4, -0.4}};
    CHECK(wasserstein2(DiscreteMeasure::uniform(pts), DiscreteMeasure::uniform(pts)) == doctest::Approx(0.0));

    const std::vector<TorusPoint> a{{0.0, 0.0}, {0.3, 0.0}}, b{{0.1, 0.0}, {0.4, 0.0}};
    auto sq = [](const TorusPoint& p, const TorusPoint& q) { return std::pow(min_image(p, q).r, 2); };
    const double brute = std::min(0.5 * (sq(a[0], b[0]) + sq(a[1], b[1])), 0.5 * (sq(a[0], b[1]) + sq(a[1], b[0])));
    CHECK(wasserstein2(DiscreteMeasure::uniform(a), DiscreteMeasure::uniform(b)) == doctest::Approx(brute));
}

TEST_CASE("exact transport is symmetric and matches brute force on permutations") {
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int t = 0; t < 20; ++t) {
        std::vector<TorusPoint> a, b;
        for (int i = 0; i < 5; ++i) {
            a.emplace_back(u(gen), u(gen));
            b.emplace_back(u(gen), u(gen));
        }
        std::vector<std::size_t> perm{0, 1, 2, 3, 4};
        double best = 1e300;
        do {
            double c = 0.0;
            for (int i = 0; i < 5; ++i) c += std::pow(min_image(a[i], b[perm[i]]).r, 2) / 5.0;
            best = std::min(best, c);
        } while (std::next_permutation(perm.begin(), perm.end()));
        const double ab = wasserstein2(DiscreteMeasure::uniform(a), DiscreteMeasure::uniform(b));
        const double ba = wasserstein2(DiscreteMeasure::uniform(b), DiscreteMeasure::uniform(a));
        CHECK(ab == doctest::Approx(best).epsilon(1e-12));
        CHECK(ba == doctest::Approx(ab).epsilon(1e-12));
    }
}

TEST_CASE("exact transport with unequal weights") {
    DiscreteMeasure a, b;
    a.points = {{0.0, 0.0}};
    a.weights = {1.0};
    b.points = {{0.1, 0.0}, {-0.2, 0.0}};
    b.weights = {0.25, 0.75};
    CHECK(wasserstein2(a, b) == doctest::Approx(0.25 * 0.01 + 0.75 * 0.04));
}

TEST_CASE("entropic transport between grid densities") {
    const PeriodicGrid g(32);
    GridField one(g, 1, 1.0);
    EntropicOptions eo;
    eo.eps = 1e-3;
    CHECK(std::abs(wasserstein2_entropic(one, one, eo).cost) < 1e-8);

    GridField a(g);
    a.fill_with([](double x1, double x2) { return 1.0 + 0.5 * std::cos(2 * pi * x1) * std::cos(2 * pi * x2); });
    CHECK(std::abs(wasserstein2_entropic(a, a, eo).cost) <= eo.eps * std::log(32.0 * 32.0));

    // Two spikes at torus distance 0.2: the cost approaches 0.04 as eps shrinks.
    GridField p(g), q(g);
    p(16, 16) = 1.0 / (g.h() * g.h());
    q(16 + 6, 16) = 1.0 / (g.h() * g.h());  // 6 h = 0.1875
    const double exact = std::pow(6 * g.h(), 2);
    double prev = 1e300;
    for (double eps : {1e-2, 3e-3, 1e-3}) {
        eo.eps = eps;
        const double c = wasserstein2_entropic(p, q, eo).cost;
        const double err = std::abs(c - exact);
        CHECK(err <= prev + 1e-12);
        prev = err;
    }
    CHECK(prev < 0.1 * exact);
}
