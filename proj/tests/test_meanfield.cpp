// Mean-field PDE, weighted negative Sobolev norms, action, records, presets.
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "vortexldp/action.hpp"
#include "vortexldp/errors.hpp"
#include "vortexldp/experiments.hpp"
#include "vortexldp/meanfield.hpp"
#include "vortexldp/observables.hpp"
#include "vortexldp/record.hpp"
#include "vortexldp/spectral.hpp"

using namespace vortexldp;
using namespace vortexldp::spectral;
using nlohmann::json;
using std::numbers::pi;
namespace fs = std::filesystem;

namespace {

double l2_diff(const GridField& a, const GridField& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) s += std::pow(a.values()[i] - b.values()[i], 2);
    return std::sqrt(s / static_cast<double>(a.values().size()));
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("vortexldp_test_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("uniform density has zero velocity and stays put") {
    const GridField one(PeriodicGrid(32), 1, 1.0);
    const GridField u = velocity_from_vorticity(one);
    CHECK(std::max(u.max(0), -u.min(0)) < 1e-15);
    PdeConfig c;
    c.M = 32;
    c.T = 0.1;
    const auto rec = solve(one, c);
    CHECK(l2_diff(rec.densities.back(), one) < 1e-15);
    CHECK(q_functional(rec) == doctest::Approx(0.0));
}

TEST_CASE("a shear mode decays by the heat equation") {
    PdeConfig c;
    c.M = 64;
    c.T = 0.2;
    const double a = 0.3;
    const auto rec = solve(cosine_density(PeriodicGrid(64), {{a, 1, 0, 0.0}}), c);
    const GridField exact = cosine_density(PeriodicGrid(64), {{a * std::exp(-4 * pi * pi * c.nu * c.T), 1, 0, 0.0}});
    CHECK(l2_diff(rec.densities.back(), exact) < 1e-6);
}

TEST_CASE("mass is conserved with and without a control") {
    PdeConfig c;
    c.M = 64;
    c.T = 0.1;
    const GridField g0 = cosine_density(PeriodicGrid(64), {{0.3, 1, 1, 0.2}, {0.2, 0, 2, 0.0}});
    const auto r1 = solve(g0, c);
    const auto r2 = solve(g0, ControlField::from_modes({ControlMode{1.0, 0, 1, 0.0}}), c.T, c);
    for (const auto& r : {r1, r2})
        for (const auto& d : r.densities) CHECK(std::abs(d.mean() - 1.0) < 1e-14);
    // The velocity stays divergence free along the path.
    const GridField div = divergence(velocity_from_vorticity(r1.densities.back()));
    CHECK(std::max(div.max(), -div.min()) < 1e-12);
}

TEST_CASE("two resolutions agree on the shared nodes") {
    PdeConfig c;
    c.T = 0.1;
    const std::vector<FourierMode> modes{{0.4, 1, 0, 0.0}, {0.3, 1, 1, 0.7}};
    c.M = 64;
    const GridField a = solve(cosine_density(PeriodicGrid(64), modes), c).densities.back();
    c.M = 128;
    const GridField b = solve(cosine_density(PeriodicGrid(128), modes), c).densities.back();
    GridField b_sub(PeriodicGrid(64));
    for (int i = 0; i < 64; ++i)
        for (int j = 0; j < 64; ++j) b_sub(i, j) = b(2 * i, 2 * j);
    CHECK(l2_diff(a, b_sub) < 1e-4);
}

TEST_CASE("energy dissipation identity without control") {
    PdeConfig c;
    c.M = 64;
    c.T = 0.3;
    c.dt = 5e-4;
    c.snapshot_stride = 5;
    const auto rec = solve(cosine_density(PeriodicGrid(64), {{0.4, 1, 0, 0.0}, {0.3, 1, 1, 0.7}}), c);
    const auto res = dissipation_residual(rec).column("relative");
    double worst = 0.0;
    for (double v : res) worst = std::max(worst, std::abs(v));
    CHECK(worst < 1e-4);
}

TEST_CASE("weighted negative norm under uniform weight") {
    const PeriodicGrid g(32);
    const GridField one(g, 1, 1.0);
    GridField m = cosine_density(g, {{0.3, 1, 2, 0.1}, {0.2, -3, 1, 0.5}});
    for (auto& v : m.values()) v -= 1.0;
    const Spectrum s = to_spectral(m);
    const double closed = s.weighted_norm_sq([](int k1, int k2) {
        return k1 == 0 && k2 == 0 ? 0.0 : 1.0 / (4 * pi * pi * (k1 * k1 + k2 * k2));
    });
    CHECK(weighted_h1neg_norm(m, one) == doctest::Approx(closed).epsilon(1e-10));

    GridField m3 = m;
    for (auto& v : m3.values()) v *= 3.0;
    CHECK(weighted_h1neg_norm(m3, one) == doctest::Approx(9.0 * closed).epsilon(1e-10));
    CHECK(weighted_h1neg_norm(GridField(g), one) == 0.0);
}

TEST_CASE("weighted solve satisfies the Riesz identity and the divergence bound") {
    const PeriodicGrid g(32);
    const GridField mu = cosine_density(g, {{0.5, 1, 0, 0.0}, {0.3, 1, 1, 0.4}});
    GridField v(g, 2);
    v.fill_with([](double x1, double x2) { return std::sin(2 * pi * x2) + 0.3 * std::cos(2 * pi * (x1 - x2)); }, 0);
    v.fill_with([](double x1, double) { return 0.5 * std::cos(4 * pi * x1); }, 1);
    GridField flux(g, 2);
    for (int i = 0; i < 32; ++i)
        for (int j = 0; j < 32; ++j)
            for (int c = 0; c < 2; ++c) flux(i, j, c) = mu(i, j) * v(i, j, c);
    GridField m = divergence(flux);
    for (auto& x : m.values()) x = -x;
    const WeightedSolve ws = weighted_h1neg_solve(m, mu);
    CHECK(ws.dual_value == doctest::Approx(ws.norm_sq).epsilon(1e-8));
    double rhs = 0.0;
    for (int i = 0; i < 32; ++i)
        for (int j = 0; j < 32; ++j) rhs += (v(i, j, 0) * v(i, j, 0) + v(i, j, 1) * v(i, j, 1)) * mu(i, j) / 1024.0;
    CHECK(ws.norm_sq <= rhs * (1 + 1e-10));
}

TEST_CASE("laplacian norm equals the fisher information") {
    const PeriodicGrid g(64);
    const GridField mu = cosine_density(g, {{0.3, 1, 0, 0.0}});
    CHECK(weighted_h1neg_norm(laplacian(mu), mu) == doctest::Approx(fisher_I(mu)).epsilon(1e-4));
}

TEST_CASE("stationary and uncontrolled paths have zero action") {
    const PeriodicGrid g(32);
    std::vector<double> t;
    std::vector<GridField> rho;
    for (int k = 0; k <= 10; ++k) {
        t.push_back(0.01 * k);
        rho.emplace_back(g, 1, 1.0);
    }
    const auto rc = recover_control(t, rho, 0.1);
    CHECK(rc.action == 0.0);
    CHECK(action_bar_lower(rc, rho, default_test_family()) == doctest::Approx(0.0));

    PdeConfig c;
    c.M = 32;
    c.T = 0.2;
    c.snapshot_stride = 5;
    const auto rec = solve(cosine_density(g, {{0.3, 1, 0, 0.0}, {0.2, 1, 1, 0.5}}), c);
    CHECK(recover_control(rec).action < 1e-6);
}

TEST_CASE("a known control is recovered with its energy") {
    PdeConfig c;
    c.M = 64;
    c.T = 0.5;
    c.snapshot_stride = 10;
    const ControlField v = ControlField::from_modes({ControlMode{0.05, 0, 1, 0.0}});
    const auto rec = solve(cosine_density(PeriodicGrid(64), {{0.2, 1, 0, 0.0}}), v, c.T, c);
    const ActionReport rep = action_report(rec);
    REQUIRE(rep.has_control_energy);
    CHECK(rep.A_T == doctest::Approx(rep.control_energy).epsilon(0.01));
    CHECK(rep.control_rel_error < 0.01);
    CHECK(rep.A_bar_lower <= rep.A_T * (1 + 1e-6));
    CHECK(rep.A_bar_lower >= 0.9 * rep.A_T);
}

TEST_CASE("symmetrized pairing of densities") {
    const PeriodicGrid g(64);
    const auto phi = SmoothFunction::modes({{0.5, 1, 1, 0.2}});
    CHECK(std::abs(symmetrized_pairing_density(GridField(g, 1, 1.0), phi)) < 1e-14);
    const GridField gamma = cosine_density(g, {{0.5, 1, 0, 0.0}, {0.4, 0, 1, 0.3}, {0.2, 1, -2, 1.0}});
    const double a = symmetrized_pairing_density(gamma, phi);
    const double b = symmetrized_pairing_density_double(gamma, phi, 32);
    CHECK(std::abs(a - b) < 2e-3 * std::max(1e-3, std::abs(a)) + 1e-5);
}

TEST_CASE("config hash is canonical") {
    const json a = {{"x", 1}, {"y", {1, 2}}}, b = json::parse(R"({"y":[1,2],"x":1})");
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a) != config_hash(json{{"x", 2}, {"y", {1, 2}}}));
    CHECK(config_hash(a).size() == 16);
}

TEST_CASE("series and trajectory records round-trip") {
    const fs::path dir = scratch("record");
    Series s;
    s.names = {"t", "v"};
    s.rows = {{0.0, 1.5}, {0.1, -2.25}};
    fs::create_directories(dir);
    s.write_csv((dir / "s.csv").string(), "abc");
    const Series r = Series::read_csv((dir / "s.csv").string());
    CHECK(r.names == s.names);
    CHECK(r.rows == s.rows);

    PdeConfig c;
    c.M = 16;
    c.T = 0.02;
    const auto rec = solve(cosine_density(PeriodicGrid(16), {{0.2, 1, 0, 0.0}}), c);
    rec.save((dir / "rec").string());
    const auto back = TrajectoryRecord::load((dir / "rec").string());
    CHECK(back.hash == rec.hash);
    CHECK(back.times == rec.times);
    CHECK(back.densities.back().values() == rec.densities.back().values());
    fs::remove_all(dir);
}

TEST_CASE("experiment configuration") {
    json j = json::object();
    apply_set(j, "a.b=3");
    apply_set(j, "name=hello");
    apply_set(j, "list=[1,2]");
    CHECK(j["a"]["b"] == 3);
    CHECK(j["name"] == "hello");
    CHECK(j["list"] == json({1, 2}));

    CHECK_THROWS_AS(preset_defaults("nope"), ConfigError);
    CHECK_THROWS_AS(make_experiment("heat_checks", {{"bogus", 1}}), ConfigError);
    const auto e1 = make_experiment("heat_checks", json::object(), "a");
    const auto e2 = make_experiment("heat_checks", json::object(), "b");
    CHECK(e1.hash() == e2.hash());
    CHECK(e1.hash() != make_experiment("heat_checks", {{"t", 0.07}}).hash());
    CHECK(ExperimentConfig::from_json(e1.to_json()).hash() == e1.hash());
    for (const auto& n : preset_names()) CHECK_NOTHROW(preset_defaults(n));
}

TEST_CASE("heat preset passes and stamps its outputs") {
    const fs::path dir = scratch("heat");
    const auto cfg = make_experiment("heat_checks", json::object(), dir.string());
    const PresetResult r = run_preset(cfg);
    CHECK(r.pass());
    CHECK(r.exit_code() == 0);
    std::ifstream is(dir / "result.json");
    const json res = json::parse(is);
    CHECK(res.dump().find(cfg.hash()) != std::string::npos);
    CHECK(res.dump().find(kCodeVersion) != std::string::npos);
    const PresetResult again = run_preset(cfg);
    CHECK(again.summary == r.summary);
    fs::remove_all(dir);
}
