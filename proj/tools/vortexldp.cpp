// Command-line front end: vortexldp <simulate|pde|action|validate|wasserstein|preset>
//   --config <path> [--set key=value ...] --out <dir>
#include <omp.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vortexldp/action.hpp"
#include "vortexldp/errors.hpp"
#include "vortexldp/experiments.hpp"
#include "vortexldp/inequalities.hpp"
#include "vortexldp/meanfield.hpp"
#include "vortexldp/record.hpp"
#include "vortexldp/vortex.hpp"
#include "vortexldp/wasserstein.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vortexldp;

namespace {

enum Exit { kOk = 0, kConfig = 2, kAssertion = 3, kNumeric = 4 };

struct Common {
    std::string config;
    std::vector<std::string> sets;
    std::string out = "out";
};

json load_config(const Common& c) {
    json j = json::object();
    if (!c.config.empty()) {
        std::ifstream is(c.config);
        if (!is) throw ConfigError("cannot read config " + c.config);
        j = json::parse(is, nullptr, false);
        if (j.is_discarded()) throw ConfigError("config " + c.config + " is not valid JSON");
    }
    for (const auto& s : c.sets) apply_set(j, s);
    return j;
}

void write_json(const fs::path& path, const json& j) {
    fs::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os << j.dump(2) << "\n";
}

int cmd_simulate(const Common& c) {
    const SimConfig cfg = SimConfig::from_json(load_config(c));
    const TrajectoryRecord rec = simulate(cfg);
    rec.save(c.out);
    std::cout << "simulate: " << rec.size() << " snapshots, hash " << rec.hash << " -> " << c.out << "\n";
    return kOk;
}

int cmd_pde(const Common& c) {
    const PdeConfig cfg = PdeConfig::from_json(load_config(c));
    const GridField gamma = density_from_json(cfg.initial, PeriodicGrid(cfg.M));
    const TrajectoryRecord rec = solve(gamma, cfg);
    rec.save(c.out);
    std::cout << "pde: " << rec.size() << " snapshots, hash " << rec.hash << " -> " << c.out << "\n";
    return kOk;
}

int cmd_action(const Common& c) {
    const json j = load_config(c);
    if (!j.contains("record")) throw ConfigError("action needs 'record' (a density TrajectoryRecord directory)");
    WeightedSolveOptions opt;
    opt.mu_min = j.value("mu_min", opt.mu_min);
    opt.rtol = j.value("rtol", opt.rtol);
    opt.max_iter = j.value("max_iter", opt.max_iter);
    const TrajectoryRecord rec = TrajectoryRecord::load(j.at("record").get<std::string>());
    json rep = action_report(rec, opt).to_json();
    rep["config_hash"] = rec.hash;
    rep["version"] = kCodeVersion;
    write_json(fs::path(c.out) / "action_report.json", rep);
    std::cout << "action: A_T=" << rep["A_T"] << " A_bar_lower=" << rep["A_bar_lower"] << "\n";
    return kOk;
}

int run_experiment(const ExperimentConfig& ec) {
    const PresetResult r = run_preset(ec);
    std::cout << r.name << ": " << (r.pass() ? "pass" : "FAIL") << " (hash " << r.hash << ", " << r.artifacts.size()
              << " artifacts in " << ec.out_dir << ")\n";
    for (const auto& f : r.failures) std::cout << "  failed: " << f << "\n";
    return r.pass() ? kOk : kAssertion;
}

int cmd_validate(const Common& c) {
    return run_experiment(make_experiment("inequality_validate", load_config(c), c.out));
}

int cmd_preset(const Common& c, const std::string& name) {
    json j = load_config(c);
    if (!name.empty()) j["preset"] = name;
    if (!j.contains("preset")) throw ConfigError("preset needs a name (positional or 'preset' in the config)");
    return run_experiment(make_experiment(j.at("preset").get<std::string>(), j.value("params", json::object()), c.out));
}

/// A measure from {"record": dir, "snapshot": i}, {"field": path} or {"points": [[x1, x2], ...]}.
struct Source {
    bool grid = false;
    GridField field;
    DiscreteMeasure points;
};

Source load_source(const json& j) {
    Source s;
    if (j.contains("field")) {
        s.grid = true;
        s.field = load_grid_field(j.at("field").get<std::string>());
    } else if (j.contains("points")) {
        std::vector<TorusPoint> pts;
        for (const auto& p : j.at("points")) pts.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
        s.points = DiscreteMeasure::uniform(std::move(pts));
    } else if (j.contains("record")) {
        const TrajectoryRecord rec = TrajectoryRecord::load(j.at("record").get<std::string>());
        const long n = static_cast<long>(rec.size());
        long i = j.value("snapshot", -1L);
        if (i < 0) i += n;
        if (i < 0 || i >= n) throw ConfigError("snapshot index out of range");
        if (rec.kind == TrajectoryRecord::Kind::density) {
            s.grid = true;
            s.field = rec.densities[i];
        } else {
            if (rec.particles.empty()) throw ConfigError("record has no stored particle snapshots");
            s.points = DiscreteMeasure::uniform(rec.particles[i]);
        }
    } else {
        throw ConfigError("a measure needs 'record', 'field' or 'points'");
    }
    return s;
}

DiscreteMeasure as_points(const Source& s) {
    if (!s.grid) return s.points;
    DiscreteMeasure d;
    const PeriodicGrid& g = s.field.grid();
    const double h2 = g.h() * g.h();
    for (int i = 0; i < g.M(); ++i)
        for (int k = 0; k < g.M(); ++k) {
            d.points.emplace_back(g.node(i), g.node(k));
            d.weights.push_back(s.field(i, k) * h2);
        }
    return d;
}

int cmd_wasserstein(const Common& c) {
    const json j = load_config(c);
    if (!j.contains("a") || !j.contains("b")) throw ConfigError("wasserstein needs measures 'a' and 'b'");
    const Source a = load_source(j.at("a")), b = load_source(j.at("b"));
    const std::string method = j.value("method", std::string(a.grid || b.grid ? "entropic" : "exact"));
    json out = {{"method", method}, {"version", kCodeVersion}, {"config_hash", config_hash(j)}};
    if (method == "exact") {
        out["w2_sq"] = wasserstein2(as_points(a), as_points(b));
    } else if (method == "entropic") {
        EntropicOptions eo;
        eo.eps = j.value("eps", eo.eps);
        eo.tol = j.value("tol", eo.tol);
        eo.max_iters = j.value("max_iters", eo.max_iters);
        const EntropicResult r = a.grid && b.grid ? wasserstein2_entropic(a.field, b.field, eo)
                                                  : wasserstein2_entropic(as_points(a), as_points(b), eo);
        out["w2_sq"] = r.cost;
        out["iterations"] = r.iterations;
        out["residual"] = r.residual;
        out["eps"] = eo.eps;
    } else {
        throw ConfigError("unknown method '" + method + "' (exact | entropic)");
    }
    write_json(fs::path(c.out) / "wasserstein.json", out);
    std::cout << "wasserstein: W2^2 = " << out["w2_sq"] << " (" << method << ")\n";
    return kOk;
}

void apply_thread_cap() {
    const char* env = std::getenv("VORTEXLDP_THREADS");
    if (!env || !*env) return;
    char* end = nullptr;
    const long t = std::strtol(env, &end, 10);
    if (*end || t < 1) throw ConfigError(std::string("VORTEXLDP_THREADS must be a positive integer, got '") + env + "'");
    omp_set_num_threads(static_cast<int>(t));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic point vortices on the torus: simulation, mean-field PDE, action functional"};
    app.require_subcommand(1);
    Common c;
    std::string preset_name;
    const char* names[] = {"simulate", "pde", "action", "validate", "wasserstein", "preset"};
    const char* help[] = {"run the particle system (SimConfig JSON)", "solve the mean-field PDE (PdeConfig JSON)",
                          "action report of a density record", "inequality suite, JSON lines",
                          "squared Wasserstein distance between two measures", "run an experiment preset"};
    std::vector<CLI::App*> subs;
    for (int i = 0; i < 6; ++i) {
        CLI::App* s = app.add_subcommand(names[i], help[i]);
        s->add_option("--config", c.config, "JSON configuration file");
        s->add_option("--set", c.sets, "override key=value (dotted keys, JSON values)")->take_all();
        s->add_option("--out", c.out, "output directory");
        subs.push_back(s);
    }
    subs[5]->add_option("name", preset_name, "preset name")->check(CLI::IsMember(preset_names()));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        apply_thread_cap();
        if (subs[0]->parsed()) return cmd_simulate(c);
        if (subs[1]->parsed()) return cmd_pde(c);
        if (subs[2]->parsed()) return cmd_action(c);
        if (subs[3]->parsed()) return cmd_validate(c);
        if (subs[4]->parsed()) return cmd_wasserstein(c);
        if (subs[5]->parsed()) return cmd_preset(c, preset_name);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const AssertionFailure& e) {
        std::cerr << "assertion failure: " << e.what() << "\n";
        return kAssertion;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfig;
    }
    return kConfig;
}
