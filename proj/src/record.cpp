#include "vortexldp/record.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "vortexldp/errors.hpp"

namespace vortexldp {

namespace fs = std::filesystem;

std::string config_hash(const nlohmann::json& config) {
    const std::string s = config.dump();
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::size_t Series::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return i;
    throw Error("no column '" + name + "'");
}

std::vector<double> Series::column(const std::string& name) const {
    const std::size_t c = column_index(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.at(c));
    return out;
}

void Series::write_csv(const std::string& path, const std::string& hash) const {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path);
    os << "# config_hash=" << hash << " version=" << kCodeVersion << "\n";
    for (std::size_t i = 0; i < names.size(); ++i) os << (i ? "," : "") << names[i];
    os << "\n" << std::setprecision(17);
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
        os << "\n";
    }
}

Series Series::read_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot read " + path);
    Series s;
    std::string line;
    bool header = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string cell;
        if (!header) {
            while (std::getline(ss, cell, ',')) s.names.push_back(cell);
            header = true;
            continue;
        }
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
        s.rows.push_back(std::move(row));
    }
    return s;
}

void TrajectoryRecord::validate() const {
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1])) throw AssertionFailure("record times are not strictly increasing");
    if (kind == Kind::particles && !particles.empty() && particles.size() != times.size())
        throw AssertionFailure("particle snapshot count does not match times");
    if (kind == Kind::density && !densities.empty() && densities.size() != times.size())
        throw AssertionFailure("density snapshot count does not match times");
    if (!config.is_null() && config_hash(config) != hash) throw AssertionFailure("config hash mismatch");
}

void TrajectoryRecord::save(const std::string& dir) const {
    validate();
    fs::create_directories(fs::path(dir) / "snapshots");
    {
        nlohmann::json j;
        j["config"] = config;
        j["config_hash"] = hash;
        j["version"] = kCodeVersion;
        j["kind"] = kind == Kind::particles ? "particles" : "density";
        j["seed"] = seed;
        j["times"] = times;
        std::ofstream os(fs::path(dir) / "config.json");
        os << j.dump(2) << "\n";
    }
    const std::size_t count = kind == Kind::particles ? particles.size() : densities.size();
    for (std::size_t k = 0; k < count; ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "%04zu.bin", k);
        const fs::path p = fs::path(dir) / "snapshots" / name;
        if (kind == Kind::particles) {
            std::ofstream os(p, std::ios::binary);
            if (!os) throw Error("cannot write " + p.string());
            for (const auto& x : particles[k]) {
                const double v[2] = {x.x1, x.x2};
                os.write(reinterpret_cast<const char*>(v), sizeof v);
            }
        } else {
            save_grid_field(densities[k], p.string());
        }
    }
    observables.write_csv((fs::path(dir) / "observables.csv").string(), hash);
    if (!monitors.empty()) monitors.write_csv((fs::path(dir) / "monitors.csv").string(), hash);
    if (!events.empty()) {
        std::ofstream os(fs::path(dir) / "events.log");
        os << "# config_hash=" << hash << " version=" << kCodeVersion << "\n";
        for (const auto& e : events) os << e << "\n";
    }
}

TrajectoryRecord TrajectoryRecord::load(const std::string& dir) {
    TrajectoryRecord r;
    nlohmann::json j;
    {
        std::ifstream is(fs::path(dir) / "config.json");
        if (!is) throw ConfigError("no config.json in " + dir);
        try {
            is >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("bad config.json: ") + e.what());
        }
    }
    r.config = j.at("config");
    r.hash = j.at("config_hash").get<std::string>();
    r.kind = j.at("kind").get<std::string>() == "particles" ? Kind::particles : Kind::density;
    r.seed = j.value("seed", uint64_t{0});
    r.times = j.at("times").get<std::vector<double>>();
    for (std::size_t k = 0;; ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "%04zu.bin", k);
        const fs::path p = fs::path(dir) / "snapshots" / name;
        if (!fs::exists(p)) break;
        if (r.kind == Kind::particles) {
            std::ifstream is(p, std::ios::binary);
            std::vector<TorusPoint> x;
            double v[2];
            while (is.read(reinterpret_cast<char*>(v), sizeof v)) x.emplace_back(v[0], v[1]);
            r.particles.push_back(std::move(x));
        } else {
            r.densities.push_back(load_grid_field(p.string()));
        }
    }
    if (fs::exists(fs::path(dir) / "observables.csv"))
        r.observables = Series::read_csv((fs::path(dir) / "observables.csv").string());
    if (fs::exists(fs::path(dir) / "monitors.csv"))
        r.monitors = Series::read_csv((fs::path(dir) / "monitors.csv").string());
    if (fs::exists(fs::path(dir) / "events.log")) {
        std::ifstream is(fs::path(dir) / "events.log");
        std::string line;
        while (std::getline(is, line))
            if (!line.empty() && line[0] != '#') r.events.push_back(line);
    }
    r.validate();
    return r;
}

}  // namespace vortexldp
