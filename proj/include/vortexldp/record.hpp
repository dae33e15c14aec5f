#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "vortexldp/torus.hpp"

namespace vortexldp {

/// Version string embedded in every output.
inline constexpr const char* kCodeVersion = "vortexldp 1.0.0";

/// FNV-1a (64-bit, hex) of the canonical dump (sorted keys, no whitespace).
std::string config_hash(const nlohmann::json& config);

/// Named columns, one row per recorded time.
struct Series {
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;

    bool empty() const { return rows.empty(); }
    std::size_t column_index(const std::string& name) const;
    std::vector<double> column(const std::string& name) const;
    void write_csv(const std::string& path, const std::string& hash) const;
    static Series read_csv(const std::string& path);
};

/// Time-stamped snapshots of a particle or density trajectory.
///
/// On disk: config.json, snapshots/NNNN.bin, observables.csv, and optionally
/// monitors.csv and events.log. Particle snapshots are raw little-endian
/// doubles (2n per snapshot); density snapshots are GridField binaries.
struct TrajectoryRecord {
    enum class Kind { particles, density };

    Kind kind = Kind::particles;
    nlohmann::json config;
    std::string hash;
    uint64_t seed = 0;
    std::vector<double> times;
    std::vector<std::vector<TorusPoint>> particles;
    std::vector<GridField> densities;
    Series observables;
    Series monitors;
    std::vector<std::string> events;

    std::size_t size() const { return times.size(); }
    /// Checks strictly increasing times, snapshot counts and the config hash.
    void validate() const;
    void save(const std::string& dir) const;
    static TrajectoryRecord load(const std::string& dir);
};

}  // namespace vortexldp
