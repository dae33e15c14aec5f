#include "vortexldp/control.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "vortexldp/errors.hpp"
#include "vortexldp/spectral.hpp"

namespace vortexldp {

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;
}

SmoothFunction SmoothFunction::modes(std::vector<FourierMode> m) {
    SmoothFunction f;
    f.modes_ = std::move(m);
    return f;
}

SmoothFunction SmoothFunction::from_grid(const GridField& f) {
    if (f.components() != 1) throw ConfigError("test function must be scalar");
    SmoothFunction s;
    s.grid_ = true;
    s.f_ = f;
    s.g_ = spectral::gradient(f);
    s.l_ = spectral::laplacian(f);
    return s;
}

double SmoothFunction::value(const TorusPoint& x) const {
    if (grid_) return interpolate(f_, x, 0);
    double s = 0.0;
    for (const auto& m : modes_) s += m.amp * std::cos(two_pi * (m.k1 * x.x1 + m.k2 * x.x2) + m.phase);
    return s;
}

Vec2 SmoothFunction::grad(const TorusPoint& x) const {
    if (grid_) return {interpolate(g_, x, 0), interpolate(g_, x, 1)};
    Vec2 g{0.0, 0.0};
    for (const auto& m : modes_) {
        const double s = -two_pi * m.amp * std::sin(two_pi * (m.k1 * x.x1 + m.k2 * x.x2) + m.phase);
        g[0] += s * m.k1;
        g[1] += s * m.k2;
    }
    return g;
}

double SmoothFunction::lap(const TorusPoint& x) const {
    if (grid_) return interpolate(l_, x, 0);
    double s = 0.0;
    for (const auto& m : modes_) {
        const double k2 = double(m.k1) * m.k1 + double(m.k2) * m.k2;
        s -= two_pi * two_pi * k2 * m.amp * std::cos(two_pi * (m.k1 * x.x1 + m.k2 * x.x2) + m.phase);
    }
    return s;
}

GridField SmoothFunction::sample(const PeriodicGrid& g) const {
    return GridField(g, 1).fill_with([&](double x1, double x2) { return value(TorusPoint(x1, x2)); });
}

GridField SmoothFunction::sample_grad(const PeriodicGrid& g) const {
    GridField out(g, 2);
    for (int i = 0; i < g.M(); ++i)
        for (int j = 0; j < g.M(); ++j) {
            const Vec2 v = grad(TorusPoint(g.node(i), g.node(j)));
            out(i, j, 0) = v[0];
            out(i, j, 1) = v[1];
        }
    return out;
}

GridField SmoothFunction::sample_lap(const PeriodicGrid& g) const {
    return GridField(g, 1).fill_with([&](double x1, double x2) { return lap(TorusPoint(x1, x2)); });
}

double SmoothFunction::grad_sup() const {
    if (grid_) {
        double s = 0.0;
        for (int i = 0; i < g_.M(); ++i)
            for (int j = 0; j < g_.M(); ++j) s = std::max(s, std::hypot(g_(i, j, 0), g_(i, j, 1)));
        return s;
    }
    double s = 0.0;
    for (const auto& m : modes_) s += two_pi * std::abs(m.amp) * std::hypot(m.k1, m.k2);
    return s;
}

// ---------------------------------------------------------------------------

double ControlMode::tau(double t) const {
    if (profile == "constant") return 1.0;
    if (profile == "linear") return omega * t;
    if (profile == "sine") return std::sin(omega * t);
    throw ConfigError("unknown control time profile '" + profile + "'");
}

ControlField ControlField::from_modes(std::vector<ControlMode> modes) {
    for (const auto& m : modes) {
        if (m.k1 == 0 && m.k2 == 0) throw ConfigError("control mode needs a nonzero wavevector");
        (void)m.tau(0.0);
    }
    ControlField c;
    c.modes_ = std::move(modes);
    c.gradient_ = true;
    return c;
}

ControlField ControlField::from_slices(std::vector<double> times, std::vector<GridField> v, bool gradient_type) {
    if (times.size() != v.size() || times.empty()) throw ConfigError("control slices and times differ in length");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1])) throw ConfigError("control slice times must increase");
    for (const auto& f : v) {
        if (f.components() != 2) throw ConfigError("control slices must be vector fields");
        if (gradient_type && curl_residual(f) > 1e-8)
            throw ConfigError("control declared gradient-type but its curl does not vanish");
    }
    ControlField c;
    c.times_ = std::move(times);
    c.slices_ = std::move(v);
    c.gradient_ = gradient_type;
    return c;
}

ControlField ControlField::from_json(const nlohmann::json& j) {
    if (j.is_null()) return {};
    if (j.contains("file")) {
        const std::string path = j.at("file").get<std::string>();
        std::vector<double> times = j.at("times").get<std::vector<double>>();
        std::vector<GridField> slices;
        // One file holding all slices back to back.
        std::ifstream is(path, std::ios::binary);
        if (!is) throw ConfigError("cannot read control file " + path);
        for (std::size_t i = 0; i < times.size(); ++i) slices.push_back(read_grid_field(is));
        auto c = from_slices(std::move(times), std::move(slices), j.value("gradient", true));
        c.file_ = path;
        return c;
    }
    std::vector<ControlMode> modes;
    for (const auto& m : j.at("modes")) {
        ControlMode c;
        c.amp = m.at("amp").get<double>();
        const auto k = m.at("k").get<std::vector<int>>();
        if (k.size() != 2) throw ConfigError("control wavevector must have two entries");
        c.k1 = k[0];
        c.k2 = k[1];
        c.phase = m.value("phase", 0.0);
        c.profile = m.value("profile", std::string("constant"));
        c.omega = m.value("omega", 0.0);
        modes.push_back(c);
    }
    return from_modes(std::move(modes));
}

nlohmann::json ControlField::to_json() const {
    if (!active()) return nullptr;
    nlohmann::json j;
    if (!slices_.empty()) {
        j["file"] = file_;
        j["times"] = times_;
        j["gradient"] = gradient_;
        return j;
    }
    j["modes"] = nlohmann::json::array();
    for (const auto& m : modes_)
        j["modes"].push_back(
            {{"amp", m.amp}, {"k", {m.k1, m.k2}}, {"phase", m.phase}, {"profile", m.profile}, {"omega", m.omega}});
    return j;
}

Vec2 ControlField::v(double t, const TorusPoint& x) const {
    Vec2 out{0.0, 0.0};
    if (!slices_.empty()) {
        std::size_t hi = std::upper_bound(times_.begin(), times_.end(), t) - times_.begin();
        if (hi == 0) hi = 1;
        if (hi >= times_.size()) {
            const auto& f = slices_.back();
            return {interpolate(f, x, 0), interpolate(f, x, 1)};
        }
        const double w = std::clamp((t - times_[hi - 1]) / (times_[hi] - times_[hi - 1]), 0.0, 1.0);
        for (int c = 0; c < 2; ++c)
            out[c] = (1.0 - w) * interpolate(slices_[hi - 1], x, c) + w * interpolate(slices_[hi], x, c);
        return out;
    }
    for (const auto& m : modes_) {
        const double kn = std::hypot(m.k1, m.k2);
        const double a = m.amp * m.tau(t) * std::cos(two_pi * (m.k1 * x.x1 + m.k2 * x.x2) + m.phase) / kn;
        out[0] += a * m.k1;
        out[1] += a * m.k2;
    }
    return out;
}

GridField ControlField::sample(double t, const PeriodicGrid& g) const {
    GridField out(g, 2);
    for (int i = 0; i < g.M(); ++i)
        for (int j = 0; j < g.M(); ++j) {
            const Vec2 w = v(t, TorusPoint(g.node(i), g.node(j)));
            out(i, j, 0) = w[0];
            out(i, j, 1) = w[1];
        }
    return out;
}

GridField ControlField::potential(double t, const PeriodicGrid& g) const {
    if (!slices_.empty()) throw ConfigError("potential is only available for mode controls");
    return GridField(g, 1).fill_with([&](double x1, double x2) {
        double s = 0.0;
        for (const auto& m : modes_)
            s += m.amp * m.tau(t) * std::sin(two_pi * (m.k1 * x1 + m.k2 * x2) + m.phase) / (two_pi * std::hypot(m.k1, m.k2));
        return s;
    });
}

double ControlField::sup_norm() const {
    if (!slices_.empty()) {
        double s = 0.0;
        for (const auto& f : slices_)
            for (int i = 0; i < f.M(); ++i)
                for (int j = 0; j < f.M(); ++j) s = std::max(s, std::hypot(f(i, j, 0), f(i, j, 1)));
        return s;
    }
    // Profiles are bounded by 1 except "linear", bounded by |ω|·t; report the
    // amplitude bound at unit profile.
    double s = 0.0;
    for (const auto& m : modes_) s += std::abs(m.amp) * (m.profile == "linear" ? std::max(1.0, std::abs(m.omega)) : 1.0);
    return s;
}

double curl_residual(const GridField& v) {
    const GridField c = spectral::curl(v);
    double cm = 0.0, vm = 1.0;
    for (int i = 0; i < v.M(); ++i)
        for (int j = 0; j < v.M(); ++j) {
            cm = std::max(cm, std::abs(c(i, j)));
            vm = std::max(vm, std::hypot(v(i, j, 0), v(i, j, 1)));
        }
    return cm / vm;
}

}  // namespace vortexldp
