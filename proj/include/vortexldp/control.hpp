#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "vortexldp/kernels.hpp"
#include "vortexldp/torus.hpp"

namespace vortexldp {

/// a·cos(2π k·x + phase).
struct FourierMode {
    double amp = 0.0;
    int k1 = 0, k2 = 0;
    double phase = 0.0;
};

/// Scalar smooth function on the torus with value, gradient and Laplacian,
/// given either as a finite Fourier sum or as grid samples (spectral
/// derivatives, bicubic evaluation).
class SmoothFunction {
public:
    SmoothFunction() = default;
    static SmoothFunction modes(std::vector<FourierMode> m);
    static SmoothFunction from_grid(const GridField& f);

    double value(const TorusPoint& x) const;
    Vec2 grad(const TorusPoint& x) const;
    double lap(const TorusPoint& x) const;

    GridField sample(const PeriodicGrid& g) const;
    GridField sample_grad(const PeriodicGrid& g) const;
    GridField sample_lap(const PeriodicGrid& g) const;
    /// Upper bound for sup|∇f| (exact bound Σ 2π|a||k| for modes, grid max otherwise).
    double grad_sup() const;

private:
    std::vector<FourierMode> modes_;
    bool grid_ = false;
    GridField f_, g_, l_;
};

/// One gradient mode of a control: potential
/// p = amp·τ(t)·sin(2π k·x + phase)/(2π|k|), so v = ∇p has amplitude |amp|·|τ(t)|.
struct ControlMode {
    double amp = 0.0;
    int k1 = 0, k2 = 1;
    double phase = 0.0;
    std::string profile = "constant";  // constant | linear | sine
    double omega = 0.0;                // sine: τ = sin(ω t); linear: τ = ω t
    double tau(double t) const;
};

/// Control v(t, x) entering dX = … + v dt. Either a closed-form list of
/// gradient modes or time slices of a sampled vector field (piecewise linear
/// in time, bicubic in space).
class ControlField {
public:
    ControlField() = default;
    static ControlField from_modes(std::vector<ControlMode> modes);
    /// Sampled slices; gradient-type fields are checked for zero spectral curl.
    static ControlField from_slices(std::vector<double> times, std::vector<GridField> v, bool gradient_type);
    static ControlField from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    bool active() const { return !modes_.empty() || !slices_.empty(); }
    bool gradient_type() const { return gradient_; }
    Vec2 v(double t, const TorusPoint& x) const;
    /// v(t) on the grid (two components).
    GridField sample(double t, const PeriodicGrid& g) const;
    /// Potential p(t) for mode controls.
    GridField potential(double t, const PeriodicGrid& g) const;
    double sup_norm() const;
    const std::vector<ControlMode>& modes() const { return modes_; }

private:
    std::vector<ControlMode> modes_;
    std::vector<double> times_;
    std::vector<GridField> slices_;
    std::string file_;
    bool gradient_ = true;
};

/// max |curl v| / max(1, max|v|) computed spectrally.
double curl_residual(const GridField& v);

}  // namespace vortexldp
