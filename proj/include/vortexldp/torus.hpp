#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace vortexldp {

/// Reduce a coordinate to the canonical half-open cell [-1/2, 1/2).
inline double wrap(double x) {
    double r = x - std::floor(x + 0.5);
    if (r >= 0.5) r -= 1.0;
    else if (r < -0.5) r += 1.0;
    return r;
}

struct TorusPoint {
    double x1 = 0.0;
    double x2 = 0.0;
    TorusPoint() = default;
    TorusPoint(double a, double b) : x1(wrap(a)), x2(wrap(b)) {}
};

struct Displacement {
    double d1 = 0.0;
    double d2 = 0.0;
    double r = 0.0;
};

/// Minimum-image representative of a raw vector.
inline Displacement displacement(double d1, double d2) {
    Displacement d;
    d.d1 = wrap(d1);
    d.d2 = wrap(d2);
    d.r = std::sqrt(d.d1 * d.d1 + d.d2 * d.d2);
    return d;
}

/// Representative of x - y with the smallest norm.
inline Displacement min_image(const TorusPoint& x, const TorusPoint& y) {
    return displacement(x.x1 - y.x1, x.x2 - y.x2);
}

class PeriodicGrid {
public:
    PeriodicGrid() = default;
    explicit PeriodicGrid(int M);

    int M() const { return M_; }
    double h() const { return h_; }
    std::size_t size() const { return static_cast<std::size_t>(M_) * M_; }
    double node(int i) const { return -0.5 + i * h_; }
    bool operator==(const PeriodicGrid& o) const { return M_ == o.M_; }

private:
    int M_ = 0;
    double h_ = 0.0;
};

/// Periodic scalar (1 component) or vector (2 components) field.
/// Storage is row-major: index ((i*M)+j)*components + c, i along x1.
class GridField {
public:
    GridField() = default;
    GridField(const PeriodicGrid& g, int components = 1, double fill = 0.0);

    const PeriodicGrid& grid() const { return grid_; }
    int M() const { return grid_.M(); }
    int components() const { return comps_; }

    double& operator()(int i, int j, int c = 0) {
        return values_[(static_cast<std::size_t>(i) * grid_.M() + j) * comps_ + c];
    }
    double operator()(int i, int j, int c = 0) const {
        return values_[(static_cast<std::size_t>(i) * grid_.M() + j) * comps_ + c];
    }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    /// Copy of one component as a scalar field.
    GridField component(int c) const;
    void set_component(int c, const GridField& s);

    /// Grid average of a scalar field (component c).
    double mean(int c = 0) const;
    double min(int c = 0) const;
    double max(int c = 0) const;

    /// Evaluate f(x1,x2) at every node into component c.
    template <class F>
    GridField& fill_with(F&& f, int c = 0) {
        const int M = grid_.M();
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < M; ++j) (*this)(i, j, c) = f(grid_.node(i), grid_.node(j));
        return *this;
    }

private:
    PeriodicGrid grid_;
    int comps_ = 1;
    std::vector<double> values_;
};

/// Throws unless f is a nonnegative field with grid mean 1 within tol.
void require_density(const GridField& f, double tol = 1e-8, const char* what = "field");

/// Block average by an integer factor (M must be divisible by factor).
/// Coarse node I collects fine nodes I*f - f/2 .. I*f + f/2 - 1 (periodic).
GridField coarsen(const GridField& f, int factor);

/// Bicubic (4x4 Lagrange) periodic interpolation of component c at x.
double interpolate(const GridField& f, const TorusPoint& x, int c = 0);

void save_grid_field(const GridField& f, const std::string& path);
GridField load_grid_field(const std::string& path);

/// Serialization helpers shared by the table caches.
void write_grid_field(std::ostream& os, const GridField& f);
GridField read_grid_field(std::istream& is);
void write_header(std::ostream& os, const char magic[4], uint32_t a, uint32_t b, uint32_t c);
void read_header(std::istream& is, const char magic[4], uint32_t& a, uint32_t& b, uint32_t& c);

}  // namespace vortexldp
