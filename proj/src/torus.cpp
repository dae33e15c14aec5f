#include "vortexldp/torus.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "vortexldp/errors.hpp"

namespace vortexldp {

PeriodicGrid::PeriodicGrid(int M) : M_(M), h_(1.0 / M) {
    if (M < 8 || !std::has_single_bit(static_cast<unsigned>(M)))
        throw ConfigError("grid size M must be a power of two >= 8, got " + std::to_string(M));
}

GridField::GridField(const PeriodicGrid& g, int components, double fill)
    : grid_(g), comps_(components), values_(g.size() * components, fill) {
    if (components != 1 && components != 2)
        throw ConfigError("GridField supports 1 or 2 components");
}

GridField GridField::component(int c) const {
    GridField s(grid_, 1);
    for (std::size_t k = 0; k < grid_.size(); ++k) s.values_[k] = values_[k * comps_ + c];
    return s;
}

void GridField::set_component(int c, const GridField& s) {
    for (std::size_t k = 0; k < grid_.size(); ++k) values_[k * comps_ + c] = s.values_[k];
}

double GridField::mean(int c) const {
    double s = 0.0;
    for (std::size_t k = 0; k < grid_.size(); ++k) s += values_[k * comps_ + c];
    return s / static_cast<double>(grid_.size());
}

double GridField::min(int c) const {
    double m = values_[c];
    for (std::size_t k = 0; k < grid_.size(); ++k) m = std::min(m, values_[k * comps_ + c]);
    return m;
}

double GridField::max(int c) const {
    double m = values_[c];
    for (std::size_t k = 0; k < grid_.size(); ++k) m = std::max(m, values_[k * comps_ + c]);
    return m;
}

void require_density(const GridField& f, double tol, const char* what) {
    if (f.components() != 1) throw ConfigError(std::string(what) + " must be a scalar field");
    const double mn = f.min();
    const double mean = f.mean();
    if (!(mn >= -tol) || !(std::abs(mean - 1.0) <= tol))
        throw ConfigError(std::string(what) + " is not a probability density (min " +
                          std::to_string(mn) + ", mean " + std::to_string(mean) + ")");
}

GridField coarsen(const GridField& f, int factor) {
    const int M = f.M();
    if (factor < 1 || M % factor != 0) throw ConfigError("coarsen factor must divide M");
    const int Mc = M / factor;
    GridField out(PeriodicGrid(Mc), f.components());
    const double w = 1.0 / (static_cast<double>(factor) * factor);
    for (int I = 0; I < Mc; ++I)
        for (int J = 0; J < Mc; ++J)
            for (int c = 0; c < f.components(); ++c) {
                double s = 0.0;
                for (int a = 0; a < factor; ++a)
                    for (int b = 0; b < factor; ++b) {
                        const int i = ((I * factor - factor / 2 + a) % M + M) % M;
                        const int j = ((J * factor - factor / 2 + b) % M + M) % M;
                        s += f(i, j, c);
                    }
                out(I, J, c) = s * w;
            }
    return out;
}

namespace {

void cubic_weights(double t, double w[4]) {
    // Lagrange weights for nodes -1, 0, 1, 2 at offset t in [0,1).
    w[0] = -t * (t - 1.0) * (t - 2.0) / 6.0;
    w[1] = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    w[2] = -(t + 1.0) * t * (t - 2.0) / 2.0;
    w[3] = (t + 1.0) * t * (t - 1.0) / 6.0;
}

}  // namespace

double interpolate(const GridField& f, const TorusPoint& x, int c) {
    const int M = f.M();
    const double u = (x.x1 + 0.5) * M;
    const double v = (x.x2 + 0.5) * M;
    const int i0 = static_cast<int>(std::floor(u));
    const int j0 = static_cast<int>(std::floor(v));
    double wu[4], wv[4];
    cubic_weights(u - i0, wu);
    cubic_weights(v - j0, wv);
    double s = 0.0;
    for (int a = 0; a < 4; ++a) {
        const int i = ((i0 - 1 + a) % M + M) % M;
        double row = 0.0;
        for (int b = 0; b < 4; ++b) {
            const int j = ((j0 - 1 + b) % M + M) % M;
            row += wv[b] * f(i, j, c);
        }
        s += wu[a] * row;
    }
    return s;
}

void write_header(std::ostream& os, const char magic[4], uint32_t a, uint32_t b, uint32_t c) {
    static_assert(std::endian::native == std::endian::little, "little-endian host required");
    os.write(magic, 4);
    os.write(reinterpret_cast<const char*>(&a), 4);
    os.write(reinterpret_cast<const char*>(&b), 4);
    os.write(reinterpret_cast<const char*>(&c), 4);
}

void read_header(std::istream& is, const char magic[4], uint32_t& a, uint32_t& b, uint32_t& c) {
    char m[4];
    is.read(m, 4);
    is.read(reinterpret_cast<char*>(&a), 4);
    is.read(reinterpret_cast<char*>(&b), 4);
    is.read(reinterpret_cast<char*>(&c), 4);
    if (!is || std::memcmp(m, magic, 4) != 0)
        throw Error(std::string("bad file header, expected magic ") + std::string(magic, 4));
}

void write_grid_field(std::ostream& os, const GridField& f) {
    write_header(os, "T2F1", static_cast<uint32_t>(f.M()), static_cast<uint32_t>(f.components()), 0);
    os.write(reinterpret_cast<const char*>(f.values().data()),
             static_cast<std::streamsize>(f.values().size() * sizeof(double)));
}

GridField read_grid_field(std::istream& is) {
    uint32_t M, comps, reserved;
    read_header(is, "T2F1", M, comps, reserved);
    GridField f(PeriodicGrid(static_cast<int>(M)), static_cast<int>(comps));
    is.read(reinterpret_cast<char*>(f.values().data()),
            static_cast<std::streamsize>(f.values().size() * sizeof(double)));
    if (!is) throw Error("truncated GridField data");
    return f;
}

void save_grid_field(const GridField& f, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path);
    write_grid_field(os, f);
}

GridField load_grid_field(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot read " + path);
    return read_grid_field(is);
}

}  // namespace vortexldp
