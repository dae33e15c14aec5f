#include "vortexldp/kernels.hpp"

#include <boost/math/special_functions/expint.hpp>

#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>

#include "vortexldp/errors.hpp"
#include "vortexldp/spectral.hpp"

namespace vortexldp {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double two_pi = 2.0 * std::numbers::pi;
constexpr double euler_gamma = std::numbers::egamma;
constexpr double kTail = 40.0;  // e^{-40} ≈ 4e-18

double smooth_step_f(double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; }

// Ein(z) = ∫₀^z (1 − e^{−s})/s ds = E₁(z) + γ + log z.
double ein(double z) {
    if (z < 1.0) {
        double term = z, sum = z;
        for (int k = 2; k < 60; ++k) {
            term *= -z / k;
            const double add = term / k;
            sum += add;
            if (std::abs(add) < 1e-18) break;
        }
        return sum;
    }
    return boost::math::expint(1, z) + euler_gamma + std::log(z);
}

// 4-point Lagrange weights for nodes -1..2 at offset t.
inline void lagrange4(double t, double w[4]) {
    w[0] = -t * (t - 1.0) * (t - 2.0) / 6.0;
    w[1] = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    w[2] = -(t + 1.0) * t * (t - 2.0) / 2.0;
    w[3] = (t + 1.0) * t * (t - 1.0) / 6.0;
}

}  // namespace

double BumpPsi::operator()(double r) const {
    if (r <= inner) return 1.0;
    if (r >= outer) return 0.0;
    const double s = (r - inner) / (outer - inner);
    const double a = smooth_step_f(1.0 - s), b = smooth_step_f(s);
    return a / (a + b);
}

// ---------------------------------------------------------------------------

double EwaldGreen::tau_for_cutoff(int L) { return kTail / (4.0 * pi * pi * double(L) * double(L)); }

EwaldGreen::EwaldGreen(int cutoff) : L_(cutoff), tau_(tau_for_cutoff(cutoff)) {
    if (cutoff < 4) throw ConfigError("Fourier cutoff must be at least 4");
    images_ = 2 + static_cast<int>(std::ceil(std::sqrt(4.0 * tau_ * (kTail + 5.0))));
    const int W = 2 * L_ + 1;
    a_.assign(static_cast<std::size_t>(W) * W, 0.0);
    for (int k1 = -L_; k1 <= L_; ++k1)
        for (int k2 = -L_; k2 <= L_; ++k2)
            a_[static_cast<std::size_t>(k1 + L_) * W + (k2 + L_)] = fourier_coefficient(k1, k2);
}

double EwaldGreen::fourier_coefficient(int k1, int k2) const {
    const double q = double(k1) * k1 + double(k2) * k2;
    if (q == 0.0) return 0.0;
    const double lam = 4.0 * pi * pi * q;
    return std::exp(-lam * tau_) / lam;
}

double EwaldGreen::real_space_smooth(double d1, double d2) const {
    const double four_tau = 4.0 * tau_;
    double s = 0.0;
    for (int n1 = -images_; n1 <= images_; ++n1)
        for (int n2 = -images_; n2 <= images_; ++n2) {
            const double y1 = d1 - n1, y2 = d2 - n2;
            const double z = (y1 * y1 + y2 * y2) / four_tau;
            if (n1 == 0 && n2 == 0) {
                s += (-euler_gamma + std::log(four_tau) + ein(z)) / (4.0 * pi);
            } else if (z < kTail + 5.0) {
                s += boost::math::expint(1, z) / (4.0 * pi);
            }
        }
    return s - tau_;
}

Vec2 EwaldGreen::real_space_smooth_gradient(double d1, double d2) const {
    const double four_tau = 4.0 * tau_;
    Vec2 g{0.0, 0.0};
    for (int n1 = -images_; n1 <= images_; ++n1)
        for (int n2 = -images_; n2 <= images_; ++n2) {
            const double y1 = d1 - n1, y2 = d2 - n2;
            const double r2 = y1 * y1 + y2 * y2;
            const double z = r2 / four_tau;
            if (n1 == 0 && n2 == 0) {
                // ∇[E₁(z)/(4π) + log|x|/(2π)] = x (1 − e^{−z}) / (2π|x|²)
                if (r2 > 0.0) {
                    const double c = -std::expm1(-z) / (two_pi * r2);
                    g[0] += c * y1;
                    g[1] += c * y2;
                }
            } else if (z < kTail + 5.0) {
                const double c = -std::exp(-z) / (two_pi * r2);
                g[0] += c * y1;
                g[1] += c * y2;
            }
        }
    return g;
}

double EwaldGreen::fourier_part(double d1, double d2, Vec2* grad) const {
    const int W = 2 * L_ + 1;
    std::vector<cplx> e1(W), e2(W);
    for (int k = -L_; k <= L_; ++k) {
        e1[k + L_] = std::polar(1.0, two_pi * k * d1);
        e2[k + L_] = std::polar(1.0, two_pi * k * d2);
    }
    cplx val = 0.0, gx = 0.0, gy = 0.0;
    for (int k1 = -L_; k1 <= L_; ++k1) {
        const double* row = &a_[static_cast<std::size_t>(k1 + L_) * W];
        cplx inner = 0.0, inner_d = 0.0;
        for (int k2 = -L_; k2 <= L_; ++k2) {
            const cplx t = row[k2 + L_] * e2[k2 + L_];
            inner += t;
            inner_d += double(k2) * t;
        }
        val += e1[k1 + L_] * inner;
        gx += double(k1) * e1[k1 + L_] * inner;
        gy += e1[k1 + L_] * inner_d;
    }
    if (grad) {
        (*grad)[0] = -two_pi * gx.imag();
        (*grad)[1] = -two_pi * gy.imag();
    }
    return val.real();
}

double EwaldGreen::smooth_value(double d1, double d2) const {
    return fourier_part(d1, d2, nullptr) + real_space_smooth(d1, d2);
}

Vec2 EwaldGreen::smooth_gradient(double d1, double d2) const {
    Vec2 gf;
    fourier_part(d1, d2, &gf);
    const Vec2 gr = real_space_smooth_gradient(d1, d2);
    return {gf[0] + gr[0], gf[1] + gr[1]};
}

double EwaldGreen::value(double d1, double d2) const {
    const double r2 = d1 * d1 + d2 * d2;
    if (r2 == 0.0) throw SingularityError("Green function evaluated at the origin");
    return smooth_value(d1, d2) - std::log(r2) / (4.0 * pi);
}

// ---------------------------------------------------------------------------

KernelTable::KernelTable(int M, int cutoff) : grid_(M), cutoff_(cutoff) {
    build_fresh();
}

std::shared_ptr<const KernelTable> KernelTable::shared() {
    static std::shared_ptr<const KernelTable> instance = std::make_shared<const KernelTable>(256, 256);
    return instance;
}

void KernelTable::build_fresh() {
    const int M = grid_.M();
    const int Leff = std::min(cutoff_, M / 2 - 1);
    oracle_ = std::make_shared<EwaldGreen>(cutoff_);
    const EwaldGreen split(Leff);
    Spectrum S(M);
    for (int i = 0; i < M; ++i) {
        const int k1 = Spectrum::wavenumber(i, M);
        for (int j = 0; j < S.nk2(); ++j)
            if (std::abs(k1) <= Leff && j <= Leff) S.at(i, j) = split.fourier_coefficient(k1, j);
    }
    const GridField F = from_spectral(S);
    Spectrum S1 = S, S2 = S;
    S1.apply([](int k1, int) { return cplx(0.0, two_pi * k1); });
    S2.apply([](int, int k2) { return cplx(0.0, two_pi * k2); });
    const GridField F1 = from_spectral(S1), F2 = from_spectral(S2);

    stride_ = M + 2 * pad_;
    const std::size_t T = static_cast<std::size_t>(stride_) * stride_;
    n0_.assign(T, 0.0);
    g1_.assign(T, 0.0);
    g2_.assign(T, 0.0);
    const double h = grid_.h();
    for (int I = -pad_; I < M + pad_; ++I)
        for (int J = -pad_; J < M + pad_; ++J) {
            const int i = (I % M + M) % M, j = (J % M + M) % M;
            const double x1 = -0.5 + I * h, x2 = -0.5 + J * h;
            const std::size_t t = static_cast<std::size_t>(I + pad_) * stride_ + (J + pad_);
            n0_[t] = F(i, j) + split.real_space_smooth(x1, x2);
            const Vec2 gr = split.real_space_smooth_gradient(x1, x2);
            g1_[t] = F1(i, j) + gr[0];
            g2_[t] = F2(i, j) + gr[1];
        }

    N_values_ = GridField(grid_, 1);
    K_values_ = GridField(grid_, 2);
    double sum = 0.0;
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) {
            if (i == M / 2 && j == M / 2) continue;
            const double x1 = grid_.node(i), x2 = grid_.node(j);
            N_values_(i, j) = N_unchecked(x1, x2);
            const Vec2 k = K_unchecked(x1, x2);
            K_values_(i, j, 0) = k[0];
            K_values_(i, j, 1) = k[1];
            sum += N_values_(i, j);
        }
    N_values_(M / 2, M / 2) = -sum;
}

void KernelTable::build_from_samples() {
    const int M = grid_.M();
    const int Leff = std::min(cutoff_, M / 2 - 1);
    oracle_ = std::make_shared<EwaldGreen>(cutoff_);
    const double n0_origin = EwaldGreen(Leff).smooth_value(0.0, 0.0);
    stride_ = M + 2 * pad_;
    const std::size_t T = static_cast<std::size_t>(stride_) * stride_;
    n0_.assign(T, 0.0);
    g1_.assign(T, 0.0);
    g2_.assign(T, 0.0);
    const double h = grid_.h();
    for (int I = -pad_; I < M + pad_; ++I)
        for (int J = -pad_; J < M + pad_; ++J) {
            const int i = (I % M + M) % M, j = (J % M + M) % M;
            const double x1 = -0.5 + I * h, x2 = -0.5 + J * h;
            const std::size_t t = static_cast<std::size_t>(I + pad_) * stride_ + (J + pad_);
            const double r2 = x1 * x1 + x2 * x2;
            if (I == M / 2 && J == M / 2) {
                n0_[t] = n0_origin;
                continue;
            }
            n0_[t] = N_values_(i, j) + std::log(r2) / (4.0 * pi);
            // ∂₁𝒩 = 𝒦₂, ∂₂𝒩 = −𝒦₁
            g1_[t] = K_values_(i, j, 1) + x1 / (two_pi * r2);
            g2_[t] = -K_values_(i, j, 0) + x2 / (two_pi * r2);
        }
}

double KernelTable::N0(double d1, double d2) const {
    const double u = (d1 + 0.5) * grid_.M(), v = (d2 + 0.5) * grid_.M();
    const int i0 = static_cast<int>(std::floor(u)), j0 = static_cast<int>(std::floor(v));
    double wu[4], wv[4];
    lagrange4(u - i0, wu);
    lagrange4(v - j0, wv);
    double s = 0.0;
    for (int a = 0; a < 4; ++a) {
        const double* row = &n0_[static_cast<std::size_t>(i0 - 1 + a + pad_) * stride_ + (j0 - 1 + pad_)];
        s += wu[a] * (wv[0] * row[0] + wv[1] * row[1] + wv[2] * row[2] + wv[3] * row[3]);
    }
    return s;
}

Vec2 KernelTable::grad_N0(double d1, double d2) const {
    const double u = (d1 + 0.5) * grid_.M(), v = (d2 + 0.5) * grid_.M();
    const int i0 = static_cast<int>(std::floor(u)), j0 = static_cast<int>(std::floor(v));
    double wu[4], wv[4];
    lagrange4(u - i0, wu);
    lagrange4(v - j0, wv);
    double s1 = 0.0, s2 = 0.0;
    for (int a = 0; a < 4; ++a) {
        const std::size_t off = static_cast<std::size_t>(i0 - 1 + a + pad_) * stride_ + (j0 - 1 + pad_);
        const double* r1 = &g1_[off];
        const double* r2 = &g2_[off];
        s1 += wu[a] * (wv[0] * r1[0] + wv[1] * r1[1] + wv[2] * r1[2] + wv[3] * r1[3]);
        s2 += wu[a] * (wv[0] * r2[0] + wv[1] * r2[1] + wv[2] * r2[2] + wv[3] * r2[3]);
    }
    return {s1, s2};
}

double KernelTable::N_unchecked(double d1, double d2) const {
    const double r2 = d1 * d1 + d2 * d2;
    return N0(d1, d2) - std::log(r2) / (4.0 * pi);
}

Vec2 KernelTable::K_unchecked(double d1, double d2) const {
    const double r2 = d1 * d1 + d2 * d2;
    if (r2 == 0.0) return {0.0, 0.0};
    const Vec2 g = grad_N0(d1, d2);
    const double c = 1.0 / (two_pi * r2);
    return {-g[1] + c * d2, g[0] - c * d1};
}

double KernelTable::green(const Displacement& x, GreenMode mode) const {
    if (x.r == 0.0) throw SingularityError("Green function evaluated at the origin");
    if (mode == GreenMode::spectral_sum) return oracle_->value(x.d1, x.d2);
    return N_unchecked(x.d1, x.d2);
}

Vec2 KernelTable::K(const Displacement& x) const {
    if (x.r == 0.0) throw SingularityError("Biot-Savart kernel evaluated at the origin");
    return K_unchecked(x.d1, x.d2);
}

double KernelTable::sigma1(const Displacement& x) const {
    const double n0 = N0(x.d1, x.d2);
    if (x.r == 0.0) return n0;
    return n0 + (BumpPsi{}(x.r) - 1.0) * std::log(x.r) / two_pi;
}

void KernelTable::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path);
    write_header(os, "T2K1", static_cast<uint32_t>(grid_.M()), static_cast<uint32_t>(cutoff_), 0);
    write_grid_field(os, N_values_);
    write_grid_field(os, K_values_);
}

KernelTable KernelTable::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot read " + path);
    uint32_t M, cutoff, reserved;
    read_header(is, "T2K1", M, cutoff, reserved);
    KernelTable kt{Empty{}};
    kt.grid_ = PeriodicGrid(static_cast<int>(M));
    kt.cutoff_ = static_cast<int>(cutoff);
    kt.N_values_ = read_grid_field(is);
    kt.K_values_ = read_grid_field(is);
    if (kt.N_values_.M() != static_cast<int>(M) || kt.K_values_.components() != 2)
        throw Error("inconsistent kernel table file " + path);
    kt.build_from_samples();
    return kt;
}

KernelTable KernelTable::load_or_build(const std::string& path, int M, int cutoff) {
    {
        std::ifstream is(path, std::ios::binary);
        if (is) {
            uint32_t m = 0, c = 0, r = 0;
            try {
                read_header(is, "T2K1", m, c, r);
                if (static_cast<int>(m) == M && static_cast<int>(c) == cutoff) return load(path);
            } catch (const Error&) {
            }
        }
    }
    KernelTable kt(M, cutoff);
    kt.save(path);
    return kt;
}

Vec2 bounded_w(const KernelTable& kt, const TorusPoint& x, const TorusPoint& y) {
    const Displacement d = min_image(x, y);
    if (d.r == 0.0) return {0.0, 0.0};
    const Vec2 k = kt.K_unchecked(d.d1, d.d2);
    return {d.r * k[0], d.r * k[1]};
}

// ---------------------------------------------------------------------------

namespace {

double theta_fourier(double t, double s) {
    double sum = 1.0;
    for (int n = 1;; ++n) {
        const double e = std::exp(-4.0 * pi * pi * double(n) * n * t);
        if (e < 1e-20) break;
        sum += 2.0 * e * std::cos(two_pi * n * s);
    }
    return sum;
}

double theta_images(double t, double s) {
    const int R = 1 + static_cast<int>(std::ceil(std::sqrt(4.0 * t * 46.0)));
    double sum = 0.0;
    for (int n = -R; n <= R; ++n) sum += std::exp(-(s - n) * (s - n) / (4.0 * t));
    return sum / std::sqrt(4.0 * pi * t);
}

}  // namespace

double heat_kernel(double t, const Displacement& x, HeatMode mode) {
    if (!(t > 0.0)) throw ConfigError("heat kernel requires t > 0");
    if (mode == HeatMode::fourier) return theta_fourier(t, x.d1) * theta_fourier(t, x.d2);
    return theta_images(t, x.d1) * theta_images(t, x.d2);
}

GridField heat_kernel_field(double t, const PeriodicGrid& g, HeatMode mode) {
    if (!(t > 0.0)) throw ConfigError("heat kernel requires t > 0");
    const int M = g.M();
    std::vector<double> th(M);
    for (int i = 0; i < M; ++i)
        th[i] = mode == HeatMode::fourier ? theta_fourier(t, g.node(i)) : theta_images(t, g.node(i));
    GridField f(g, 1);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) f(i, j) = th[i] * th[j];
    return f;
}

GridField heat_convolve(double t, const GridField& f) {
    if (t < 0.0) throw ConfigError("heat_convolve requires t >= 0");
    if (t == 0.0) return f;
    return spectral::heat(f, t);
}

GridField biot_savart_velocity(const GridField& rho) {
    const int M = rho.M();
    const Spectrum s = to_spectral(rho);
    Spectrum u1 = s, u2 = s;
    u1.apply([M](int k1, int k2) {
        const double q = double(k1) * k1 + double(k2) * k2;
        return q == 0.0 ? cplx(0.0) : -spectral::d_symbol(k2, M) / (4.0 * pi * pi * q);
    });
    u2.apply([M](int k1, int k2) {
        const double q = double(k1) * k1 + double(k2) * k2;
        return q == 0.0 ? cplx(0.0) : spectral::d_symbol(k1, M) / (4.0 * pi * pi * q);
    });
    GridField u(rho.grid(), 2);
    u.set_component(0, from_spectral(u1));
    u.set_component(1, from_spectral(u2));
    return u;
}

GridField green_gradient(const GridField& rho) {
    return spectral::gradient(spectral::inverse_neg_laplacian(rho));
}

}  // namespace vortexldp
