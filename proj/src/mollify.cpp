#include "vortexldp/mollify.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
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
constexpr int kLast = MollifierProfile::kSamples - 1;
constexpr double kDs = 1.0 / kLast;
constexpr double kZhatMax = 384.0;
constexpr double kZhatStep = 1.0 / 128.0;

using GL100 = boost::math::quadrature::gauss<double, 100>;
using GL20 = boost::math::quadrature::gauss<double, 20>;

double base_shape(double r) {
    const double q = 1.0 - 4.0 * r * r;
    return q > 0.0 ? std::exp(-1.0 / q) : 0.0;
}

// ∫₀^{2π} ζ(|y − x|) dθ for |x| = s, |y| = r (without the constant C²).
double angular(double s, double r) {
    if (std::abs(s - r) >= 0.5) return 0.0;
    double theta_max = pi;
    if (s + r > 0.5) {
        const double c = (s * s + r * r - 0.25) / (2.0 * s * r);
        theta_max = std::acos(std::clamp(c, -1.0, 1.0));
    }
    auto f = [&](double t) { return base_shape(std::sqrt(std::max(0.0, s * s + r * r - 2.0 * s * r * std::cos(t)))); };
    return 2.0 * GL100::integrate(f, 0.0, theta_max);
}

inline void lagrange4(double t, double w[4]) {
    w[0] = -t * (t - 1.0) * (t - 2.0) / 6.0;
    w[1] = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    w[2] = -(t + 1.0) * t * (t - 2.0) / 2.0;
    w[3] = (t + 1.0) * t * (t - 1.0) / 6.0;
}

}  // namespace

int MollifierSchedule::m(int n) const {
    if (n < 1) throw ConfigError("mollifier level must be ≥ 1");
    const int v = static_cast<int>(std::ceil(c * std::pow(double(n), p) - 1e-12));
    return std::max(m_min, v);
}

// ---------------------------------------------------------------------------

MollifierProfile::MollifierProfile() {
    using boost::math::quadrature::gauss_kronrod;
    const double mass = gauss_kronrod<double, 61>::integrate(
        [](double r) { return two_pi * r * base_shape(r); }, 0.0, 0.5, 15, 1e-15);
    C_ = 1.0 / mass;

    // G(s) = ∫ ζ(y) ζ(x − y) dy, |x| = s, in polar coordinates about 0.
    G_.resize(kSamples);
#pragma omp parallel for schedule(dynamic, 16)
    for (int i = 0; i < kSamples; ++i) {
        const double s = i * kDs;
        const double lo = std::max(0.0, s - 0.5);
        auto f = [&](double r) { return r * base_shape(r) * angular(s, r); };
        G_[i] = i == kLast ? 0.0 : C_ * C_ * GL100::integrate(f, lo, 0.5);
    }

    // Cumulative ∫₀^s ρG: per panel 20-point Gauss on the cubic interpolant.
    E_.assign(kSamples, 0.0);
    for (int i = 0; i < kLast; ++i) {
        const double a = i * kDs, b = a + kDs;
        E_[i + 1] = E_[i] + GL20::integrate([&](double u) { return u * G(u); }, a, b);
    }
    // Rescale so that the total 2π∫ρG is exactly 1 in floating point terms;
    // the correction is at quadrature-error level.
    const double scale = 1.0 / (two_pi * E_[kLast]);
    for (double& g : G_) g *= scale;
    for (double& e : E_) e *= scale;
    Etot_ = 1.0 / two_pi;
    G0_ = G_[0];

    // P(s) = ∫_s^1 ρG log ρ, accumulated from 1 downwards; the first panel has
    // a ρ log ρ endpoint and goes through tanh-sinh.
    P_.assign(kSamples, 0.0);
    for (int i = kLast - 1; i >= 1; --i) {
        const double a = i * kDs, b = a + kDs;
        P_[i] = P_[i + 1] + GL20::integrate([&](double u) { return u * G(u) * std::log(u); }, a, b);
    }
    {
        boost::math::quadrature::tanh_sinh<double> ts;
        P_[0] = P_[1] + ts.integrate([&](double u) { return u > 0.0 ? u * G(u) * std::log(u) : 0.0; }, 0.0, kDs);
    }

    double b = 0.0;
    for (int i = 0; i < kLast; ++i) {
        const double a = i * kDs;
        b += GL20::integrate([&](double u) { return u * u * u * G(u); }, a, a + kDs);
    }
    B_ = 0.5 * pi * b;
}

std::shared_ptr<const MollifierProfile> MollifierProfile::shared() {
    static const auto inst = std::make_shared<const MollifierProfile>();
    return inst;
}

double MollifierProfile::zeta(double r) const { return r < 0.5 ? C_ * base_shape(r) : 0.0; }

double MollifierProfile::zeta_prime(double r) const {
    const double q = 1.0 - 4.0 * r * r;
    if (q <= 0.0) return 0.0;
    return -C_ * std::exp(-1.0 / q) * 8.0 * r / (q * q);
}

double MollifierProfile::table_eval(const std::vector<double>& t, double s) const {
    const double u = s / kDs;
    int i0 = static_cast<int>(u);
    i0 = std::clamp(i0, 1, kLast - 2);
    double w[4];
    lagrange4(u - i0, w);
    return w[0] * t[i0 - 1] + w[1] * t[i0] + w[2] * t[i0 + 1] + w[3] * t[i0 + 2];
}

double MollifierProfile::G(double s) const {
    s = std::abs(s);
    if (s >= 1.0) return 0.0;
    if (s < kDs) {
        // Even profile: use the mirrored node G(−h) = G(h).
        double w[4];
        lagrange4(s / kDs, w);
        return w[0] * G_[1] + w[1] * G_[0] + w[2] * G_[1] + w[3] * G_[2];
    }
    return table_eval(G_, s);
}

double MollifierProfile::E(double s) const {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return Etot_;
    if (s < 0.05) return s * s * E_over_s2(s);
    return table_eval(E_, s);
}

double MollifierProfile::D(double s) const {
    if (s >= 1.0) return 0.0;
    if (s < 0.05) return Etot_ - E(s);
    // The cumulative table is accurate in absolute terms; near 1 use it directly.
    return Etot_ - table_eval(E_, s);
}

double MollifierProfile::E_over_s2(double s) const {
    if (s <= 0.0) return 0.5 * G0_;
    if (s >= 0.05) return E(s) / (s * s);
    return GL20::integrate([&](double u) { return u * G(s * u); }, 0.0, 1.0);
}

double MollifierProfile::P(double s) const {
    if (s >= 1.0) return 0.0;
    if (s <= 0.0) return P_[0];
    if (s < kDs) {
        // Leading behaviour P(0) − G(0)(s² log s/2 − s²/4).
        return P_[0] - G0_ * (0.5 * s * s * std::log(s) - 0.25 * s * s);
    }
    return table_eval(P_, s);
}

void MollifierProfile::build_zeta_hat() const {
    // ζ̂(κ) = 2∫₀^{1/2} A(x) cos(2πκx) dx with the projection
    // A(x) = 2∫₀^{√(1/4−x²)} ζ(√(x²+y²)) dy, on composite Gauss nodes.
    constexpr int panels = 64;
    const auto& xs = GL20::abscissa();
    const auto& ws = GL20::weights();
    std::vector<double> node, weight;
    for (int q = 0; q < panels; ++q) {
        const double a = 0.5 * q / panels, half = 0.25 / panels, mid = a + half;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const int signs = xs[i] == 0.0 ? 1 : 2;
            for (int sg = 0; sg < signs; ++sg) {
                node.push_back(mid + (sg ? -1.0 : 1.0) * half * xs[i]);
                weight.push_back(half * ws[i]);
            }
        }
    }
    std::vector<double> proj(node.size());
    for (std::size_t i = 0; i < node.size(); ++i) {
        const double x = node[i], Y = std::sqrt(std::max(0.0, 0.25 - x * x));
        proj[i] = 2.0 * weight[i] * 2.0 *
                  GL100::integrate([&](double y) { return zeta(std::sqrt(x * x + y * y)); }, 0.0, Y);
    }
    const int nk = static_cast<int>(kZhatMax / kZhatStep) + 1;
    zhat_.assign(nk, 0.0);
    zhat_dk_ = kZhatStep;
#pragma omp parallel for schedule(static)
    for (int k = 0; k < nk; ++k) {
        const double w = two_pi * k * kZhatStep;
        double sum = 0.0;
        for (std::size_t i = 0; i < node.size(); ++i) sum += proj[i] * std::cos(w * node[i]);
        zhat_[k] = sum;
    }
}

double MollifierProfile::zeta_hat(double kappa) const {
    std::call_once(zhat_once_, [this] { build_zeta_hat(); });
    kappa = std::abs(kappa);
    if (kappa >= kZhatMax - 2.0 * kZhatStep) return 0.0;
    const double u = kappa / zhat_dk_;
    int i0 = static_cast<int>(u);
    double w[4];
    if (i0 == 0) {
        lagrange4(u, w);
        return w[0] * zhat_[1] + w[1] * zhat_[0] + w[2] * zhat_[1] + w[3] * zhat_[2];
    }
    lagrange4(u - i0, w);
    return w[0] * zhat_[i0 - 1] + w[1] * zhat_[i0] + w[2] * zhat_[i0 + 1] + w[3] * zhat_[i0 + 2];
}

double MollifierProfile::lemma_constant(double s_max) const {
    double c = 0.0;
    for (int i = 0; i * kDs <= s_max; ++i) c = std::max(c, D(i * kDs) / G_[i]);
    return c;
}

// ---------------------------------------------------------------------------

MollifierFamily::MollifierFamily(MollifierSchedule s) : sched_(s), prof_(MollifierProfile::shared()) {}

const MollifierFamily& MollifierFamily::standard() {
    static const MollifierFamily fam;
    return fam;
}

double MollifierFamily::zeta_m(double r, int m) const { return double(m) * m * prof_->zeta(m * r); }
double MollifierFamily::G_m(double r, int m) const { return double(m) * m * prof_->G(m * r); }

double zeta_eval(const MollifierFamily& fam, double r, int n) {
    if (r < 0.0) throw ConfigError("radius must be non-negative");
    return fam.zeta_m(r, fam.m(n));
}

double G_eval(const MollifierFamily& fam, double r, int n) {
    if (r < 0.0) throw ConfigError("radius must be non-negative");
    return fam.G_m(r, fam.m(n));
}

double mollified_green_m(const KernelTable& kt, const MollifierProfile& p, const Displacement& x, int m) {
    const double shift = p.B() / (double(m) * m);
    const double s = m * x.r;
    if (s >= 1.0) return kt.green(x) + shift;
    const double lr = x.r > 0.0 ? std::log(x.r) * p.E(s) : 0.0;
    return kt.N0(x.d1, x.d2) - lr + std::log(double(m)) * p.D(s) - p.P(s) + shift;
}

Vec2 mollified_K_m(const KernelTable& kt, const MollifierProfile& p, const Displacement& x, int m) {
    const double s = m * x.r;
    if (s >= 1.0) return kt.K(x);
    // 𝒦 = (x₂, −x₁)/(2πr²) + 𝒦₀; the correction D(s)(−x₂, x₁)/r² leaves
    // E(s)(x₂, −x₁)/r² = m² (E(s)/s²)(x₂, −x₁).
    const Vec2 g = kt.grad_N0(x.d1, x.d2);
    const double c = double(m) * m * p.E_over_s2(s);
    return {-g[1] + c * x.d2, g[0] - c * x.d1};
}

double mollified_green(const KernelTable& kt, const MollifierFamily& fam, const Displacement& x, int n) {
    return mollified_green_m(kt, fam.profile(), x, fam.m(n));
}

Vec2 mollified_K(const KernelTable& kt, const MollifierFamily& fam, const Displacement& x, int n) {
    return mollified_K_m(kt, fam.profile(), x, fam.m(n));
}

// ---------------------------------------------------------------------------

int required_grid_size(int m) {
    int M = 8;
    while (M < 8 * m) M *= 2;
    return M;
}

namespace {

struct Footprint {
    int i0, j0, w;     // first node indices (unwrapped) and width
    double scale;      // per-particle normalization
};

// Nodes within the bump support around X and the factor that makes the
// sampled bump integrate to exactly 1/n on the grid.
Footprint footprint(const TorusPoint& X, int m, const PeriodicGrid& g, const MollifierProfile& p, double inv_n) {
    const double h = g.h();
    const double R = 0.5 / m;
    Footprint fp;
    fp.i0 = static_cast<int>(std::ceil((X.x1 - R + 0.5) / h));
    fp.j0 = static_cast<int>(std::ceil((X.x2 - R + 0.5) / h));
    fp.w = static_cast<int>(std::floor(2.0 * R / h)) + 2;
    double sum = 0.0;
    for (int a = 0; a < fp.w; ++a) {
        const double y1 = -0.5 + (fp.i0 + a) * h - X.x1;
        for (int b = 0; b < fp.w; ++b) {
            const double y2 = -0.5 + (fp.j0 + b) * h - X.x2;
            sum += p.zeta(m * std::sqrt(y1 * y1 + y2 * y2));
        }
    }
    fp.scale = inv_n / (sum * h * h);
    return fp;
}

inline int wrap_index(int i, int M) { return ((i % M) + M) % M; }

void check_resolution(int m, const PeriodicGrid& g) {
    if (g.h() > 1.0 / (8.0 * m) + 1e-15)
        throw ConfigError("grid under-resolves the mollifier at m = " + std::to_string(m) +
                          "; need M >= " + std::to_string(required_grid_size(m)));
}

GridField deposit_spectral(const std::vector<TorusPoint>& X, int m, const PeriodicGrid& g,
                           const MollifierProfile& p) {
    const int M = g.M(), H = M / 2 + 1;
    Spectrum S(M);
    const double inv_n = 1.0 / X.size();
    std::vector<cplx> e1(M), e2(H);
    for (const TorusPoint& x : X) {
        for (int a = 0; a < M; ++a) e1[a] = std::polar(1.0, -two_pi * Spectrum::wavenumber(a, M) * x.x1);
        for (int b = 0; b < H; ++b) e2[b] = std::polar(inv_n, -two_pi * b * x.x2);
        for (int a = 0; a < M; ++a)
            for (int b = 0; b < H; ++b) S.at(a, b) += e1[a] * e2[b];
    }
    for (int a = 0; a < M; ++a)
        for (int b = 0; b < H; ++b) {
            const double k1 = Spectrum::wavenumber(a, M), k2 = b;
            S.at(a, b) *= p.zeta_hat(std::sqrt(k1 * k1 + k2 * k2) / m);
        }
    (void)g;
    return from_spectral(S);
}

}  // namespace

GridField mollify_empirical_serial(const std::vector<TorusPoint>& X, int m, const PeriodicGrid& g,
                                   const MollifierProfile& p) {
    if (X.empty()) throw ConfigError("mollify_empirical needs at least one particle");
    check_resolution(m, g);
    const int M = g.M();
    const double h = g.h(), inv_n = 1.0 / X.size();
    GridField f(g, 1);
    for (const TorusPoint& x : X) {
        const Footprint fp = footprint(x, m, g, p, inv_n);
        for (int a = 0; a < fp.w; ++a) {
            const double y1 = -0.5 + (fp.i0 + a) * h - x.x1;
            const int i = wrap_index(fp.i0 + a, M);
            for (int b = 0; b < fp.w; ++b) {
                const double y2 = -0.5 + (fp.j0 + b) * h - x.x2;
                f(i, wrap_index(fp.j0 + b, M)) += fp.scale * p.zeta(m * std::sqrt(y1 * y1 + y2 * y2));
            }
        }
    }
    return f;
}

GridField mollify_empirical_m(const std::vector<TorusPoint>& X, int m, const PeriodicGrid& g,
                              const MollifierProfile& p, DepositMode mode) {
    if (X.empty()) throw ConfigError("mollify_empirical needs at least one particle");
    if (mode == DepositMode::spectral) return deposit_spectral(X, m, g, p);
    check_resolution(m, g);
    const int M = g.M();
    const int n = static_cast<int>(X.size());
    const double h = g.h(), inv_n = 1.0 / n;

    std::vector<Footprint> fps(n);
#pragma omp parallel for schedule(static)
    for (int q = 0; q < n; ++q) fps[q] = footprint(X[q], m, g, p, inv_n);

    // Bucket particles by the grid rows they touch, keeping particle order, so
    // each row is accumulated by one thread in the same order as the serial
    // scatter. The result is bitwise independent of the thread count.
    std::vector<std::vector<std::pair<int, int>>> rows(M);  // (particle, a)
    for (int q = 0; q < n; ++q)
        for (int a = 0; a < fps[q].w; ++a) rows[wrap_index(fps[q].i0 + a, M)].emplace_back(q, a);

    GridField f(g, 1);
#pragma omp parallel for schedule(dynamic, 4)
    for (int i = 0; i < M; ++i) {
        for (const auto& [q, a] : rows[i]) {
            const Footprint& fp = fps[q];
            const double y1 = -0.5 + (fp.i0 + a) * h - X[q].x1;
            for (int b = 0; b < fp.w; ++b) {
                const double y2 = -0.5 + (fp.j0 + b) * h - X[q].x2;
                f(i, wrap_index(fp.j0 + b, M)) += fp.scale * p.zeta(m * std::sqrt(y1 * y1 + y2 * y2));
            }
        }
    }
    return f;
}

GridField mollify_empirical(const std::vector<TorusPoint>& X, int n, const PeriodicGrid& g,
                            const MollifierFamily& fam, DepositMode mode) {
    return mollify_empirical_m(X, fam.m(n), g, fam.profile(), mode);
}

// ---------------------------------------------------------------------------

MollifiedKernelTable::MollifiedKernelTable(const KernelTable& kt, const MollifierFamily& fam, int level, int M)
    : level_(level), m_(fam.m(level)), cutoff_(kt.fourier_cutoff()) {
    if (M == 0) M = std::max(256, 2 * required_grid_size(m_));
    const PeriodicGrid g(M);
    N_ = GridField(g, 1);
    K_ = GridField(g, 2);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) {
            const Displacement d = displacement(g.node(i), g.node(j));
            N_(i, j) = mollified_green_m(kt, fam.profile(), d, m_);
            const Vec2 k = mollified_K_m(kt, fam.profile(), d, m_);
            K_(i, j, 0) = k[0];
            K_(i, j, 1) = k[1];
        }
}

Vec2 MollifiedKernelTable::K(const Displacement& x) const {
    const TorusPoint p(x.d1, x.d2);
    return {interpolate(K_, p, 0), interpolate(K_, p, 1)};
}

double MollifiedKernelTable::N(const Displacement& x) const { return interpolate(N_, TorusPoint(x.d1, x.d2), 0); }

void MollifiedKernelTable::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path);
    write_header(os, "T2M1", static_cast<uint32_t>(N_.M()), static_cast<uint32_t>(cutoff_),
                 static_cast<uint32_t>(level_));
    const uint32_t m = static_cast<uint32_t>(m_);
    os.write(reinterpret_cast<const char*>(&m), sizeof m);
    write_grid_field(os, N_);
    write_grid_field(os, K_);
}

MollifiedKernelTable MollifiedKernelTable::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot read " + path);
    uint32_t M, cutoff, level, m;
    read_header(is, "T2M1", M, cutoff, level);
    is.read(reinterpret_cast<char*>(&m), sizeof m);
    MollifiedKernelTable t;
    t.level_ = static_cast<int>(level);
    t.m_ = static_cast<int>(m);
    t.cutoff_ = static_cast<int>(cutoff);
    t.N_ = read_grid_field(is);
    t.K_ = read_grid_field(is);
    if (!is || t.N_.M() != static_cast<int>(M) || t.K_.components() != 2)
        throw Error("inconsistent mollified kernel file " + path);
    return t;
}

}  // namespace vortexldp
