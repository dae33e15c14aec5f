#include "vortexldp/spectral.hpp"

#include <fftw3.h>
#include <omp.h>

#include <map>
#include <mutex>
#include <numbers>

namespace vortexldp {

namespace {

struct Plans {
    fftw_plan r2c;
    fftw_plan c2r;
};

std::mutex plan_mutex;

const Plans& plans_for(int M) {
    static std::map<int, Plans> cache;
    static bool threads_ready = false;
    std::lock_guard<std::mutex> lock(plan_mutex);
    if (!threads_ready) {
        fftw_init_threads();
        threads_ready = true;
    }
    auto it = cache.find(M);
    if (it != cache.end()) return it->second;
    fftw_plan_with_nthreads(omp_get_max_threads());
    std::vector<double> in(static_cast<std::size_t>(M) * M);
    std::vector<cplx> out(static_cast<std::size_t>(M) * (M / 2 + 1));
    Plans p;
    p.r2c = fftw_plan_dft_r2c_2d(M, M, in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
    p.c2r = fftw_plan_dft_c2r_2d(M, M, reinterpret_cast<fftw_complex*>(out.data()), in.data(),
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
    return cache.emplace(M, p).first->second;
}

}  // namespace

cplx Spectrum::coef(int k1, int k2) const {
    const auto idx = [this](int k) { return k < 0 ? k + M_ : k; };
    if (k2 >= 0 && k2 <= M_ / 2) return at(idx(k1), k2);
    // k2 < 0: c_k = conj(c_{-k}); -k2 lies in (0, M/2].
    const int nk1 = (k1 == -M_ / 2) ? k1 : -k1;
    return std::conj(at(idx(nk1), -k2));
}

double Spectrum::norm_sq() const {
    return weighted_norm_sq([](int, int) { return 1.0; });
}

Spectrum to_spectral(const GridField& f, int c) {
    const int M = f.M();
    const Plans& p = plans_for(M);
    std::vector<double> in = (f.components() == 1) ? f.values() : f.component(c).values();
    Spectrum s(M);
    fftw_execute_dft_r2c(p.r2c, in.data(), reinterpret_cast<fftw_complex*>(s.data().data()));
    const double scale = 1.0 / (static_cast<double>(M) * M);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < s.nk2(); ++j) s.at(i, j) *= ((i + j) % 2 == 0 ? scale : -scale);
    return s;
}

GridField from_spectral(const Spectrum& s) {
    const int M = s.M();
    const Plans& p = plans_for(M);
    std::vector<cplx> buf = s.data();
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < s.nk2(); ++j)
            if ((i + j) % 2 != 0) buf[static_cast<std::size_t>(i) * s.nk2() + j] *= -1.0;
    GridField f{PeriodicGrid(M)};
    fftw_execute_dft_c2r(p.c2r, reinterpret_cast<fftw_complex*>(buf.data()), f.values().data());
    return f;
}

std::vector<cplx> full_coefficients(const Spectrum& s) {
    const int M = s.M();
    std::vector<cplx> out(static_cast<std::size_t>(M) * M);
    for (int k1 = -M / 2; k1 < M / 2; ++k1)
        for (int k2 = -M / 2; k2 < M / 2; ++k2)
            out[static_cast<std::size_t>(k1 + M / 2) * M + (k2 + M / 2)] = s.coef(k1, k2);
    return out;
}

namespace spectral {

constexpr double two_pi = 2.0 * std::numbers::pi;

cplx d_symbol(int k, int M) {
    if (k == -M / 2 || k == M / 2) return {0.0, 0.0};
    return {0.0, two_pi * k};
}

GridField gradient(const GridField& f) {
    const Spectrum s = to_spectral(f);
    const int M = f.M();
    GridField g(f.grid(), 2);
    for (int c = 0; c < 2; ++c) {
        Spectrum d = s;
        d.apply([&](int k1, int k2) { return d_symbol(c == 0 ? k1 : k2, M); });
        g.set_component(c, from_spectral(d));
    }
    return g;
}

GridField divergence(const GridField& v) {
    const int M = v.M();
    Spectrum a = to_spectral(v, 0);
    Spectrum b = to_spectral(v, 1);
    a.apply([&](int k1, int) { return d_symbol(k1, M); });
    b.apply([&](int, int k2) { return d_symbol(k2, M); });
    for (std::size_t k = 0; k < a.data().size(); ++k) a.data()[k] += b.data()[k];
    return from_spectral(a);
}

GridField curl(const GridField& v) {
    const int M = v.M();
    Spectrum a = to_spectral(v, 0);
    Spectrum b = to_spectral(v, 1);
    a.apply([&](int, int k2) { return d_symbol(k2, M); });
    b.apply([&](int k1, int) { return d_symbol(k1, M); });
    for (std::size_t k = 0; k < a.data().size(); ++k) a.data()[k] -= b.data()[k];
    return from_spectral(a);
}

GridField laplacian(const GridField& f) {
    Spectrum s = to_spectral(f);
    s.apply([](int k1, int k2) { return -two_pi * two_pi * double(k1 * k1 + k2 * k2); });
    return from_spectral(s);
}

GridField inverse_neg_laplacian(const GridField& f) {
    Spectrum s = to_spectral(f);
    s.apply([](int k1, int k2) {
        const int q = k1 * k1 + k2 * k2;
        return q == 0 ? 0.0 : 1.0 / (two_pi * two_pi * q);
    });
    return from_spectral(s);
}

GridField heat(const GridField& f, double t) {
    Spectrum s = to_spectral(f);
    s.apply([t](int k1, int k2) { return std::exp(-two_pi * two_pi * double(k1 * k1 + k2 * k2) * t); });
    return from_spectral(s);
}

bool in_dealiased_band(int k1, int k2, int M) {
    const int K = M / 3;
    return std::abs(k1) <= K && std::abs(k2) <= K && 3 * std::abs(k1) < M && 3 * std::abs(k2) < M;
}

void dealias(Spectrum& s) {
    const int M = s.M();
    s.apply([M](int k1, int k2) { return in_dealiased_band(k1, k2, M) ? 1.0 : 0.0; });
}

double inner(const GridField& f, const GridField& g, int cf, int cg) {
    const int M = f.M();
    double s = 0.0;
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) s += f(i, j, cf) * g(i, j, cg);
    return s * f.grid().h() * f.grid().h();
}

}  // namespace spectral

}  // namespace vortexldp
