#pragma once

#include <complex>
#include <vector>

#include "vortexldp/torus.hpp"

namespace vortexldp {

using cplx = std::complex<double>;

/// Fourier coefficients c_k = ∫ f e^{-2πik·x} dx of a real periodic field,
/// stored on the half plane k2 >= 0 (k1 in [-M/2, M/2), k2 in [0, M/2]).
class Spectrum {
public:
    Spectrum() = default;
    explicit Spectrum(int M) : M_(M), data_(static_cast<std::size_t>(M) * (M / 2 + 1)) {}

    int M() const { return M_; }
    int nk2() const { return M_ / 2 + 1; }
    static int wavenumber(int i, int M) { return i < M / 2 ? i : i - M; }

    cplx& at(int i1, int j2) { return data_[static_cast<std::size_t>(i1) * nk2() + j2]; }
    cplx at(int i1, int j2) const { return data_[static_cast<std::size_t>(i1) * nk2() + j2]; }

    /// Coefficient for any k in [-M/2, M/2)^2 via Hermitian symmetry.
    cplx coef(int k1, int k2) const;

    std::vector<cplx>& data() { return data_; }
    const std::vector<cplx>& data() const { return data_; }

    /// Σ over the full lattice of |c_k|^2 (Parseval partner of h^2 Σ f^2).
    double norm_sq() const;
    /// Σ over the full lattice of w(k) |c_k|^2, w evaluated on (k1, k2).
    template <class W>
    double weighted_norm_sq(W&& w) const {
        double s = 0.0;
        for (int i = 0; i < M_; ++i) {
            const int k1 = wavenumber(i, M_);
            for (int j = 0; j < nk2(); ++j) {
                const double mult = (j == 0 || j == M_ / 2) ? 1.0 : 2.0;
                s += mult * w(k1, j) * std::norm(at(i, j));
            }
        }
        return s;
    }
    /// Multiply every coefficient by m(k1, k2).
    template <class F>
    void apply(F&& m) {
        for (int i = 0; i < M_; ++i) {
            const int k1 = wavenumber(i, M_);
            for (int j = 0; j < nk2(); ++j) at(i, j) *= m(k1, j);
        }
    }

private:
    int M_ = 0;
    std::vector<cplx> data_;
};

Spectrum to_spectral(const GridField& f, int c = 0);
GridField from_spectral(const Spectrum& s);

/// Full coefficient table indexed [(k1+M/2)*M + (k2+M/2)].
std::vector<cplx> full_coefficients(const Spectrum& s);

namespace spectral {

/// 2πi k_j for first derivatives; the Nyquist wavenumber gets 0.
cplx d_symbol(int k, int M);

GridField gradient(const GridField& f);
GridField divergence(const GridField& v);
/// curl v = ∂₂v₁ − ∂₁v₂, so that curl(𝒦∗ρ) = ρ − 1.
GridField curl(const GridField& v);
GridField laplacian(const GridField& f);
/// Zero-mean solution ψ of −Δψ = f − mean(f).
GridField inverse_neg_laplacian(const GridField& f);
/// Heat semigroup: multiply by e^{-4π²|k|²t}.
GridField heat(const GridField& f, double t);
/// 2/3-rule truncation: zero modes with |k1| or |k2| > M/3.
void dealias(Spectrum& s);
bool in_dealiased_band(int k1, int k2, int M);
/// h² Σ f g over nodes.
double inner(const GridField& f, const GridField& g, int cf = 0, int cg = 0);

}  // namespace spectral

}  // namespace vortexldp
