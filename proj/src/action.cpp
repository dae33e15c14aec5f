#include "vortexldp/action.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vortexldp/errors.hpp"
#include "vortexldp/kernels.hpp"
#include "vortexldp/meanfield.hpp"
#include "vortexldp/observables.hpp"
#include "vortexldp/spectral.hpp"
#include "vortexldp/wasserstein.hpp"

namespace vortexldp {

namespace {

constexpr double kPi = 3.14159265358979323846;

double dot(const GridField& a, const GridField& b) {
    double s = 0.0;
    const auto& x = a.values();
    const auto& y = b.values();
    for (std::size_t q = 0; q < x.size(); ++q) s += x[q] * y[q];
    return s / (double(a.M()) * a.M());
}

/// Squared symbol of the spectral gradient; zero exactly on the operator's kernel.
double grad_symbol_sq(int k1, int k2, int M) {
    return std::norm(spectral::d_symbol(k1, M)) + std::norm(spectral::d_symbol(k2, M));
}

/// Drop the modes on which the spectral gradient vanishes (mean and pure Nyquist).
GridField project(const GridField& f) {
    Spectrum s = to_spectral(f);
    const int M = f.M();
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < s.nk2(); ++j)
            if (grad_symbol_sq(Spectrum::wavenumber(i, M), j, M) == 0.0) s.at(i, j) = 0.0;
    return from_spectral(s);
}

/// −div(μ∇φ), spectral derivatives.
GridField apply_operator(const GridField& phi, const GridField& mu) {
    GridField g = spectral::gradient(phi);
    const std::size_t P = mu.values().size();
    for (std::size_t q = 0; q < P; ++q) {
        g.values()[2 * q] *= mu.values()[q];
        g.values()[2 * q + 1] *= mu.values()[q];
    }
    GridField d = spectral::divergence(g);
    for (double& v : d.values()) v = -v;
    return d;
}

GridField precondition(const GridField& r, double mu_bar) {
    Spectrum s = to_spectral(r);
    const int M = r.M();
    for (int i = 0; i < M; ++i) {
        const int k1 = Spectrum::wavenumber(i, M);
        for (int j = 0; j < s.nk2(); ++j) {
            const double d2 = grad_symbol_sq(k1, j, M);
            if (d2 == 0.0) s.at(i, j) = 0.0;
            else s.at(i, j) /= mu_bar * d2;
        }
    }
    return from_spectral(s);
}

void axpy(GridField& y, double a, const GridField& x) {
    for (std::size_t q = 0; q < y.values().size(); ++q) y.values()[q] += a * x.values()[q];
}

double weighted_grad_inner(const GridField& g1, const GridField& g2, const GridField& rho) {
    double s = 0.0;
    const std::size_t P = rho.values().size();
    for (std::size_t q = 0; q < P; ++q)
        s += rho.values()[q] * (g1.values()[2 * q] * g2.values()[2 * q] + g1.values()[2 * q + 1] * g2.values()[2 * q + 1]);
    return s / (double(rho.M()) * rho.M());
}

std::vector<double> trapezoid_weights(const std::vector<double>& t) {
    std::vector<double> w(t.size(), 0.0);
    for (std::size_t s = 1; s < t.size(); ++s) {
        const double h = t[s] - t[s - 1];
        w[s - 1] += 0.5 * h;
        w[s] += 0.5 * h;
    }
    return w;
}

double legendre(int l, double x) {
    double p0 = 1.0, p1 = x;
    if (l == 0) return p0;
    for (int k = 1; k < l; ++k) {
        const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

bool all_finite(const GridField& f) {
    for (double v : f.values())
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace

WeightedSolve weighted_h1neg_solve(const GridField& m, const GridField& mu_in, const WeightedSolveOptions& opt) {
    if (m.M() != mu_in.M()) throw ConfigError("weighted solve: datum and weight grids differ");
    const double scale = std::max(1.0, std::max(std::abs(m.max()), std::abs(m.min())));
    if (std::abs(m.mean()) > 1e-8 * scale)
        throw ConfigError("weighted H^-1 norm is infinite for a datum with nonzero mean");

    WeightedSolve out;
    GridField mu = mu_in;
    for (double& v : mu.values())
        if (v < opt.mu_min) {
            v = opt.mu_min;
            ++out.floor_hits;
        }
    const GridField b = project(m);
    const PeriodicGrid& g = m.grid();
    GridField x(g, 1, 0.0);
    const double bnorm = std::sqrt(dot(b, b));
    if (bnorm == 0.0) {
        out.phi = x;
        out.grad_phi = GridField(g, 2, 0.0);
        return out;
    }
    const double mu_bar = mu.mean();
    GridField r = b;
    GridField z = precondition(r, mu_bar);
    GridField p = z;
    double rz = dot(r, z);
    int it = 0;
    double res = 1.0;
    for (; it < opt.max_iter; ++it) {
        const GridField Ap = apply_operator(p, mu);
        const double alpha = rz / dot(p, Ap);
        axpy(x, alpha, p);
        axpy(r, -alpha, Ap);
        res = std::sqrt(dot(r, r)) / bnorm;
        if (res <= opt.rtol) break;
        z = precondition(r, mu_bar);
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t q = 0; q < p.values().size(); ++q) p.values()[q] = z.values()[q] + beta * p.values()[q];
    }
    if (res > opt.rtol) {
        std::ostringstream os;
        os << "weighted CG stagnated after " << it << " iterations (relative residual " << res << ")";
        throw NumericError(os.str(), res);
    }
    out.iterations = it + 1;
    out.residual = res;
    out.phi = x;
    out.grad_phi = spectral::gradient(x);
    out.norm_sq = weighted_grad_inner(out.grad_phi, out.grad_phi, mu);
    out.dual_value = 2.0 * dot(x, b) - out.norm_sq;
    return out;
}

double weighted_h1neg_norm(const GridField& m, const GridField& mu, const WeightedSolveOptions& opt) {
    return weighted_h1neg_solve(m, mu, opt).norm_sq;
}

GridField pde_residual(const GridField& rho, const GridField& drho_dt, double nu) {
    const GridField u = biot_savart_velocity(rho);
    GridField flux(rho.grid(), 2);
    const std::size_t P = rho.values().size();
    for (std::size_t q = 0; q < P; ++q) {
        flux.values()[2 * q] = rho.values()[q] * u.values()[2 * q];
        flux.values()[2 * q + 1] = rho.values()[q] * u.values()[2 * q + 1];
    }
    const GridField div = spectral::divergence(flux);
    const GridField lap = spectral::laplacian(rho);
    GridField m(rho.grid());
    for (std::size_t q = 0; q < P; ++q)
        m.values()[q] = drho_dt.values()[q] - nu * lap.values()[q] + div.values()[q];
    return m;
}

RecoveredControl recover_control(const std::vector<double>& times, const std::vector<GridField>& rho, double nu,
                                 const WeightedSolveOptions& opt) {
    const std::size_t S = times.size();
    if (S < 3 || rho.size() != S) throw ConfigError("recover_control needs at least three snapshots");
    if (!(nu > 0.0)) throw ConfigError("recover_control needs nu > 0");
    const double dt = times[1] - times[0];
    for (std::size_t s = 1; s < S; ++s)
        if (std::abs(times[s] - times[s - 1] - dt) > 1e-9 * dt)
            throw ConfigError("recover_control needs uniformly spaced snapshots");

    RecoveredControl rc;
    rc.nu = nu;
    rc.times = times;
    rc.slices.resize(S);
    rc.residuals.resize(S);
    const PeriodicGrid& g = rho[0].grid();
    auto combo = [&](std::initializer_list<std::pair<std::size_t, double>> terms, double denom) {
        GridField d(g, 1, 0.0);
        for (const auto& [idx, c] : terms) axpy(d, c / denom, rho[idx]);
        return d;
    };

    for (std::size_t s = 0; s < S; ++s) {
        ControlSlice& sl = rc.slices[s];
        sl.t = times[s];
        GridField d1;
        if (s == 0) d1 = combo({{0, -3.0}, {1, 4.0}, {2, -1.0}}, 2.0 * dt);
        else if (s == S - 1) d1 = combo({{S - 1, 3.0}, {S - 2, -4.0}, {S - 3, 1.0}}, 2.0 * dt);
        else d1 = combo({{s + 1, 1.0}, {s - 1, -1.0}}, 2.0 * dt);
        if (!all_finite(rho[s]) || !all_finite(d1)) {
            sl.skipped = true;
            continue;
        }
        GridField m = pde_residual(rho[s], d1, nu);
        const double mean = m.mean();
        for (double& v : m.values()) v -= mean;
        const WeightedSolve ws = weighted_h1neg_solve(m, rho[s], opt);
        sl.norm_sq = ws.norm_sq;
        sl.cg_iters = ws.iterations;
        sl.floor_hits = ws.floor_hits;
        sl.p = ws.phi;
        sl.grad_p = ws.grad_phi;
        sl.norm_sq_richardson = ws.norm_sq;
        rc.residuals[s] = m;
        if (s >= 2 && s + 2 < S) {
            GridField d2 = combo({{s + 2, 1.0}, {s - 2, -1.0}}, 4.0 * dt);
            GridField dr(g, 1, 0.0);
            axpy(dr, 4.0 / 3.0, d1);
            axpy(dr, -1.0 / 3.0, d2);
            GridField mr = pde_residual(rho[s], dr, nu);
            const double mr_mean = mr.mean();
            for (double& v : mr.values()) v -= mr_mean;
            sl.norm_sq_richardson = weighted_h1neg_solve(mr, rho[s], opt).norm_sq;
        }
    }
    const auto w = trapezoid_weights(times);
    for (std::size_t s = 0; s < S; ++s) {
        rc.action += w[s] * rc.slices[s].norm_sq;
        rc.action_richardson += w[s] * rc.slices[s].norm_sq_richardson;
    }
    rc.action /= 4.0 * nu;
    rc.action_richardson /= 4.0 * nu;
    return rc;
}

RecoveredControl recover_control(const TrajectoryRecord& rec, const WeightedSolveOptions& opt) {
    if (rec.kind != TrajectoryRecord::Kind::density) throw ConfigError("recover_control needs a density record");
    return recover_control(rec.times, rec.densities, rec.config.value("nu", 0.0), opt);
}

std::vector<TestDirection> default_test_family() {
    const int ks[4][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
    std::vector<TestDirection> fam;
    for (int l = 0; l < 4; ++l)
        for (const auto& k : ks)
            for (double phase : {0.0, -kPi / 2.0})
                fam.push_back({l, SmoothFunction::modes({{1.0, k[0], k[1], phase}})});
    return fam;
}

double action_bar_lower(const RecoveredControl& rc, const std::vector<GridField>& rho,
                        const std::vector<TestDirection>& family, bool include_recovered) {
    const std::size_t S = rc.times.size();
    if (rho.size() != S) throw ConfigError("action_bar_lower: snapshot count mismatch");
    const auto w = trapezoid_weights(rc.times);
    const double T0 = rc.times.front(), T1 = rc.times.back();
    const std::size_t K = family.size() + (include_recovered ? 1 : 0);
    if (K == 0) return 0.0;
    const PeriodicGrid& g = rho[0].grid();

    std::vector<GridField> fval, fgrad;
    for (const auto& d : family) {
        fval.push_back(d.f.sample(g));
        fgrad.push_back(d.f.sample_grad(g));
    }
    Eigen::VectorXd L = Eigen::VectorXd::Zero(K);
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(K, K);
    std::vector<double> tw(K);
    std::vector<const GridField*> val(K), grad(K);
    for (std::size_t s = 0; s < S; ++s) {
        if (rc.slices[s].skipped) continue;
        const double x = T1 > T0 ? 2.0 * (rc.times[s] - T0) / (T1 - T0) - 1.0 : 0.0;
        for (std::size_t a = 0; a < family.size(); ++a) {
            tw[a] = legendre(family[a].legendre, x);
            val[a] = &fval[a];
            grad[a] = &fgrad[a];
        }
        if (include_recovered) {
            tw[K - 1] = 1.0;
            val[K - 1] = &rc.slices[s].p;
            grad[K - 1] = &rc.slices[s].grad_p;
        }
        for (std::size_t a = 0; a < K; ++a) {
            L(a) += w[s] * tw[a] * dot(*val[a], rc.residuals[s]);
            for (std::size_t b = a; b < K; ++b) {
                const double q = w[s] * rc.nu * tw[a] * tw[b] * weighted_grad_inner(*grad[a], *grad[b], rho[s]);
                Q(a, b) += q;
                if (b != a) Q(b, a) += q;
            }
        }
    }
    // sup_c c·L − cᵀQc = ¼ Lᵀ Q⁺ L on the range of Q.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q);
    const double lmax = std::max(es.eigenvalues().maxCoeff(), 0.0);
    double best = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double lam = es.eigenvalues()(i);
        if (lam <= 1e-12 * lmax || lam <= 0.0) continue;
        const double c = es.eigenvectors().col(i).dot(L);
        best += c * c / lam;
    }
    return 0.25 * best;
}

double symmetrized_pairing_density(const GridField& gamma, const SmoothFunction& phi) {
    const GridField u = biot_savart_velocity(gamma);
    const GridField gp = phi.sample_grad(gamma.grid());
    return weighted_grad_inner(gp, u, gamma);
}

double symmetrized_pairing_density_double(const GridField& gamma, const SmoothFunction& phi, int coarse_M) {
    const int M = gamma.M();
    if (coarse_M > M || M % coarse_M != 0) throw ConfigError("coarse grid must divide the density grid");
    const GridField c = coarsen(gamma, M / coarse_M);
    const KernelTable& kt = *KernelTable::shared();
    const int Mc = c.M();
    const std::size_t P = static_cast<std::size_t>(Mc) * Mc;
    std::vector<TorusPoint> x(P);
    std::vector<double> w(P);
    std::vector<Vec2> gphi(P);
    for (int i = 0; i < Mc; ++i)
        for (int j = 0; j < Mc; ++j) {
            const std::size_t q = static_cast<std::size_t>(i) * Mc + j;
            x[q] = TorusPoint(c.grid().node(i), c.grid().node(j));
            w[q] = c(i, j) / double(P);
            gphi[q] = phi.grad(x[q]);
        }
    std::vector<double> row(P, 0.0);
#pragma omp parallel for schedule(static)
    for (std::size_t a = 0; a < P; ++a) {
        double s = 0.0;
        for (std::size_t b = 0; b < P; ++b) {
            if (a == b) continue;
            const Displacement d = min_image(x[a], x[b]);
            const Vec2 k = kt.K_unchecked(d.d1, d.d2);
            s += ((gphi[a][0] - gphi[b][0]) * k[0] + (gphi[a][1] - gphi[b][1]) * k[1]) * w[b];
        }
        row[a] = 0.5 * s * w[a];
    }
    double total = 0.0;
    for (double v : row) total += v;
    return total;
}

nlohmann::json ActionReport::to_json() const {
    nlohmann::json j;
    j["A_T"] = A_T;
    j["A_T_richardson"] = A_T_richardson;
    j["A_bar_lower"] = A_bar_lower;
    if (has_control_energy) {
        j["control_energy"] = control_energy;
        j["control_rel_error"] = control_rel_error;
    }
    j["initial_rate"] = "not computed (initial-data rate is outside this tool)";
    j["per_slice"] = nlohmann::json::array();
    for (const auto& s : slices)
        j["per_slice"].push_back({{"t", s.t},
                                  {"norm_sq", s.norm_sq},
                                  {"norm_sq_richardson", s.norm_sq_richardson},
                                  {"cg_iters", s.cg_iters},
                                  {"floor_hits", s.floor_hits},
                                  {"skipped", s.skipped}});
    return j;
}

ActionReport action_report(const TrajectoryRecord& rec, const WeightedSolveOptions& opt) {
    const RecoveredControl rc = recover_control(rec, opt);
    ActionReport rep;
    rep.A_T = rc.action;
    rep.A_T_richardson = rc.action_richardson;
    rep.A_bar_lower = action_bar_lower(rc, rec.densities, default_test_family(), true);
    rep.slices = rc.slices;
    for (auto& s : rep.slices) {
        s.p = GridField();
        s.grad_p = GridField();
    }
    if (rec.config.contains("control")) {
        const ControlField v = ControlField::from_json(rec.config.at("control"));
        if (v.active()) {
            const auto w = trapezoid_weights(rec.times);
            double energy = 0.0, err = 0.0;
            for (std::size_t s = 0; s < rec.times.size(); ++s) {
                const GridField vs = v.sample(rec.times[s], rec.densities[s].grid());
                energy += w[s] * weighted_grad_inner(vs, vs, rec.densities[s]);
                GridField diff = rc.slices[s].grad_p;
                axpy(diff, -1.0, vs);
                err += w[s] * weighted_grad_inner(diff, diff, rec.densities[s]);
            }
            rep.has_control_energy = true;
            rep.control_energy = energy / (4.0 * rc.nu);
            rep.control_rel_error = energy > 0.0 ? std::sqrt(err / energy) : 0.0;
        }
    }
    return rep;
}

NiceTrajectory nice_trajectory(const GridField& gamma, const TrajectoryRecord& target, double t1, double t2,
                               const WeightedSolveOptions& opt) {
    if (target.kind != TrajectoryRecord::Kind::density || target.size() < 3)
        throw ConfigError("nice_trajectory needs a density target with at least three snapshots");
    const double delta = target.times[1] - target.times[0];
    auto steps_of = [&](double t, const char* what) {
        const double r = t / delta;
        if (std::abs(r - std::round(r)) > 1e-9 * std::max(1.0, r) || std::lround(r) < 2)
            throw ConfigError(std::string("nice_trajectory: ") + what +
                              " must be a multiple (>= 2) of the target snapshot spacing");
        return static_cast<int>(std::lround(r));
    };
    const int k1 = steps_of(t1, "t1"), k2 = steps_of(t2, "t2");
    const int K = static_cast<int>(target.size()) - 1;
    if (2 * k1 + k2 > K - 2) throw ConfigError("nice_trajectory: need 2*t1 + t2 < T with a nontrivial tail");

    PdeConfig cfg = PdeConfig::from_json(target.config);
    const double nu = cfg.nu;
    cfg.control = ControlField();
    cfg.T = t1;
    const int stride = static_cast<int>(std::lround(delta / cfg.dt));
    if (std::abs(stride * cfg.dt - delta) > 1e-9 * delta) throw ConfigError("target spacing is not a multiple of dt");
    cfg.snapshot_stride = stride;
    const TrajectoryRecord free = solve(gamma, cfg);  // ρ^{γ,0} on [0, t1]

    auto require_elliptic = [&](const GridField& f, const std::string& where) {
        if (f.min() < opt.mu_min) {
            std::ostringstream os;
            os << "ellipticity floor violated on " << where << " (min " << f.min() << ")";
            throw NumericError(os.str(), f.min());
        }
    };
    std::vector<std::vector<GridField>> pieces(4);
    std::vector<std::vector<double>> ptimes(4);
    for (int k = 0; k <= k1; ++k) {
        pieces[0].push_back(free.densities[k]);
        ptimes[0].push_back(k * delta);
    }
    require_elliptic(free.densities[k1], "slice t=" + std::to_string(t1) + " (heat-flow start)");
    for (int k = 0; k <= k2; ++k) {
        pieces[1].push_back(heat_convolve(nu * k * delta, free.densities[k1]));
        ptimes[1].push_back((k1 + k) * delta);
    }
    for (int k = 0; k <= k1; ++k) {
        const GridField& src = free.densities[k1 - k];
        require_elliptic(src, "reversed slice t=" + std::to_string((k1 - k) * delta));
        pieces[2].push_back(heat_convolve(nu * t2, src));
        ptimes[2].push_back((k1 + k2 + k) * delta);
    }
    const int shift = 2 * k1 + k2;
    for (int k = shift; k <= K; ++k) {
        const GridField& src = target.densities[k - shift];
        require_elliptic(src, "target slice t=" + std::to_string((k - shift) * delta));
        pieces[3].push_back(heat_convolve(nu * t2, src));
        ptimes[3].push_back(k * delta);
    }

    NiceTrajectory out;
    for (int p = 0; p < 4; ++p) {
        const RecoveredControl rc = recover_control(ptimes[p], pieces[p], nu, opt);
        out.piece_action.push_back(rc.action);
        out.action += rc.action;
    }
    out.target_action = recover_control(target, opt).action;

    TrajectoryRecord& path = out.path;
    path.kind = TrajectoryRecord::Kind::density;
    path.config = {{"construction", "heat_gluing"}, {"t1", t1}, {"t2", t2}, {"nu", nu}, {"M", cfg.M},
                   {"target_hash", target.hash}};
    path.hash = config_hash(path.config);
    path.observables.names = {"t", "e", "l2_dev", "w2_to_target"};
    EntropicOptions eo;
    eo.eps = 5e-3;
    eo.tol = 1e-7;
    const int factor = std::max(1, cfg.M / 32);
    for (int p = 0; p < 4; ++p)
        for (std::size_t k = (p == 0 ? 0 : 1); k < pieces[p].size(); ++k) {
            const GridField& f = pieces[p][k];
            const std::size_t idx = path.times.size();
            const GridField a = factor > 1 ? coarsen(f, factor) : f;
            const GridField b = factor > 1 ? coarsen(target.densities[idx], factor) : target.densities[idx];
            const double w2 = wasserstein2_entropic(a, b, eo).cost;
            out.sup_w2 = std::max(out.sup_w2, w2);
            double l2 = 0.0;
            for (double v : f.values()) l2 += (v - 1.0) * (v - 1.0);
            path.times.push_back(ptimes[p][k]);
            path.densities.push_back(f);
            path.observables.rows.push_back(
                {ptimes[p][k], energy_quadratic(f), l2 / (double(f.M()) * f.M()), w2});
        }
    return out;
}

}  // namespace vortexldp
