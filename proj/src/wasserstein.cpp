#include "vortexldp/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "vortexldp/errors.hpp"

namespace vortexldp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sq_dist(const TorusPoint& x, const TorusPoint& y) {
    const Displacement d = min_image(x, y);
    return d.d1 * d.d1 + d.d2 * d.d2;
}

void check_mass(const DiscreteMeasure& m, double tol, const char* name) {
    if (m.points.size() != m.weights.size()) throw ConfigError(std::string(name) + ": points/weights size mismatch");
    double s = 0.0;
    for (double w : m.weights) {
        if (w < 0.0) throw ConfigError(std::string(name) + ": negative weight");
        s += w;
    }
    if (std::abs(s - 1.0) > tol)
        throw ConfigError(std::string(name) + ": total mass " + std::to_string(s) + " differs from 1");
}

bool is_uniform(const DiscreteMeasure& m) {
    const double w0 = 1.0 / static_cast<double>(m.size());
    return std::all_of(m.weights.begin(), m.weights.end(), [&](double w) { return std::abs(w - w0) <= 1e-15; });
}

// Successive shortest paths on the complete bipartite transport network.
double transport_lp(const std::vector<double>& supply, const std::vector<double>& demand,
                    const std::vector<double>& cost) {
    const std::size_t na = supply.size(), nb = demand.size();
    const double eps = 1e-15;
    std::vector<double> sa = supply, db = demand, flow(na * nb, 0.0);
    std::vector<double> piL(na, 0.0), piR(nb, 0.0);
    const std::size_t V = na + nb;
    for (int guard = 0; guard < 100000; ++guard) {
        double remaining = 0.0;
        for (double s : sa) remaining += s;
        if (remaining <= 1e-14) break;
        std::vector<double> dist(V, kInf);
        std::vector<long> parent(V, -1);
        std::vector<char> done(V, 0);
        for (std::size_t i = 0; i < na; ++i)
            if (sa[i] > eps) dist[i] = 0.0;
        for (;;) {
            std::size_t u = V;
            double best = kInf;
            for (std::size_t v = 0; v < V; ++v)
                if (!done[v] && dist[v] < best) best = dist[v], u = v;
            if (u == V) break;
            done[u] = 1;
            if (u < na) {
                for (std::size_t j = 0; j < nb; ++j) {
                    const double rc = cost[u * nb + j] + piL[u] - piR[j];
                    const double nd = dist[u] + std::max(rc, 0.0);
                    if (nd < dist[na + j]) dist[na + j] = nd, parent[na + j] = static_cast<long>(u);
                }
            } else {
                const std::size_t j = u - na;
                for (std::size_t i = 0; i < na; ++i) {
                    if (flow[i * nb + j] <= eps) continue;
                    const double rc = -cost[i * nb + j] + piR[j] - piL[i];
                    const double nd = dist[u] + std::max(rc, 0.0);
                    if (nd < dist[i]) dist[i] = nd, parent[i] = static_cast<long>(u);
                }
            }
        }
        std::size_t t = V;
        double dt = kInf;
        for (std::size_t j = 0; j < nb; ++j)
            if (db[j] > eps && dist[na + j] < dt) dt = dist[na + j], t = na + j;
        if (t == V) throw NumericError("transport LP: no augmenting path", remaining);
        for (std::size_t i = 0; i < na; ++i) piL[i] += std::min(dist[i], dt);
        for (std::size_t j = 0; j < nb; ++j) piR[j] += std::min(dist[na + j], dt);
        double push = db[t - na];
        std::size_t v = t;
        while (parent[v] >= 0) {
            const std::size_t p = static_cast<std::size_t>(parent[v]);
            if (p >= na) push = std::min(push, flow[v * nb + (p - na)]);
            v = p;
        }
        push = std::min(push, sa[v]);
        sa[v] -= push;
        db[t - na] -= push;
        v = t;
        while (parent[v] >= 0) {
            const std::size_t p = static_cast<std::size_t>(parent[v]);
            if (p < na) flow[p * nb + (v - na)] += push;
            else flow[v * nb + (p - na)] -= push;
            v = p;
        }
    }
    double total = 0.0;
    for (std::size_t k = 0; k < na * nb; ++k) total += flow[k] * cost[k];
    return total;
}

// Log-sum-exp of values (−inf entries allowed).
inline double lse(const double* v, std::size_t n, std::size_t stride) {
    double m = -kInf;
    for (std::size_t k = 0; k < n; ++k) m = std::max(m, v[k * stride]);
    if (m == -kInf) return -kInf;
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += std::exp(v[k * stride] - m);
    return m + std::log(s);
}

// Operator out_i = −eps · LSE_j(logw_j + (pot_j − C_ij)/eps).
using SoftMin = std::function<void(const std::vector<double>& logw, const std::vector<double>& pot, double eps,
                                   std::vector<double>& out)>;

struct SinkhornProblem {
    std::vector<double> loga, logb;
    std::vector<double> a, b;
    SoftMin ab;  // reduce over b's support, output on a's support
    SoftMin ba;  // reduce over a's support, output on b's support
    double diameter_sq;
};

double dot(const std::vector<double>& w, const std::vector<double>& f) {
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w[i] > 0.0) s += w[i] * f[i];
    return s;
}

std::vector<double> eps_schedule(const EntropicOptions& opt, double diam_sq) {
    std::vector<double> s;
    if (opt.eps_scaling)
        for (double e = diam_sq; e > opt.eps; e *= 0.5) s.push_back(e);
    s.push_back(opt.eps);
    return s;
}

double marginal_error(const std::vector<double>& w, const std::vector<double>& f_old,
                      const std::vector<double>& f_new, double eps) {
    double err = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w[i] > 0.0) err += w[i] * std::abs(std::exp((f_old[i] - f_new[i]) / eps) - 1.0);
    return err;
}

// Entropic OT value ⟨f,a⟩ + ⟨g,b⟩ by alternating soft-min updates.
EntropicResult sinkhorn(const SinkhornProblem& P, const EntropicOptions& opt) {
    std::vector<double> f(P.a.size(), 0.0), g(P.b.size(), 0.0), fn(P.a.size());
    EntropicResult res;
    const auto sched = eps_schedule(opt, P.diameter_sq);
    for (std::size_t s = 0; s < sched.size(); ++s) {
        const double eps = sched[s];
        const bool last = (s + 1 == sched.size());
        const int iters = last ? opt.max_iters : 50;
        P.ab(P.logb, g, eps, f);
        for (int it = 0; it < iters; ++it) {
            P.ba(P.loga, f, eps, g);
            P.ab(P.logb, g, eps, fn);
            res.residual = marginal_error(P.a, f, fn, eps);
            f.swap(fn);
            ++res.iterations;
            if (res.residual < (last ? opt.tol : 1e-3)) break;
        }
    }
    if (!(res.residual < opt.tol))
        throw NumericError("Sinkhorn did not converge (residual " + std::to_string(res.residual) + ")",
                           res.residual);
    P.ba(P.loga, f, sched.back(), g);
    res.cost = dot(P.a, f) + dot(P.b, g);
    return res;
}

// Symmetric problem OT(a,a) with the averaged fixed point.
EntropicResult sinkhorn_self(const std::vector<double>& a, const std::vector<double>& loga, const SoftMin& op,
                             double diam_sq, const EntropicOptions& opt) {
    std::vector<double> f(a.size(), 0.0), fn(a.size());
    EntropicResult res;
    const auto sched = eps_schedule(opt, diam_sq);
    for (std::size_t s = 0; s < sched.size(); ++s) {
        const double eps = sched[s];
        const bool last = (s + 1 == sched.size());
        const int iters = last ? opt.max_iters : 50;
        for (int it = 0; it < iters; ++it) {
            op(loga, f, eps, fn);
            res.residual = marginal_error(a, f, fn, eps);
            for (std::size_t i = 0; i < f.size(); ++i) f[i] = 0.5 * (f[i] + fn[i]);
            ++res.iterations;
            if (res.residual < (last ? opt.tol : 1e-3)) break;
        }
    }
    if (!(res.residual < opt.tol))
        throw NumericError("symmetric Sinkhorn did not converge (residual " + std::to_string(res.residual) + ")",
                           res.residual);
    op(loga, f, sched.back(), fn);
    res.cost = 2.0 * dot(a, fn);
    return res;
}

std::vector<double> logs(const std::vector<double>& w) {
    std::vector<double> l(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) l[i] = w[i] > 0.0 ? std::log(w[i]) : -kInf;
    return l;
}

SoftMin dense_softmin(const std::vector<double>& C, std::size_t nrow, std::size_t ncol) {
    // C is nrow x ncol; output over rows, reduction over columns.
    return [&C, nrow, ncol](const std::vector<double>& logw, const std::vector<double>& pot, double eps,
                            std::vector<double>& out) {
        out.resize(nrow);
        std::vector<double> tmp(ncol);
        for (std::size_t i = 0; i < nrow; ++i) {
            for (std::size_t j = 0; j < ncol; ++j) tmp[j] = logw[j] + (pot[j] - C[i * ncol + j]) / eps;
            out[i] = -eps * lse(tmp.data(), ncol, 1);
        }
    };
}

EntropicResult combine(const EntropicResult& ab, const EntropicResult& aa, const EntropicResult& bb) {
    EntropicResult r;
    r.cost = ab.cost - 0.5 * (aa.cost + bb.cost);
    r.iterations = ab.iterations + aa.iterations + bb.iterations;
    r.residual = std::max({ab.residual, aa.residual, bb.residual});
    return r;
}

}  // namespace

DiscreteMeasure DiscreteMeasure::uniform(std::vector<TorusPoint> pts) {
    DiscreteMeasure m;
    const double w = 1.0 / static_cast<double>(pts.size());
    m.weights.assign(pts.size(), w);
    m.points = std::move(pts);
    return m;
}

double solve_assignment(const std::vector<double>& cost, std::size_t n, std::vector<std::size_t>* assignment) {
    // Hungarian algorithm with potentials, 1-based internal indexing.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), kInf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = kInf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) minv[j] = cur, way[j] = j0;
                if (minv[j] < delta) delta = minv[j], j1 = j;
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) u[p[j]] += delta, v[j] -= delta;
                else minv[j] -= delta;
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    double total = 0.0;
    if (assignment) assignment->assign(n, 0);
    for (std::size_t j = 1; j <= n; ++j) {
        total += cost[(p[j] - 1) * n + (j - 1)];
        if (assignment) (*assignment)[p[j] - 1] = j - 1;
    }
    return total;
}

double wasserstein2(const DiscreteMeasure& a, const DiscreteMeasure& b, const ExactOtOptions& opt) {
    if (a.size() > opt.n_max || b.size() > opt.n_max)
        throw ConfigError("support size exceeds N_max=" + std::to_string(opt.n_max) + "; use entropic mode");
    check_mass(a, opt.mass_tol, "first measure");
    check_mass(b, opt.mass_tol, "second measure");
    const std::size_t na = a.size(), nb = b.size();
    std::vector<double> C(na * nb);
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < nb; ++j) C[i * nb + j] = sq_dist(a.points[i], b.points[j]);
    if (na == nb && is_uniform(a) && is_uniform(b)) return solve_assignment(C, na) / static_cast<double>(na);
    return transport_lp(a.weights, b.weights, C);
}

EntropicResult wasserstein2_entropic(const DiscreteMeasure& a, const DiscreteMeasure& b, const EntropicOptions& opt) {
    if (!(opt.eps > 0.0)) throw ConfigError("entropic eps must be positive");
    check_mass(a, 1e-9, "first measure");
    check_mass(b, 1e-9, "second measure");
    const std::size_t na = a.size(), nb = b.size();
    std::vector<double> Cab(na * nb), Cba(nb * na), Caa(na * na), Cbb(nb * nb);
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < nb; ++j) Cab[i * nb + j] = Cba[j * na + i] = sq_dist(a.points[i], b.points[j]);
    SinkhornProblem P{logs(a.weights), logs(b.weights), a.weights, b.weights,
                      dense_softmin(Cab, na, nb), dense_softmin(Cba, nb, na), 0.5};
    const EntropicResult ab = sinkhorn(P, opt);
    if (!opt.debias) return ab;
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < na; ++j) Caa[i * na + j] = sq_dist(a.points[i], a.points[j]);
    for (std::size_t i = 0; i < nb; ++i)
        for (std::size_t j = 0; j < nb; ++j) Cbb[i * nb + j] = sq_dist(b.points[i], b.points[j]);
    const EntropicResult aa = sinkhorn_self(a.weights, P.loga, dense_softmin(Caa, na, na), 0.5, opt);
    const EntropicResult bb = sinkhorn_self(b.weights, P.logb, dense_softmin(Cbb, nb, nb), 0.5, opt);
    return combine(ab, aa, bb);
}

EntropicResult wasserstein2_entropic(const GridField& a, const GridField& b, const EntropicOptions& opt) {
    if (!(a.grid() == b.grid())) throw ConfigError("entropic OT requires densities on the same grid");
    if (!(opt.eps > 0.0)) throw ConfigError("entropic eps must be positive");
    require_density(a, 1e-8, "first density");
    require_density(b, 1e-8, "second density");
    const int M = a.M();
    const std::size_t N = a.grid().size();
    std::vector<double> wa(N), wb(N);
    const double h2 = a.grid().h() * a.grid().h();
    double sa = 0.0, sb = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
        wa[k] = std::max(a.values()[k], 0.0) * h2;
        wb[k] = std::max(b.values()[k], 0.0) * h2;
        sa += wa[k];
        sb += wb[k];
    }
    for (std::size_t k = 0; k < N; ++k) wa[k] /= sa, wb[k] /= sb;
    std::vector<double> C1(static_cast<std::size_t>(M) * M);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) {
            const double d = wrap((i - j) * a.grid().h());
            C1[static_cast<std::size_t>(i) * M + j] = d * d;
        }
    // Separable soft-min: reduce over j2 then j1.
    SoftMin op = [&C1, M](const std::vector<double>& logw, const std::vector<double>& pot, double eps,
                          std::vector<double>& out) {
        const std::size_t Ms = static_cast<std::size_t>(M);
        std::vector<double> hval(Ms * Ms), T(Ms * Ms), tmp(Ms);
        for (std::size_t k = 0; k < Ms * Ms; ++k) hval[k] = logw[k] + pot[k] / eps;
#pragma omp parallel for firstprivate(tmp) schedule(static)
        for (int j1 = 0; j1 < M; ++j1)
            for (std::size_t i2 = 0; i2 < Ms; ++i2) {
                for (std::size_t j2 = 0; j2 < Ms; ++j2)
                    tmp[j2] = hval[j1 * Ms + j2] - C1[i2 * Ms + j2] / eps;
                T[j1 * Ms + i2] = lse(tmp.data(), Ms, 1);
            }
        out.resize(Ms * Ms);
#pragma omp parallel for firstprivate(tmp) schedule(static)
        for (int i1 = 0; i1 < M; ++i1)
            for (std::size_t i2 = 0; i2 < Ms; ++i2) {
                for (std::size_t j1 = 0; j1 < Ms; ++j1) tmp[j1] = T[j1 * Ms + i2] - C1[i1 * Ms + j1] / eps;
                out[i1 * Ms + i2] = -eps * lse(tmp.data(), Ms, 1);
            }
    };
    SinkhornProblem P{logs(wa), logs(wb), wa, wb, op, op, 0.5};
    const EntropicResult ab = sinkhorn(P, opt);
    if (!opt.debias) return ab;
    const EntropicResult aa = sinkhorn_self(wa, P.loga, op, 0.5, opt);
    const EntropicResult bb = sinkhorn_self(wb, P.logb, op, 0.5, opt);
    return combine(ab, aa, bb);
}

}  // namespace vortexldp
