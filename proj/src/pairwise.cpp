#include "vortexldp/pairwise.hpp"

#include <limits>

#include "vortexldp/errors.hpp"

namespace vortexldp {

namespace {

// Runs row(i) for every particle, serially or across threads. Each row writes
// only its own slot, so the policy never changes the arithmetic.
template <class Row>
void for_rows(int n, Exec exec, Row&& row) {
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 8)
        for (int i = 0; i < n; ++i) row(i);
    } else {
        for (int i = 0; i < n; ++i) row(i);
    }
}

template <class Row>
double row_reduce(int n, Exec exec, Row&& row) {
    std::vector<double> partial(n, 0.0);
    for_rows(n, exec, [&](int i) { partial[i] = row(i); });
    double s = 0.0;
    for (double v : partial) s += v;
    return s;
}

}  // namespace

std::vector<Vec2> drift_direct(const std::vector<TorusPoint>& X, const KernelTable& kt, double r_min, Exec exec) {
    const int n = static_cast<int>(X.size());
    std::vector<Vec2> b(n, Vec2{0.0, 0.0});
    std::vector<int> hit(n, -1);
    std::vector<double> hit_r(n, 0.0);
    const double inv_n = 1.0 / n;
    for_rows(n, exec, [&](int i) {
        double s1 = 0.0, s2 = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const Displacement d = min_image(X[i], X[j]);
            if (d.r < r_min) {
                if (hit[i] < 0) {
                    hit[i] = j;
                    hit_r[i] = d.r;
                }
                continue;
            }
            const Vec2 k = kt.K_unchecked(d.d1, d.d2);
            s1 += k[0];
            s2 += k[1];
        }
        b[i] = {s1 * inv_n, s2 * inv_n};
    });
    for (int i = 0; i < n; ++i)
        if (hit[i] >= 0) throw CollisionError(i, hit[i], hit_r[i]);
    return b;
}

std::vector<Vec2> drift_mollified(const std::vector<TorusPoint>& X, const KernelTable& kt,
                                  const MollifierProfile& p, int m, Exec exec) {
    const int n = static_cast<int>(X.size());
    std::vector<Vec2> b(n, Vec2{0.0, 0.0});
    const double inv_n = 1.0 / n;
    for_rows(n, exec, [&](int i) {
        double s1 = 0.0, s2 = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const Vec2 k = mollified_K_m(kt, p, min_image(X[i], X[j]), m);
            s1 += k[0];
            s2 += k[1];
        }
        b[i] = {s1 * inv_n, s2 * inv_n};
    });
    return b;
}

std::vector<Vec2> drift_tabulated(const std::vector<TorusPoint>& X, const MollifiedKernelTable& t, Exec exec) {
    const int n = static_cast<int>(X.size());
    std::vector<Vec2> b(n, Vec2{0.0, 0.0});
    const double inv_n = 1.0 / n;
    for_rows(n, exec, [&](int i) {
        double s1 = 0.0, s2 = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const Vec2 k = t.K(min_image(X[i], X[j]));
            s1 += k[0];
            s2 += k[1];
        }
        b[i] = {s1 * inv_n, s2 * inv_n};
    });
    return b;
}

double pair_sum_green(const std::vector<TorusPoint>& X, const KernelTable& kt, Exec exec) {
    const int n = static_cast<int>(X.size());
    std::vector<int> hit(n, -1);
    const double total = row_reduce(n, exec, [&](int i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const Displacement d = min_image(X[i], X[j]);
            if (d.r == 0.0) {
                hit[i] = j;
                continue;
            }
            s += kt.green(d);
        }
        return s;
    });
    for (int i = 0; i < n; ++i)
        if (hit[i] >= 0) throw CollisionError(i, hit[i], 0.0);
    return total;
}

double pair_sum_mollified_green(const std::vector<TorusPoint>& X, const KernelTable& kt,
                                const MollifierProfile& p, int m, Exec exec) {
    const int n = static_cast<int>(X.size());
    return row_reduce(n, exec, [&](int i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += mollified_green_m(kt, p, min_image(X[i], X[j]), m);
        return s;
    });
}

double pair_sum_G(const std::vector<TorusPoint>& X, const MollifierProfile& p, int m, Exec exec) {
    const int n = static_cast<int>(X.size());
    const double m2 = double(m) * m;
    return row_reduce(n, exec, [&](int i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += m2 * p.G(m * min_image(X[i], X[j]).r);
        return s;
    });
}

long long pair_count_within(const std::vector<TorusPoint>& X, double delta, Exec exec) {
    const int n = static_cast<int>(X.size());
    std::vector<long long> c(n, 0);
    for_rows(n, exec, [&](int i) {
        long long k = 0;
        for (int j = 0; j < n; ++j)
            if (j != i && min_image(X[i], X[j]).r <= delta) ++k;
        c[i] = k;
    });
    long long s = 0;
    for (long long v : c) s += v;
    return s;
}

double min_pair_distance(const std::vector<TorusPoint>& X, int* i_out, int* j_out) {
    const int n = static_cast<int>(X.size());
    double best = std::numeric_limits<double>::infinity();
    int bi = -1, bj = -1;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double r = min_image(X[i], X[j]).r;
            if (r < best) {
                best = r;
                bi = i;
                bj = j;
            }
        }
    if (i_out) *i_out = bi;
    if (j_out) *j_out = bj;
    return best;
}

}  // namespace vortexldp
