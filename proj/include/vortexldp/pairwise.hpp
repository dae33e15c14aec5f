#pragma once

#include <vector>

#include "vortexldp/kernels.hpp"
#include "vortexldp/mollify.hpp"
#include "vortexldp/torus.hpp"

namespace vortexldp {

/// Execution policy for the O(n²) pair loops. Both policies run the same
/// per-row arithmetic in the same order, so results are bitwise identical.
enum class Exec { serial, parallel };

/// b_i = (1/n) Σ_{j≠i} 𝒦(X_i − X_j). Throws CollisionError when a pair is
/// closer than r_min.
std::vector<Vec2> drift_direct(const std::vector<TorusPoint>& X, const KernelTable& kt, double r_min,
                               Exec exec = Exec::parallel);
/// Same with G_n∗𝒦 at scale m (bounded, no collision check).
std::vector<Vec2> drift_mollified(const std::vector<TorusPoint>& X, const KernelTable& kt,
                                  const MollifierProfile& p, int m, Exec exec = Exec::parallel);
/// Same with a tabulated G_n∗𝒦.
std::vector<Vec2> drift_tabulated(const std::vector<TorusPoint>& X, const MollifiedKernelTable& t,
                                  Exec exec = Exec::parallel);

/// Σ_{i≠j} 𝒩(X_i − X_j).
double pair_sum_green(const std::vector<TorusPoint>& X, const KernelTable& kt, Exec exec = Exec::parallel);
/// Σ_{i,j} (G_n∗𝒩)(X_i − X_j), diagonal included.
double pair_sum_mollified_green(const std::vector<TorusPoint>& X, const KernelTable& kt,
                                const MollifierProfile& p, int m, Exec exec = Exec::parallel);
/// Σ_{i,j} G_n(X_i − X_j), diagonal included.
double pair_sum_G(const std::vector<TorusPoint>& X, const MollifierProfile& p, int m, Exec exec = Exec::parallel);
/// Number of ordered pairs (i, j), i ≠ j, with r(X_i, X_j) ≤ delta.
long long pair_count_within(const std::vector<TorusPoint>& X, double delta, Exec exec = Exec::parallel);
/// Smallest pairwise distance and the pair attaining it.
double min_pair_distance(const std::vector<TorusPoint>& X, int* i_out = nullptr, int* j_out = nullptr);

}  // namespace vortexldp
