#pragma once

#include <cstddef>
#include <vector>

#include "vortexldp/torus.hpp"

namespace vortexldp {

/// Weighted point cloud on the torus.
struct DiscreteMeasure {
    std::vector<TorusPoint> points;
    std::vector<double> weights;

    static DiscreteMeasure uniform(std::vector<TorusPoint> pts);
    std::size_t size() const { return points.size(); }
};

struct ExactOtOptions {
    std::size_t n_max = 1024;
    double mass_tol = 1e-12;
};

/// inf over couplings of ∫ r(x,y)² dπ (squared cost, no square root).
/// Assignment for equal-size uniform measures, min-cost flow otherwise.
double wasserstein2(const DiscreteMeasure& a, const DiscreteMeasure& b, const ExactOtOptions& opt = {});

/// Optimal assignment cost for a square cost matrix (row-major n*n). Returns
/// the permutation in `assignment` (row i -> column assignment[i]).
double solve_assignment(const std::vector<double>& cost, std::size_t n, std::vector<std::size_t>* assignment = nullptr);

struct EntropicOptions {
    double eps = 1e-3;
    int max_iters = 50000;
    double tol = 1e-9;       // L1 marginal violation
    bool debias = true;      // subtract self-transport terms
    bool eps_scaling = true; // anneal eps from the squared diameter
};

struct EntropicResult {
    double cost = 0.0;
    int iterations = 0;
    double residual = 0.0;
};

/// Debiased Sinkhorn divergence between two grid densities on the same grid.
/// The squared-distance cost is separable, so each iteration is O(M³).
/// Bias relative to wasserstein2 is one-sided, O(eps·log M).
EntropicResult wasserstein2_entropic(const GridField& a, const GridField& b, const EntropicOptions& opt);

/// Same estimator for weighted point clouds (dense cost matrix).
EntropicResult wasserstein2_entropic(const DiscreteMeasure& a, const DiscreteMeasure& b,
                                     const EntropicOptions& opt);

}  // namespace vortexldp
