#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vortexldp/control.hpp"
#include "vortexldp/torus.hpp"

namespace vortexldp {

/// One lhs ≤ rhs comparison (equalities are entered as |a − b| ≤ tol).
struct InequalityCheck {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    /// Slack allowed for quadrature error.
    double tol = 0.0;
    std::string sample;
    bool pass() const { return lhs <= rhs + tol; }
    double margin() const { return rhs - lhs; }
    nlohmann::json to_json() const;
};

struct InequalityReport {
    std::vector<InequalityCheck> checks;
    void add(std::string name, double lhs, double rhs, double tol, std::string sample);
    bool all_pass() const;
    std::size_t failures() const;
    /// JSON lines, one check per line.
    void write_jsonl(std::ostream& os) const;
    /// Pass count per check name.
    nlohmann::json summary() const;
};

struct InequalityCorpus {
    int M = 64;
    uint64_t seed = 0;
    std::vector<GridField> densities;
    std::vector<std::vector<TorusPoint>> configs;
    /// Random smooth fields reused as test vector fields and data.
    std::vector<std::vector<FourierMode>> fields;
};

/// exp(Σ random low modes), normalized to mean one; strength scales the modes.
GridField random_density(const PeriodicGrid& g, uint64_t seed, int index, double strength, int kmax = 4);
std::vector<FourierMode> random_modes(uint64_t seed, int index, int count, int kmax, double amp);

/// Deterministic corpus: `count` densities of graded strength, particle
/// configurations drawn from them, and random test fields.
InequalityCorpus make_corpus(int count, uint64_t seed, int M = 64, int n_particles = 256);
/// The corpus the suite is pinned to, and the disjoint one the constants were measured on.
InequalityCorpus pinned_corpus();
InequalityCorpus calibration_corpus();

struct SuiteOptions {
    bool include_entropy_decay = true;
};

/// Evaluates every inequality on the corpus against the frozen constants.
InequalityReport inequality_suite(const InequalityCorpus& corpus, const SuiteOptions& opt = {});

/// Raw measurements behind the frozen constants (sup ratios over the corpus).
nlohmann::json calibrate_constants(const InequalityCorpus& corpus);

/// ‖𝒦∗f‖₄² for a zero-mean grid field f.
double biot_savart_l4_sq(const GridField& f);
/// (γ⊗γ)({r ≤ δ}) for a grid density, via the disc indicator's Fourier transform.
double density_pair_mass(const GridField& gamma, double delta);
/// sup_x γ(B̄_δ(x)) for a grid density.
double density_ball_mass_sup(const GridField& gamma, double delta);
/// sup over pairs of r|𝒦| from `samples` random pairs.
double sample_bounded_w_sup(int samples, uint64_t seed);

}  // namespace vortexldp
