#pragma once

#include <cstdint>
#include <vector>

#include "mdiqkd/decoy.hpp"
#include "mdiqkd/types.hpp"

namespace mdiqkd::optimize {

struct OptimizationResult {
    ProtocolParams best_params;
    double best_rate_per_pulse = 0.0;
    std::uint64_t evaluations = 0;
    int starts = 0;
    bool converged = false;
};

// Deterministic surrogate objective: expected counts from the closed-form
// model fed through the full finite-key machinery as if observed.
double expected_finite_rate(const SystemSpec& system,
                            const ProtocolParams& params,
                            std::uint64_t n_pairs,
                            const decoy::FluctuationPolicy& fp,
                            const decoy::AnalysisPolicy& ap);

// Multi-start downhill simplex over (mu_x, mu_y, mu_z, p_x, p_y, p_z) with
// constraints handled by a smooth reparameterization: intensities on a log
// scale in (1e-4, 2] with mu_x < mu_y by construction, probabilities through
// a softmax-style interior map with an explicit vacuum slot. Deterministic
// given the seed; the first `starts` start points are a prefix of the seed's
// start stream.
OptimizationResult optimize(const SystemSpec& system, std::uint64_t n_pairs,
                            const decoy::FluctuationPolicy& fp,
                            const decoy::AnalysisPolicy& ap,
                            std::uint64_t seed, std::uint64_t budget,
                            int starts = 32);

struct SurfacePoint {
    double mu_z = 0.0;
    double p_z = 0.0;
    double rate_finite = 0.0;
    double rate_asymptotic = 0.0;
};

// Finite and asymptotic rates over a (mu_z, p_z) grid with the remaining
// parameters held at `base`. p_z cells that violate the probability budget
// left by base.p_x + base.p_y are skipped.
std::vector<SurfacePoint> rate_surface(const SystemSpec& system,
                                       std::uint64_t n_pairs,
                                       const decoy::FluctuationPolicy& fp,
                                       const decoy::AnalysisPolicy& ap,
                                       const std::vector<double>& mu_z_grid,
                                       const std::vector<double>& p_z_grid,
                                       const ProtocolParams& base);

}  // namespace mdiqkd::optimize
