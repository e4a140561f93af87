#pragma once

#include "mdiqkd/types.hpp"

namespace mdiqkd::model {

// e^{-mu} mu^k / k!  Rejects mu < 0 or k < 0.
double poisson_weight(double mu, int k);

// Sum of poisson_weight(mu, k) for k = 0..k_max.
double poisson_cdf(double mu, int k_max);

// Fiber + insertion-loss transmittance of one arm, 10^{-dB/10}.
// Detector and window efficiencies are excluded.
double arm_transmittance(const SystemSpec& system, Side side);

// Binary Shannon entropy in bits, H(0) = H(1) = 0 by continuity.
double shannon_entropy(double x);

// Expected gain and error-gain for every tracked source pair under the
// phase-randomized coherent-state model with threshold detectors and darks.
// The uniform global-phase difference is integrated by midpoint quadrature;
// phase_nodes >= 1024 is the normative resolution.
ExpectedObservables expected_observables(const SystemSpec& system,
                                         const ProtocolParams& params,
                                         int phase_nodes = 2048);

}  // namespace mdiqkd::model
