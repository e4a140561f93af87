#pragma once

namespace mdiqkd::baseline {

// Passive BB84 under the linear-loss model: a beam splitter routes incident
// light to the X-basis port with probability basis_prob_x, darks fire per
// detector, and no alignment error or insertion loss is assumed.
struct BB84Spec {
    double end_to_end_loss_db = 0.0;
    double detector_efficiency = 0.65;
    double dark_prob = 7.2e-8;
    double basis_prob_x = 0.5;
};

enum class Basis { X, Z };

struct GainError {
    double gain = 0.0;
    double error_rate = 0.0;
};

// S_w = eta*p_w + 2d(1-d)(1-eta*p_w), e_w = d(1-d)(1-eta*p_w)/S_w with
// eta = detector_efficiency * 10^{-loss/10}. Throws when S_w == 0.
GainError bb84_gain_error(const BB84Spec& spec, Basis basis);

// Infimum of e_X over the basis probability (approached as p_X -> 1).
double min_error_x(const BB84Spec& spec);

// Minimum of e_X + e_Z over p_X in (0,1).
double min_error_sum(const BB84Spec& spec);

// Asymptotic ideal single-photon rate: sift * S_Z * [1 - H(e_X) - H(e_Z)],
// clamped at zero, with sift = p_X * p_Z.
double bb84_ideal_sp_rate(const BB84Spec& spec);

// GLLP-tagged practical single-photon source with multiphoton fraction
// g2 / 2.
double bb84_practical_sp_rate(const BB84Spec& spec, double g2);

// Asymptotic infinite-decoy weak-coherent-state rate, maximized over the
// mean photon number mu in (0, 1].
double bb84_wcs_decoy_rate(const BB84Spec& spec, double ec_efficiency = 1.16);

}  // namespace mdiqkd::baseline
