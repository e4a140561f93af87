#pragma once

#include <cmath>

#include "mdiqkd/types.hpp"

// Shared classical-field pulse model: time-bin encodings, beam-splitter
// interference and threshold-detector click probabilities. Used by both the
// closed-form quadrature (model) and the Monte Carlo sampler (simkit).

namespace mdiqkd::detail {

// One party's pulse: mean photon number per bin plus the phase of the late
// bin relative to the early bin. The uniformly random global phase is kept
// separate.
struct PulseEncoding {
    double intensity_early = 0.0;
    double intensity_late = 0.0;
    double phase_late = 0.0;
};

inline PulseEncoding encode_vacuum() { return {0.0, 0.0, 0.0}; }

// Z basis: the key bit selects the occupied bin at full intensity.
inline PulseEncoding encode_z(double mu, int bit) {
    return bit == 0 ? PulseEncoding{mu, 0.0, 0.0} : PulseEncoding{0.0, mu, 0.0};
}

// X basis: half intensity in each bin, relative phase 0 or pi.
inline PulseEncoding encode_x(double mu, int phase_bit) {
    return {0.5 * mu, 0.5 * mu, phase_bit ? M_PI : 0.0};
}

// Per-detector efficiencies with the window factor folded in, arm
// transmittances, and the dark probability, precomputed once per system.
struct OpticalConstants {
    double arm_alice = 1.0;
    double arm_bob = 1.0;
    double det1 = 1.0;
    double det2 = 1.0;
    double dark = 0.0;
};

OpticalConstants optical_constants(const SystemSpec& system);

// Probabilities of the two singlet click patterns for a given encoding pair
// and global phase difference. Pattern A: detector 1 fires in the early bin
// only and detector 2 in the late bin only; pattern B is the mirror image.
struct PatternProbs {
    double early1_late2 = 0.0;
    double early2_late1 = 0.0;

    double coincidence() const { return early1_late2 + early2_late1; }
};

inline PatternProbs pattern_probs(const OpticalConstants& oc,
                                  const PulseEncoding& alice,
                                  const PulseEncoding& bob, double phase_diff) {
    const double ia_e = oc.arm_alice * alice.intensity_early;
    const double ia_l = oc.arm_alice * alice.intensity_late;
    const double ib_e = oc.arm_bob * bob.intensity_early;
    const double ib_l = oc.arm_bob * bob.intensity_late;

    const double cross_e = 2.0 * std::sqrt(ia_e * ib_e) * std::cos(phase_diff);
    const double cross_l =
        2.0 * std::sqrt(ia_l * ib_l) *
        std::cos(phase_diff + alice.phase_late - bob.phase_late);

    // 50:50 splitter: detector 1 sees the sum port, detector 2 the difference.
    const double i1e = 0.5 * (ia_e + ib_e + cross_e);
    const double i2e = 0.5 * (ia_e + ib_e - cross_e);
    const double i1l = 0.5 * (ia_l + ib_l + cross_l);
    const double i2l = 0.5 * (ia_l + ib_l - cross_l);

    const double keep = 1.0 - oc.dark;
    const double c1e = 1.0 - keep * std::exp(-oc.det1 * i1e);
    const double c2e = 1.0 - keep * std::exp(-oc.det2 * i2e);
    const double c1l = 1.0 - keep * std::exp(-oc.det1 * i1l);
    const double c2l = 1.0 - keep * std::exp(-oc.det2 * i2l);

    PatternProbs p;
    p.early1_late2 = c1e * (1.0 - c1l) * c2l * (1.0 - c2e);
    p.early2_late1 = c2e * (1.0 - c2l) * c1l * (1.0 - c1e);
    return p;
}

// True when the interference term vanishes for every bin, so the pattern
// probabilities do not depend on the global phase difference.
inline bool phase_insensitive(const PulseEncoding& alice,
                              const PulseEncoding& bob) {
    const bool share_early =
        alice.intensity_early > 0.0 && bob.intensity_early > 0.0;
    const bool share_late =
        alice.intensity_late > 0.0 && bob.intensity_late > 0.0;
    return !share_early && !share_late;
}

enum class SourceKind : int { Vacuum = 0, DecoyX = 1, DecoyY = 2, SignalZ = 3 };

// Decomposes a tracked pair label into per-party sources.
void split_label(PairLabel label, SourceKind& alice, SourceKind& bob);

// Maps a per-party source pair onto a tracked label; false for the
// discarded mixed-basis combinations (xy, zx, ...).
bool combine_sources(SourceKind alice, SourceKind bob, PairLabel& out);

double intensity_of(SourceKind kind, const ProtocolParams& params);

}  // namespace mdiqkd::detail
