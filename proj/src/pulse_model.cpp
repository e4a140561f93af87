#include "pulse_model.hpp"

#include <cmath>

#include "mdiqkd/model.hpp"

namespace mdiqkd::detail {

OpticalConstants optical_constants(const SystemSpec& system) {
    OpticalConstants oc;
    oc.arm_alice = model::arm_transmittance(system, Side::Alice);
    oc.arm_bob = model::arm_transmittance(system, Side::Bob);
    oc.det1 = system.detectors.efficiency_d1 * system.detectors.window_efficiency;
    oc.det2 = system.detectors.efficiency_d2 * system.detectors.window_efficiency;
    oc.dark = system.detectors.dark_prob;
    return oc;
}

void split_label(PairLabel label, SourceKind& alice, SourceKind& bob) {
    switch (label) {
        case PairLabel::oo: alice = SourceKind::Vacuum; bob = SourceKind::Vacuum; return;
        case PairLabel::ox: alice = SourceKind::Vacuum; bob = SourceKind::DecoyX; return;
        case PairLabel::xo: alice = SourceKind::DecoyX; bob = SourceKind::Vacuum; return;
        case PairLabel::oy: alice = SourceKind::Vacuum; bob = SourceKind::DecoyY; return;
        case PairLabel::yo: alice = SourceKind::DecoyY; bob = SourceKind::Vacuum; return;
        case PairLabel::xx: alice = SourceKind::DecoyX; bob = SourceKind::DecoyX; return;
        case PairLabel::yy: alice = SourceKind::DecoyY; bob = SourceKind::DecoyY; return;
        case PairLabel::zz: alice = SourceKind::SignalZ; bob = SourceKind::SignalZ; return;
    }
}

bool combine_sources(SourceKind alice, SourceKind bob, PairLabel& out) {
    for (PairLabel label : kAllLabels) {
        SourceKind a, b;
        split_label(label, a, b);
        if (a == alice && b == bob) {
            out = label;
            return true;
        }
    }
    return false;
}

double intensity_of(SourceKind kind, const ProtocolParams& params) {
    switch (kind) {
        case SourceKind::Vacuum: return 0.0;
        case SourceKind::DecoyX: return params.mu_x;
        case SourceKind::DecoyY: return params.mu_y;
        case SourceKind::SignalZ: return params.mu_z;
    }
    return 0.0;
}

}  // namespace mdiqkd::detail
