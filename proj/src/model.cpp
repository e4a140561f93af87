#include "mdiqkd/model.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "pulse_model.hpp"

namespace mdiqkd::model {

double poisson_weight(double mu, int k) {
    if (mu < 0.0) throw std::invalid_argument("poisson_weight: mu must be >= 0");
    if (k < 0) throw std::invalid_argument("poisson_weight: k must be >= 0");
    if (mu == 0.0) return k == 0 ? 1.0 : 0.0;
    return std::exp(-mu + k * std::log(mu) - std::lgamma(k + 1.0));
}

double poisson_cdf(double mu, int k_max) {
    double sum = 0.0;
    for (int k = 0; k <= k_max; ++k) sum += poisson_weight(mu, k);
    return std::min(sum, 1.0);
}

double arm_transmittance(const SystemSpec& system, Side side) {
    const ChannelSpec& ch = system.channel;
    const double fraction = side == Side::Alice ? ch.arm_split_fraction
                                                : 1.0 - ch.arm_split_fraction;
    const double extra = side == Side::Alice ? ch.extra_loss_alice_db
                                             : ch.extra_loss_bob_db;
    const double loss_db =
        ch.total_length_km * fraction * ch.attenuation_db_per_km + extra;
    return std::pow(10.0, -loss_db / 10.0);
}

double shannon_entropy(double x) {
    if (x < 0.0 || x > 1.0)
        throw std::invalid_argument("shannon_entropy: argument must be in [0,1]");
    if (x == 0.0 || x == 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

namespace {

using detail::PulseEncoding;
using detail::SourceKind;

struct WeightedEncoding {
    PulseEncoding pulse;
    int bit = 0;  // Z key bit or X phase bit; unused for vacuum
};

std::vector<WeightedEncoding> enumerate_encodings(SourceKind kind, double mu) {
    switch (kind) {
        case SourceKind::Vacuum:
            return {{detail::encode_vacuum(), 0}};
        case SourceKind::DecoyX:
        case SourceKind::DecoyY:
            return {{detail::encode_x(mu, 0), 0}, {detail::encode_x(mu, 1), 1}};
        case SourceKind::SignalZ:
            return {{detail::encode_z(mu, 0), 0}, {detail::encode_z(mu, 1), 1}};
    }
    return {};
}

}  // namespace

ExpectedObservables expected_observables(const SystemSpec& system,
                                         const ProtocolParams& params,
                                         int phase_nodes) {
    system.validate();
    params.validate();
    if (phase_nodes < 1)
        throw std::invalid_argument("expected_observables: phase_nodes must be >= 1");

    const detail::OpticalConstants oc = detail::optical_constants(system);

    ExpectedObservables result;
    for (PairLabel label : kAllLabels) {
        SourceKind kind_a, kind_b;
        detail::split_label(label, kind_a, kind_b);
        const bool vacuum_involved =
            kind_a == SourceKind::Vacuum || kind_b == SourceKind::Vacuum;

        const auto encs_a =
            enumerate_encodings(kind_a, detail::intensity_of(kind_a, params));
        const auto encs_b =
            enumerate_encodings(kind_b, detail::intensity_of(kind_b, params));
        const double enc_weight = 1.0 / (encs_a.size() * encs_b.size());

        double gain = 0.0;
        double error_gain = 0.0;
        for (const auto& ea : encs_a) {
            for (const auto& eb : encs_b) {
                double s_enc;
                if (detail::phase_insensitive(ea.pulse, eb.pulse)) {
                    s_enc = detail::pattern_probs(oc, ea.pulse, eb.pulse, 0.0)
                                .coincidence();
                } else {
                    double sum = 0.0;
                    for (int j = 0; j < phase_nodes; ++j) {
                        const double phi =
                            2.0 * M_PI * (j + 0.5) / phase_nodes;
                        sum += detail::pattern_probs(oc, ea.pulse, eb.pulse, phi)
                                   .coincidence();
                    }
                    s_enc = sum / phase_nodes;
                }

                // A coincidence from a vacuum-involving pair carries no phase
                // or bit correlation; its error verdict is a fair coin.
                double err_weight;
                if (vacuum_involved) {
                    err_weight = 0.5;
                } else {
                    // |Psi^-> post-selection: anti-correlated outcomes are
                    // correct, so equal bits (Z) or equal phases (X) err.
                    err_weight = ea.bit == eb.bit ? 1.0 : 0.0;
                }
                gain += enc_weight * s_enc;
                error_gain += enc_weight * err_weight * s_enc;
            }
        }

        const double m =
            label == PairLabel::zz ? system.misalignment_z : system.misalignment_x;
        error_gain = error_gain * (1.0 - m) + (gain - error_gain) * m;

        result.at(label) = {gain, error_gain};
    }
    return result;
}

}  // namespace mdiqkd::model
