#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>

namespace mdiqkd {

// Fiber geometry and loss. Alice's arm is arm_split_fraction * total_length,
// Bob's arm is the remainder; Charlie's relay sits at the split point.
struct ChannelSpec {
    double total_length_km = 102.0;
    double attenuation_db_per_km = 0.19;
    double arm_split_fraction = 0.5;
    double extra_loss_alice_db = 0.0;
    double extra_loss_bob_db = 0.0;

    void validate() const;  // throws std::invalid_argument on bad fields
};

// Relay detector pair. dark_prob is per detector per time bin; the
// time-window efficiency multiplies the detector efficiency.
struct DetectorSpec {
    double efficiency_d1 = 0.65;
    double efficiency_d2 = 0.65;
    double dark_prob = 7.2e-8;
    double window_efficiency = 0.85;

    void validate() const;
};

// The six globally optimized protocol quantities. The remainder
// 1 - p_x - p_y - p_z is the vacuum-source probability p_o.
struct ProtocolParams {
    double mu_x = 0.049;
    double mu_y = 0.189;
    double mu_z = 0.891;
    double p_x = 0.128;
    double p_y = 0.025;
    double p_z = 0.827;

    double vacuum_prob() const { return 1.0 - p_x - p_y - p_z; }

    void validate() const;
};

struct SystemSpec {
    ChannelSpec channel;
    DetectorSpec detectors;
    double misalignment_x = 0.015;  // X-basis interference error probability
    double misalignment_z = 0.005;  // Z-basis flip error probability
    double clock_rate_hz = 7.5e7;

    void validate() const;
};

enum class Side { Alice, Bob };

// The eight source pairs tracked by the protocol. X-basis estimation pairs
// first, the Z-basis key pair last. Order is fixed; arrays index by it.
enum class PairLabel : std::uint8_t { oo, ox, xo, oy, yo, xx, yy, zz };

inline constexpr std::size_t kNumLabels = 8;

inline constexpr std::array<PairLabel, kNumLabels> kAllLabels = {
    PairLabel::oo, PairLabel::ox, PairLabel::xo, PairLabel::oy,
    PairLabel::yo, PairLabel::xx, PairLabel::yy, PairLabel::zz};

// The seven X-basis pairs used for yield estimation.
inline constexpr std::array<PairLabel, 7> kEstimationLabels = {
    PairLabel::oo, PairLabel::ox, PairLabel::xo, PairLabel::oy,
    PairLabel::yo, PairLabel::xx, PairLabel::yy};

const char* to_string(PairLabel label);
bool pair_label_from_string(const std::string& name, PairLabel& out);

inline std::size_t index_of(PairLabel label) {
    return static_cast<std::size_t>(label);
}

// Gain S (post-selected coincidence probability per emitted pair) and
// error-gain T (probability of an erroneous coincidence), with T <= S.
struct GainErrorPair {
    double gain = 0.0;
    double error_gain = 0.0;
};

struct ExpectedObservables {
    std::array<GainErrorPair, kNumLabels> by_label{};

    GainErrorPair& at(PairLabel label) { return by_label[index_of(label)]; }
    const GainErrorPair& at(PairLabel label) const {
        return by_label[index_of(label)];
    }
};

}  // namespace mdiqkd
