#include "mdiqkd/types.hpp"

#include <stdexcept>

namespace mdiqkd {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

}  // namespace

void ChannelSpec::validate() const {
    require(total_length_km >= 0.0, "ChannelSpec: total_length must be >= 0");
    require(attenuation_db_per_km >= 0.0, "ChannelSpec: attenuation must be >= 0");
    require(arm_split_fraction >= 0.0 && arm_split_fraction <= 1.0,
            "ChannelSpec: arm_split_fraction must be in [0,1]");
    require(extra_loss_alice_db >= 0.0 && extra_loss_bob_db >= 0.0,
            "ChannelSpec: extra losses must be >= 0");
}

void DetectorSpec::validate() const {
    require(efficiency_d1 >= 0.0 && efficiency_d1 <= 1.0,
            "DetectorSpec: efficiency_d1 must be in [0,1]");
    require(efficiency_d2 >= 0.0 && efficiency_d2 <= 1.0,
            "DetectorSpec: efficiency_d2 must be in [0,1]");
    require(dark_prob >= 0.0 && dark_prob < 1e-3,
            "DetectorSpec: dark_prob must be in [0, 1e-3)");
    require(window_efficiency >= 0.0 && window_efficiency <= 1.0,
            "DetectorSpec: window_efficiency must be in [0,1]");
}

void ProtocolParams::validate() const {
    require(mu_x >= 0.0, "ProtocolParams: mu_x must be >= 0");
    require(mu_x < mu_y, "ProtocolParams: mu_x must be < mu_y");
    require(mu_z > 0.0, "ProtocolParams: mu_z must be > 0");
    require(p_x > 0.0 && p_y > 0.0 && p_z > 0.0,
            "ProtocolParams: source probabilities must be > 0");
    require(p_x + p_y + p_z <= 1.0 + 1e-12,
            "ProtocolParams: p_x + p_y + p_z must be <= 1");
}

void SystemSpec::validate() const {
    channel.validate();
    detectors.validate();
    require(misalignment_x >= 0.0 && misalignment_x <= 0.5,
            "SystemSpec: misalignment_x must be in [0, 0.5]");
    require(misalignment_z >= 0.0 && misalignment_z <= 0.5,
            "SystemSpec: misalignment_z must be in [0, 0.5]");
    require(clock_rate_hz > 0.0, "SystemSpec: clock_rate must be > 0");
}

const char* to_string(PairLabel label) {
    switch (label) {
        case PairLabel::oo: return "oo";
        case PairLabel::ox: return "ox";
        case PairLabel::xo: return "xo";
        case PairLabel::oy: return "oy";
        case PairLabel::yo: return "yo";
        case PairLabel::xx: return "xx";
        case PairLabel::yy: return "yy";
        case PairLabel::zz: return "zz";
    }
    return "?";
}

bool pair_label_from_string(const std::string& name, PairLabel& out) {
    for (PairLabel label : kAllLabels) {
        if (name == to_string(label)) {
            out = label;
            return true;
        }
    }
    return false;
}

}  // namespace mdiqkd
