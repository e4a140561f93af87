#include "mdiqkd/baseline.hpp"

#include <cmath>
#include <stdexcept>

#include "mdiqkd/model.hpp"

namespace mdiqkd::baseline {

namespace {

double overall_efficiency(const BB84Spec& spec) {
    return spec.detector_efficiency *
           std::pow(10.0, -spec.end_to_end_loss_db / 10.0);
}

double basis_prob(const BB84Spec& spec, Basis basis) {
    return basis == Basis::X ? spec.basis_prob_x : 1.0 - spec.basis_prob_x;
}

GainError gain_error_at(const BB84Spec& spec, double p_basis) {
    const double eta = overall_efficiency(spec);
    const double d = spec.dark_prob;
    const double etap = eta * p_basis;
    GainError ge;
    ge.gain = etap + 2.0 * d * (1.0 - d) * (1.0 - etap);
    if (ge.gain <= 0.0)
        throw std::domain_error("bb84_gain_error: zero gain, error undefined");
    ge.error_rate = d * (1.0 - d) * (1.0 - etap) / ge.gain;
    return ge;
}

double entropy_capped(double x) {
    return model::shannon_entropy(std::min(std::max(x, 0.0), 0.5));
}

// Golden-section refinement of a unimodal scalar function on [lo, hi].
template <typename F>
double golden_min(F&& f, double lo, double hi, int iters = 200) {
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double x1 = b - phi * (b - a);
    double x2 = a + phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < iters; ++i) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        }
    }
    return f1 < f2 ? f1 : f2;
}

}  // namespace

GainError bb84_gain_error(const BB84Spec& spec, Basis basis) {
    if (spec.basis_prob_x <= 0.0 || spec.basis_prob_x >= 1.0)
        throw std::invalid_argument("BB84Spec: basis_prob_x must be in (0,1)");
    return gain_error_at(spec, basis_prob(spec, basis));
}

double min_error_x(const BB84Spec& spec) {
    // e_X decreases monotonically in p_X; the infimum is the p_X -> 1 limit.
    return gain_error_at(spec, 1.0).error_rate;
}

double min_error_sum(const BB84Spec& spec) {
    const auto sum = [&](double p) {
        return gain_error_at(spec, p).error_rate +
               gain_error_at(spec, 1.0 - p).error_rate;
    };
    return golden_min(sum, 1e-9, 1.0 - 1e-9);
}

double bb84_ideal_sp_rate(const BB84Spec& spec) {
    const GainError x = bb84_gain_error(spec, Basis::X);
    const GainError z = bb84_gain_error(spec, Basis::Z);
    const double sift = spec.basis_prob_x * (1.0 - spec.basis_prob_x);
    const double bracket =
        1.0 - entropy_capped(x.error_rate) - entropy_capped(z.error_rate);
    return std::max(0.0, sift * z.gain * bracket);
}

double bb84_practical_sp_rate(const BB84Spec& spec, double g2) {
    if (g2 < 0.0)
        throw std::invalid_argument("bb84_practical_sp_rate: g2 must be >= 0");
    const GainError x = bb84_gain_error(spec, Basis::X);
    const GainError z = bb84_gain_error(spec, Basis::Z);
    const double sift = spec.basis_prob_x * (1.0 - spec.basis_prob_x);

    const double delta = 0.5 * g2;  // multiphoton emission fraction
    const double omega = 1.0 - delta / z.gain;
    if (omega <= 0.0) return 0.0;
    const double bracket =
        omega * (1.0 - entropy_capped(x.error_rate / omega)) -
        entropy_capped(z.error_rate);
    return std::max(0.0, sift * z.gain * bracket);
}

double bb84_wcs_decoy_rate(const BB84Spec& spec, double ec_efficiency) {
    const double eta = overall_efficiency(spec);
    const double d = spec.dark_prob;
    const double p_x = spec.basis_prob_x;
    const double p_z = 1.0 - p_x;
    const double sift = p_x * p_z;

    // Single-photon yield and error from the linear-loss model, with the
    // Z port carrying the key and the X port the phase-error estimate.
    const GainError y1z = gain_error_at(spec, p_z);
    const GainError y1x = gain_error_at(spec, p_x);

    const auto negative_rate = [&](double mu) {
        const double survive = std::exp(-mu * eta * p_z);
        const double gain_mu =
            (1.0 - survive) + 2.0 * d * (1.0 - d) * survive;
        const double err_mu = d * (1.0 - d) * survive / gain_mu;
        const double key =
            mu * std::exp(-mu) * y1z.gain *
                (1.0 - entropy_capped(y1x.error_rate)) -
            ec_efficiency * gain_mu * entropy_capped(err_mu);
        return -key;
    };
    const double best = -golden_min(negative_rate, 1e-6, 1.0);
    return std::max(0.0, sift * best);
}

}  // namespace mdiqkd::baseline
