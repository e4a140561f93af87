#include "mdiqkd/simkit.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <thread>
#include <vector>

#include "mdiqkd/model.hpp"
#include "pulse_model.hpp"
#include "rng.hpp"

namespace mdiqkd::simkit {

namespace {

constexpr std::uint64_t kBatchSize = 1u << 20;
constexpr double kTwoPi = 6.283185307179586477;

using detail::OpticalConstants;
using detail::PulseEncoding;
using detail::Rng;
using detail::SourceKind;

// Per-label sampling tables: encodings for each bit combination, with the
// phase-independent coincidence probability cached where the interference
// term vanishes.
struct EncodingCase {
    PulseEncoding alice;
    PulseEncoding bob;
    bool needs_phase = false;
    double cached_coincidence = 0.0;
};

struct LabelSampler {
    bool alice_has_bit = false;
    bool bob_has_bit = false;
    bool vacuum_involved = false;
    bool is_zz = false;
    double misalignment = 0.0;
    EncodingCase cases[2][2];
};

PulseEncoding make_encoding(SourceKind kind, double mu, int bit) {
    switch (kind) {
        case SourceKind::Vacuum: return detail::encode_vacuum();
        case SourceKind::DecoyX:
        case SourceKind::DecoyY: return detail::encode_x(mu, bit);
        case SourceKind::SignalZ: return detail::encode_z(mu, bit);
    }
    return detail::encode_vacuum();
}

std::array<LabelSampler, kNumLabels> build_samplers(const SystemSpec& system,
                                                    const ProtocolParams& params,
                                                    const OpticalConstants& oc) {
    std::array<LabelSampler, kNumLabels> samplers;
    for (PairLabel label : kAllLabels) {
        LabelSampler& ls = samplers[index_of(label)];
        SourceKind ka, kb;
        detail::split_label(label, ka, kb);
        ls.alice_has_bit = ka != SourceKind::Vacuum;
        ls.bob_has_bit = kb != SourceKind::Vacuum;
        ls.vacuum_involved = !ls.alice_has_bit || !ls.bob_has_bit;
        ls.is_zz = label == PairLabel::zz;
        ls.misalignment =
            ls.is_zz ? system.misalignment_z : system.misalignment_x;
        const double mu_a = detail::intensity_of(ka, params);
        const double mu_b = detail::intensity_of(kb, params);
        for (int ba = 0; ba < 2; ++ba) {
            for (int bb = 0; bb < 2; ++bb) {
                EncodingCase& ec = ls.cases[ba][bb];
                ec.alice = make_encoding(ka, mu_a, ba);
                ec.bob = make_encoding(kb, mu_b, bb);
                ec.needs_phase = !detail::phase_insensitive(ec.alice, ec.bob);
                if (!ec.needs_phase) {
                    ec.cached_coincidence =
                        detail::pattern_probs(oc, ec.alice, ec.bob, 0.0)
                            .coincidence();
                }
            }
        }
    }
    return samplers;
}

struct Accumulator {
    std::array<LabelCounts, kNumLabels> by_label{};
    std::uint64_t discarded = 0;

    void merge(const Accumulator& other) {
        for (std::size_t i = 0; i < kNumLabels; ++i) {
            by_label[i].sent += other.by_label[i].sent;
            by_label[i].coincidences += other.by_label[i].coincidences;
            by_label[i].errors += other.by_label[i].errors;
        }
        discarded += other.discarded;
    }
};

// One protocol round for an already-selected label. Draw order is fixed:
// Alice bit, Bob bit, global phase, click outcome, error coin, flip coin.
inline void sample_round(Rng& rng, const OpticalConstants& oc,
                         const LabelSampler& ls, LabelCounts& counts) {
    ++counts.sent;
    const int bit_a = ls.alice_has_bit ? rng.coin() : 0;
    const int bit_b = ls.bob_has_bit ? rng.coin() : 0;
    const EncodingCase& ec = ls.cases[bit_a][bit_b];

    double p_coinc;
    if (ec.needs_phase) {
        const double phi = kTwoPi * rng.next_unit();
        p_coinc = detail::pattern_probs(oc, ec.alice, ec.bob, phi).coincidence();
    } else {
        p_coinc = ec.cached_coincidence;
    }
    if (!rng.bernoulli(p_coinc)) return;

    ++counts.coincidences;
    bool error;
    if (ls.vacuum_involved) {
        error = rng.coin() != 0;
    } else {
        error = bit_a == bit_b;  // anti-correlation is correct under |Psi^->
    }
    if (rng.bernoulli(ls.misalignment)) error = !error;
    if (error) ++counts.errors;
}

template <typename BatchFn>
void run_batched(std::uint64_t n_pairs, int threads, BatchFn&& batch_fn,
                 Accumulator& total) {
    const std::uint64_t n_batches = (n_pairs + kBatchSize - 1) / kBatchSize;
    unsigned n_threads = threads > 0
                             ? static_cast<unsigned>(threads)
                             : std::max(1u, std::thread::hardware_concurrency());
    n_threads = static_cast<unsigned>(
        std::min<std::uint64_t>(n_threads, std::max<std::uint64_t>(n_batches, 1)));

    if (n_threads <= 1) {
        for (std::uint64_t b = 0; b < n_batches; ++b) batch_fn(b, total);
        return;
    }
    std::vector<Accumulator> partials(n_threads);
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) {
        pool.emplace_back([&, t] {
            for (std::uint64_t b = t; b < n_batches; b += n_threads)
                batch_fn(b, partials[t]);
        });
    }
    for (auto& th : pool) th.join();
    for (const auto& p : partials) total.merge(p);
}

}  // namespace

void SourcePairStats::validate() const {
    std::uint64_t sent_sum = discarded_sent;
    for (const LabelCounts& c : by_label) {
        if (c.errors > c.coincidences || c.coincidences > c.sent)
            throw std::invalid_argument(
                "SourcePairStats: counts must satisfy errors <= coincidences <= sent");
        sent_sum += c.sent;
    }
    if (sent_sum != total_pairs)
        throw std::invalid_argument(
            "SourcePairStats: sent counts must sum to total_pairs");
}

YieldMatrix::YieldMatrix(int cut) : n_cut(cut) {
    if (cut < 1) throw std::invalid_argument("YieldMatrix: n_cut must be >= 1");
    const std::size_t n = static_cast<std::size_t>(cut + 1) * (cut + 1);
    s.assign(n, 0.0);
    e.assign(n, 0.0);
}

SourcePairStats simulate(const SystemSpec& system, const ProtocolParams& params,
                         std::uint64_t n_pairs, std::uint64_t seed,
                         int threads) {
    system.validate();
    params.validate();
    if (n_pairs == 0)
        throw std::invalid_argument("simulate: n_pairs must be >= 1");

    const OpticalConstants oc = detail::optical_constants(system);
    const auto samplers = build_samplers(system, params, oc);

    // Source-selection thresholds in the fixed order o, x, y, z.
    const double t_o = params.vacuum_prob();
    const double t_x = t_o + params.p_x;
    const double t_y = t_x + params.p_y;
    const auto pick = [&](double u) {
        if (u < t_o) return SourceKind::Vacuum;
        if (u < t_x) return SourceKind::DecoyX;
        if (u < t_y) return SourceKind::DecoyY;
        return SourceKind::SignalZ;
    };

    Accumulator acc;
    run_batched(
        n_pairs, threads,
        [&](std::uint64_t batch, Accumulator& out) {
            Rng rng(detail::substream_seed(seed, batch));
            const std::uint64_t begin = batch * kBatchSize;
            const std::uint64_t count =
                std::min<std::uint64_t>(kBatchSize, n_pairs - begin);
            for (std::uint64_t i = 0; i < count; ++i) {
                const SourceKind ka = pick(rng.next_unit());
                const SourceKind kb = pick(rng.next_unit());
                PairLabel label;
                if (!detail::combine_sources(ka, kb, label)) {
                    ++out.discarded;
                    continue;
                }
                sample_round(rng, oc, samplers[index_of(label)],
                             out.by_label[index_of(label)]);
            }
        },
        acc);

    SourcePairStats stats;
    stats.by_label = acc.by_label;
    stats.discarded_sent = acc.discarded;
    stats.total_pairs = n_pairs;
    stats.seed = seed;
    return stats;
}

LabelCounts simulate_label(const SystemSpec& system,
                           const ProtocolParams& params, PairLabel label,
                           std::uint64_t n_pairs, std::uint64_t seed,
                           int threads) {
    system.validate();
    params.validate();
    if (n_pairs == 0)
        throw std::invalid_argument("simulate_label: n_pairs must be >= 1");

    const OpticalConstants oc = detail::optical_constants(system);
    const auto samplers = build_samplers(system, params, oc);
    const LabelSampler& ls = samplers[index_of(label)];

    Accumulator acc;
    run_batched(
        n_pairs, threads,
        [&](std::uint64_t batch, Accumulator& out) {
            Rng rng(detail::substream_seed(seed, batch));
            const std::uint64_t begin = batch * kBatchSize;
            const std::uint64_t count =
                std::min<std::uint64_t>(kBatchSize, n_pairs - begin);
            LabelCounts& counts = out.by_label[index_of(label)];
            for (std::uint64_t i = 0; i < count; ++i)
                sample_round(rng, oc, ls, counts);
        },
        acc);
    return acc.by_label[index_of(label)];
}

GainErrorPair synth_gain(const YieldMatrix& yields, double mu_a, double mu_b) {
    double gain = 0.0;
    double error_gain = 0.0;
    for (int m = 0; m <= yields.n_cut; ++m) {
        const double wa = model::poisson_weight(mu_a, m);
        if (wa == 0.0) continue;
        for (int n = 0; n <= yields.n_cut; ++n) {
            const double w = wa * model::poisson_weight(mu_b, n);
            gain += w * yields.yield(m, n);
            error_gain += w * yields.yield(m, n) * yields.error(m, n);
        }
    }
    return {gain, error_gain};
}

SourcePairStats synth_stats(const YieldMatrix& yields,
                            const ProtocolParams& params, std::uint64_t n_pairs,
                            std::uint64_t seed) {
    params.validate();
    if (n_pairs == 0)
        throw std::invalid_argument("synth_stats: n_pairs must be >= 1");

    const std::array<SourceKind, 4> kinds = {SourceKind::Vacuum,
                                             SourceKind::DecoyX,
                                             SourceKind::DecoyY,
                                             SourceKind::SignalZ};
    const std::array<double, 4> probs = {params.vacuum_prob(), params.p_x,
                                         params.p_y, params.p_z};

    Rng rng(detail::substream_seed(seed, 0));

    SourcePairStats stats;
    stats.total_pairs = n_pairs;
    stats.seed = seed;

    // Multinomial sent counts over the 16 source combinations, drawn as
    // sequential conditional binomials in fixed order.
    std::uint64_t remaining = n_pairs;
    double remaining_prob = 1.0;
    for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
            const double q = probs[a] * probs[b];
            std::uint64_t sent;
            if (remaining_prob <= q || (a == 3 && b == 3)) {
                sent = remaining;
            } else {
                sent = detail::sample_binomial(rng, remaining, q / remaining_prob);
            }
            remaining -= sent;
            remaining_prob -= q;

            PairLabel label;
            if (!detail::combine_sources(kinds[a], kinds[b], label)) {
                stats.discarded_sent += sent;
                continue;
            }
            const double mu_a = detail::intensity_of(kinds[a], params);
            const double mu_b = detail::intensity_of(kinds[b], params);
            const GainErrorPair ge = synth_gain(yields, mu_a, mu_b);
            LabelCounts& counts = stats.at(label);
            counts.sent = sent;
            counts.coincidences = detail::sample_binomial(rng, sent, ge.gain);
            const double e_cond =
                ge.gain > 0.0 ? ge.error_gain / ge.gain : 0.0;
            counts.errors =
                detail::sample_binomial(rng, counts.coincidences, e_cond);
        }
    }
    return stats;
}

SourcePairStats expected_stats(const SystemSpec& system,
                               const ProtocolParams& params,
                               std::uint64_t n_pairs) {
    if (n_pairs == 0)
        throw std::invalid_argument("expected_stats: n_pairs must be >= 1");
    const ExpectedObservables obs = model::expected_observables(system, params);
    const std::array<double, 4> probs = {params.vacuum_prob(), params.p_x,
                                         params.p_y, params.p_z};
    const auto prob_of = [&](SourceKind k) {
        return probs[static_cast<int>(k)];
    };

    SourcePairStats stats;
    stats.total_pairs = n_pairs;
    stats.expected_mode = true;
    std::uint64_t assigned = 0;
    for (PairLabel label : kAllLabels) {
        SourceKind ka, kb;
        detail::split_label(label, ka, kb);
        const double q = prob_of(ka) * prob_of(kb);
        LabelCounts& counts = stats.at(label);
        counts.sent = static_cast<std::uint64_t>(
            std::llround(q * static_cast<double>(n_pairs)));
        const GainErrorPair& ge = obs.at(label);
        counts.coincidences = static_cast<std::uint64_t>(
            std::llround(ge.gain * static_cast<double>(counts.sent)));
        counts.errors = static_cast<std::uint64_t>(
            std::llround(ge.error_gain * static_cast<double>(counts.sent)));
        if (counts.errors > counts.coincidences)
            counts.errors = counts.coincidences;
        assigned += counts.sent;
    }
    if (assigned <= n_pairs) {
        stats.discarded_sent = n_pairs - assigned;
    } else {
        // Rounding overshoot: absorb into the largest sent count.
        stats.at(PairLabel::zz).sent -= assigned - n_pairs;
    }
    return stats;
}

SinglePhotonResult true_s11(const SystemSpec& system) {
    system.validate();
    const OpticalConstants oc = detail::optical_constants(system);
    const double g[4] = {oc.det1, oc.det1, oc.det2, oc.det2};
    const double d = oc.dark;
    const double ta = oc.arm_alice;
    const double tb = oc.arm_bob;

    // Click probability of the exact target pattern given photon placement
    // counts per mode (modes: d1-early, d1-late, d2-early, d2-late).
    const auto pattern_prob = [&](const int n[4]) {
        const bool in_a[4] = {true, false, false, true};   // d1e + d2l
        const bool in_b[4] = {false, true, true, false};   // d1l + d2e
        double pa = 1.0, pb = 1.0;
        for (int m = 0; m < 4; ++m) {
            const double no_click =
                (1.0 - d) * std::pow(1.0 - g[m], n[m]);
            pa *= in_a[m] ? 1.0 - no_click : no_click;
            pb *= in_b[m] ? 1.0 - no_click : no_click;
        }
        return pa + pb;
    };

    double gain = 0.0;
    double error_gain = 0.0;
    for (int pa_bit = 0; pa_bit < 2; ++pa_bit) {
        for (int pb_bit = 0; pb_bit < 2; ++pb_bit) {
            using C = std::complex<double>;
            const C ea = pa_bit ? C(-1.0, 0.0) : C(1.0, 0.0);
            const C eb = pb_bit ? C(-1.0, 0.0) : C(1.0, 0.0);
            // Single-photon amplitudes over the four detector/bin modes.
            const C u[4] = {C(0.5), 0.5 * ea, C(0.5), 0.5 * ea};
            const C v[4] = {C(0.5), 0.5 * eb, C(-0.5), -0.5 * eb};

            double p_combo = 0.0;

            // Both photons reach the splitter: genuine two-photon statistics.
            for (int m = 0; m < 4; ++m) {
                for (int m2 = m; m2 < 4; ++m2) {
                    double prob2;
                    if (m == m2) {
                        prob2 = 2.0 * std::norm(u[m] * v[m]);
                    } else {
                        prob2 = std::norm(u[m] * v[m2] + u[m2] * v[m]);
                    }
                    int n[4] = {0, 0, 0, 0};
                    ++n[m];
                    ++n[m2];
                    p_combo += ta * tb * prob2 * pattern_prob(n);
                }
            }
            // Exactly one photon survives.
            for (int m = 0; m < 4; ++m) {
                int n[4] = {0, 0, 0, 0};
                n[m] = 1;
                p_combo += ta * (1.0 - tb) * std::norm(u[m]) * pattern_prob(n);
                p_combo += (1.0 - ta) * tb * std::norm(v[m]) * pattern_prob(n);
            }
            // Both lost: dark coincidences only.
            {
                const int n[4] = {0, 0, 0, 0};
                p_combo += (1.0 - ta) * (1.0 - tb) * pattern_prob(n);
            }

            gain += 0.25 * p_combo;
            if (pa_bit == pb_bit) error_gain += 0.25 * p_combo;
        }
    }

    const double m = system.misalignment_x;
    error_gain = error_gain * (1.0 - m) + (gain - error_gain) * m;

    SinglePhotonResult result;
    result.s11 = gain;
    result.e11 = gain > 0.0 ? error_gain / gain : 0.5;
    return result;
}

}  // namespace mdiqkd::simkit
