#pragma once

#include <cstdint>
#include <vector>

#include "mdiqkd/types.hpp"

namespace mdiqkd::simkit {

struct LabelCounts {
    std::uint64_t sent = 0;
    std::uint64_t coincidences = 0;
    std::uint64_t errors = 0;
};

// Raw counting statistics of a run. Pairs whose source combination falls
// outside the eight tracked labels (mixed-basis combinations) are counted
// in discarded_sent, so tracked sents plus discarded always sum to
// total_pairs.
struct SourcePairStats {
    std::array<LabelCounts, kNumLabels> by_label{};
    std::uint64_t discarded_sent = 0;
    std::uint64_t total_pairs = 0;
    std::uint64_t seed = 0;
    bool expected_mode = false;

    LabelCounts& at(PairLabel label) { return by_label[index_of(label)]; }
    const LabelCounts& at(PairLabel label) const {
        return by_label[index_of(label)];
    }

    void validate() const;  // throws std::invalid_argument
};

// Ground-truth photon-number-resolved yields used by the synthetic-stats
// oracle: s[m][n] is the coincidence probability given an (m,n)-photon pair,
// e[m][n] the error probability given a coincidence.
struct YieldMatrix {
    int n_cut = 7;
    std::vector<double> s;  // (n_cut+1)^2, row-major by Alice photon number
    std::vector<double> e;

    explicit YieldMatrix(int cut = 7);
    double& yield(int m, int n) { return s[m * (n_cut + 1) + n]; }
    double yield(int m, int n) const { return s[m * (n_cut + 1) + n]; }
    double& error(int m, int n) { return e[m * (n_cut + 1) + n]; }
    double error(int m, int n) const { return e[m * (n_cut + 1) + n]; }
};

// Pulse-level Monte Carlo of the full protocol round: source selection,
// encoding, interference at the relay, threshold detection, singlet
// post-selection. Exactly reproducible from (inputs, seed); the result does
// not depend on thread count (threads = 0 picks hardware concurrency).
SourcePairStats simulate(const SystemSpec& system, const ProtocolParams& params,
                         std::uint64_t n_pairs, std::uint64_t seed,
                         int threads = 0);

// Same sampler conditioned on a single source pair; every emitted pair has
// the given label.
LabelCounts simulate_label(const SystemSpec& system,
                           const ProtocolParams& params, PairLabel label,
                           std::uint64_t n_pairs, std::uint64_t seed,
                           int threads = 0);

// Gain and error-gain implied by a YieldMatrix for intensities (mu_a, mu_b):
// the Poisson-weighted double sum over photon numbers up to n_cut.
GainErrorPair synth_gain(const YieldMatrix& yields, double mu_a, double mu_b);

// Physics-free statistics generator: multinomial source counts, binomial
// coincidences and errors at the exact YieldMatrix expectations. The true
// s11 and e11 are known by construction (yields.yield(1,1), .error(1,1)).
SourcePairStats synth_stats(const YieldMatrix& yields,
                            const ProtocolParams& params, std::uint64_t n_pairs,
                            std::uint64_t seed);

// Deterministic expected-count statistics: every count is the rounded
// expectation under the closed-form model. Used by expected-count mode.
SourcePairStats expected_stats(const SystemSpec& system,
                               const ProtocolParams& params,
                               std::uint64_t n_pairs);

struct SinglePhotonResult {
    double s11 = 0.0;
    double e11 = 0.5;
};

// Exact two-photon interference computation for the (1,1) X-basis pair:
// Hong-Ou-Mandel statistics on the 50:50 splitter with threshold detectors,
// darks and misalignment. Reporting aid, not part of the security bounds.
SinglePhotonResult true_s11(const SystemSpec& system);

}  // namespace mdiqkd::simkit
