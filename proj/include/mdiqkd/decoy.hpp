#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

#include "mdiqkd/simkit.hpp"
#include "mdiqkd/types.hpp"

namespace mdiqkd::decoy {

struct Interval {
    double low = 0.0;
    double high = 1.0;
};

// How the total failure probability is spent. The default budget rule is an
// equal split across the fifteen bounded observables: seven gains, seven
// error-gains, and the single-photon-pair count bound.
struct FluctuationPolicy {
    enum class Method { Chernoff, Gaussian };

    double epsilon = 1e-10;
    Method method = Method::Chernoff;
    int observable_count = 15;

    double per_observable_epsilon() const {
        return epsilon / observable_count;
    }
};

struct AnalysisPolicy {
    double ec_efficiency = 1.16;
    int n_cut = 7;
    double lp_tolerance = 1e-12;
};

struct KeyRateReport {
    enum class Mode { Finite, Asymptotic };

    double s11_lower = 0.0;
    double e11_upper = 0.5;
    double n11_lower = 0.0;
    std::uint64_t key_length = 0;
    double rate_per_pulse = 0.0;
    double rate_bps = 0.0;
    double epsilon_used = 0.0;
    Mode mode = Mode::Finite;
    bool secure = false;
};

// Raised when the observed counts admit no photon-number yield assignment,
// i.e. the estimation linear program is infeasible.
class DataInconsistentError : public std::runtime_error {
  public:
    explicit DataInconsistentError(const char* what)
        : std::runtime_error(what) {}
};

// Two-sided bound on the mean success probability of a Bernoulli count,
// valid except with probability <= per_obs_failure per side. The Chernoff
// method inverts the Kullback-Leibler tail exponent numerically.
Interval bound_mean(std::uint64_t count, std::uint64_t trials,
                    double per_obs_failure,
                    FluctuationPolicy::Method method =
                        FluctuationPolicy::Method::Chernoff);

// Certified gain and error-gain intervals for the seven estimation pairs,
// indexed in kEstimationLabels order.
struct ObservedIntervals {
    std::array<Interval, 7> gain{};
    std::array<Interval, 7> error_gain{};
};

ObservedIntervals intervals_from_stats(const simkit::SourcePairStats& stats,
                                       const FluctuationPolicy& fp);

// Linear-program bounds on the (1,1) yield and error-gain given certified
// observation intervals. Throws DataInconsistentError on infeasibility.
double s11_lower_from_intervals(const ObservedIntervals& obs,
                                const ProtocolParams& params,
                                const AnalysisPolicy& ap);
double t11_upper_from_intervals(const ObservedIntervals& obs,
                                const ProtocolParams& params,
                                const AnalysisPolicy& ap);

double s11_lower(const simkit::SourcePairStats& stats,
                 const ProtocolParams& params, const FluctuationPolicy& fp,
                 const AnalysisPolicy& ap);

// Companion bound; requires s11_lower > 0 (throws std::domain_error
// otherwise). Returns min(t11_upper / s11_lower, 0.5).
double e11_upper(const simkit::SourcePairStats& stats,
                 const ProtocolParams& params, const FluctuationPolicy& fp,
                 const AnalysisPolicy& ap, double s11_lower_bound);

KeyRateReport finite_key(const simkit::SourcePairStats& stats,
                         const ProtocolParams& params,
                         const SystemSpec& system, const FluctuationPolicy& fp,
                         const AnalysisPolicy& ap);

// Same rate structure with expectations in place of counts and no
// fluctuation terms.
KeyRateReport asymptotic_rate(const SystemSpec& system,
                              const ProtocolParams& params,
                              const AnalysisPolicy& ap = {});

}  // namespace mdiqkd::decoy
