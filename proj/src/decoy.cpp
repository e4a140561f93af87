#include "mdiqkd/decoy.hpp"

#include <cmath>

#include "mdiqkd/lp.hpp"
#include "mdiqkd/model.hpp"
#include "pulse_model.hpp"

namespace mdiqkd::decoy {

namespace {

double kl_divergence(double q, double p) {
    double sum = 0.0;
    if (q > 0.0) sum += q * std::log(q / p);
    if (q < 1.0) sum += (1.0 - q) * std::log((1.0 - q) / (1.0 - p));
    return sum;
}

// Solves n * KL(phat || p) = log(1/eps) for p on the requested side of phat
// by bisection; the divergence is monotone away from phat.
double invert_chernoff(double phat, double n, double log_inv_eps, bool upper) {
    const double target = log_inv_eps / n;
    double lo, hi;
    if (upper) {
        lo = phat;
        hi = 1.0;
        if (kl_divergence(phat, hi - 1e-17) < target) return 1.0;
    } else {
        lo = 0.0;
        hi = phat;
        if (kl_divergence(phat, lo + 1e-300) < target) return 0.0;
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double f = kl_divergence(phat, mid);
        const bool past = upper ? f >= target : f < target;
        if (past)
            hi = mid;
        else
            lo = mid;
    }
    return upper ? hi : lo;
}

double inverse_normal_tail(double eps) {
    // z with P(N(0,1) > z) = eps, by bisection on erfc.
    double lo = 0.0, hi = 50.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (0.5 * std::erfc(mid / std::sqrt(2.0)) > eps)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

struct LpLayout {
    int k = 0;          // n_cut + 1
    int n_yield = 0;    // k*k yield variables
    bool with_errors = false;
    int num_vars = 0;

    int s_index(int m, int n) const { return m * k + n; }
    int u_index(int pair) const { return n_yield + pair; }
    int t_index(int m, int n) const { return n_yield + 7 + m * k + n; }
    int v_index(int pair) const { return 2 * n_yield + 7 + pair; }
};

LpLayout make_layout(int n_cut, bool with_errors) {
    LpLayout layout;
    layout.k = n_cut + 1;
    layout.n_yield = layout.k * layout.k;
    layout.with_errors = with_errors;
    layout.num_vars =
        with_errors ? 2 * layout.n_yield + 14 : layout.n_yield + 7;
    return layout;
}

lp::Problem build_problem(const ObservedIntervals& obs,
                          const ProtocolParams& params, const AnalysisPolicy& ap,
                          const LpLayout& layout) {
    lp::Problem problem;
    problem.num_vars = layout.num_vars;
    problem.objective.assign(layout.num_vars, 0.0);

    for (std::size_t pair = 0; pair < kEstimationLabels.size(); ++pair) {
        detail::SourceKind ka, kb;
        detail::split_label(kEstimationLabels[pair], ka, kb);
        const double mu_a = detail::intensity_of(ka, params);
        const double mu_b = detail::intensity_of(kb, params);

        std::vector<double> weights(layout.n_yield, 0.0);
        for (int m = 0; m < layout.k; ++m) {
            const double wa = model::poisson_weight(mu_a, m);
            if (wa == 0.0) continue;
            for (int n = 0; n < layout.k; ++n)
                weights[layout.s_index(m, n)] =
                    wa * model::poisson_weight(mu_b, n);
        }
        const double tail = std::max(
            0.0, 1.0 - model::poisson_cdf(mu_a, layout.k - 1) *
                           model::poisson_cdf(mu_b, layout.k - 1));

        // Gain window: sum_w s + u in [low, high], 0 <= u <= tail.
        std::vector<double> row(layout.num_vars, 0.0);
        for (int j = 0; j < layout.n_yield; ++j) row[j] = weights[j];
        row[layout.u_index(pair)] = 1.0;
        problem.add_row(row, obs.gain[pair].high);
        for (double& v : row) v = -v;
        problem.add_row(row, -obs.gain[pair].low);

        std::vector<double> ub(layout.num_vars, 0.0);
        ub[layout.u_index(pair)] = 1.0;
        problem.add_row(ub, tail);

        if (layout.with_errors) {
            std::vector<double> erow(layout.num_vars, 0.0);
            for (int j = 0; j < layout.n_yield; ++j)
                erow[layout.t_index(0, 0) + j] = weights[j];
            erow[layout.v_index(pair)] = 1.0;
            problem.add_row(erow, obs.error_gain[pair].high);
            for (double& v : erow) v = -v;
            problem.add_row(erow, -obs.error_gain[pair].low);

            std::vector<double> vb(layout.num_vars, 0.0);
            vb[layout.v_index(pair)] = 1.0;
            problem.add_row(vb, tail);
        }
    }

    // Yields live in [0,1]; error-gains are dominated by their yields.
    for (int j = 0; j < layout.n_yield; ++j) {
        std::vector<double> row(layout.num_vars, 0.0);
        row[j] = 1.0;
        problem.add_row(row, 1.0);
        if (layout.with_errors) {
            std::vector<double> dom(layout.num_vars, 0.0);
            dom[layout.t_index(0, 0) + j] = 1.0;
            dom[j] = -1.0;
            problem.add_row(dom, 0.0);
        }
    }
    (void)ap;
    return problem;
}

double solve_or_throw(const lp::Problem& problem, const AnalysisPolicy& ap) {
    const double tol = std::max(ap.lp_tolerance, 1e-12);
    const lp::Solution sol = lp::solve(problem, std::max(tol, 1e-11));
    if (sol.status == lp::Status::Infeasible)
        throw DataInconsistentError("data inconsistent with model");
    if (sol.status != lp::Status::Optimal)
        throw std::runtime_error("decoy: linear program did not converge");
    return sol.objective;
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

}  // namespace

Interval bound_mean(std::uint64_t count, std::uint64_t trials,
                    double per_obs_failure, FluctuationPolicy::Method method) {
    if (trials == 0)
        throw std::invalid_argument("bound_mean: trials must be >= 1");
    if (count > trials)
        throw std::invalid_argument("bound_mean: count must be <= trials");
    if (per_obs_failure <= 0.0 || per_obs_failure >= 1.0)
        throw std::invalid_argument("bound_mean: failure must be in (0,1)");

    const double n = static_cast<double>(trials);
    const double phat = static_cast<double>(count) / n;

    Interval iv;
    if (method == FluctuationPolicy::Method::Chernoff) {
        const double log_inv_eps = -std::log(per_obs_failure);
        iv.low = count == 0 ? 0.0
                            : invert_chernoff(phat, n, log_inv_eps, false);
        iv.high = count == trials
                      ? 1.0
                      : invert_chernoff(phat, n, log_inv_eps, true);
    } else {
        const double z = inverse_normal_tail(per_obs_failure);
        // Wald interval with a half-count variance floor so empty counts
        // still get nonzero width.
        const double p_reg =
            (static_cast<double>(count) + 0.5) / (n + 1.0);
        const double se = std::sqrt(p_reg * (1.0 - p_reg) / n);
        iv.low = clamp01(phat - z * se);
        iv.high = clamp01(phat + z * se);
    }
    iv.low = std::min(iv.low, phat);
    iv.high = std::max(iv.high, phat);
    return iv;
}

ObservedIntervals intervals_from_stats(const simkit::SourcePairStats& stats,
                                       const FluctuationPolicy& fp) {
    const double eps = fp.per_observable_epsilon();
    ObservedIntervals obs;
    for (std::size_t i = 0; i < kEstimationLabels.size(); ++i) {
        const simkit::LabelCounts& c = stats.at(kEstimationLabels[i]);
        if (c.sent == 0) {
            // Never observed: no information, full interval.
            obs.gain[i] = {0.0, 1.0};
            obs.error_gain[i] = {0.0, 1.0};
            continue;
        }
        obs.gain[i] = bound_mean(c.coincidences, c.sent, eps, fp.method);
        obs.error_gain[i] = bound_mean(c.errors, c.sent, eps, fp.method);
    }
    return obs;
}

double s11_lower_from_intervals(const ObservedIntervals& obs,
                                const ProtocolParams& params,
                                const AnalysisPolicy& ap) {
    const LpLayout layout = make_layout(ap.n_cut, false);
    lp::Problem problem = build_problem(obs, params, ap, layout);
    problem.objective[layout.s_index(1, 1)] = 1.0;
    return clamp01(solve_or_throw(problem, ap));
}

double t11_upper_from_intervals(const ObservedIntervals& obs,
                                const ProtocolParams& params,
                                const AnalysisPolicy& ap) {
    const LpLayout layout = make_layout(ap.n_cut, true);
    lp::Problem problem = build_problem(obs, params, ap, layout);
    problem.objective[layout.t_index(1, 1)] = -1.0;
    return clamp01(-solve_or_throw(problem, ap));
}

double s11_lower(const simkit::SourcePairStats& stats,
                 const ProtocolParams& params, const FluctuationPolicy& fp,
                 const AnalysisPolicy& ap) {
    return s11_lower_from_intervals(intervals_from_stats(stats, fp), params,
                                    ap);
}

double e11_upper(const simkit::SourcePairStats& stats,
                 const ProtocolParams& params, const FluctuationPolicy& fp,
                 const AnalysisPolicy& ap, double s11_lower_bound) {
    if (s11_lower_bound <= 0.0)
        throw std::domain_error("e11_upper: single-photon yield unresolvable");
    const double t11 =
        t11_upper_from_intervals(intervals_from_stats(stats, fp), params, ap);
    return std::min(t11 / s11_lower_bound, 0.5);
}

KeyRateReport finite_key(const simkit::SourcePairStats& stats,
                         const ProtocolParams& params,
                         const SystemSpec& system, const FluctuationPolicy& fp,
                         const AnalysisPolicy& ap) {
    params.validate();
    system.validate();

    KeyRateReport report;
    report.mode = KeyRateReport::Mode::Finite;
    report.epsilon_used = fp.epsilon;

    const ObservedIntervals obs = intervals_from_stats(stats, fp);
    report.s11_lower = s11_lower_from_intervals(obs, params, ap);
    if (report.s11_lower <= 0.0) {
        report.e11_upper = 0.5;
        return report;
    }
    const double t11 = t11_upper_from_intervals(obs, params, ap);
    report.e11_upper = std::min(t11 / report.s11_lower, 0.5);

    const simkit::LabelCounts& zz = stats.at(PairLabel::zz);
    const double p1 = model::poisson_weight(params.mu_z, 1);
    const double mean11 = static_cast<double>(zz.sent) * p1 * p1 *
                          report.s11_lower;
    const double eps_obs = fp.per_observable_epsilon();
    if (mean11 > 0.0) {
        const double delta = std::sqrt(2.0 * -std::log(eps_obs) / mean11);
        report.n11_lower = std::max(0.0, mean11 * (1.0 - delta));
    }

    const double e_zz =
        zz.coincidences > 0
            ? static_cast<double>(zz.errors) /
                  static_cast<double>(zz.coincidences)
            : 0.0;
    const double key =
        report.n11_lower * (1.0 - model::shannon_entropy(report.e11_upper)) -
        ap.ec_efficiency * static_cast<double>(zz.coincidences) *
            model::shannon_entropy(std::min(e_zz, 0.5));
    if (key > 0.0 && report.e11_upper < 0.5) {
        report.key_length = static_cast<std::uint64_t>(std::floor(key));
        report.secure = report.key_length > 0;
    }
    if (stats.total_pairs > 0) {
        report.rate_per_pulse = static_cast<double>(report.key_length) /
                                static_cast<double>(stats.total_pairs);
    }
    report.rate_bps = report.rate_per_pulse * system.clock_rate_hz;
    return report;
}

KeyRateReport asymptotic_rate(const SystemSpec& system,
                              const ProtocolParams& params,
                              const AnalysisPolicy& ap) {
    const ExpectedObservables expected =
        model::expected_observables(system, params);

    // Point constraints, padded only by numerical slack.
    ObservedIntervals obs;
    for (std::size_t i = 0; i < kEstimationLabels.size(); ++i) {
        const GainErrorPair& ge = expected.at(kEstimationLabels[i]);
        const double pad_s = 1e-14 + 1e-9 * ge.gain;
        const double pad_t = 1e-14 + 1e-9 * ge.error_gain;
        obs.gain[i] = {std::max(0.0, ge.gain - pad_s), ge.gain + pad_s};
        obs.error_gain[i] = {std::max(0.0, ge.error_gain - pad_t),
                             ge.error_gain + pad_t};
    }

    KeyRateReport report;
    report.mode = KeyRateReport::Mode::Asymptotic;
    report.epsilon_used = 0.0;
    report.s11_lower = s11_lower_from_intervals(obs, params, ap);
    if (report.s11_lower <= 0.0) {
        report.e11_upper = 0.5;
        report.rate_bps = 0.0;
        return report;
    }
    const double t11 = t11_upper_from_intervals(obs, params, ap);
    report.e11_upper = std::min(t11 / report.s11_lower, 0.5);

    const GainErrorPair& zz = expected.at(PairLabel::zz);
    const double e_zz = zz.gain > 0.0 ? zz.error_gain / zz.gain : 0.0;
    const double p1 = model::poisson_weight(params.mu_z, 1);
    const double pz2 = params.p_z * params.p_z;
    const double rate =
        pz2 * (p1 * p1 * report.s11_lower *
                   (1.0 - model::shannon_entropy(report.e11_upper)) -
               ap.ec_efficiency * zz.gain *
                   model::shannon_entropy(std::min(e_zz, 0.5)));
    report.rate_per_pulse = std::max(0.0, rate);
    report.rate_bps = report.rate_per_pulse * system.clock_rate_hz;
    report.secure = report.rate_per_pulse > 0.0 && report.e11_upper < 0.5;
    return report;
}

}  // namespace mdiqkd::decoy
