#include "mdiqkd/optimize.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "rng.hpp"

namespace mdiqkd::optimize {

namespace {

constexpr int kDim = 6;
constexpr double kMuFloor = 1e-4;
constexpr double kMuCeil = 2.0;
constexpr double kRelTol = 1e-4;

double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

double log_scale(double unit, double lo, double hi) {
    return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * unit);
}

// Unconstrained 6-vector -> valid ProtocolParams. Intensities map through
// log scales with mu_x pinned strictly below mu_y; probabilities through a
// softmax with a unit vacuum slot, so p_x + p_y + p_z < 1 always holds.
ProtocolParams decode(const std::array<double, kDim>& v) {
    ProtocolParams p;
    p.mu_y = log_scale(sigmoid(v[1]), kMuFloor, kMuCeil);
    p.mu_x = log_scale(sigmoid(v[0]) * (1.0 - 1e-9), kMuFloor, p.mu_y);
    p.mu_z = log_scale(sigmoid(v[2]), kMuFloor, kMuCeil);
    const double wx = std::exp(std::clamp(v[3], -30.0, 30.0));
    const double wy = std::exp(std::clamp(v[4], -30.0, 30.0));
    const double wz = std::exp(std::clamp(v[5], -30.0, 30.0));
    const double total = 1.0 + wx + wy + wz;
    p.p_x = wx / total;
    p.p_y = wy / total;
    p.p_z = wz / total;
    return p;
}

struct Objective {
    const SystemSpec& system;
    std::uint64_t n_pairs;
    const decoy::FluctuationPolicy& fp;
    const decoy::AnalysisPolicy& ap;
    std::uint64_t evaluations = 0;

    // Negated rate; minimized by the simplex.
    double operator()(const std::array<double, kDim>& v) {
        ++evaluations;
        return -expected_finite_rate(system, decode(v), n_pairs, fp, ap);
    }
};

struct SimplexOutcome {
    std::array<double, kDim> best_point{};
    double best_value = 0.0;
    bool converged = false;
};

// Standard Nelder-Mead; runs until convergence or the evaluation allowance
// for this start is used up.
SimplexOutcome nelder_mead(Objective& objective,
                           const std::array<double, kDim>& start,
                           std::uint64_t max_evals) {
    constexpr double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

    struct Vertex {
        std::array<double, kDim> x;
        double f;
    };
    std::vector<Vertex> simplex;
    simplex.reserve(kDim + 1);

    const std::uint64_t eval_start = objective.evaluations;
    const auto evals_used = [&] { return objective.evaluations - eval_start; };

    simplex.push_back({start, objective(start)});
    for (int i = 0; i < kDim; ++i) {
        auto x = start;
        x[i] += 0.7;
        simplex.push_back({x, objective(x)});
    }

    SimplexOutcome outcome;
    while (evals_used() + 2 < max_evals) {
        std::stable_sort(simplex.begin(), simplex.end(),
                         [](const Vertex& a, const Vertex& b) {
                             return a.f < b.f;
                         });
        const double spread = simplex.back().f - simplex.front().f;
        if (spread <= kRelTol * (std::abs(simplex.front().f) + 1e-18)) {
            outcome.converged = true;
            break;
        }

        std::array<double, kDim> centroid{};
        for (int i = 0; i < kDim; ++i) {
            for (int j = 0; j < kDim; ++j) centroid[j] += simplex[i].x[j];
        }
        for (double& c : centroid) c /= kDim;

        const auto blend = [&](double coef) {
            std::array<double, kDim> x;
            for (int j = 0; j < kDim; ++j)
                x[j] = centroid[j] + coef * (simplex.back().x[j] - centroid[j]);
            return x;
        };

        const auto reflected = blend(-alpha);
        const double f_ref = objective(reflected);
        if (f_ref < simplex.front().f) {
            const auto expanded = blend(-alpha * gamma);
            const double f_exp = objective(expanded);
            simplex.back() = f_exp < f_ref ? Vertex{expanded, f_exp}
                                           : Vertex{reflected, f_ref};
            continue;
        }
        if (f_ref < simplex[kDim - 1].f) {
            simplex.back() = {reflected, f_ref};
            continue;
        }
        const auto contracted = blend(f_ref < simplex.back().f ? -rho : rho);
        const double f_con = objective(contracted);
        if (f_con < std::min(f_ref, simplex.back().f)) {
            simplex.back() = {contracted, f_con};
            continue;
        }
        // Shrink toward the best vertex.
        for (int i = 1; i <= kDim; ++i) {
            for (int j = 0; j < kDim; ++j)
                simplex[i].x[j] = simplex[0].x[j] +
                                  sigma * (simplex[i].x[j] - simplex[0].x[j]);
            simplex[i].f = objective(simplex[i].x);
            if (evals_used() >= max_evals) break;
        }
    }

    std::stable_sort(simplex.begin(), simplex.end(),
                     [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
    outcome.best_point = simplex.front().x;
    outcome.best_value = simplex.front().f;
    return outcome;
}

}  // namespace

double expected_finite_rate(const SystemSpec& system,
                            const ProtocolParams& params,
                            std::uint64_t n_pairs,
                            const decoy::FluctuationPolicy& fp,
                            const decoy::AnalysisPolicy& ap) {
    try {
        const simkit::SourcePairStats stats =
            simkit::expected_stats(system, params, n_pairs);
        return decoy::finite_key(stats, params, system, fp, ap).rate_per_pulse;
    } catch (const decoy::DataInconsistentError&) {
        return 0.0;
    }
}

OptimizationResult optimize(const SystemSpec& system, std::uint64_t n_pairs,
                            const decoy::FluctuationPolicy& fp,
                            const decoy::AnalysisPolicy& ap,
                            std::uint64_t seed, std::uint64_t budget,
                            int starts) {
    if (budget < 100)
        throw std::invalid_argument("optimize: budget must be >= 100");
    if (starts < 1)
        throw std::invalid_argument("optimize: starts must be >= 1");
    system.validate();

    Objective objective{system, n_pairs, fp, ap};
    const std::uint64_t per_start =
        std::max<std::uint64_t>(100, budget / static_cast<std::uint64_t>(starts));

    OptimizationResult result;
    result.best_params = decode({});
    result.best_rate_per_pulse = -1.0;
    bool all_converged = true;
    int started = 0;
    for (int s = 0; s < starts; ++s) {
        if (objective.evaluations >= budget) {
            all_converged = false;
            break;
        }
        detail::Rng rng(detail::substream_seed(seed, s));
        std::array<double, kDim> start{};
        for (double& coord : start) coord = rng.uniform(-2.5, 2.5);

        const std::uint64_t allowance =
            std::min(per_start, budget - objective.evaluations);
        const SimplexOutcome outcome =
            nelder_mead(objective, start, allowance);
        all_converged = all_converged && outcome.converged;
        ++started;

        const double rate = -outcome.best_value;
        if (rate > result.best_rate_per_pulse) {
            result.best_rate_per_pulse = rate;
            result.best_params = decode(outcome.best_point);
        }
    }
    result.best_rate_per_pulse = std::max(0.0, result.best_rate_per_pulse);
    result.evaluations = objective.evaluations;
    result.starts = started;
    result.converged = all_converged && started == starts;
    return result;
}

std::vector<SurfacePoint> rate_surface(const SystemSpec& system,
                                       std::uint64_t n_pairs,
                                       const decoy::FluctuationPolicy& fp,
                                       const decoy::AnalysisPolicy& ap,
                                       const std::vector<double>& mu_z_grid,
                                       const std::vector<double>& p_z_grid,
                                       const ProtocolParams& base) {
    if (mu_z_grid.empty() || p_z_grid.empty())
        throw std::invalid_argument("rate_surface: grid must be non-empty");

    std::vector<SurfacePoint> points;
    points.reserve(mu_z_grid.size() * p_z_grid.size());
    for (double mu_z : mu_z_grid) {
        for (double p_z : p_z_grid) {
            ProtocolParams params = base;
            params.mu_z = mu_z;
            params.p_z = p_z;
            if (params.p_x + params.p_y + params.p_z > 1.0) continue;
            SurfacePoint point;
            point.mu_z = mu_z;
            point.p_z = p_z;
            point.rate_finite =
                expected_finite_rate(system, params, n_pairs, fp, ap);
            point.rate_asymptotic =
                decoy::asymptotic_rate(system, params, ap).rate_per_pulse;
            points.push_back(point);
        }
    }
    return points;
}

}  // namespace mdiqkd::optimize
