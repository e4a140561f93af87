#include "mdiqkd/lp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace mdiqkd::lp {

void Problem::add_row(std::vector<double> coeffs, double bound) {
    if (static_cast<int>(coeffs.size()) != num_vars)
        throw std::invalid_argument("lp::Problem: row length != num_vars");
    rows.push_back(std::move(coeffs));
    rhs.push_back(bound);
}

namespace {

constexpr int kMaxIterations = 200000;

struct Tableau {
    int m = 0;
    int n_cols = 0;  // structural + slack + artificial
    std::vector<std::vector<double>> a;  // m rows, n_cols + 1 (rhs last)
    std::vector<double> obj;             // reduced costs, n_cols + 1 (value last)
    std::vector<int> basis;

    void pivot(int row, int col) {
        const double p = a[row][col];
        for (double& v : a[row]) v /= p;
        for (int i = 0; i < m; ++i) {
            if (i == row) continue;
            const double f = a[i][col];
            if (f == 0.0) continue;
            for (int j = 0; j <= n_cols; ++j) a[i][j] -= f * a[row][j];
        }
        const double f = obj[col];
        if (f != 0.0)
            for (int j = 0; j <= n_cols; ++j) obj[j] -= f * a[row][j];
        basis[row] = col;
    }

    // Entering by Bland's rule (smallest eligible index). The leaving row
    // minimizes the ratio; by default ties are judged relatively and broken
    // toward the largest pivot element for stability. That tie-break can
    // cycle on degenerate bases, so strict mode uses the exact minimum ratio
    // with ties broken by smallest basic-variable index, which Bland's rule
    // guarantees to terminate.
    Status iterate(double dual_tol, double pivot_tol,
                   const std::vector<bool>& allowed, bool strict_bland) {
        for (int iter = 0; iter < kMaxIterations; ++iter) {
            int entering = -1;
            for (int j = 0; j < n_cols; ++j) {
                if (allowed[j] && obj[j] < -dual_tol) {
                    entering = j;
                    break;
                }
            }
            if (entering < 0) return Status::Optimal;

            int leaving = -1;
            double best_ratio = 0.0;
            double best_pivot = 0.0;
            for (int i = 0; i < m; ++i) {
                const double coef = a[i][entering];
                if (coef <= pivot_tol) continue;
                const double ratio = std::max(0.0, a[i][n_cols]) / coef;
                if (strict_bland) {
                    if (leaving < 0 || ratio < best_ratio ||
                        (ratio == best_ratio && basis[i] < basis[leaving])) {
                        leaving = i;
                        best_ratio = ratio;
                    }
                    continue;
                }
                const double band = 1e-9 * best_ratio + 1e-300;
                if (leaving < 0 || ratio < best_ratio - band) {
                    leaving = i;
                    best_ratio = ratio;
                    best_pivot = coef;
                } else if (ratio <= best_ratio + band && coef > best_pivot) {
                    leaving = i;
                    best_pivot = coef;
                }
            }
            if (leaving < 0) return Status::Unbounded;
            pivot(leaving, entering);
        }
        return Status::IterationLimit;
    }
};

// Equilibration: rows are scaled to unit max magnitude, then each variable
// is scaled by its implied upper bound (taken from rows with nonnegative
// coefficients and nonnegative rhs), then rows are rescaled. Gains here span
// fifteen orders of magnitude, so without this the optimal vertex sits far
// below any workable pivot tolerance.
struct Scaled {
    std::vector<std::vector<double>> a;
    std::vector<double> b;
    std::vector<double> c;
    std::vector<double> gamma;  // x_j = gamma_j * y_j
    double c_norm = 1.0;
};

Scaled equilibrate(const Problem& problem,
                   const std::vector<double>& column_hint) {
    const int n = problem.num_vars;
    const int m = static_cast<int>(problem.rows.size());

    Scaled s;
    s.a = problem.rows;
    s.b = problem.rhs;

    const auto scale_rows = [&] {
        for (int i = 0; i < m; ++i) {
            double mx = std::abs(s.b[i]);
            for (double v : s.a[i]) mx = std::max(mx, std::abs(v));
            if (mx == 0.0) continue;
            for (double& v : s.a[i]) v /= mx;
            s.b[i] /= mx;
        }
    };
    scale_rows();

    s.gamma.assign(n, 1.0);
    if (!column_hint.empty())
        for (int j = 0; j < n; ++j)
            if (column_hint[j] > 0.0) s.gamma[j] = column_hint[j];
    for (int i = 0; i < m; ++i) {
        if (s.b[i] < 0.0) continue;
        bool nonneg = true;
        for (double v : s.a[i]) nonneg = nonneg && v >= 0.0;
        if (!nonneg) continue;
        for (int j = 0; j < n; ++j) {
            if (s.a[i][j] > 0.0)
                s.gamma[j] = std::min(s.gamma[j], s.b[i] / s.a[i][j]);
        }
    }
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) s.a[i][j] *= s.gamma[j];
    scale_rows();

    s.c.assign(n, 0.0);
    for (int j = 0; j < n; ++j) s.c[j] = problem.objective[j] * s.gamma[j];
    double cmax = 0.0;
    for (double v : s.c) cmax = std::max(cmax, std::abs(v));
    if (cmax > 0.0) {
        s.c_norm = cmax;
        for (double& v : s.c) v /= cmax;
    }
    return s;
}

Solution attempt_solve(const Problem& problem, double dual_tol,
                       double pivot_tol,
                       const std::vector<double>& column_hint = {},
                       bool strict_bland = false) {
    const int n = problem.num_vars;
    const int m = static_cast<int>(problem.rows.size());
    const Scaled sc = equilibrate(problem, column_hint);

    // Negative-rhs rows are negated (turning their slack coefficient to -1)
    // and given an artificial variable for phase 1.
    std::vector<bool> negated(m, false);
    int n_art = 0;
    for (int i = 0; i < m; ++i) {
        if (sc.b[i] < 0.0) {
            negated[i] = true;
            ++n_art;
        }
    }

    Tableau tab;
    tab.m = m;
    tab.n_cols = n + m + n_art;
    tab.a.assign(m, std::vector<double>(tab.n_cols + 1, 0.0));
    tab.basis.assign(m, -1);
    tab.obj.assign(tab.n_cols + 1, 0.0);

    int art_index = 0;
    for (int i = 0; i < m; ++i) {
        const double sgn = negated[i] ? -1.0 : 1.0;
        for (int j = 0; j < n; ++j) tab.a[i][j] = sgn * sc.a[i][j];
        tab.a[i][n + i] = sgn;  // slack
        tab.a[i][tab.n_cols] = sgn * sc.b[i];
        if (negated[i]) {
            const int col = n + m + art_index++;
            tab.a[i][col] = 1.0;
            tab.basis[i] = col;
        } else {
            tab.basis[i] = n + i;
        }
    }

    // Variables fixed at zero by their implied bound never enter.
    std::vector<bool> allowed(tab.n_cols, true);
    for (int j = 0; j < n; ++j)
        if (sc.gamma[j] == 0.0) allowed[j] = false;

    Solution sol;

    if (n_art > 0) {
        // Phase 1: minimize the sum of artificials. Their unit costs are
        // installed first, then reduced against the rows they start basic in
        // so every basic column carries a zero reduced cost.
        for (int j = n + m; j < tab.n_cols; ++j) tab.obj[j] = 1.0;
        for (int i = 0; i < m; ++i) {
            if (tab.basis[i] < n + m) continue;
            for (int j = 0; j <= tab.n_cols; ++j) tab.obj[j] -= tab.a[i][j];
        }
        const Status st =
            tab.iterate(dual_tol, pivot_tol, allowed, strict_bland);
        if (st != Status::Optimal) {
            sol.status = st == Status::Unbounded ? Status::Infeasible : st;
            return sol;
        }
        if (-tab.obj[tab.n_cols] > 1e-7) {
            sol.status = Status::Infeasible;
            return sol;
        }
        // Drive any zero-level artificials out of the basis where possible;
        // rows that cannot pivot are redundant and are blanked so they can
        // never re-enter play.
        for (int i = 0; i < m; ++i) {
            if (tab.basis[i] < n + m) continue;
            bool pivoted = false;
            for (int j = 0; j < n + m; ++j) {
                if (allowed[j] && std::abs(tab.a[i][j]) > pivot_tol) {
                    tab.pivot(i, j);
                    pivoted = true;
                    break;
                }
            }
            if (!pivoted) {
                std::fill(tab.a[i].begin(), tab.a[i].end(), 0.0);
                tab.a[i][tab.basis[i]] = 1.0;
            }
        }
    }

    // Phase 2 over the true objective; artificial columns stay banned.
    std::fill(tab.obj.begin(), tab.obj.end(), 0.0);
    for (int j = 0; j < n; ++j) tab.obj[j] = sc.c[j];
    for (int i = 0; i < m; ++i) {
        const int b = tab.basis[i];
        if (b >= n) continue;
        const double c = sc.c[b];
        if (c == 0.0) continue;
        for (int j = 0; j <= tab.n_cols; ++j) tab.obj[j] -= c * tab.a[i][j];
    }
    for (int j = n + m; j < tab.n_cols; ++j) allowed[j] = false;
    const Status st = tab.iterate(dual_tol, pivot_tol, allowed, strict_bland);
    if (st != Status::Optimal) {
        sol.status = st;
        return sol;
    }

    sol.status = Status::Optimal;
    sol.x.assign(n, 0.0);
    for (int i = 0; i < m; ++i) {
        if (tab.basis[i] < n)
            sol.x[tab.basis[i]] =
                std::max(0.0, tab.a[i][tab.n_cols]) * sc.gamma[tab.basis[i]];
    }
    double value = 0.0;
    for (int j = 0; j < n; ++j) value += problem.objective[j] * sol.x[j];
    sol.objective = value;
    return sol;
}

// Residual check on the original (unscaled) problem; a bad pivot can
// silently produce an infeasible "optimal" basis, which the caller then
// retries at a coarser tolerance. Each row's violation is judged against
// the magnitude of the terms that produced it.
bool is_feasible(const Problem& problem, const Solution& sol) {
    double xmax = 0.0;
    for (double v : sol.x) {
        if (v < 0.0) return false;
        xmax = std::max(xmax, v);
    }
    for (std::size_t i = 0; i < problem.rows.size(); ++i) {
        double lhs = 0.0;
        double mag = std::abs(problem.rhs[i]);
        double coef = 0.0;
        for (int j = 0; j < problem.num_vars; ++j) {
            const double term = problem.rows[i][j] * sol.x[j];
            lhs += term;
            mag = std::max(mag, std::abs(term));
            coef = std::max(coef, std::abs(problem.rows[i][j]));
        }
        // Relative to the largest term in the row, with an absolute floor
        // tied to the overall solution scale so that rounding residue on
        // rows whose own terms happen to be minuscule is not flagged. The
        // relative allowance absorbs pivot-rounding drift on the certified
        // side; callers treating the optimum as a one-sided bound only get
        // a correspondingly conservative bound from it.
        if (lhs - problem.rhs[i] > 1e-5 * mag + 1e-12 * coef * xmax + 1e-300)
            return false;
    }
    return true;
}

}  // namespace

// A verified-optimal basis can still be short of the true optimum when the
// variables span many orders of magnitude: reduced costs on the small
// columns drop below the dual tolerance. One refinement pass re-scales the
// columns by the magnitudes just found, which rebalances the reduced costs,
// and keeps whichever verified answer is better.
Solution refine(const Problem& problem, double dual_tol, Solution sol) {
    double mx = 0.0;
    for (double v : sol.x) mx = std::max(mx, v);
    if (mx <= 0.0) return sol;
    std::vector<double> hint(sol.x.size());
    for (std::size_t j = 0; j < sol.x.size(); ++j)
        hint[j] = std::max(sol.x[j], 1e-3 * mx);
    Solution ref = attempt_solve(problem, dual_tol, 1e-8, hint);
    if (ref.status == Status::Optimal && is_feasible(problem, ref) &&
        ref.objective < sol.objective)
        return ref;
    return sol;
}

Solution solve(const Problem& problem, double tolerance) {
    const double base_tol = std::min(std::max(tolerance, 1e-10), 1e-6);
    double dual_tol = base_tol;
    Solution sol;
    for (int pass = 0; pass < 4; ++pass, dual_tol *= 100.0) {
        // The last pass falls back to strict Bland pivoting, which is slower
        // but immune to the degenerate cycling the stabilized rule allows.
        const bool strict = pass == 3;
        if (strict) dual_tol = base_tol;
        sol = attempt_solve(problem, dual_tol, 1e-8, {}, strict);
        if (sol.status == Status::Infeasible ||
            sol.status == Status::Unbounded)
            return sol;
        if (sol.status == Status::Optimal && is_feasible(problem, sol))
            return refine(problem, base_tol, std::move(sol));
    }
    sol.status = Status::IterationLimit;
    sol.x.clear();
    sol.objective = 0.0;
    return sol;
}

}  // namespace mdiqkd::lp
