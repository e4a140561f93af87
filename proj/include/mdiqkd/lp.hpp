#pragma once

#include <vector>

namespace mdiqkd::lp {

// Minimal dense linear program:
//   minimize    c . x
//   subject to  A x <= b,  x >= 0
// Solved by a two-phase primal simplex with Bland's rule, so the result is
// deterministic and cycling-free. Problem sizes here are a few hundred rows.
struct Problem {
    int num_vars = 0;
    std::vector<double> objective;           // length num_vars
    std::vector<std::vector<double>> rows;   // each length num_vars
    std::vector<double> rhs;                 // one per row

    void add_row(std::vector<double> coeffs, double bound);
};

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

struct Solution {
    Status status = Status::Infeasible;
    double objective = 0.0;
    std::vector<double> x;
};

Solution solve(const Problem& problem, double tolerance = 1e-9);

}  // namespace mdiqkd::lp
