#pragma once

// Two-phase revised simplex for small sparse LPs:
//   maximize c'x  subject to  rows (<=, >=, =),  x >= 0.

#include <cstddef>
#include <utility>
#include <vector>

namespace rtsched {

enum class RowSense { LessEqual, GreaterEqual, Equal };

struct LpRow {
    std::vector<std::pair<std::size_t, double>> terms;  ///< (variable, coefficient)
    RowSense sense = RowSense::LessEqual;
    double rhs = 0.0;
};

struct LinearProgram {
    std::size_t n_vars = 0;
    std::vector<double> objective;  ///< size n_vars, maximized
    std::vector<LpRow> rows;

    explicit LinearProgram(std::size_t n = 0) : n_vars(n), objective(n, 0.0) {}
    std::size_t add_row(LpRow row);
    /// Row activity a'x.
    double activity(std::size_t row, const std::vector<double>& x) const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    double value = 0.0;
    std::vector<double> x;
    std::size_t pivots = 0;
};

struct LpOptions {
    double tolerance = 1e-9;
    std::size_t max_pivots = 200000;
};

/// Dantzig pricing with Bland's rule after a run of degenerate pivots.
LpResult solve_lp(const LinearProgram& lp, const LpOptions& opts = {});

}  // namespace rtsched
