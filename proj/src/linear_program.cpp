#include "rtsched/linear_program.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rtsched {

std::size_t LinearProgram::add_row(LpRow row) {
    for (const auto& [j, a] : row.terms)
        if (j >= n_vars) throw std::out_of_range("LinearProgram::add_row: variable index out of range");
    rows.push_back(std::move(row));
    return rows.size() - 1;
}

double LinearProgram::activity(std::size_t row, const std::vector<double>& x) const {
    double s = 0.0;
    for (const auto& [j, a] : rows.at(row).terms) s += a * x.at(j);
    return s;
}

namespace {

using SparseColumn = std::vector<std::pair<std::size_t, double>>;

// Revised simplex on the standard form  A x = b, x >= 0, b >= 0, with an
// explicit dense basis inverse. Columns are structural, then slack/surplus,
// then artificial.
class RevisedSimplex {
public:
    RevisedSimplex(const LinearProgram& lp, double tol) : tol_(tol) {
        m_ = lp.rows.size();
        std::vector<SparseColumn> structural(lp.n_vars);
        b_.resize(m_);
        std::vector<RowSense> sense(m_);
        for (std::size_t i = 0; i < m_; ++i) {
            const auto& r = lp.rows[i];
            const double sign = r.rhs < 0.0 ? -1.0 : 1.0;
            sense[i] = r.sense;
            if (sign < 0 && r.sense != RowSense::Equal)
                sense[i] = r.sense == RowSense::LessEqual ? RowSense::GreaterEqual : RowSense::LessEqual;
            b_[i] = sign * r.rhs;
            for (const auto& [j, v] : r.terms)
                if (v != 0.0) structural[j].push_back({i, sign * v});
        }
        cols_ = std::move(structural);
        basis_.assign(m_, 0);
        std::vector<std::size_t> art_rows;
        for (std::size_t i = 0; i < m_; ++i) {
            if (sense[i] == RowSense::LessEqual) {
                basis_[i] = cols_.size();
                cols_.push_back({{i, 1.0}});
            } else {
                if (sense[i] == RowSense::GreaterEqual) cols_.push_back({{i, -1.0}});
                art_rows.push_back(i);
            }
        }
        art_begin_ = cols_.size();
        for (auto i : art_rows) {
            basis_[i] = cols_.size();
            cols_.push_back({{i, 1.0}});
        }
        binv_.assign(m_ * m_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) binv_[i * m_ + i] = 1.0;
        xb_ = b_;
    }

    std::size_t columns() const { return cols_.size(); }
    std::size_t artificial_begin() const { return art_begin_; }

    LpStatus optimize(const std::vector<double>& c, const std::vector<char>& allowed, std::size_t max_pivots,
                      std::size_t& pivots) {
        const std::size_t n = cols_.size();
        std::vector<double> y(m_), w(m_);
        std::size_t degenerate = 0;
        std::size_t since_reinvert = 0;
        while (true) {
            // Duals y = c_B' B^-1.
            std::fill(y.begin(), y.end(), 0.0);
            for (std::size_t r = 0; r < m_; ++r) {
                const double cb = c[basis_[r]];
                if (cb == 0.0) continue;
                const double* row = &binv_[r * m_];
                for (std::size_t i = 0; i < m_; ++i) y[i] += cb * row[i];
            }
            const bool bland = degenerate > 50;
            std::size_t enter = n;
            double best = tol_;
            for (std::size_t j = 0; j < n; ++j) {
                if (!allowed[j]) continue;
                double d = c[j];
                for (const auto& [i, v] : cols_[j]) d -= y[i] * v;
                if (d <= tol_) continue;
                if (bland) {
                    enter = j;
                    break;
                }
                if (d > best) {
                    best = d;
                    enter = j;
                }
            }
            if (enter == n) return LpStatus::Optimal;
            if (pivots >= max_pivots) return LpStatus::IterationLimit;

            direction(enter, w);
            std::size_t leave = m_;
            double ratio = std::numeric_limits<double>::infinity();
            for (std::size_t r = 0; r < m_; ++r) {
                if (w[r] <= tol_) continue;
                const double t = std::max(0.0, xb_[r]) / w[r];
                if (leave == m_ || t < ratio - tol_) {
                    ratio = t;
                    leave = r;
                } else if (t <= ratio + tol_ && basis_[r] < basis_[leave]) {
                    ratio = std::min(ratio, t);
                    leave = r;
                }
            }
            if (leave == m_) return LpStatus::Unbounded;
            degenerate = ratio <= tol_ ? degenerate + 1 : 0;
            pivot(leave, enter, w);
            ++pivots;
            if (++since_reinvert >= 100) {
                reinvert();
                since_reinvert = 0;
            }
        }
    }

    // Replaces basic artificial variables by structural or slack columns.
    void purge_artificials() {
        std::vector<double> w(m_);
        std::vector<char> in_basis(cols_.size(), 0);
        for (auto j : basis_) in_basis[j] = 1;
        for (std::size_t r = 0; r < m_; ++r) {
            if (basis_[r] < art_begin_) continue;
            for (std::size_t j = 0; j < art_begin_; ++j) {
                if (in_basis[j]) continue;
                double v = 0.0;
                for (const auto& [i, a] : cols_[j]) v += binv_[r * m_ + i] * a;
                if (std::abs(v) > 1e-7) {
                    direction(j, w);
                    in_basis[basis_[r]] = 0;
                    in_basis[j] = 1;
                    pivot(r, j, w);
                    break;
                }
            }
        }
    }

    std::vector<double> solution() const {
        std::vector<double> x(cols_.size(), 0.0);
        for (std::size_t r = 0; r < m_; ++r) x[basis_[r]] = std::max(0.0, xb_[r]);
        return x;
    }

private:
    void direction(std::size_t j, std::vector<double>& w) const {
        std::fill(w.begin(), w.end(), 0.0);
        for (const auto& [i, a] : cols_[j])
            for (std::size_t r = 0; r < m_; ++r) w[r] += binv_[r * m_ + i] * a;
    }

    void pivot(std::size_t r, std::size_t enter, const std::vector<double>& w) {
        const double inv = 1.0 / w[r];
        double* pr = &binv_[r * m_];
        for (std::size_t i = 0; i < m_; ++i) pr[i] *= inv;
        xb_[r] *= inv;
        for (std::size_t k = 0; k < m_; ++k) {
            if (k == r || w[k] == 0.0) continue;
            const double f = w[k];
            double* pk = &binv_[k * m_];
            for (std::size_t i = 0; i < m_; ++i) pk[i] -= f * pr[i];
            xb_[k] -= f * xb_[r];
        }
        basis_[r] = enter;
    }

    // Rebuilds B^-1 from the basic columns by Gauss-Jordan with partial pivoting.
    void reinvert() {
        std::vector<double> a(m_ * m_, 0.0);
        for (std::size_t r = 0; r < m_; ++r)
            for (const auto& [i, v] : cols_[basis_[r]]) a[i * m_ + r] = v;
        std::vector<double> inv(m_ * m_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) inv[i * m_ + i] = 1.0;
        for (std::size_t c = 0; c < m_; ++c) {
            std::size_t p = c;
            for (std::size_t i = c + 1; i < m_; ++i)
                if (std::abs(a[i * m_ + c]) > std::abs(a[p * m_ + c])) p = i;
            if (std::abs(a[p * m_ + c]) < 1e-14) return;  // keep the updated inverse
            if (p != c)
                for (std::size_t k = 0; k < m_; ++k) {
                    std::swap(a[p * m_ + k], a[c * m_ + k]);
                    std::swap(inv[p * m_ + k], inv[c * m_ + k]);
                }
            const double d = 1.0 / a[c * m_ + c];
            for (std::size_t k = 0; k < m_; ++k) {
                a[c * m_ + k] *= d;
                inv[c * m_ + k] *= d;
            }
            for (std::size_t i = 0; i < m_; ++i) {
                if (i == c) continue;
                const double f = a[i * m_ + c];
                if (f == 0.0) continue;
                for (std::size_t k = 0; k < m_; ++k) {
                    a[i * m_ + k] -= f * a[c * m_ + k];
                    inv[i * m_ + k] -= f * inv[c * m_ + k];
                }
            }
        }
        binv_ = std::move(inv);
        for (std::size_t r = 0; r < m_; ++r) {
            double s = 0.0;
            for (std::size_t i = 0; i < m_; ++i) s += binv_[r * m_ + i] * b_[i];
            xb_[r] = s;
        }
    }

    double tol_;
    std::size_t m_ = 0, art_begin_ = 0;
    std::vector<SparseColumn> cols_;
    std::vector<double> b_, xb_, binv_;
    std::vector<std::size_t> basis_;
};

}  // namespace

LpResult solve_lp(const LinearProgram& lp, const LpOptions& opts) {
    if (lp.objective.size() != lp.n_vars) throw std::invalid_argument("solve_lp: objective size mismatch");
    RevisedSimplex s(lp, opts.tolerance);
    LpResult res;
    const std::size_t n = s.columns();
    std::vector<char> allowed(n, 1);

    if (s.artificial_begin() < n) {
        std::vector<double> c1(n, 0.0);
        for (std::size_t j = s.artificial_begin(); j < n; ++j) c1[j] = -1.0;
        const LpStatus st = s.optimize(c1, allowed, opts.max_pivots, res.pivots);
        if (st == LpStatus::IterationLimit) {
            res.status = st;
            return res;
        }
        const auto x = s.solution();
        double infeas = 0.0;
        for (std::size_t j = s.artificial_begin(); j < n; ++j) infeas += x[j];
        if (infeas > opts.tolerance * 10.0) {
            res.status = LpStatus::Infeasible;
            return res;
        }
        s.purge_artificials();
        for (std::size_t j = s.artificial_begin(); j < n; ++j) allowed[j] = 0;
    }

    std::vector<double> c2(n, 0.0);
    std::copy(lp.objective.begin(), lp.objective.end(), c2.begin());
    res.status = s.optimize(c2, allowed, opts.max_pivots, res.pivots);
    const auto x = s.solution();
    res.x.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(lp.n_vars));
    res.value = 0.0;
    for (std::size_t j = 0; j < lp.n_vars; ++j) res.value += lp.objective[j] * res.x[j];
    return res;
}

}  // namespace rtsched
