#pragma once

// Dense two-phase tableau simplex over a bounded box, Bland's rule.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "network.hpp"

namespace cegarette::lp {

enum class Relation { LessEq, GreaterEq };

struct Constraint {
  Vector coeffs;
  Relation relation = Relation::LessEq;
  double rhs = 0.0;
};

enum class LpStatus { Optimal, Infeasible };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Vector x;
  double objective = -std::numeric_limits<double>::infinity();
};

struct SimplexOptions {
  double pivot_tolerance = 1e-9;
  double optimality_tolerance = 1e-9;
  double feasibility_tolerance = 1e-7;
  std::size_t max_iterations = 200000;
};

namespace detail {

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), t_((rows + 1) * (cols + 1), 0.0), basis_(rows) {}

  double& at(std::size_t r, std::size_t c) { return t_[r * (cols_ + 1) + c]; }
  double at(std::size_t r, std::size_t c) const { return t_[r * (cols_ + 1) + c]; }
  double& rhs(std::size_t r) { return at(r, cols_); }
  double& obj(std::size_t c) { return at(rows_, c); }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::vector<std::size_t>& basis() { return basis_; }

  void pivot(std::size_t r, std::size_t c) {
    const double p = at(r, c);
    for (std::size_t j = 0; j <= cols_; ++j) at(r, j) /= p;
    at(r, c) = 1.0;
    for (std::size_t i = 0; i <= rows_; ++i) {
      if (i == r) continue;
      const double f = at(i, c);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= cols_; ++j) at(i, j) -= f * at(r, j);
      at(i, c) = 0.0;
    }
    basis_[r] = c;
  }

  // Maximizes the objective row over columns [0, allowed). Returns false if
  // an unbounded direction shows up, which a box-bounded program cannot have.
  bool run(std::size_t allowed, const SimplexOptions& opt) {
    for (std::size_t iter = 0; iter < opt.max_iterations; ++iter) {
      std::size_t enter = allowed;
      for (std::size_t j = 0; j < allowed; ++j)
        if (obj(j) < -opt.optimality_tolerance) {
          enter = j;
          break;
        }
      if (enter == allowed) return true;
      std::size_t leave = rows_;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < rows_; ++i) {
        const double a = at(i, enter);
        if (a <= opt.pivot_tolerance) continue;
        const double ratio = std::max(0.0, at(i, cols_)) / a;
        if (leave == rows_ || ratio < best - 1e-12) {
          best = ratio;
          leave = i;
        } else if (ratio <= best + 1e-12 && basis_[i] < basis_[leave]) {
          best = std::min(best, ratio);
          leave = i;
        }
      }
      if (leave == rows_) return false;
      pivot(leave, enter);
    }
    throw NumericalError("simplex iteration limit reached");
  }

 private:
  std::size_t rows_, cols_;
  std::vector<double> t_;
  std::vector<std::size_t> basis_;
};

inline LpResult maximize_once(const Vector& objective, const std::vector<Constraint>& constraints,
                              const InputBox& box, const SimplexOptions& opt) {
  const std::size_t n = box.size();
  // Shift to y = x - lower so every variable is >= 0; rows are a.y <= b.
  std::vector<Vector> rows;
  Vector b;
  for (const Constraint& c : constraints) {
    double shift = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      shift += c.coeffs[i] * box.lower[i];
      scale = std::max(scale, std::abs(c.coeffs[i]));
    }
    const double sign = c.relation == Relation::LessEq ? 1.0 : -1.0;
    double bi = sign * (c.rhs - shift);
    if (scale == 0.0) {
      if (bi < -opt.feasibility_tolerance) return {};
      continue;
    }
    Vector a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = sign * c.coeffs[i] / scale;
    rows.push_back(std::move(a));
    b.push_back(bi / scale);
  }
  for (std::size_t i = 0; i < n; ++i) {
    Vector a(n, 0.0);
    a[i] = 1.0;
    rows.push_back(std::move(a));
    b.push_back(box.upper[i] - box.lower[i]);
  }

  const std::size_t m = rows.size();
  std::size_t artificials = 0;
  for (double v : b)
    if (v < 0.0) ++artificials;
  const std::size_t cols = n + m + artificials;
  Tableau t(m, cols);
  std::size_t next_art = n + m;
  for (std::size_t r = 0; r < m; ++r) {
    const double s = b[r] < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) t.at(r, i) = s * rows[r][i];
    t.at(r, n + r) = s;
    t.rhs(r) = s * b[r];
    if (s < 0.0) {
      t.at(r, next_art) = 1.0;
      t.basis()[r] = next_art++;
    } else {
      t.basis()[r] = n + r;
    }
  }

  if (artificials > 0) {
    for (std::size_t j = n + m; j < cols; ++j) t.obj(j) = 1.0;
    for (std::size_t r = 0; r < m; ++r)
      if (t.basis()[r] >= n + m)
        for (std::size_t j = 0; j <= cols; ++j) t.at(m, j) -= t.at(r, j);
    if (!t.run(cols, opt)) throw NumericalError("phase one reported an unbounded direction");
    if (t.at(m, cols) < -opt.feasibility_tolerance) return {};
    for (std::size_t r = 0; r < m; ++r) {
      if (t.basis()[r] < n + m) continue;
      for (std::size_t j = 0; j < n + m; ++j)
        if (std::abs(t.at(r, j)) > opt.pivot_tolerance) {
          t.pivot(r, j);
          break;
        }
    }
  }

  for (std::size_t j = 0; j <= cols; ++j) t.obj(j) = 0.0;
  for (std::size_t i = 0; i < n; ++i) t.obj(i) = -objective[i];
  for (std::size_t r = 0; r < m; ++r) {
    const double f = t.obj(t.basis()[r]);
    if (f != 0.0)
      for (std::size_t j = 0; j <= cols; ++j) t.at(m, j) -= f * t.at(r, j);
  }
  if (!t.run(n + m, opt)) throw NumericalError("phase two reported an unbounded direction");

  LpResult res;
  res.status = LpStatus::Optimal;
  res.x = box.lower;
  for (std::size_t r = 0; r < m; ++r)
    if (t.basis()[r] < n) res.x[t.basis()[r]] += t.rhs(r);
  for (std::size_t i = 0; i < n; ++i) res.x[i] = std::clamp(res.x[i], box.lower[i], box.upper[i]);
  res.objective = 0.0;
  for (std::size_t i = 0; i < n; ++i) res.objective += objective[i] * res.x[i];
  return res;
}

inline bool satisfies(const std::vector<Constraint>& constraints, const Vector& x, double tol) {
  for (const Constraint& c : constraints) {
    double lhs = 0.0, mag = std::abs(c.rhs);
    for (std::size_t i = 0; i < x.size(); ++i) {
      lhs += c.coeffs[i] * x[i];
      mag += std::abs(c.coeffs[i] * x[i]);
    }
    const double slack = tol * (1.0 + mag);
    if (c.relation == Relation::LessEq ? lhs > c.rhs + slack : lhs < c.rhs - slack) return false;
  }
  return true;
}

}  // namespace detail

/// Maximizes objective . x subject to the constraints and x in the box.
/// Optimal solutions are re-checked against the constraints; on a failed
/// check the program is re-solved with a stricter pivot threshold before
/// NumericalError is raised.
inline LpResult maximize(const Vector& objective, const std::vector<Constraint>& constraints, const InputBox& box,
                         SimplexOptions opt = {}) {
  if (objective.size() != box.size()) throw InputError("objective length differs from box dimension");
  for (const Constraint& c : constraints)
    if (c.coeffs.size() != box.size()) throw InputError("constraint length differs from box dimension");
  for (int attempt = 0; attempt < 2; ++attempt) {
    LpResult r = detail::maximize_once(objective, constraints, box, opt);
    if (r.status == LpStatus::Infeasible || detail::satisfies(constraints, r.x, 1e-6)) return r;
    opt.pivot_tolerance *= 1e3;
  }
  throw NumericalError("simplex solution failed its feasibility re-check");
}

}  // namespace cegarette::lp
