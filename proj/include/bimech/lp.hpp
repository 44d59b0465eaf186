#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "bimech/errors.hpp"
#include "bimech/rational.hpp"

namespace bimech {

enum class Relation { le, eq, ge };
enum class Sense { minimize, maximize };
enum class LpStatus { optimal, infeasible, unbounded };

template <class T>
struct BasicConstraint {
  std::vector<T> coeffs;
  Relation rel = Relation::le;
  T rhs = T(0);
};

/// Variables default to x >= 0 with no upper bound; clear `lower` to make one free.
template <class T>
struct BasicLinearProgram {
  std::size_t n_vars = 0;
  std::vector<BasicConstraint<T>> constraints;
  std::vector<T> objective;
  Sense sense = Sense::minimize;
  std::vector<std::optional<T>> lower;
  std::vector<std::optional<T>> upper;

  BasicLinearProgram() = default;
  explicit BasicLinearProgram(std::size_t n, Sense s = Sense::minimize)
      : n_vars(n), objective(n, T(0)), sense(s), lower(n, T(0)), upper(n) {}

  void add(std::vector<T> coeffs, Relation rel, T rhs) {
    if (coeffs.size() != n_vars) throw StructuralError("constraint length does not match the variable count");
    constraints.push_back({std::move(coeffs), rel, std::move(rhs)});
  }

  /// Adds Σ coeff·x_index for a sparse list of (index, coeff) pairs.
  void add_sparse(const std::vector<std::pair<std::size_t, T>>& terms, Relation rel, T rhs) {
    std::vector<T> row(n_vars, T(0));
    for (const auto& [j, v] : terms) {
      if (j >= n_vars) throw StructuralError("sparse constraint index out of range");
      row[j] += v;
    }
    constraints.push_back({std::move(row), rel, std::move(rhs)});
  }

  void set_bounds(std::size_t j, std::optional<T> lo, std::optional<T> hi) {
    lower.at(j) = std::move(lo);
    upper.at(j) = std::move(hi);
  }
};

template <class T>
struct BasicLpResult {
  LpStatus status = LpStatus::infeasible;
  std::vector<T> point;
  T value = T(0);
  /// One multiplier per constraint: value = Σ rhs·dual when every variable is >= 0 and unbounded above.
  std::vector<T> duals;

  bool optimal() const noexcept { return status == LpStatus::optimal; }
};

using Constraint = BasicConstraint<Rational>;
using LinearProgram = BasicLinearProgram<Rational>;
using LpResult = BasicLpResult<Rational>;

namespace detail {

template <class T>
struct Arith;

template <>
struct Arith<Rational> {
  static int sign(const Rational& v) { return sgn(v); }
  static bool zero(const Rational& v) { return sgn(v) == 0; }
};

template <>
struct Arith<double> {
  static constexpr double eps = 1e-9;
  static int sign(double v) { return v > eps ? 1 : (v < -eps ? -1 : 0); }
  static bool zero(double v) { return std::fabs(v) <= eps; }
};

/// Tableau simplex over columns [0, ncols) with rhs stored separately.
template <class T>
class Tableau {
 public:
  Tableau(std::vector<std::vector<T>> rows, std::vector<T> rhs, std::vector<std::size_t> basis, std::size_t ncols)
      : a_(std::move(rows)), b_(std::move(rhs)), basis_(std::move(basis)), ncols_(ncols) {}

  std::size_t rows() const { return a_.size(); }
  std::size_t cols() const { return ncols_; }
  const std::vector<std::size_t>& basis() const { return basis_; }
  const T& rhs(std::size_t r) const { return b_[r]; }
  const T& at(std::size_t r, std::size_t c) const { return a_[r][c]; }

  /// Reduced costs for cost vector `cost`.
  void price(const std::vector<T>& cost) {
    z_.assign(ncols_, T(0));
    zval_ = T(0);
    for (std::size_t j = 0; j < ncols_; ++j) z_[j] = cost[j];
    for (std::size_t r = 0; r < a_.size(); ++r) {
      const T& cb = cost[basis_[r]];
      if (Arith<T>::zero(cb)) continue;
      for (std::size_t j = 0; j < ncols_; ++j)
        if (!Arith<T>::zero(a_[r][j])) z_[j] -= cb * a_[r][j];
      zval_ -= cb * b_[r];
    }
  }

  /// Minimizes the priced cost over allowed columns. Returns false when unbounded.
  bool run(const std::vector<char>& allowed) {
    std::size_t degenerate = 0;
    const std::size_t bland_after = 50;
    for (;;) {
      std::optional<std::size_t> enter;
      bool bland = degenerate >= bland_after;
      for (std::size_t j = 0; j < ncols_; ++j) {
        if (!allowed[j] || Arith<T>::sign(z_[j]) >= 0) continue;
        if (bland) {
          enter = j;
          break;
        }
        if (!enter || z_[j] < z_[*enter]) enter = j;
      }
      if (!enter) return true;
      std::optional<std::size_t> leave;
      T best_ratio = T(0);
      for (std::size_t r = 0; r < a_.size(); ++r) {
        if (Arith<T>::sign(a_[r][*enter]) <= 0) continue;
        T ratio = b_[r] / a_[r][*enter];
        if (!leave || ratio < best_ratio || (ratio == best_ratio && basis_[r] < basis_[*leave])) {
          leave = r;
          best_ratio = ratio;
        }
      }
      if (!leave) return false;
      if (Arith<T>::zero(best_ratio))
        ++degenerate;
      else
        degenerate = 0;
      pivot(*leave, *enter);
    }
  }

  void pivot(std::size_t r, std::size_t c) {
    T inv = T(1) / a_[r][c];
    for (std::size_t j = 0; j < ncols_; ++j)
      if (!Arith<T>::zero(a_[r][j])) a_[r][j] *= inv;
    b_[r] *= inv;
    a_[r][c] = T(1);
    std::vector<std::size_t> nz;
    for (std::size_t j = 0; j < ncols_; ++j)
      if (!Arith<T>::zero(a_[r][j])) nz.push_back(j);
    for (std::size_t i = 0; i < a_.size(); ++i) {
      if (i == r || Arith<T>::zero(a_[i][c])) continue;
      T f = a_[i][c];
      for (std::size_t j : nz) a_[i][j] -= f * a_[r][j];
      a_[i][c] = T(0);
      b_[i] -= f * b_[r];
    }
    if (!z_.empty() && !Arith<T>::zero(z_[c])) {
      T f = z_[c];
      for (std::size_t j : nz) z_[j] -= f * a_[r][j];
      z_[c] = T(0);
      zval_ -= f * b_[r];
    }
    basis_[r] = c;
  }

  void drop_row(std::size_t r) {
    a_.erase(a_.begin() + static_cast<std::ptrdiff_t>(r));
    b_.erase(b_.begin() + static_cast<std::ptrdiff_t>(r));
    basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(r));
  }

  const T& reduced_cost(std::size_t c) const { return z_[c]; }

  /// Negated objective value of the current basis under the priced cost.
  T objective() const { return -zval_; }

 private:
  std::vector<std::vector<T>> a_;
  std::vector<T> b_;
  std::vector<std::size_t> basis_;
  std::vector<T> z_;
  T zval_ = T(0);
  std::size_t ncols_ = 0;
};

}  // namespace detail

/// Two-phase simplex. Deterministic for a given input.
template <class T>
BasicLpResult<T> lp_solve(const BasicLinearProgram<T>& lp) {
  using A = detail::Arith<T>;
  const std::size_t n = lp.n_vars;
  if (n == 0) throw StructuralError("linear program has no variables");
  if (lp.objective.size() != n || lp.lower.size() != n || lp.upper.size() != n)
    throw StructuralError("objective or bound vectors have the wrong length");
  for (const auto& con : lp.constraints)
    if (con.coeffs.size() != n) throw StructuralError("constraint length does not match the variable count");

  // Each original variable maps to x = offset + sign·y (+ optional second column for free variables).
  struct VarMap {
    std::size_t col;
    std::optional<std::size_t> neg_col;
    T offset;
    int sign;
  };
  std::vector<VarMap> vmap(n);
  std::size_t ny = 0;
  std::vector<std::pair<std::size_t, T>> upper_rows;  // y_col <= value
  for (std::size_t j = 0; j < n; ++j) {
    const auto& lo = lp.lower[j];
    const auto& hi = lp.upper[j];
    if (lo && hi && *hi < *lo) return {LpStatus::infeasible, {}, T(0)};
    if (lo) {
      vmap[j] = {ny++, std::nullopt, *lo, 1};
      if (hi) upper_rows.push_back({vmap[j].col, *hi - *lo});
    } else if (hi) {
      vmap[j] = {ny++, std::nullopt, *hi, -1};
    } else {
      std::size_t pcol = ny++;
      std::size_t ncol = ny++;
      vmap[j] = {pcol, ncol, T(0), 1};
    }
  }

  struct Row {
    std::vector<T> coeffs;
    Relation rel;
    T rhs;
    bool flipped = false;
  };
  std::vector<Row> rows;
  rows.reserve(lp.constraints.size() + upper_rows.size());
  for (const auto& con : lp.constraints) {
    Row row{std::vector<T>(ny, T(0)), con.rel, con.rhs};
    for (std::size_t j = 0; j < n; ++j) {
      const T& v = con.coeffs[j];
      if (A::zero(v)) continue;
      const auto& vm = vmap[j];
      row.rhs -= v * vm.offset;
      if (vm.sign > 0)
        row.coeffs[vm.col] += v;
      else
        row.coeffs[vm.col] -= v;
      if (vm.neg_col) row.coeffs[*vm.neg_col] -= v;
    }
    rows.push_back(std::move(row));
  }
  for (const auto& [col, val] : upper_rows) {
    Row row{std::vector<T>(ny, T(0)), Relation::le, val};
    row.coeffs[col] = T(1);
    rows.push_back(std::move(row));
  }
  for (auto& row : rows) {
    if (A::sign(row.rhs) < 0) {
      for (auto& v : row.coeffs) v = -v;
      row.rhs = -row.rhs;
      row.flipped = true;
      if (row.rel == Relation::le)
        row.rel = Relation::ge;
      else if (row.rel == Relation::ge)
        row.rel = Relation::le;
    }
  }

  std::size_t nslack = 0;
  std::size_t nart = 0;
  for (const auto& row : rows) {
    if (row.rel != Relation::eq) ++nslack;
    if (row.rel != Relation::le) ++nart;
  }
  const std::size_t ncols = ny + nslack + nart;
  const std::size_t art_begin = ny + nslack;
  std::vector<std::vector<T>> tab(rows.size(), std::vector<T>(ncols, T(0)));
  std::vector<T> rhs(rows.size());
  std::vector<std::size_t> basis(rows.size());
  std::size_t s = ny;
  std::size_t art = art_begin;
  std::vector<std::size_t> id_col(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t j = 0; j < ny; ++j) tab[r][j] = rows[r].coeffs[j];
    rhs[r] = rows[r].rhs;
    if (rows[r].rel == Relation::le) {
      tab[r][s] = T(1);
      id_col[r] = s;
      basis[r] = s++;
    } else if (rows[r].rel == Relation::ge) {
      tab[r][s++] = T(-1);
      tab[r][art] = T(1);
      id_col[r] = art;
      basis[r] = art++;
    } else {
      tab[r][art] = T(1);
      id_col[r] = art;
      basis[r] = art++;
    }
  }

  detail::Tableau<T> tb(std::move(tab), std::move(rhs), std::move(basis), ncols);
  std::vector<char> allowed(ncols, 1);
  if (nart > 0) {
    std::vector<T> phase1(ncols, T(0));
    for (std::size_t j = art_begin; j < ncols; ++j) phase1[j] = T(1);
    tb.price(phase1);
    tb.run(allowed);
    if (A::sign(tb.objective()) > 0) return {LpStatus::infeasible, {}, T(0)};
    for (std::size_t r = 0; r < tb.rows();) {
      if (tb.basis()[r] < art_begin) {
        ++r;
        continue;
      }
      std::optional<std::size_t> col;
      for (std::size_t j = 0; j < art_begin; ++j)
        if (!A::zero(tb.at(r, j))) {
          col = j;
          break;
        }
      if (col) {
        tb.pivot(r, *col);
        ++r;
      } else {
        tb.drop_row(r);
      }
    }
    for (std::size_t j = art_begin; j < ncols; ++j) allowed[j] = 0;
  }

  std::vector<T> phase2(ncols, T(0));
  const bool maximize = lp.sense == Sense::maximize;
  for (std::size_t j = 0; j < n; ++j) {
    T cj = maximize ? T(-lp.objective[j]) : lp.objective[j];
    const auto& vm = vmap[j];
    if (vm.sign > 0)
      phase2[vm.col] += cj;
    else
      phase2[vm.col] -= cj;
    if (vm.neg_col) phase2[*vm.neg_col] -= cj;
  }
  tb.price(phase2);
  if (!tb.run(allowed)) return {LpStatus::unbounded, {}, T(0)};

  std::vector<T> y(ncols, T(0));
  for (std::size_t r = 0; r < tb.rows(); ++r) y[tb.basis()[r]] = tb.rhs(r);
  BasicLpResult<T> out{LpStatus::optimal, std::vector<T>(n, T(0)), T(0)};
  for (std::size_t j = 0; j < n; ++j) {
    const auto& vm = vmap[j];
    T v = vm.offset;
    if (vm.sign > 0)
      v += y[vm.col];
    else
      v -= y[vm.col];
    if (vm.neg_col) v -= y[*vm.neg_col];
    out.point[j] = v;
    out.value += lp.objective[j] * v;
  }
  out.duals.resize(lp.constraints.size());
  for (std::size_t r = 0; r < lp.constraints.size(); ++r) {
    T d = -tb.reduced_cost(id_col[r]);
    if (rows[r].flipped) d = -d;
    if (maximize) d = -d;
    out.duals[r] = d;
  }
  return out;
}

/// True when `x` satisfies every constraint and bound of `lp` exactly.
inline bool lp_feasible_point(const LinearProgram& lp, const RationalVector& x) {
  if (x.size() != lp.n_vars) return false;
  for (std::size_t j = 0; j < lp.n_vars; ++j) {
    if (lp.lower[j] && x[j] < *lp.lower[j]) return false;
    if (lp.upper[j] && x[j] > *lp.upper[j]) return false;
  }
  for (const auto& con : lp.constraints) {
    Rational lhs = dot(con.coeffs, x);
    if (con.rel == Relation::le && lhs > con.rhs) return false;
    if (con.rel == Relation::ge && lhs < con.rhs) return false;
    if (con.rel == Relation::eq && lhs != con.rhs) return false;
  }
  return true;
}

struct Matching {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  Rational weight = 0;
};

namespace detail {

/// Hungarian method: minimum-cost assignment of every row to a distinct column (rows <= cols).
/// Returns col_of_row; `blocked` entries are never used, nullopt when no such assignment exists.
inline std::optional<std::vector<std::size_t>> hungarian_min(const RationalMatrix& cost, const Matrix<char>& blocked) {
  const std::size_t n = cost.rows();
  const std::size_t mcols = cost.cols();
  if (n > mcols) return std::nullopt;
  Rational span = 1;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < mcols; ++j)
      if (!blocked(i, j)) span += abs(cost(i, j));
  const Rational big = span * Rational(static_cast<long>(n + 1));
  auto w = [&](std::size_t i, std::size_t j) -> Rational { return blocked(i, j) ? big : cost(i, j); };

  // 1-based potentials in the classical formulation.
  std::vector<Rational> u(n + 1, Rational(0)), v(mcols + 1, Rational(0));
  std::vector<std::size_t> p(mcols + 1, 0), way(mcols + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<Rational> minv(mcols + 1);
    std::vector<char> has(mcols + 1, 0), used(mcols + 1, 0);
    do {
      used[j0] = 1;
      std::size_t i0 = p[j0];
      std::optional<Rational> delta;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= mcols; ++j) {
        if (used[j]) continue;
        Rational cur = w(i0 - 1, j - 1) - u[i0] - v[j];
        if (!has[j] || cur < minv[j]) {
          minv[j] = cur;
          has[j] = 1;
          way[j] = j0;
        }
        if (!delta || minv[j] < *delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= mcols; ++j) {
        if (used[j]) {
          u[p[j]] += *delta;
          v[j] -= *delta;
        } else {
          minv[j] -= *delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> col_of(n, 0);
  for (std::size_t j = 1; j <= mcols; ++j)
    if (p[j] != 0) col_of[p[j] - 1] = j - 1;
  for (std::size_t i = 0; i < n; ++i)
    if (blocked(i, col_of[i])) return std::nullopt;
  return col_of;
}

}  // namespace detail

/// Maximum-weight matching, not necessarily perfect. `forbidden` may be empty.
inline Matching max_weight_bipartite_matching(const RationalMatrix& weights, const Matrix<char>& forbidden = {}) {
  const std::size_t L = weights.rows();
  const std::size_t R = weights.cols();
  if (L == 0 || R == 0) throw StructuralError("matching needs nonempty sides");
  const bool has_forbidden = forbidden.rows() != 0;
  if (has_forbidden && (forbidden.rows() != L || forbidden.cols() != R))
    throw StructuralError("forbidden mask has the wrong shape");
  // Left vertex l may also take its private "unmatched" column R + l at weight 0.
  RationalMatrix cost(L, R + L, Rational(0));
  Matrix<char> blocked(L, R + L, 0);
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t r = 0; r < R; ++r) {
      bool off = (has_forbidden && forbidden(l, r)) || sgn(weights(l, r)) <= 0;
      if (off)
        blocked(l, r) = 1;
      else
        cost(l, r) = -weights(l, r);
    }
    for (std::size_t q = 0; q < L; ++q) blocked(l, R + q) = q == l ? 0 : 1;
  }
  auto col = detail::hungarian_min(cost, blocked);
  if (!col) throw InvariantError("padded matching problem has no assignment");
  Matching out;
  for (std::size_t l = 0; l < L; ++l) {
    if ((*col)[l] < R) {
      out.pairs.push_back({l, (*col)[l]});
      out.weight += weights(l, (*col)[l]);
    }
  }
  return out;
}

/// Maximum-weight matching that covers every left vertex; nullopt when impossible.
inline std::optional<Matching> max_weight_left_perfect_matching(const RationalMatrix& weights,
                                                                const Matrix<char>& forbidden = {}) {
  const std::size_t L = weights.rows();
  const std::size_t R = weights.cols();
  if (L == 0 || R == 0) throw StructuralError("matching needs nonempty sides");
  Matrix<char> blocked = forbidden.rows() ? forbidden : Matrix<char>(L, R, 0);
  if (blocked.rows() != L || blocked.cols() != R) throw StructuralError("forbidden mask has the wrong shape");
  RationalMatrix cost(L, R);
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t r = 0; r < R; ++r) cost(l, r) = -weights(l, r);
  auto col = detail::hungarian_min(cost, blocked);
  if (!col) return std::nullopt;
  Matching out;
  for (std::size_t l = 0; l < L; ++l) {
    out.pairs.push_back({l, (*col)[l]});
    out.weight += weights(l, (*col)[l]);
  }
  return out;
}

}  // namespace bimech
