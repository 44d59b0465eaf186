#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <vector>

#include "bimech/core.hpp"
#include "bimech/errors.hpp"
#include "bimech/lp.hpp"

namespace bimech {

struct LpTSolution {
  FractionalAssignment x;
  Rational T = 0;
  Rational t = 0;
  Rational value = 0;
};

/// Minimizes Σ c_ij x_ij + T subject to full assignment, loads at most T, x_ij = 0 when p_ij > t, T >= t.
inline std::optional<LpTSolution> lp_t(const SchedulingInstance& inst, const Rational& t) {
  if (sgn(t) < 0) throw DomainError("threshold t must be nonnegative");
  const std::size_t k = inst.k, m = inst.m;
  const std::size_t nv = k * m + 1;
  const std::size_t Tv = k * m;
  auto var = [m](std::size_t i, std::size_t j) { return i * m + j; };
  LinearProgram lp(nv);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      lp.objective[var(i, j)] = inst.c(i, j);
      if (inst.p(i, j) > t) lp.upper[var(i, j)] = Rational(0);
    }
  lp.objective[Tv] = 1;
  lp.lower[Tv] = t;
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<std::pair<std::size_t, Rational>> terms;
    for (std::size_t i = 0; i < k; ++i) terms.push_back({var(i, j), 1});
    lp.add_sparse(terms, Relation::eq, 1);
  }
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<std::pair<std::size_t, Rational>> terms;
    for (std::size_t j = 0; j < m; ++j)
      if (sgn(inst.p(i, j)) != 0) terms.push_back({var(i, j), inst.p(i, j)});
    terms.push_back({Tv, -1});
    lp.add_sparse(terms, Relation::le, 0);
  }
  auto r = lp_solve(lp);
  if (r.status == LpStatus::infeasible) return std::nullopt;
  if (!r.optimal()) throw InvariantError("LP(t) is bounded below yet reported unbounded");
  RationalMatrix x(k, m);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < m; ++j) x(i, j) = r.point[var(i, j)];
  return LpTSolution{FractionalAssignment(std::move(x)), r.point[Tv], t, r.value};
}

/// Slot-based rounding: makespan at most T + t and cost at most C(x).
inline Assignment st_round(const SchedulingInstance& inst, const LpTSolution& sol) {
  const std::size_t k = inst.k, m = inst.m;
  const RationalMatrix& x = sol.x.matrix();
  if (x.rows() != k || x.cols() != m) throw StructuralError("fractional solution has the wrong shape");
  if (sol.x.is_integral()) return Assignment(x);

  struct Slot {
    std::size_t machine;
  };
  std::vector<Slot> slots;
  // packed[j] lists (slot, weight) pairs with positive weight
  std::vector<std::vector<std::pair<std::size_t, Rational>>> packed(m);
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<std::size_t> jobs;
    Rational total = 0;
    for (std::size_t j = 0; j < m; ++j)
      if (sgn(x(i, j)) > 0) {
        jobs.push_back(j);
        total += x(i, j);
      }
    if (jobs.empty()) continue;
    std::stable_sort(jobs.begin(), jobs.end(), [&](std::size_t a, std::size_t b) { return inst.p(i, a) > inst.p(i, b); });
    mpz_class ceil_total;
    mpz_cdiv_q(ceil_total.get_mpz_t(), total.get_num_mpz_t(), total.get_den_mpz_t());
    std::size_t first = slots.size();
    for (unsigned long s = 0; s < ceil_total.get_ui(); ++s) slots.push_back({i});
    std::size_t cur = first;
    Rational room = 1;
    for (std::size_t j : jobs) {
      Rational left = x(i, j);
      while (sgn(left) > 0) {
        if (cur >= slots.size()) throw InvariantError("slot packing overflowed");
        Rational put = std::min(left, room);
        packed[j].push_back({cur, put});
        left -= put;
        room -= put;
        if (sgn(room) == 0) {
          ++cur;
          room = 1;
        }
      }
    }
  }

  // jobs on the left, slots on the right; only packed edges are allowed
  RationalMatrix w(m, slots.size(), Rational(0));
  Matrix<char> forbidden(m, slots.size(), 1);
  for (std::size_t j = 0; j < m; ++j)
    for (const auto& [s, wt] : packed[j]) {
      forbidden(j, s) = 0;
      w(j, s) = -inst.c(slots[s].machine, j);
    }
  auto match = max_weight_left_perfect_matching(w, forbidden);
  if (!match) throw InvariantError("no integral matching of jobs to slots");
  Assignment out(k, m);
  for (auto [j, s] : match->pairs) out.assign(slots[s].machine, j);

  ExtRational M = makespan(inst, out);
  if (!M.is_finite() || M.value() > sol.T + sol.t) throw InvariantError("rounded makespan exceeds T + t");
  if (cost(inst, out) > cost(inst, sol.x)) throw InvariantError("rounded cost exceeds the fractional cost");
  return out;
}

/// Distinct processing times in increasing order.
inline RationalVector distinct_processing_times(const SchedulingInstance& inst) {
  RationalVector v;
  for (std::size_t i = 0; i < inst.k; ++i)
    for (std::size_t j = 0; j < inst.m; ++j) v.push_back(inst.p(i, j));
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

struct MakespanResult {
  Assignment assignment;
  LpTSolution fractional;
  ExtRational makespan;
  Rational cost = 0;
};

/// Best LP(t) over all distinct p values (smaller t on ties), then rounded.
inline LpTSolution best_lp_t(const SchedulingInstance& inst) {
  std::optional<LpTSolution> best;
  for (const auto& t : distinct_processing_times(inst)) {
    auto s = lp_t(inst, t);
    if (s && (!best || s->value < best->value)) best = std::move(s);
  }
  if (!best) throw InvariantError("LP(t) infeasible at the largest processing time");
  return *best;
}

inline MakespanResult solve_makespan_with_costs_report(const SchedulingInstance& inst) {
  MakespanResult r;
  r.fractional = best_lp_t(inst);
  r.assignment = st_round(inst, r.fractional);
  r.makespan = makespan(inst, r.assignment);
  r.cost = cost(inst, r.assignment);
  return r;
}

inline Assignment solve_makespan_with_costs(const SchedulingInstance& inst) {
  return solve_makespan_with_costs_report(inst).assignment;
}

}  // namespace bimech
