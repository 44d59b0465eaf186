#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <functional>
#include <utility>

#include "bimech/bmed_types.hpp"
#include "bimech/core.hpp"
#include "bimech/errors.hpp"
#include "bimech/lp.hpp"

namespace bimech {

struct BruteGoopResult {
  Rational value = 0;
  Assignment assignment;
};

inline constexpr double kBruteGoopCap = 1e7;

/// Calls visit(owner) for every owner vector; `choices` options per job, option k meaning "discard".
template <class Visit>
void enumerate_owners(std::size_t k, std::size_t m, bool allow_discard, Visit&& visit) {
  const std::size_t base = allow_discard ? k + 1 : k;
  std::vector<std::size_t> digit(m, 0);
  std::vector<std::optional<std::size_t>> owner(m);
  for (;;) {
    for (std::size_t j = 0; j < m; ++j) owner[j] = digit[j] < k ? std::optional<std::size_t>(digit[j]) : std::nullopt;
    visit(owner);
    std::size_t j = 0;
    while (j < m && ++digit[j] == base) digit[j++] = 0;
    if (j == m) return;
  }
}

/// Exact optimum of weight·O + C: minimum for makespan (every job assigned), maximum for fairness
/// (jobs may be discarded).
inline BruteGoopResult brute_goop(const SchedulingInstance& inst, Objective obj, const Rational& weight = 1) {
  const bool fair = obj == Objective::fairness;
  const double count = std::pow(static_cast<double>(fair ? inst.k + 1 : inst.k), static_cast<double>(inst.m));
  if (count > kBruteGoopCap) throw CapacityError("brute-force enumeration exceeds 10^7 assignments; reduce k or m");
  std::optional<BruteGoopResult> best;
  RationalVector load(inst.k);
  enumerate_owners(inst.k, inst.m, fair, [&](const std::vector<std::optional<std::size_t>>& owner) {
    for (auto& l : load) l = 0;
    Rational c = 0;
    for (std::size_t j = 0; j < inst.m; ++j) {
      if (!owner[j]) continue;
      load[*owner[j]] += inst.p(*owner[j], j);
      c += inst.c(*owner[j], j);
    }
    Rational o = fair ? *std::min_element(load.begin(), load.end()) : *std::max_element(load.begin(), load.end());
    Rational v = weight * o + c;
    if (!best || (fair ? v > best->value : v < best->value)) best = BruteGoopResult{v, Assignment::from_owners(inst.k, owner)};
  });
  return *best;
}

/// Outcome of a rule at one profile: a lottery over assignments and each bidder's expected price.
struct RuleOutcome {
  std::vector<std::pair<Rational, Assignment>> lottery;
  RationalVector prices;

  RuleOutcome() = default;
  RuleOutcome(Assignment x, RationalVector prices_ = {}) : prices(std::move(prices_)) { lottery.emplace_back(1, std::move(x)); }
  RuleOutcome(std::vector<std::pair<Rational, Assignment>> l, RationalVector prices_ = {})
      : lottery(std::move(l)), prices(std::move(prices_)) {}
};

using AllocationRule = std::function<RuleOutcome(const Profile&)>;

/// Exact implicit form of `rule` under `dist`; π_i(t,t′) and p_i(t′) are expectations conditioned on t_i = t′
/// (zero when t′ has no mass).
inline ImplicitForm implicit_form_of(const BmedInstance& inst, const ProfileDistribution& dist, const AllocationRule& rule) {
  ImplicitForm f = ImplicitForm::zero(inst);
  for (std::size_t a = 0; a < dist.size(); ++a) {
    const Profile& prof = dist.profiles[a];
    const Rational& w = dist.weights[a];
    RuleOutcome out = rule(prof);
    if (out.lottery.empty()) throw StructuralError("rule returned an empty lottery");
    Rational total = 0;
    for (const auto& [q, x] : out.lottery) {
      if (sgn(q) < 0) throw DomainError("lottery probabilities must be nonnegative");
      total += q;
      f.O += w * q * objective_value(inst, prof, x);
      for (std::size_t i = 0; i < inst.k; ++i) {
        const std::size_t tp = prof[i];
        Rational scale = w * q / dist.marginals[i][tp];
        for (std::size_t t = 0; t < inst.num_types(i); ++t) f.pi[i](t, tp) += scale * type_value(inst, i, t, x);
      }
    }
    if (total != 1) throw DomainError("lottery probabilities must sum to 1");
    if (!out.prices.empty()) {
      if (out.prices.size() != inst.k) throw StructuralError("rule must price every bidder");
      for (std::size_t i = 0; i < inst.k; ++i) f.p[i][prof[i]] += w / dist.marginals[i][prof[i]] * out.prices[i];
    }
  }
  return f;
}

inline constexpr double kBruteBmedCap = 1e6;

struct BruteBmedResult {
  Rational value = 0;
  ImplicitForm form;
  /// q[a][b]: probability of outcomes[b] at dist.profiles[a].
  std::vector<RationalVector> q;
  std::vector<Assignment> outcomes;
};

/// Every valid outcome: all jobs assigned (makespan) or each job assigned or discarded (fairness).
inline std::vector<Assignment> valid_outcomes(const BmedInstance& inst) {
  std::vector<Assignment> out;
  enumerate_owners(inst.k, inst.m, inst.objective == Objective::fairness,
                   [&](const std::vector<std::optional<std::size_t>>& owner) { out.push_back(Assignment::from_owners(inst.k, owner)); });
  return out;
}

/// Exact optimum of E[O] over BIC and IR mechanisms: min for makespan, max for fairness.
/// Constraints of types without mass under `dist` are dropped.
inline BruteBmedResult brute_bmed(const BmedInstance& inst, const ProfileDistribution& dist) {
  const bool fair = inst.objective == Objective::fairness;
  const double outcomes = std::pow(static_cast<double>(fair ? inst.k + 1 : inst.k), static_cast<double>(inst.m));
  if (outcomes * static_cast<double>(dist.size()) > kBruteBmedCap)
    throw CapacityError("profiles times outcomes exceeds 10^6; reduce the instance");
  BruteBmedResult res;
  res.outcomes = valid_outcomes(inst);
  const std::size_t P = dist.size();
  const std::size_t X = res.outcomes.size();
  ImplicitLayout L(inst);
  const std::size_t nq = P * X;
  const std::size_t np = L.dim - L.pi_dim;
  auto qv = [&](std::size_t a, std::size_t b) { return a * X + b; };
  auto pv = [&](std::size_t i, std::size_t t) { return nq + L.p(i, t) - L.pi_dim; };

  LinearProgram lp(nq + np, fair ? Sense::maximize : Sense::minimize);
  for (std::size_t j = nq; j < nq + np; ++j) lp.set_bounds(j, std::nullopt, std::nullopt);
  for (std::size_t a = 0; a < P; ++a) {
    std::vector<std::pair<std::size_t, Rational>> row;
    for (std::size_t b = 0; b < X; ++b) {
      lp.objective[qv(a, b)] = dist.weights[a] * objective_value(inst, dist.profiles[a], res.outcomes[b]);
      row.emplace_back(qv(a, b), Rational(1));
    }
    lp.add_sparse(row, Relation::eq, 1);
  }
  // π_i(t,t′) as a sparse linear expression in q
  auto pi_terms = [&](std::size_t i, std::size_t t, std::size_t tp, const Rational& sign,
                      std::vector<std::pair<std::size_t, Rational>>& row) {
    const Rational& mg = dist.marginals[i][tp];
    if (sgn(mg) == 0) return;
    for (std::size_t a = 0; a < P; ++a) {
      if (dist.profiles[a][i] != tp) continue;
      Rational scale = sign * dist.weights[a] / mg;
      for (std::size_t b = 0; b < X; ++b) {
        Rational v = type_value(inst, i, t, res.outcomes[b]);
        if (sgn(v) != 0) row.emplace_back(qv(a, b), scale * v);
      }
    }
  };
  for (std::size_t i = 0; i < inst.k; ++i) {
    const std::size_t T = inst.num_types(i);
    for (std::size_t t = 0; t < T; ++t) {
      // a type without mass never reports and is never reported
      if (sgn(dist.marginals[i][t]) == 0) continue;
      std::vector<std::pair<std::size_t, Rational>> ir;
      pi_terms(i, t, t, Rational(1), ir);
      ir.emplace_back(pv(i, t), Rational(-1));
      lp.add_sparse(ir, Relation::ge, 0);
      for (std::size_t tp = 0; tp < T; ++tp) {
        if (tp == t || sgn(dist.marginals[i][tp]) == 0) continue;
        std::vector<std::pair<std::size_t, Rational>> bic;
        pi_terms(i, t, t, Rational(1), bic);
        pi_terms(i, t, tp, Rational(-1), bic);
        bic.emplace_back(pv(i, t), Rational(-1));
        bic.emplace_back(pv(i, tp), Rational(1));
        lp.add_sparse(bic, Relation::ge, 0);
      }
    }
  }
  auto r = lp_solve(lp);
  if (!r.optimal()) throw InvariantError("exact mechanism LP is not optimal");
  res.value = r.value;
  res.q.assign(P, RationalVector(X));
  for (std::size_t a = 0; a < P; ++a)
    for (std::size_t b = 0; b < X; ++b) res.q[a][b] = r.point[qv(a, b)];
  std::map<Profile, std::size_t> index;
  for (std::size_t a = 0; a < P; ++a) index[dist.profiles[a]] = a;
  res.form = implicit_form_of(inst, dist, [&](const Profile& prof) {
    std::size_t a = index.at(prof);
    std::vector<std::pair<Rational, Assignment>> l;
    for (std::size_t b = 0; b < X; ++b)
      if (sgn(res.q[a][b]) > 0) l.emplace_back(res.q[a][b], res.outcomes[b]);
    return RuleOutcome(std::move(l));
  });
  for (std::size_t i = 0; i < inst.k; ++i)
    for (std::size_t t = 0; t < inst.num_types(i); ++t) res.form.p[i][t] = r.point[pv(i, t)];
  return res;
}

inline BruteBmedResult brute_bmed(const BmedInstance& inst) { return brute_bmed(inst, full_distribution(inst)); }

}  // namespace bimech
