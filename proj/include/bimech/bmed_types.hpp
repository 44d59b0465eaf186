#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "bimech/core.hpp"
#include "bimech/errors.hpp"
#include "bimech/generate.hpp"
#include "bimech/rational.hpp"

namespace bimech {

/// One type index per bidder.
using Profile = std::vector<std::size_t>;

/// Bidders are machines; a type is the machine's processing-time vector over the m jobs.
struct BmedInstance {
  std::size_t k = 0;
  std::size_t m = 0;
  /// types[i][t] is an m-vector.
  std::vector<std::vector<RationalVector>> types;
  std::vector<RationalVector> probs;
  Objective objective = Objective::makespan;

  BmedInstance() = default;
  BmedInstance(std::vector<std::vector<RationalVector>> types_, std::vector<RationalVector> probs_, Objective obj)
      : k(types_.size()), m(0), types(std::move(types_)), probs(std::move(probs_)), objective(obj) {
    if (k == 0 || types[0].empty()) throw StructuralError("a BMeD instance needs at least one bidder with one type");
    m = types[0][0].size();
    validate();
  }

  std::size_t num_types(std::size_t i) const { return types.at(i).size(); }

  /// Every type must satisfy t(X) in [0,1] for all outcomes, i.e. entries >= 0 summing to at most 1.
  void validate() const {
    if (k == 0 || m == 0) throw StructuralError("k and m must be positive");
    if (types.size() != k || probs.size() != k) throw StructuralError("types and probabilities must list every bidder");
    for (std::size_t i = 0; i < k; ++i) {
      if (types[i].empty()) throw StructuralError("every bidder needs at least one type");
      if (probs[i].size() != types[i].size()) throw StructuralError("one probability per type is required");
      Rational total = 0;
      for (std::size_t t = 0; t < types[i].size(); ++t) {
        if (types[i][t].size() != m) throw StructuralError("type vectors must have one entry per job");
        Rational s = 0;
        for (const auto& v : types[i][t]) {
          if (sgn(v) < 0 || v > 1) throw DomainError("processing times must lie in [0,1]");
          s += v;
        }
        if (s > 1) throw DomainError("a type's processing times must sum to at most 1 so that t(X) stays in [0,1]");
        if (sgn(probs[i][t]) < 0) throw DomainError("probabilities must be nonnegative");
        total += probs[i][t];
      }
      if (total != 1) throw DomainError("type probabilities of every bidder must sum to 1");
    }
  }

  /// Scheduling instance of a profile: row i holds bidder i's reported type.
  SchedulingInstance scheduling(const Profile& prof, RationalMatrix costs) const {
    RationalMatrix p(k, m);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < m; ++j) p(i, j) = types[i].at(prof.at(i))[j];
    return SchedulingInstance(std::move(p), std::move(costs), true);
  }
  SchedulingInstance scheduling(const Profile& prof) const { return scheduling(prof, RationalMatrix(k, m, Rational(0))); }
};

/// t(x) for bidder i holding type t: Σ_j p_t[j]·x_ij.
inline Rational type_value(const BmedInstance& inst, std::size_t i, std::size_t t, const Assignment& x) {
  Rational s = 0;
  const auto& v = inst.types.at(i).at(t);
  for (std::size_t j = 0; j < inst.m; ++j)
    if (x(i, j)) s += v[j];
  return s;
}

/// O(profile, x): makespan or fairness of the profile's processing times.
inline Rational objective_value(const BmedInstance& inst, const Profile& prof, const Assignment& x) {
  auto s = inst.scheduling(prof);
  ExtRational v = inst.objective == Objective::makespan ? makespan(s, x) : fairness(s, x);
  if (!v.is_finite()) throw InvariantError("outcome is not valid for the objective");
  return v.value();
}

/// Finite distribution over profiles; profiles sorted and distinct.
struct ProfileDistribution {
  std::vector<Profile> profiles;
  RationalVector weights;
  /// marginals[i][t] = Pr[t_i = t].
  std::vector<RationalVector> marginals;

  std::size_t size() const noexcept { return profiles.size(); }
};

inline ProfileDistribution make_distribution(const BmedInstance& inst, std::map<Profile, Rational> mass) {
  ProfileDistribution d;
  d.marginals.resize(inst.k);
  for (std::size_t i = 0; i < inst.k; ++i) d.marginals[i].assign(inst.num_types(i), Rational(0));
  for (auto& [prof, w] : mass) {
    if (sgn(w) == 0) continue;
    for (std::size_t i = 0; i < inst.k; ++i) d.marginals[i].at(prof.at(i)) += w;
    d.profiles.push_back(prof);
    d.weights.push_back(w);
  }
  return d;
}

inline constexpr double kProfileCap = 1e6;

/// The product distribution D over all profiles.
inline ProfileDistribution full_distribution(const BmedInstance& inst) {
  double count = 1;
  for (std::size_t i = 0; i < inst.k; ++i) count *= static_cast<double>(inst.num_types(i));
  if (count > kProfileCap) throw CapacityError("profile space exceeds 10^6; use a sampled distribution");
  std::map<Profile, Rational> mass;
  Profile prof(inst.k, 0);
  for (;;) {
    Rational w = 1;
    for (std::size_t i = 0; i < inst.k; ++i) w *= inst.probs[i][prof[i]];
    mass[prof] = w;
    std::size_t i = 0;
    while (i < inst.k && ++prof[i] == inst.num_types(i)) prof[i++] = 0;
    if (i == inst.k) break;
  }
  return make_distribution(inst, std::move(mass));
}

namespace detail {

inline std::size_t sample_index(Rng& rng, const RationalVector& probs) {
  Rational u = uniform_rational01(rng);
  Rational acc = 0;
  for (std::size_t q = 0; q < probs.size(); ++q) {
    acc += probs[q];
    if (u < acc) return q;
  }
  // only reachable through zero-mass tails
  for (std::size_t q = probs.size(); q-- > 0;)
    if (sgn(probs[q]) > 0) return q;
  return 0;
}

}  // namespace detail

/// One profile drawn from the product of the bidders' priors.
inline Profile sample_profile(const BmedInstance& inst, Rng& rng) {
  Profile prof(inst.k);
  for (std::size_t i = 0; i < inst.k; ++i) prof[i] = detail::sample_index(rng, inst.probs[i]);
  return prof;
}

/// Default sample count 64·k·max|T_i|/ε².
inline std::size_t default_samples(const BmedInstance& inst, const Rational& eps) {
  std::size_t tmax = 1;
  for (std::size_t i = 0; i < inst.k; ++i) tmax = std::max(tmax, inst.num_types(i));
  double e = to_double(eps);
  return static_cast<std::size_t>(std::ceil(64.0 * static_cast<double>(inst.k * tmax) / (e * e)));
}

/// Empirical distribution of n i.i.d. profile draws.
inline ProfileDistribution sample_dprime(const BmedInstance& inst, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw DomainError("sample count must be at least 1");
  Rng rng(seed);
  std::map<Profile, std::size_t> counts;
  for (std::size_t s = 0; s < n; ++s) ++counts[sample_profile(inst, rng)];
  std::map<Profile, Rational> mass;
  for (const auto& [prof, c] : counts)
    mass[prof] = Rational(static_cast<long>(c)) / Rational(static_cast<long>(n));
  return make_distribution(inst, std::move(mass));
}

struct BmedGenParams {
  std::size_t k = 2;
  std::size_t m = 2;
  std::size_t types = 2;
  Objective objective = Objective::makespan;
  long max_den = 100;
};

/// Type entries drawn from [0, 1/m] so every type sums to at most 1; priors drawn from integer weights 1..10.
inline BmedInstance random_bmed_instance(const BmedGenParams& g, std::uint64_t seed) {
  if (g.k == 0 || g.m == 0 || g.types == 0) throw StructuralError("k, m and the type count must be positive");
  if (g.max_den < static_cast<long>(g.m)) throw DomainError("denominator bound must be at least m");
  Rng rng(seed);
  const Rational hi(1, static_cast<long>(g.m));
  std::vector<std::vector<RationalVector>> types(g.k);
  std::vector<RationalVector> probs(g.k);
  for (std::size_t i = 0; i < g.k; ++i) {
    std::vector<long> raw;
    long total = 0;
    for (std::size_t t = 0; t < g.types; ++t) {
      RationalVector v(g.m);
      for (auto& x : v) x = random_rational(rng, 0, hi, g.max_den);
      types[i].push_back(std::move(v));
      raw.push_back(uniform_int(rng, 1, 10));
      total += raw.back();
    }
    for (long r : raw) probs[i].push_back(make_rational(r, total));
  }
  return BmedInstance(std::move(types), std::move(probs), g.objective);
}

/// Coordinates of an implicit form: O, then π_i(t,t′) row-major per bidder, then p_i(t).
struct ImplicitLayout {
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> pi_offset;
  std::vector<std::size_t> p_offset;
  std::size_t pi_dim = 1;
  std::size_t dim = 1;

  ImplicitLayout() = default;
  explicit ImplicitLayout(const BmedInstance& inst) {
    std::size_t at = 1;
    for (std::size_t i = 0; i < inst.k; ++i) {
      sizes.push_back(inst.num_types(i));
      pi_offset.push_back(at);
      at += sizes.back() * sizes.back();
    }
    pi_dim = at;
    for (std::size_t i = 0; i < inst.k; ++i) {
      p_offset.push_back(at);
      at += sizes[i];
    }
    dim = at;
  }

  std::size_t bidders() const noexcept { return sizes.size(); }
  std::size_t pi(std::size_t i, std::size_t t, std::size_t tp) const { return pi_offset[i] + t * sizes[i] + tp; }
  std::size_t p(std::size_t i, std::size_t t) const { return p_offset[i] + t; }
};

struct ImplicitForm {
  Rational O = 0;
  /// pi[i](t, t′): value of true type t reporting t′.
  std::vector<RationalMatrix> pi;
  std::vector<RationalVector> p;

  static ImplicitForm zero(const BmedInstance& inst) {
    ImplicitForm f;
    for (std::size_t i = 0; i < inst.k; ++i) {
      f.pi.emplace_back(inst.num_types(i), inst.num_types(i), Rational(0));
      f.p.emplace_back(inst.num_types(i), Rational(0));
    }
    return f;
  }

  RationalVector to_vector(const ImplicitLayout& L) const {
    RationalVector v(L.dim, Rational(0));
    v[0] = O;
    for (std::size_t i = 0; i < L.bidders(); ++i)
      for (std::size_t t = 0; t < L.sizes[i]; ++t) {
        for (std::size_t tp = 0; tp < L.sizes[i]; ++tp) v[L.pi(i, t, tp)] = pi[i](t, tp);
        v[L.p(i, t)] = p[i][t];
      }
    return v;
  }

  /// The (O, π) coordinates only.
  RationalVector feasibility_vector(const ImplicitLayout& L) const {
    auto v = to_vector(L);
    v.resize(L.pi_dim);
    return v;
  }

  /// Reads (O, π) and, when present, prices.
  static ImplicitForm from_vector(const ImplicitLayout& L, const RationalVector& v) {
    if (v.size() != L.dim && v.size() != L.pi_dim) throw StructuralError("implicit form vector has the wrong length");
    ImplicitForm f;
    f.O = v[0];
    for (std::size_t i = 0; i < L.bidders(); ++i) {
      f.pi.emplace_back(L.sizes[i], L.sizes[i], Rational(0));
      f.p.emplace_back(L.sizes[i], Rational(0));
      for (std::size_t t = 0; t < L.sizes[i]; ++t) {
        for (std::size_t tp = 0; tp < L.sizes[i]; ++tp) f.pi[i](t, tp) = v[L.pi(i, t, tp)];
        if (v.size() == L.dim) f.p[i][t] = v[L.p(i, t)];
      }
    }
    return f;
  }

  /// Interim truthful utility π_i(t,t) − p_i(t).
  Rational utility(std::size_t i, std::size_t t) const { return pi[i](t, t) - p[i][t]; }
};

/// Virtual cost matrix f_ij = Σ_t w_i(t, t′_i)/Pr[t′_i]·p_t[j] for direction w over the (O, π) coordinates.
/// With strict = false a bidder whose report has no mass contributes a zero row.
inline RationalMatrix virtual_costs(const BmedInstance& inst, const ProfileDistribution& dist, const ImplicitLayout& L,
                                    const RationalVector& w, const Profile& prof, bool strict = true) {
  if (w.size() < L.pi_dim) throw StructuralError("direction has the wrong length");
  RationalMatrix f(inst.k, inst.m, Rational(0));
  for (std::size_t i = 0; i < inst.k; ++i) {
    const std::size_t tp = prof.at(i);
    const Rational& pr = dist.marginals.at(i).at(tp);
    if (sgn(pr) == 0) {
      if (strict) throw DomainError("reported type has zero probability under the distribution");
      continue;
    }
    for (std::size_t t = 0; t < inst.num_types(i); ++t) {
      const Rational& wt = w[L.pi(i, t, tp)];
      if (sgn(wt) == 0) continue;
      Rational scale = wt / pr;
      for (std::size_t j = 0; j < inst.m; ++j) f(i, j) += scale * inst.types[i][t][j];
    }
  }
  return f;
}

/// w_O·O(t′, X) + Σ_i Σ_t w_i(t, t′_i)/Pr[t′_i]·t(X).
inline Rational virtual_objective(const BmedInstance& inst, const ProfileDistribution& dist, const RationalVector& w,
                                  const Profile& prof, const Assignment& x) {
  ImplicitLayout L(inst);
  RationalMatrix f = virtual_costs(inst, dist, L, w, prof);
  Rational v = sgn(w[0]) == 0 ? Rational(0) : w[0] * objective_value(inst, prof, x);
  for (std::size_t i = 0; i < inst.k; ++i)
    for (std::size_t j = 0; j < inst.m; ++j)
      if (x(i, j)) v += f(i, j);
  return v;
}

}  // namespace bimech
