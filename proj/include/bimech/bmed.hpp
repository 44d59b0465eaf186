#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bimech/bmed_types.hpp"
#include "bimech/geometry.hpp"
#include "bimech/goop_fairness.hpp"
#include "bimech/goop_makespan.hpp"
#include "bimech/oracle.hpp"

namespace bimech {

enum class GoopKind { makespan, fairness_bd, fairness_as, exact };

inline std::string to_string(GoopKind g) {
  switch (g) {
    case GoopKind::makespan: return "makespan";
    case GoopKind::fairness_bd: return "fairness-bd";
    case GoopKind::fairness_as: return "fairness-as";
    case GoopKind::exact: return "exact";
  }
  return "unknown";
}

inline GoopKind parse_goop_kind(const std::string& s) {
  if (s == "makespan") return GoopKind::makespan;
  if (s == "fairness-bd") return GoopKind::fairness_bd;
  if (s == "fairness-as") return GoopKind::fairness_as;
  if (s == "exact") return GoopKind::exact;
  throw StructuralError("unknown GOOP solver: " + s);
}

/// Which GOOP solver drives the reduction, with its (α, β).
struct GoopHandle {
  GoopKind kind = GoopKind::makespan;
  Objective objective = Objective::makespan;
  Rational alpha = 1;
  Rational beta = 1;
  std::uint64_t seed = 0;
};

inline GoopHandle make_goop_handle(GoopKind kind, const BmedInstance& inst, std::uint64_t seed = 0) {
  GoopHandle h;
  h.kind = kind;
  h.objective = inst.objective;
  h.seed = seed;
  switch (kind) {
    case GoopKind::makespan:
      if (inst.objective != Objective::makespan) throw DomainError("the makespan solver needs a makespan instance");
      h.beta = Rational(1, 2);
      break;
    case GoopKind::fairness_bd:
      if (inst.objective != Objective::fairness) throw DomainError("the BD solver needs a fairness instance");
      h.beta = inst.m > inst.k ? Rational(static_cast<long>(inst.m - inst.k + 1)) : Rational(1);
      break;
    case GoopKind::fairness_as:
      if (inst.objective != Objective::fairness) throw DomainError("the AS solver needs a fairness instance");
      h.alpha = Rational(1, 2);
      h.beta = 320 * big_job_factor(inst.k);
      break;
    case GoopKind::exact: break;
  }
  return h;
}

/// Runs the GOOP solver on one scheduling instance (costs already virtual).
inline Assignment goop_solve(const GoopHandle& h, const SchedulingInstance& s, std::uint64_t seed) {
  switch (h.kind) {
    case GoopKind::makespan: return solve_makespan_with_costs(s);
    case GoopKind::fairness_bd: return bd_solve(s).assignment;
    case GoopKind::fairness_as: {
      Rng rng(seed);
      return as_solve(s, rng).assignment;
    }
    case GoopKind::exact: return brute_goop(s, h.objective).assignment;
  }
  throw StructuralError("unknown GOOP solver");
}

inline bool is_maximization(const BmedInstance& inst) { return inst.objective == Objective::fairness; }

/// Cap on the objective of any outcome; both objectives are 1-bounded.
inline constexpr long kObjectiveCap = 1;

/// Allocation for reported profile `prof` under direction w (w is the maximization direction for fairness).
inline Assignment goop_allocate(const RationalVector& w, const BmedInstance& inst, const ProfileDistribution& dist,
                                const GoopHandle& h, const Profile& prof, bool strict = true) {
  ImplicitLayout L(inst);
  RationalMatrix f = virtual_costs(inst, dist, L, w, prof, strict);
  SchedulingInstance s = inst.scheduling(prof);
  const Rational& wO = w[0];
  if (sgn(wO) > 0) {
    for (std::size_t i = 0; i < inst.k; ++i)
      for (std::size_t j = 0; j < inst.m; ++j) f(i, j) /= wO;
    RationalVector key(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(L.pi_dim));
    for (auto t : prof) key.push_back(Rational(static_cast<long>(t)));
    return goop_solve(h, s.with_costs(std::move(f)), derive_seed(h.seed, digest(key)));
  }
  if (is_maximization(inst)) return greedy_v(s.with_costs(std::move(f)));
  Assignment a(inst.k, inst.m);
  for (std::size_t j = 0; j < inst.m; ++j) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < inst.k; ++i)
      if (f(i, j) < f(best, j)) best = i;
    a.assign(best, j);
  }
  return a;
}

struct AdapterResult {
  ImplicitForm form;
  /// allocations[a] is the outcome at dist.profiles[a].
  std::vector<Assignment> allocations;
};

/// Implicit form (unscaled, prices zero) of the rule the GOOP solver induces for direction w over `dist`.
inline AdapterResult goop_adapter(const RationalVector& w, const BmedInstance& inst, const ProfileDistribution& dist,
                                  const GoopHandle& h) {
  ImplicitLayout L(inst);
  if (w.size() != L.pi_dim && w.size() != L.dim) throw StructuralError("direction has the wrong length");
  AdapterResult out;
  std::map<Profile, std::size_t> index;
  for (std::size_t a = 0; a < dist.size(); ++a) {
    index[dist.profiles[a]] = a;
    out.allocations.push_back(goop_allocate(w, inst, dist, h, dist.profiles[a]));
  }
  out.form = implicit_form_of(inst, dist, [&](const Profile& prof) { return RuleOutcome(out.allocations[index.at(prof)]); });
  if (sgn(w[0]) < 0) out.form.O = is_maximization(inst) ? Rational(0) : Rational(kObjectiveCap) / h.beta;
  if (is_maximization(inst) && sgn(w[0]) == 0) out.form.O = 0;
  return out;
}

/// Every BIC and IR inequality as a halfspace over the full implicit-form vector.
inline std::vector<Halfspace> truthfulness_rows(const BmedInstance& inst, const ImplicitLayout& L) {
  std::vector<Halfspace> rows;
  for (std::size_t i = 0; i < inst.k; ++i) {
    const std::size_t T = inst.num_types(i);
    for (std::size_t t = 0; t < T; ++t) {
      RationalVector ir(L.dim, Rational(0));
      ir[L.pi(i, t, t)] = 1;
      ir[L.p(i, t)] = -1;
      rows.push_back({std::move(ir), Rational(0)});
      for (std::size_t tp = 0; tp < T; ++tp) {
        if (tp == t) continue;
        RationalVector bic(L.dim, Rational(0));
        bic[L.pi(i, t, t)] = 1;
        bic[L.p(i, t)] = -1;
        bic[L.pi(i, t, tp)] = -1;
        bic[L.p(i, tp)] = 1;
        rows.push_back({std::move(bic), Rational(0)});
      }
    }
  }
  return rows;
}

/// First violated BIC or IR inequality, or nullopt when the point is truthful.
inline std::optional<Halfspace> truthfulness_oracle(const BmedInstance& inst, const RationalVector& y) {
  ImplicitLayout L(inst);
  if (y.size() != L.dim) throw StructuralError("implicit form vector has the wrong length");
  for (auto& h : truthfulness_rows(inst, L))
    if (!h.contains(y)) return h;
  return std::nullopt;
}

inline std::optional<Halfspace> truthfulness_oracle(const BmedInstance& inst, const ImplicitForm& f) {
  return truthfulness_oracle(inst, f.to_vector(ImplicitLayout(inst)));
}

struct BmedConfig {
  /// D′ sample count; 0 uses 64·k·max|T_i|/ε².
  std::size_t samples = 0;
  /// Iteration cap per binary-search probe of the outer ellipsoid; 0 skips the ellipsoid stage.
  std::size_t probe_iterations = 300;
  /// Column-generation rounds after the ellipsoid stage.
  std::size_t max_rounds = 2000;
  EllipsoidConfig ellipsoid;
};

struct Mechanism {
  BmedInstance inst;
  GoopHandle goop;
  /// The surrogate prior the virtual costs are computed against.
  ProfileDistribution dprime;
  /// Directions handed to goop_allocate, one per support point.
  std::vector<RationalVector> directions;
  RationalVector weights;
  /// Solved implicit form; O carries the β scaling of the algorithm outputs.
  ImplicitForm form;
  std::uint64_t seed = 0;
  Rational eps = 0;
};

struct BmedStats {
  std::size_t samples = 0;
  std::size_t probes = 0;
  std::size_t ellipsoid_iterations = 0;
  bool ellipsoid_feasible = false;
  std::size_t rounds = 0;
  std::size_t algorithm_queries = 0;
  std::size_t generators = 0;
  /// Value of the last restricted master LP and its dual bound; equal at convergence.
  Rational master_value = 0;
  Rational dual_bound = 0;
};

struct BmedResult {
  Mechanism mechanism;
  ImplicitForm form;
  BmedStats stats;
};

namespace detail {

struct MasterSolution {
  RationalVector lambda;
  RationalVector prices;
  Rational value = 0;
  /// y_r >= 0 per truthfulness row and μ for Σλ = 1.
  RationalVector y;
  Rational mu = 0;
};

/// min Σ λ_j c·a_j over truthful combinations of the generators, solved together with its dual.
inline MasterSolution solve_master(const std::vector<RationalVector>& gens, const std::vector<Halfspace>& rows,
                                   const ImplicitLayout& L, const RationalVector& c) {
  const std::size_t J = gens.size();
  const std::size_t np = L.dim - L.pi_dim;
  const std::size_t R = rows.size();
  auto row_pi = [&](std::size_t r, const RationalVector& a) {
    Rational s = 0;
    for (std::size_t k = 0; k < L.pi_dim; ++k)
      if (sgn(rows[r].w[k]) != 0) s += rows[r].w[k] * a[k];
    return s;
  };
  LinearProgram primal(J + np);
  for (std::size_t j = 0; j < J; ++j) primal.objective[j] = dot(c, gens[j]);
  for (std::size_t k = 0; k < np; ++k) primal.set_bounds(J + k, std::nullopt, std::nullopt);
  for (std::size_t r = 0; r < R; ++r) {
    RationalVector row(J + np, Rational(0));
    for (std::size_t j = 0; j < J; ++j) row[j] = row_pi(r, gens[j]);
    for (std::size_t k = 0; k < np; ++k) row[J + k] = rows[r].w[L.pi_dim + k];
    primal.add(std::move(row), Relation::ge, rows[r].t);
  }
  RationalVector ones(J + np, Rational(0));
  for (std::size_t j = 0; j < J; ++j) ones[j] = 1;
  primal.add(std::move(ones), Relation::eq, 1);
  auto pr = lp_solve(primal);
  if (!pr.optimal()) throw InvariantError("restricted master LP is not optimal");

  // dual: max μ s.t. Σ_r y_r g_r(a_j) + μ <= c·a_j, Σ_r y_r h_r = 0 on prices, y >= 0
  LinearProgram dual(R + 1, Sense::maximize);
  dual.objective[R] = 1;
  dual.set_bounds(R, std::nullopt, std::nullopt);
  for (std::size_t j = 0; j < J; ++j) {
    RationalVector row(R + 1);
    for (std::size_t r = 0; r < R; ++r) row[r] = row_pi(r, gens[j]);
    row[R] = 1;
    dual.add(std::move(row), Relation::le, dot(c, gens[j]));
  }
  for (std::size_t k = 0; k < np; ++k) {
    RationalVector row(R + 1, Rational(0));
    for (std::size_t r = 0; r < R; ++r) row[r] = rows[r].w[L.pi_dim + k];
    dual.add(std::move(row), Relation::eq, 0);
  }
  auto dr = lp_solve(dual);
  if (!dr.optimal() || dr.value != pr.value) throw InvariantError("restricted master dual does not match the primal");

  MasterSolution out;
  out.lambda.assign(pr.point.begin(), pr.point.begin() + static_cast<std::ptrdiff_t>(J));
  out.prices.assign(pr.point.begin() + static_cast<std::ptrdiff_t>(J), pr.point.end());
  out.value = pr.value;
  out.y.assign(dr.point.begin(), dr.point.begin() + static_cast<std::ptrdiff_t>(R));
  out.mu = dr.point[R];
  return out;
}

inline Rational ceil_sqrt(double v) { return Rational(static_cast<long>(std::ceil(std::sqrt(v))) + 1); }

}  // namespace detail

/// Optimizes the objective over truthful implicit forms in the hull of the GOOP outputs and assembles the mechanism.
inline BmedResult bmed_reduce(const BmedInstance& inst, const GoopHandle& h, const Rational& eps, std::uint64_t seed,
                              BmedConfig cfg = {}) {
  if (sgn(eps) <= 0) throw DomainError("epsilon must be positive");
  inst.validate();
  const bool maximize = is_maximization(inst);
  BmedResult res;
  res.stats.samples = cfg.samples ? cfg.samples : default_samples(inst, eps);
  ProfileDistribution dprime = sample_dprime(inst, res.stats.samples, seed);
  ImplicitLayout L(inst);

  OptimizationAlgorithm A;
  A.dim = L.pi_dim;
  A.alpha = h.alpha;
  A.beta = h.beta;
  A.S = {0};
  A.sense = maximize ? Sense::maximize : Sense::minimize;
  A.output_bound = std::max({Rational(1), h.beta, Rational(Rational(1) / h.beta)});
  A.evaluate = [&](const RationalVector& w) { return goop_adapter(w, inst, dprime, h).form.feasibility_vector(L); };

  EllipsoidConfig ecfg = cfg.ellipsoid;
  if (sgn(ecfg.decomposition_tol) <= 0) ecfg.decomposition_tol = eps / 16;
  if (sgn(ecfg.delta) <= 0) ecfg.delta = eps / 16;
  QueryLog log(ecfg.diagnostics_path);
  WeirdSeparationOracle W(A, ecfg, &log);

  // a report-independent rule is truthful, so the master LP starts feasible
  RationalVector w0(L.pi_dim, Rational(0));
  for (std::size_t i = 0; i < inst.k; ++i)
    for (std::size_t t = 0; t < inst.num_types(i); ++t)
      for (std::size_t tp = 0; tp < inst.num_types(i); ++tp) w0[L.pi(i, t, tp)] = dprime.marginals[i][tp];
  if (maximize)
    for (auto& v : w0) v = -v;
  W.output(w0);

  const Rational ocap = Rational(kObjectiveCap) * std::max(Rational(1), h.beta);
  RationalVector c(L.dim, Rational(0));
  c[0] = maximize ? -1 : 1;
  const auto rows = truthfulness_rows(inst, L);

  if (cfg.probe_iterations > 0) {
    SeparationOracle Q = [&](const RationalVector& x) -> std::optional<Halfspace> {
      auto box = [&](std::size_t k, const Rational& lo, const Rational& hi) -> std::optional<Halfspace> {
        RationalVector a(L.dim, Rational(0));
        if (x[k] < lo) {
          a[k] = 1;
          return Halfspace{a, lo};
        }
        if (x[k] > hi) {
          a[k] = -1;
          return Halfspace{a, -hi};
        }
        return std::nullopt;
      };
      if (auto hh = box(0, 0, ocap)) return hh;
      for (std::size_t k = 1; k < L.pi_dim; ++k)
        if (auto hh = box(k, 0, 1)) return hh;
      for (std::size_t k = L.pi_dim; k < L.dim; ++k)
        if (auto hh = box(k, -1, 1)) return hh;
      for (const auto& r : rows)
        if (!r.contains(x)) return r;
      return std::nullopt;
    };
    WsoHandle Wh = [&](const RationalVector& x) {
      RationalVector y(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(L.pi_dim));
      WsoOutcome o = W(y);
      if (o.halfspace) o.halfspace->w.resize(L.dim, Rational(0));
      return o;
    };
    ecfg.R = detail::ceil_sqrt(to_double(ocap) * to_double(ocap) + static_cast<double>(L.dim));
    Rational lo = maximize ? -ocap : Rational(0);
    Rational hi = maximize ? Rational(0) : ocap;
    try {
      auto opt = ellipsoid_optimize_with_wso(c, Q, Wh, L.dim, ecfg, lo, hi, eps / 8, &log, cfg.probe_iterations);
      res.stats.probes = opt.probes;
      res.stats.ellipsoid_iterations = opt.iterations;
      res.stats.ellipsoid_feasible = true;
    } catch (const InfeasibleError&) {
    } catch (const NonconvergenceError&) {
    } catch (const PrecisionError&) {
    }
  }

  // restricted master over the logged outputs, priced through the same oracle cache
  RationalVector cpi(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(L.pi_dim));
  detail::MasterSolution ms;
  bool converged = false;
  for (std::size_t round = 0; round < cfg.max_rounds; ++round) {
    std::vector<RationalVector> gens;
    for (std::size_t j = 0; j < W.cache_size(); ++j) gens.push_back(W.cached_output(j));
    ms = detail::solve_master(gens, rows, L, cpi);
    res.stats.rounds = round + 1;
    RationalVector w = cpi;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (sgn(ms.y[r]) == 0) continue;
      for (std::size_t k = 0; k < L.pi_dim; ++k) w[k] -= ms.y[r] * rows[r].w[k];
    }
    Rational scale = 0;
    for (const auto& v : w) scale = std::max(scale, Rational(abs(v)));
    if (sgn(scale) == 0) {
      converged = true;
      break;
    }
    for (auto& v : w) v /= scale;
    const std::size_t before = W.cache_size();
    const RationalVector& a = W.output(w);
    if (dot(w, a) * scale >= ms.mu || W.cache_size() == before) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NonconvergenceError("column generation did not converge within the configured rounds", log.path());
  res.stats.master_value = ms.value;
  res.stats.dual_bound = ms.mu;
  res.stats.algorithm_queries = W.total_queries();
  res.stats.generators = W.cache_size();

  std::vector<std::size_t> support;
  std::vector<RationalVector> outs;
  RationalVector point(L.pi_dim, Rational(0));
  for (std::size_t j = 0; j < ms.lambda.size(); ++j) {
    if (sgn(ms.lambda[j]) == 0) continue;
    support.push_back(j);
    outs.push_back(W.cached_output(j));
    for (std::size_t k = 0; k < L.pi_dim; ++k) point[k] += ms.lambda[j] * W.cached_output(j)[k];
  }
  RationalVector lam = caratheodory(point, outs);

  Mechanism& mech = res.mechanism;
  mech.inst = inst;
  mech.goop = h;
  mech.dprime = std::move(dprime);
  mech.seed = seed;
  mech.eps = eps;
  RationalVector full(L.dim, Rational(0));
  for (std::size_t s = 0; s < lam.size(); ++s) {
    if (sgn(lam[s]) == 0) continue;
    mech.directions.push_back(W.cached_direction(support[s]));
    mech.weights.push_back(lam[s]);
    for (std::size_t k = 0; k < L.pi_dim; ++k) full[k] += lam[s] * W.cached_output(support[s])[k];
  }
  for (std::size_t k = 0; k < ms.prices.size(); ++k) full[L.pi_dim + k] = ms.prices[k];
  if (truthfulness_oracle(inst, full)) throw InvariantError("solved implicit form violates a truthfulness constraint");
  mech.form = ImplicitForm::from_vector(L, full);
  res.form = mech.form;
  return res;
}

/// Allocation of direction j at a profile, memoized because the GOOP solvers are deterministic per (j, profile).
class AllocationCache {
 public:
  explicit AllocationCache(const Mechanism& mech) : mech_(mech) {}

  const Assignment& get(std::size_t j, const Profile& prof) {
    auto key = std::make_pair(j, prof);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    Assignment a = goop_allocate(mech_.directions.at(j), mech_.inst, mech_.dprime, mech_.goop, prof, false);
    return cache_.emplace(std::move(key), std::move(a)).first->second;
  }

 private:
  const Mechanism& mech_;
  std::map<std::pair<std::size_t, Profile>, Assignment> cache_;
};

struct MechanismOutcome {
  Assignment assignment;
  RationalVector prices;
  std::size_t direction = 0;
};

inline void check_profile(const BmedInstance& inst, const Profile& prof) {
  if (prof.size() != inst.k) throw StructuralError("profile must list one type per bidder");
  for (std::size_t i = 0; i < inst.k; ++i)
    if (prof[i] >= inst.num_types(i)) throw DomainError("unknown type index in profile");
}

/// Price that leaves a truthful reporter of t with exactly the interim utility π_i(t,t) − p_i(t).
inline RationalVector expost_prices(const Mechanism& mech, const Profile& prof, const Assignment& x) {
  RationalVector P(mech.inst.k);
  for (std::size_t i = 0; i < mech.inst.k; ++i)
    P[i] = type_value(mech.inst, i, prof[i], x) - mech.form.utility(i, prof[i]);
  return P;
}

inline MechanismOutcome run_mechanism(const Mechanism& mech, const Profile& prof, Rng& rng, AllocationCache* cache = nullptr) {
  check_profile(mech.inst, prof);
  if (mech.directions.empty()) throw StructuralError("mechanism has no support");
  MechanismOutcome out;
  out.direction = detail::sample_index(rng, mech.weights);
  out.assignment = cache ? cache->get(out.direction, prof)
                         : goop_allocate(mech.directions[out.direction], mech.inst, mech.dprime, mech.goop, prof, false);
  out.prices = expost_prices(mech, prof, out.assignment);
  return out;
}

struct RegretEstimate {
  std::size_t bidder = 0;
  std::size_t type = 0;
  std::size_t report = 0;
  double mean = 0;
  double stderr_ = 0;
  std::size_t samples = 0;
};

struct ExactVerification {
  Rational objective = 0;
  Rational max_regret = 0;
  Rational objective_dprime = 0;
  Rational max_regret_dprime = 0;
};

struct VerificationReport {
  std::size_t runs = 0;
  double objective_mean = 0;
  double objective_stderr = 0;
  std::vector<RegretEstimate> regrets;
  /// Largest mean regret (0 when no deviation exists) and the standard error of that estimate.
  double max_regret = 0;
  double max_regret_stderr = 0;
  std::size_t ir_violations = 0;
  std::optional<ExactVerification> exact;
};

namespace detail {

struct Moments {
  std::size_t n = 0;
  double mean = 0;
  double m2 = 0;

  void add(double x) {
    ++n;
    double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double stderr_() const {
    if (n < 2) return 0;
    return std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
  }
};

}  // namespace detail

inline constexpr double kExactVerifyCap = 1e4;

/// Implicit form, including expected prices, of the mechanism under `dist`.
inline ImplicitForm mechanism_form(const Mechanism& mech, const ProfileDistribution& dist, AllocationCache& cache) {
  return implicit_form_of(mech.inst, dist, [&](const Profile& prof) {
    RuleOutcome out;
    out.prices.assign(mech.inst.k, Rational(0));
    for (std::size_t j = 0; j < mech.directions.size(); ++j) {
      const Assignment& x = cache.get(j, prof);
      out.lottery.emplace_back(mech.weights[j], x);
      auto P = expost_prices(mech, prof, x);
      for (std::size_t i = 0; i < mech.inst.k; ++i) out.prices[i] += mech.weights[j] * P[i];
    }
    return out;
  });
}

/// max over (i, t, t′) of the interim gain from misreporting, and 0 when there is none.
inline Rational max_interim_regret(const BmedInstance& inst, const ProfileDistribution& dist, const ImplicitForm& f) {
  Rational best = 0;
  for (std::size_t i = 0; i < inst.k; ++i)
    for (std::size_t t = 0; t < inst.num_types(i); ++t) {
      if (sgn(dist.marginals[i][t]) == 0) continue;
      for (std::size_t tp = 0; tp < inst.num_types(i); ++tp) {
        if (tp == t || sgn(dist.marginals[i][tp]) == 0) continue;
        best = std::max(best, Rational(f.pi[i](t, tp) - f.p[i][tp] - f.utility(i, t)));
      }
    }
  return best;
}

/// Monte Carlo over the true prior with common random numbers for deviations; exact interim values when enumerable.
inline VerificationReport verify_mechanism(const Mechanism& mech, std::size_t n_runs, std::uint64_t seed) {
  const BmedInstance& inst = mech.inst;
  AllocationCache cache(mech);
  VerificationReport rep;
  rep.runs = n_runs;
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, detail::Moments> reg;
  detail::Moments obj;
  Rng rng(seed);
  for (std::size_t r = 0; r < n_runs; ++r) {
    Profile prof = sample_profile(inst, rng);
    auto out = run_mechanism(mech, prof, rng, &cache);
    obj.add(to_double(objective_value(inst, prof, out.assignment)));
    for (std::size_t i = 0; i < inst.k; ++i) {
      Rational u = type_value(inst, i, prof[i], out.assignment) - out.prices[i];
      if (sgn(u) < 0) ++rep.ir_violations;
      for (std::size_t tp = 0; tp < inst.num_types(i); ++tp) {
        if (tp == prof[i]) continue;
        Profile dev = prof;
        dev[i] = tp;
        const Assignment& x = cache.get(out.direction, dev);
        Rational ud = type_value(inst, i, prof[i], x) - expost_prices(mech, dev, x)[i];
        reg[{i, prof[i], tp}].add(to_double(ud - u));
      }
    }
  }
  rep.objective_mean = obj.mean;
  rep.objective_stderr = obj.stderr_();
  for (const auto& [key, m] : reg) {
    auto [i, t, tp] = key;
    rep.regrets.push_back({i, t, tp, m.mean, m.stderr_(), m.n});
    if (m.mean > rep.max_regret) {
      rep.max_regret = m.mean;
      rep.max_regret_stderr = m.stderr_();
    }
  }
  double count = 1;
  for (std::size_t i = 0; i < inst.k; ++i) count *= static_cast<double>(inst.num_types(i));
  if (count <= kExactVerifyCap) {
    ExactVerification ex;
    auto D = full_distribution(inst);
    auto fD = mechanism_form(mech, D, cache);
    ex.objective = fD.O;
    ex.max_regret = max_interim_regret(inst, D, fD);
    auto fP = mechanism_form(mech, mech.dprime, cache);
    ex.objective_dprime = fP.O;
    ex.max_regret_dprime = max_interim_regret(inst, mech.dprime, fP);
    rep.exact = ex;
  }
  return rep;
}

}  // namespace bimech
