#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "bimech/core.hpp"
#include "bimech/errors.hpp"
#include "bimech/generate.hpp"
#include "bimech/lp.hpp"

namespace bimech {

inline constexpr std::size_t kMaxConfigJobs = 16;

enum class ConfigKind { small, big };

struct Configuration {
  std::size_t machine = 0;
  std::vector<std::size_t> jobs;
  ConfigKind kind = ConfigKind::small;
};

/// √k·max(1, ln³k) as an exact rational (the double value, converted without rounding).
inline Rational big_job_factor(std::size_t k) {
  double lk = std::log(static_cast<double>(k));
  return Rational(std::sqrt(static_cast<double>(k)) * std::max(1.0, lk * lk * lk));
}

/// Jobs with p_ij at or above this are big for threshold T.
inline Rational big_job_threshold(const Rational& T, std::size_t k) { return T / big_job_factor(k); }

/// Valid configurations of machine i at threshold T. A small configuration that keeps its validity
/// after dropping some job j with c_ij <= 0 is dominated by that subset and left out. Singletons
/// holding a big job are reported as big.
inline std::vector<Configuration> enumerate_configs(const SchedulingInstance& inst, std::size_t i, const Rational& T) {
  const std::size_t m = inst.m;
  if (m > kMaxConfigJobs)
    throw CapacityError("configuration enumeration supports at most 16 jobs; reduce m");
  if (i >= inst.k) throw StructuralError("machine index out of range");
  if (sgn(T) < 0) throw DomainError("threshold T must be nonnegative");
  const Rational bigT = big_job_threshold(T, inst.k);
  const std::size_t n = std::size_t{1} << m;
  RationalVector sum(n, Rational(0));
  for (std::size_t mask = 1; mask < n; ++mask) {
    std::size_t low = static_cast<std::size_t>(__builtin_ctzll(mask));
    sum[mask] = sum[mask & (mask - 1)] + inst.p(i, low);
  }
  std::vector<Configuration> out;
  for (std::size_t mask = 0; mask < n; ++mask) {
    std::vector<std::size_t> jobs;
    for (std::size_t j = 0; j < m; ++j)
      if (mask >> j & 1) jobs.push_back(j);
    if (jobs.size() == 1 && inst.p(i, jobs[0]) >= bigT) {
      out.push_back({i, jobs, ConfigKind::big});
      continue;
    }
    if (sum[mask] < T) continue;
    bool dominated = false;
    for (std::size_t j : jobs)
      if (sgn(inst.c(i, j)) <= 0 && sum[mask ^ (std::size_t{1} << j)] >= T) {
        dominated = true;
        break;
      }
    if (!dominated) out.push_back({i, std::move(jobs), ConfigKind::small});
  }
  return out;
}

struct ConfigLpSolution {
  Rational T = 0;
  std::vector<Configuration> configs;
  RationalVector weights;
  Rational objective = 0;

  /// x_ij = Σ_{S∋j} x_{i,S}.
  FractionalAssignment fractional(std::size_t k, std::size_t m) const {
    RationalMatrix x(k, m, Rational(0));
    for (std::size_t s = 0; s < configs.size(); ++s)
      for (std::size_t j : configs[s].jobs) x(configs[s].machine, j) += weights[s];
    return FractionalAssignment(std::move(x));
  }
};

/// Configuration LP at threshold T: maximum cost with every machine covered by weight one of valid
/// configurations and every job used at most once. nullopt when infeasible.
inline std::optional<ConfigLpSolution> clp(const SchedulingInstance& inst, const Rational& T) {
  ConfigLpSolution sol;
  sol.T = T;
  for (std::size_t i = 0; i < inst.k; ++i) {
    auto c = enumerate_configs(inst, i, T);
    if (c.empty()) return std::nullopt;
    for (auto& cfg : c) sol.configs.push_back(std::move(cfg));
  }
  const std::size_t n = sol.configs.size();
  LinearProgram lp(n, Sense::maximize);
  std::vector<std::vector<std::pair<std::size_t, Rational>>> machine_rows(inst.k), job_rows(inst.m);
  for (std::size_t s = 0; s < n; ++s) {
    const auto& cfg = sol.configs[s];
    Rational c = 0;
    for (std::size_t j : cfg.jobs) {
      c += inst.c(cfg.machine, j);
      job_rows[j].push_back({s, 1});
    }
    lp.objective[s] = c;
    machine_rows[cfg.machine].push_back({s, 1});
  }
  for (const auto& r : machine_rows) lp.add_sparse(r, Relation::eq, 1);
  for (const auto& r : job_rows)
    if (!r.empty()) lp.add_sparse(r, Relation::le, 1);
  auto r = lp_solve(lp);
  if (r.status == LpStatus::infeasible) return std::nullopt;
  if (!r.optimal()) throw InvariantError("configuration LP reported unbounded");
  sol.weights = std::move(r.point);
  sol.objective = r.value;
  return sol;
}

/// Thresholds tried by select_fractional: 0, then powers of two from below the smallest positive
/// p up to above Σ_j max_i p_ij.
inline RationalVector fairness_thresholds(const SchedulingInstance& inst) {
  RationalVector out{Rational(0)};
  std::optional<Rational> minp;
  Rational top = 0;
  for (std::size_t j = 0; j < inst.m; ++j) {
    Rational best = 0;
    for (std::size_t i = 0; i < inst.k; ++i) {
      const Rational& p = inst.p(i, j);
      best = std::max(best, p);
      if (sgn(p) > 0 && (!minp || p < *minp)) minp = p;
    }
    top += best;
  }
  if (!minp) return out;
  Rational T = 1;
  while (T > *minp) T /= 2;
  while (T * 2 <= *minp) T *= 2;
  for (; T <= top; T *= 2) out.push_back(T);
  return out;
}

/// argmax over the thresholds of 2T + CLP(T); the first (smallest) T wins ties.
inline ConfigLpSolution select_fractional(const SchedulingInstance& inst) {
  std::optional<ConfigLpSolution> best;
  for (const auto& T : fairness_thresholds(inst)) {
    auto s = clp(inst, T);
    if (s && (!best || 2 * s->T + s->objective > 2 * best->T + best->objective)) best = std::move(s);
  }
  if (!best) {
    ConfigLpSolution empty;
    return empty;
  }
  return *best;
}

/// Machines on the left, jobs on the right; an edge exists where weight > 0.
struct EdgeGraph {
  RationalMatrix weight;
  RationalMatrix cost;

  EdgeGraph() = default;
  EdgeGraph(RationalMatrix w, RationalMatrix c) : weight(std::move(w)), cost(std::move(c)) {
    if (weight.rows() != cost.rows() || weight.cols() != cost.cols()) throw StructuralError("edge graph shape mismatch");
    for (std::size_t i = 0; i < weight.rows(); ++i)
      for (std::size_t j = 0; j < weight.cols(); ++j)
        if (sgn(weight(i, j)) < 0 || weight(i, j) > 1) throw DomainError("edge weights must lie in [0,1]");
  }

  std::size_t machines() const noexcept { return weight.rows(); }
  std::size_t jobs() const noexcept { return weight.cols(); }
  bool has_edge(std::size_t i, std::size_t j) const { return sgn(weight(i, j)) > 0; }

  std::size_t edge_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < machines(); ++i)
      for (std::size_t j = 0; j < jobs(); ++j) n += has_edge(i, j);
    return n;
  }
  Rational machine_mass(std::size_t i) const {
    Rational s = 0;
    for (std::size_t j = 0; j < jobs(); ++j) s += weight(i, j);
    return s;
  }
  Rational job_mass(std::size_t j) const {
    Rational s = 0;
    for (std::size_t i = 0; i < machines(); ++i) s += weight(i, j);
    return s;
  }
  Rational total_cost() const {
    Rational s = 0;
    for (std::size_t i = 0; i < machines(); ++i)
      for (std::size_t j = 0; j < jobs(); ++j)
        if (has_edge(i, j)) s += weight(i, j) * cost(i, j);
    return s;
  }
};

/// Big-configuration weights of a CLP solution as an edge graph.
inline EdgeGraph edge_graph(const SchedulingInstance& inst, const ConfigLpSolution& sol) {
  RationalMatrix w(inst.k, inst.m, Rational(0));
  for (std::size_t s = 0; s < sol.configs.size(); ++s)
    if (sol.configs[s].kind == ConfigKind::big) w(sol.configs[s].machine, sol.configs[s].jobs[0]) += sol.weights[s];
  return EdgeGraph(std::move(w), inst.c);
}

namespace detail {

/// Some cycle as a list of (machine, job) edges in order, or empty when the graph is a forest.
inline std::vector<std::pair<std::size_t, std::size_t>> find_cycle(const EdgeGraph& g) {
  const std::size_t k = g.machines(), m = g.jobs();
  // nodes 0..k-1 machines, k..k+m-1 jobs
  const std::size_t n = k + m;
  auto adjacent = [&](std::size_t u, std::size_t v) {
    if (u < k && v >= k) return g.has_edge(u, v - k);
    if (u >= k && v < k) return g.has_edge(v, u - k);
    return false;
  };
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> parent(n, n), depth(n, 0);
  for (std::size_t root = 0; root < n; ++root) {
    if (seen[root]) continue;
    std::vector<std::size_t> stack{root};
    seen[root] = 1;
    while (!stack.empty()) {
      std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < n; ++v) {
        if (!adjacent(u, v) || v == parent[u] || parent[v] == u) continue;
        if (!seen[v]) {
          seen[v] = 1;
          parent[v] = u;
          depth[v] = depth[u] + 1;
          stack.push_back(v);
          continue;
        }
        // non-tree edge u-v closes a cycle through their common ancestor
        std::vector<std::size_t> a{u}, b{v};
        while (depth[a.back()] > depth[b.back()]) a.push_back(parent[a.back()]);
        while (depth[b.back()] > depth[a.back()]) b.push_back(parent[b.back()]);
        while (a.back() != b.back()) {
          a.push_back(parent[a.back()]);
          b.push_back(parent[b.back()]);
        }
        // path u..lca then lca..v, closed by v-u
        std::vector<std::size_t> nodes = a;
        for (std::size_t q = b.size() - 1; q-- > 0;) nodes.push_back(b[q]);
        std::vector<std::pair<std::size_t, std::size_t>> edges;
        for (std::size_t q = 0; q < nodes.size(); ++q) {
          std::size_t x = nodes[q], y = nodes[(q + 1) % nodes.size()];
          edges.push_back(x < k ? std::pair{x, y - k} : std::pair{y, x - k});
        }
        return edges;
      }
    }
  }
  return {};
}

}  // namespace detail

/// Shifts weight around cycles toward the costlier alternating half until the graph is a forest.
inline EdgeGraph remove_cycles(EdgeGraph g) {
  for (;;) {
    auto cycle = detail::find_cycle(g);
    if (cycle.empty()) return g;
    Rational odd = 0, even = 0;
    for (std::size_t q = 0; q < cycle.size(); ++q) (q % 2 == 0 ? odd : even) += g.cost(cycle[q].first, cycle[q].second);
    // parity of the edges that gain weight
    const std::size_t up = odd >= even ? 0 : 1;
    std::optional<Rational> eps;
    for (std::size_t q = 0; q < cycle.size(); ++q)
      if (q % 2 != up) {
        const Rational& w = g.weight(cycle[q].first, cycle[q].second);
        if (!eps || w < *eps) eps = w;
      }
    for (std::size_t q = 0; q < cycle.size(); ++q) {
      Rational& w = g.weight(cycle[q].first, cycle[q].second);
      w += q % 2 == up ? *eps : -*eps;
    }
  }
}

namespace detail {

/// Index drawn with the given probabilities (summing to at most 1); nullopt with the remainder.
inline std::optional<std::size_t> pick(Rng& rng, const RationalVector& probs) {
  Rational u = uniform_rational01(rng);
  Rational acc = 0;
  for (std::size_t q = 0; q < probs.size(); ++q) {
    acc += probs[q];
    if (u < acc) return q;
  }
  return std::nullopt;
}

}  // namespace detail

/// Random matching of a forest with Pr[(i,j) matched] = x_ij. Each tree is processed from a root:
/// a node not matched to its parent picks child edge e with probability x_e / (1 − x_parent).
inline std::vector<std::pair<std::size_t, std::size_t>> sample_matching(const EdgeGraph& g, Rng& rng) {
  const std::size_t k = g.machines(), m = g.jobs(), n = k + m;
  for (std::size_t i = 0; i < k; ++i)
    if (g.machine_mass(i) > 1) throw InvariantError("machine mass exceeds 1");
  for (std::size_t j = 0; j < m; ++j)
    if (g.job_mass(j) > 1) throw InvariantError("job mass exceeds 1");
  if (!detail::find_cycle(g).empty()) throw StructuralError("sample_matching needs an acyclic graph");
  auto neighbours = [&](std::size_t u) {
    std::vector<std::size_t> out;
    for (std::size_t v = 0; v < n; ++v)
      if ((u < k && v >= k && g.has_edge(u, v - k)) || (u >= k && v < k && g.has_edge(v, u - k))) out.push_back(v);
    return out;
  };
  auto w = [&](std::size_t u, std::size_t v) -> const Rational& { return u < k ? g.weight(u, v - k) : g.weight(v, u - k); };

  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::vector<char> seen(n, 0);
  for (std::size_t root = 0; root < n; ++root) {
    if (seen[root]) continue;
    seen[root] = 1;
    // (node, parent, matched to parent)
    std::vector<std::tuple<std::size_t, std::size_t, bool>> stack{{root, n, false}};
    while (!stack.empty()) {
      auto [u, par, taken] = stack.back();
      stack.pop_back();
      std::vector<std::size_t> kids;
      for (std::size_t v : neighbours(u))
        if (v != par) kids.push_back(v);
      std::optional<std::size_t> chosen;
      if (!taken && !kids.empty()) {
        Rational free = par == n ? Rational(1) : 1 - w(u, par);
        if (sgn(free) == 0) throw InvariantError("unmatched node with full parent weight");
        RationalVector probs;
        for (std::size_t v : kids) probs.push_back(w(u, v) / free);
        chosen = detail::pick(rng, probs);
      }
      for (std::size_t q = 0; q < kids.size(); ++q) {
        std::size_t v = kids[q];
        seen[v] = 1;
        bool hit = chosen && *chosen == q;
        if (hit) out.push_back(u < k ? std::pair{u, v - k} : std::pair{v, u - k});
        stack.push_back({v, u, hit});
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Each job to argmax_i c_ij when that maximum is >= 0 (lowest index on ties), else discarded.
inline Assignment greedy_v(const SchedulingInstance& inst) {
  Assignment a(inst.k, inst.m);
  for (std::size_t j = 0; j < inst.m; ++j) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < inst.k; ++i)
      if (inst.c(i, j) > inst.c(best, j)) best = i;
    if (sgn(inst.c(best, j)) >= 0) a.assign(best, j);
  }
  return a;
}

/// Cost split into the parts on positive-cost and negative-cost entries.
struct CostSplit {
  Rational plus = 0;
  Rational minus = 0;
};

inline CostSplit cost_split(const SchedulingInstance& inst, const RationalMatrix& x) {
  CostSplit s;
  for (std::size_t i = 0; i < inst.k; ++i)
    for (std::size_t j = 0; j < inst.m; ++j) {
      Rational v = x(i, j) * inst.c(i, j);
      (sgn(inst.c(i, j)) > 0 ? s.plus : s.minus) += v;
    }
  return s;
}

/// Fixed part of the rounding pipeline: the selected CLP solution, its acyclic big-job graph and the
/// resulting fractional assignment (graph weights plus small-configuration weights).
struct AsPrepared {
  ConfigLpSolution clp;
  EdgeGraph graph;
  FractionalAssignment x;
};

inline AsPrepared as_prepare(const SchedulingInstance& inst) {
  AsPrepared p;
  p.clp = select_fractional(inst);
  if (p.clp.configs.empty()) {
    p.graph = EdgeGraph(RationalMatrix(inst.k, inst.m, Rational(0)), inst.c);
    p.x = FractionalAssignment(inst.k, inst.m);
    return p;
  }
  p.graph = remove_cycles(edge_graph(inst, p.clp));
  RationalMatrix x = p.graph.weight;
  for (std::size_t s = 0; s < p.clp.configs.size(); ++s)
    if (p.clp.configs[s].kind == ConfigKind::small)
      for (std::size_t j : p.clp.configs[s].jobs) x(p.clp.configs[s].machine, j) += p.clp.weights[s];
  p.x = FractionalAssignment(std::move(x));
  return p;
}

/// One draw of the randomized rounding: matching on big jobs, a small configuration for every
/// unmatched machine, conflicts resolved in favour of the matching and then uniformly.
inline Assignment as_round(const SchedulingInstance& inst, const AsPrepared& prep, Rng& rng) {
  Assignment y(inst.k, inst.m);
  if (prep.clp.configs.empty()) return y;
  auto match = sample_matching(prep.graph, rng);
  std::vector<char> matched(inst.k, 0), job_taken(inst.m, 0);
  for (auto [i, j] : match) {
    y.assign(i, j);
    matched[i] = 1;
    job_taken[j] = 1;
  }
  std::vector<std::vector<std::size_t>> claimants(inst.m);
  for (std::size_t i = 0; i < inst.k; ++i) {
    if (matched[i]) continue;
    std::vector<std::size_t> idx;
    RationalVector probs;
    Rational mass = 0;
    for (std::size_t s = 0; s < prep.clp.configs.size(); ++s)
      if (prep.clp.configs[s].machine == i && prep.clp.configs[s].kind == ConfigKind::small) {
        idx.push_back(s);
        probs.push_back(prep.clp.weights[s]);
        mass += prep.clp.weights[s];
      }
    if (sgn(mass) == 0) continue;
    for (auto& q : probs) q /= mass;
    auto chosen = detail::pick(rng, probs);
    if (!chosen) continue;
    for (std::size_t j : prep.clp.configs[idx[*chosen]].jobs) claimants[j].push_back(i);
  }
  for (std::size_t j = 0; j < inst.m; ++j) {
    if (job_taken[j] || claimants[j].empty()) continue;
    auto q = uniform_int(rng, 0, static_cast<std::int64_t>(claimants[j].size()) - 1);
    y.assign(claimants[j][static_cast<std::size_t>(q)], j);
  }
  return y;
}

enum class FairnessBranch { rounded, greedy };

inline std::string to_string(FairnessBranch b) { return b == FairnessBranch::rounded ? "rounded" : "greedy_v"; }

struct FairnessResult {
  Assignment assignment;
  FairnessBranch branch = FairnessBranch::greedy;
  Rational T = 0;
  Rational clp_objective = 0;
  Rational fairness = 0;
  Rational cost = 0;
};

namespace detail {

inline FairnessResult finish(const SchedulingInstance& inst, Assignment a, FairnessBranch b) {
  FairnessResult r;
  r.fairness = fairness(inst, a).value();
  r.cost = cost(inst, a);
  r.assignment = std::move(a);
  r.branch = b;
  return r;
}

}  // namespace detail

/// Randomized rounding of the selected configuration LP, compared with greedy_v on realized F + C.
inline FairnessResult as_solve(const SchedulingInstance& inst, Rng& rng) {
  Assignment v = greedy_v(inst);
  if (inst.m < inst.k) return detail::finish(inst, v, FairnessBranch::greedy);
  AsPrepared prep = as_prepare(inst);
  Assignment y = as_round(inst, prep, rng);
  Rational fy = fairness(inst, y).value() + cost(inst, y);
  Rational fv = fairness(inst, v).value() + cost(inst, v);
  auto r = fy > fv ? detail::finish(inst, y, FairnessBranch::rounded) : detail::finish(inst, v, FairnessBranch::greedy);
  r.T = prep.clp.T;
  r.clp_objective = prep.clp.objective;
  return r;
}

/// A_T from one max-weight perfect matching of jobs to k real and m−k dummy machines; nullopt when
/// the real machines cannot all receive a job with p_ij >= T.
inline std::optional<Assignment> bd_assignment(const SchedulingInstance& inst, const Rational& T) {
  const std::size_t k = inst.k, m = inst.m;
  if (m < k) return std::nullopt;
  const Assignment v = greedy_v(inst);
  // jobs on the left so the matching covers every job; machine columns 0..k-1 real, k..m-1 dummy
  RationalMatrix w(m, m, Rational(0));
  Matrix<char> blocked(m, m, 0);
  for (std::size_t j = 0; j < m; ++j) {
    Rational best = 0;
    for (std::size_t i = 0; i < k; ++i) best = std::max(best, inst.c(i, j));
    for (std::size_t i = 0; i < k; ++i) {
      if (inst.p(i, j) >= T)
        w(j, i) = inst.c(i, j);
      else
        blocked(j, i) = 1;
    }
    for (std::size_t d = k; d < m; ++d) w(j, d) = best;
  }
  auto match = max_weight_left_perfect_matching(w, blocked);
  if (!match) return std::nullopt;
  Assignment a(k, m);
  auto owners = v.owners();
  for (auto [j, col] : match->pairs) {
    if (col < k)
      a.assign(col, j);
    else if (owners[j])
      a.assign(*owners[j], j);
  }
  return a;
}

/// Matching algorithm with factor m − k + 1 on fairness plus cost.
inline FairnessResult bd_solve(const SchedulingInstance& inst) {
  Assignment v = greedy_v(inst);
  if (inst.m < inst.k) return detail::finish(inst, v, FairnessBranch::greedy);
  const Rational factor = static_cast<long>(inst.m - inst.k + 1);
  RationalVector ts;
  for (std::size_t i = 0; i < inst.k; ++i)
    for (std::size_t j = 0; j < inst.m; ++j) ts.push_back(inst.p(i, j));
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  std::optional<Assignment> best;
  Rational best_T = 0, best_val = 0;
  for (const auto& T : ts) {
    auto a = bd_assignment(inst, T);
    if (!a) continue;
    Rational val = factor * T + cost(inst, *a);
    if (!best || val > best_val) {
      best = std::move(a);
      best_T = T;
      best_val = val;
    }
  }
  if (!best) return detail::finish(inst, v, FairnessBranch::greedy);
  Rational va = factor * fairness(inst, *best).value() + cost(inst, *best);
  Rational vv = fairness(inst, v).value() + cost(inst, v);
  auto r = vv >= va ? detail::finish(inst, v, FairnessBranch::greedy) : detail::finish(inst, *best, FairnessBranch::rounded);
  r.T = best_T;
  return r;
}

}  // namespace bimech
