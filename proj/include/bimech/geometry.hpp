#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "bimech/errors.hpp"
#include "bimech/lp.hpp"
#include "bimech/rational.hpp"

namespace bimech {

/// The set {x : w·x >= t}.
struct Halfspace {
  RationalVector w;
  Rational t;

  bool contains(const RationalVector& x) const { return dot(w, x) >= t; }
};

/// Mantissa bits for ellipsoid arithmetic: BIMECH_PRECISION if set, else 256.
inline unsigned default_precision() {
  if (const char* env = std::getenv("BIMECH_PRECISION")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v >= 64 && v <= 1 << 16) return static_cast<unsigned>(v);
  }
  return 256;
}

struct EllipsoidConfig {
  /// Iteration cap; 0 derives it from the dimension and bit size.
  std::size_t N = 0;
  /// Separation slack; 0 derives 2^-(L+20) from the queried point.
  Rational delta = 0;
  /// Radius of the initial ball.
  Rational R = 1;
  unsigned precision = default_precision();
  /// Query points are rounded to multiples of 2^-grid_bits; 0 means precision/4.
  unsigned grid_bits = 0;
  /// Hard limit on algorithm queries inside one WSO call; 0 derives 4·N + 64.
  std::size_t query_cap = 0;
  /// Accepted points must be reproduced within this l1 distance; 0 means 2^-(precision/2).
  Rational decomposition_tol = 0;
  /// One line per oracle query is appended here when nonempty.
  std::string diagnostics_path;

  unsigned effective_grid_bits() const { return grid_bits ? grid_bits : std::max(16u, precision / 4); }
  Rational effective_tol() const {
    return sgn(decomposition_tol) > 0 ? decomposition_tol : pow2(-static_cast<long>(precision / 2));
  }
};

/// ⌈8·d(d+1)·(L + log2 R + 20)⌉.
inline std::size_t default_iterations(std::size_t d, std::size_t L, const Rational& R) {
  double lr = std::max(0.0, std::log2(std::max(1.0, R.get_d())));
  double v = 8.0 * static_cast<double>(d) * static_cast<double>(d + 1) * (static_cast<double>(L) + lr + 20.0);
  return static_cast<std::size_t>(std::ceil(v));
}

inline Rational default_delta(const RationalVector& y) { return pow2(-static_cast<long>(bit_size(y) + 20)); }

inline std::uint64_t digest(const RationalVector& x) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& q : x) {
    for (char ch : to_string(q)) {
      h ^= static_cast<unsigned char>(ch);
      h *= 1099511628211ULL;
    }
    h ^= 0x2c;
    h *= 1099511628211ULL;
  }
  return h;
}

struct QueryRecord {
  std::size_t iteration = 0;
  std::uint64_t digest = 0;
  std::string outcome;
};

/// Query log shared by nested ellipsoid runs; mirrors every record to a file when a path is set.
class QueryLog {
 public:
  explicit QueryLog(std::string path = {}, std::size_t keep = 100000) : path_(std::move(path)), keep_(keep) {
    if (!path_.empty()) out_ = std::make_unique<std::ofstream>(path_, std::ios::app);
  }

  void record(std::size_t iteration, const RationalVector& x, std::string outcome) {
    QueryRecord r{iteration, digest(x), std::move(outcome)};
    if (out_ && *out_) *out_ << r.iteration << ' ' << std::hex << r.digest << std::dec << ' ' << r.outcome << '\n';
    ++total_;
    if (records_.size() < keep_) records_.push_back(std::move(r));
  }

  const std::vector<QueryRecord>& records() const noexcept { return records_; }
  std::size_t total() const noexcept { return total_; }
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
  std::size_t keep_;
  std::vector<QueryRecord> records_;
  std::size_t total_ = 0;
  std::unique_ptr<std::ofstream> out_;
};

/// Ellipsoid {x : (x-c)^T E^-1 (x-c) <= 1} in multiprecision floating point.
class Ellipsoid {
 public:
  Ellipsoid() = default;
  Ellipsoid(std::size_t d, const Rational& radius, unsigned precision) : d_(d), prec_(precision) {
    if (d == 0) throw StructuralError("ellipsoid dimension must be positive");
    center_.assign(d, mpf_class(0, prec_));
    E_.assign(d * d, mpf_class(0, prec_));
    mpf_class r2(radius * radius, prec_);
    for (std::size_t i = 0; i < d; ++i) E_[i * d + i] = r2;
  }

  Ellipsoid(std::size_t d, const RationalVector& center, const Rational& radius, unsigned precision)
      : Ellipsoid(d, radius, precision) {
    for (std::size_t i = 0; i < d; ++i) center_[i] = mpf_class(center.at(i), prec_);
  }

  std::size_t dim() const noexcept { return d_; }

  RationalVector rounded_center(unsigned bits) const {
    RationalVector out(d_);
    for (std::size_t i = 0; i < d_; ++i) out[i] = round_dyadic(center_[i], bits);
    return out;
  }

  /// Keeps the part satisfying a·x <= b. Returns false when that part is empty.
  bool cut(const RationalVector& a, const Rational& b) {
    std::vector<mpf_class> af(d_, mpf_class(0, prec_));
    for (std::size_t i = 0; i < d_; ++i) af[i] = mpf_class(a[i], prec_);
    std::vector<mpf_class> Ea(d_, mpf_class(0, prec_));
    for (std::size_t i = 0; i < d_; ++i)
      for (std::size_t j = 0; j < d_; ++j) Ea[i] += E_[i * d_ + j] * af[j];
    mpf_class g2(0, prec_);
    for (std::size_t i = 0; i < d_; ++i) g2 += af[i] * Ea[i];
    if (sgn(g2) <= 0) throw NumericalError("ellipsoid shape matrix lost positive definiteness");
    mpf_class g = sqrt(g2);
    mpf_class ac(0, prec_);
    for (std::size_t i = 0; i < d_; ++i) ac += af[i] * center_[i];
    mpf_class alpha = (ac - mpf_class(b, prec_)) / g;
    if (alpha >= 1) return false;
    mpf_class n(static_cast<double>(d_), prec_);
    if (alpha <= -1 / n) throw NumericalError("cut does not shrink the ellipsoid; query grid too coarse");
    if (d_ == 1) {
      // interval [c - r, c + r] intersected with x <= b / a
      mpf_class r = sqrt(E_[0]);
      mpf_class lo = center_[0] - r, hi = center_[0] + r;
      mpf_class bound = mpf_class(b, prec_) / af[0];
      if (sgn(af[0]) > 0)
        hi = bound < hi ? bound : hi;
      else
        lo = bound > lo ? bound : lo;
      center_[0] = (lo + hi) / 2;
      mpf_class half = (hi - lo) / 2;
      E_[0] = half * half;
      return true;
    }
    mpf_class tau = (1 + n * alpha) / (n + 1);
    mpf_class sigma = 2 * (1 + n * alpha) / ((n + 1) * (1 + alpha));
    mpf_class scale = n * n * (1 - alpha * alpha) / (n * n - 1);
    for (std::size_t i = 0; i < d_; ++i) center_[i] -= tau * Ea[i] / g;
    for (std::size_t i = 0; i < d_; ++i)
      for (std::size_t j = 0; j < d_; ++j)
        E_[i * d_ + j] = scale * (E_[i * d_ + j] - sigma * Ea[i] * Ea[j] / g2);
    return true;
  }

  /// Keeps the part of the ellipsoid inside h.
  bool cut(const Halfspace& h) {
    RationalVector a(h.w.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = -h.w[i];
    return cut(a, -h.t);
  }

 private:
  std::size_t d_ = 0;
  unsigned prec_ = 256;
  std::vector<mpf_class> center_;
  std::vector<mpf_class> E_;
};

using SeparationOracle = std::function<std::optional<Halfspace>(const RationalVector&)>;

struct FeasibilityResult {
  bool feasible = false;
  RationalVector point;
  std::size_t iterations = 0;
  /// Ellipsoid when the run stopped; still contains the feasible region.
  Ellipsoid ellipsoid;
};

/// Central-cut ellipsoid method. Starts from `start` or the ball of radius cfg.R at the origin.
inline FeasibilityResult ellipsoid_feasibility(const SeparationOracle& oracle, std::size_t d, const EllipsoidConfig& cfg,
                                               QueryLog* log = nullptr, std::optional<Ellipsoid> start = std::nullopt,
                                               std::size_t max_iterations = 0) {
  if (sgn(cfg.R) <= 0) throw DomainError("initial radius must be positive");
  Ellipsoid ell = start ? *start : Ellipsoid(d, cfg.R, cfg.precision);
  const unsigned bits = cfg.effective_grid_bits();
  std::size_t N = max_iterations ? max_iterations : (cfg.N ? cfg.N : default_iterations(d, bits, cfg.R));
  FeasibilityResult out;
  for (std::size_t it = 1; it <= N; ++it) {
    RationalVector x = ell.rounded_center(bits);
    auto h = oracle(x);
    out.iterations = it;
    if (!h) {
      if (log) log->record(it, x, "accept");
      out.feasible = true;
      out.point = std::move(x);
      out.ellipsoid = std::move(ell);
      return out;
    }
    if (h->w.size() != d) throw StructuralError("oracle returned a halfspace of the wrong dimension");
    if (log) log->record(it, x, "cut");
    if (!ell.cut(*h)) {
      if (log) log->record(it, x, "empty");
      break;
    }
  }
  out.ellipsoid = std::move(ell);
  return out;
}

/// Exact convex weights with at most d+1 nonzero entries reproducing y from the generators.
inline RationalVector caratheodory(const RationalVector& y, const std::vector<RationalVector>& generators) {
  if (generators.empty()) throw InfeasibleError("point is not in the convex hull of an empty set");
  const std::size_t d = y.size();
  LinearProgram lp(generators.size());
  for (const auto& g : generators)
    if (g.size() != d) throw StructuralError("generator dimension mismatch");
  for (std::size_t k = 0; k < d; ++k) {
    RationalVector row(generators.size());
    for (std::size_t j = 0; j < generators.size(); ++j) row[j] = generators[j][k];
    lp.add(std::move(row), Relation::eq, y[k]);
  }
  lp.add(RationalVector(generators.size(), Rational(1)), Relation::eq, 1);
  auto r = lp_solve(lp);
  if (!r.optimal()) throw InfeasibleError("point is not in the convex hull of the generators");
  return r.point;
}

/// An (α, β, S) optimization algorithm: evaluate(w) returns a point of the represented polytope region.
struct OptimizationAlgorithm {
  std::size_t dim = 0;
  Rational alpha = 1;
  Rational beta = 1;
  std::vector<std::size_t> S;
  Sense sense = Sense::minimize;
  /// Bound on |A(w)_k| used to size the inner search region.
  Rational output_bound = 1;
  std::function<RationalVector(const RationalVector&)> evaluate;

  RationalVector scaled(RationalVector a) const {
    for (auto k : S) a.at(k) *= beta;
    return a;
  }
};

struct WsoOutcome {
  bool accepted = false;
  /// Directions handed to the algorithm (after the maximization sign flip), one per support point.
  std::vector<RationalVector> directions;
  /// Scaled outputs A^β_S at those directions.
  std::vector<RationalVector> outputs;
  RationalVector weights;
  /// l1 distance between Σ λ_j outputs_j and the queried point.
  Rational residual = 0;
  std::optional<Halfspace> halfspace;
  std::size_t queries = 0;
};

/// Weird separation oracle with a cache of algorithm outputs shared across calls.
class WeirdSeparationOracle {
 public:
  WeirdSeparationOracle(OptimizationAlgorithm alg, EllipsoidConfig cfg, QueryLog* log = nullptr)
      : alg_(std::move(alg)), cfg_(std::move(cfg)), log_(log) {
    if (alg_.dim == 0 || !alg_.evaluate) throw StructuralError("optimization algorithm is incomplete");
  }

  const OptimizationAlgorithm& algorithm() const noexcept { return alg_; }
  std::size_t total_queries() const noexcept { return total_queries_; }
  std::size_t cache_size() const noexcept { return gens_.size(); }
  /// Direction handed to the algorithm (after the maximization flip) and scaled output of cache entry j.
  const RationalVector& cached_direction(std::size_t j) const { return gens_.at(j).direction; }
  const RationalVector& cached_output(std::size_t j) const { return gens_.at(j).output; }

  /// Scaled output in minimization form for direction w; queries the algorithm at most once per w.
  const RationalVector& output(const RationalVector& w, std::size_t* counter = nullptr) {
    std::string key = key_of(w);
    auto it = by_dir_.find(key);
    if (it != by_dir_.end()) return gens_[it->second].output;
    RationalVector dir = w;
    if (alg_.sense == Sense::maximize)
      for (auto& v : dir) v = -v;
    RationalVector a = alg_.evaluate(dir);
    if (a.size() != alg_.dim) throw StructuralError("algorithm output has the wrong dimension");
    a = alg_.scaled(std::move(a));
    ++total_queries_;
    if (counter) ++*counter;
    std::string okey = key_of(a);
    auto ot = by_out_.find(okey);
    std::size_t idx;
    if (ot != by_out_.end()) {
      idx = ot->second;
    } else {
      idx = gens_.size();
      gens_.push_back({dir, a});
      by_out_.emplace(std::move(okey), idx);
    }
    by_dir_.emplace(std::move(key), idx);
    return gens_[idx].output;
  }

  WsoOutcome operator()(const RationalVector& y) {
    const std::size_t d = alg_.dim;
    if (y.size() != d) throw StructuralError("WSO query has the wrong dimension");
    const Rational delta = sgn(cfg_.delta) > 0 ? cfg_.delta : default_delta(y);
    const Rational tol = cfg_.effective_tol();
    const unsigned bits = cfg_.effective_grid_bits();
    Rational ynorm = 0;
    for (const auto& v : y) ynorm = std::max(ynorm, Rational(abs(v)));
    const Rational tbound = Rational(static_cast<long>(d)) * std::max(alg_.output_bound, ynorm) + 1;
    const Rational inner_R = Rational(static_cast<long>(d)) + tbound;
    const std::size_t N = cfg_.N ? cfg_.N : default_iterations(d + 1, bit_size(y) + bits, inner_R);
    const std::size_t cap = cfg_.query_cap ? cfg_.query_cap : 4 * N + 64;
    std::size_t queries = 0;

    auto budget = [&] {
      if (queries > cap) throw NonconvergenceError("WSO exceeded its query budget", log_ ? log_->path() : "");
    };

    if (gens_.empty()) {
      RationalVector e(d, Rational(0));
      e[0] = 1;
      output(e, &queries);
    }

    std::size_t screened_at = 0;
    Ellipsoid ell(d + 1, inner_R, cfg_.precision);
    for (std::size_t it = 1; it <= N; ++it) {
      if (gens_.size() != screened_at) {
        screened_at = gens_.size();
        auto verdict = screen(y, delta, tol, queries, budget);
        if (verdict) return finish(std::move(*verdict), queries);
        screened_at = gens_.size();
      }
      RationalVector wt = ell.rounded_center(bits);
      RationalVector w(wt.begin(), wt.begin() + static_cast<std::ptrdiff_t>(d));
      const Rational& t = wt[d];
      auto cut = inner_cut(y, w, t, delta, queries);
      budget();
      if (!cut) {
        if (log_) log_->record(it, y, "wso-reject");
        return finish(reject(w, t), queries);
      }
      if (!ell.cut(*cut)) break;
    }
    // The inner problem was declared infeasible: recover the decomposition.
    auto acc = decompose(y, tol);
    if (!acc) {
      throw PrecisionError("WSO could not reproduce the accepted point within tolerance over " +
                           std::to_string(gens_.size()) + " logged directions");
    }
    return finish(std::move(*acc), queries);
  }

 private:
  struct Generator {
    RationalVector direction;
    RationalVector output;
  };

  static std::string key_of(const RationalVector& v) {
    std::string s;
    for (const auto& q : v) {
      s += to_string(q);
      s += ',';
    }
    return s;
  }

  WsoOutcome finish(WsoOutcome out, std::size_t queries) {
    out.queries = queries;
    return out;
  }

  WsoOutcome reject(const RationalVector& w, const Rational& t) {
    WsoOutcome out;
    out.accepted = false;
    out.halfspace = Halfspace{w, t};
    return out;
  }

  /// Separating cut for the inner point (w, t), or nullopt when it passes every test.
  std::optional<Halfspace> inner_cut(const RationalVector& y, const RationalVector& w, const Rational& t,
                                     const Rational& delta, std::size_t& queries) {
    const std::size_t d = y.size();
    for (std::size_t k = 0; k < d; ++k) {
      if (w[k] > 1) {
        RationalVector a(d + 1, Rational(0));
        a[k] = -1;
        return Halfspace{a, -1};
      }
      if (w[k] < -1) {
        RationalVector a(d + 1, Rational(0));
        a[k] = 1;
        return Halfspace{a, -1};
      }
    }
    if (t < dot(y, w) + delta) {
      RationalVector a(d + 1);
      for (std::size_t k = 0; k < d; ++k) a[k] = -y[k];
      a[d] = 1;
      return Halfspace{a, delta};
    }
    // cached outputs first, then a fresh query
    for (const auto& g : gens_) {
      if (t > dot(g.output, w)) return output_cut(g.output);
    }
    const RationalVector& a = output(w, &queries);
    if (t > dot(a, w)) return output_cut(a);
    return std::nullopt;
  }

  static Halfspace output_cut(const RationalVector& a) {
    RationalVector h(a.size() + 1);
    for (std::size_t k = 0; k < a.size(); ++k) h[k] = a[k];
    h[a.size()] = -1;
    return Halfspace{h, 0};
  }

  /// Exact l1 projection of y onto the hull of cached outputs: min Σ r s.t. Σ λ a - y = r+ - r-, Σ λ = 1.
  LpResult l1_projection(const RationalVector& y) const {
    const std::size_t d = y.size();
    const std::size_t J = gens_.size();
    LinearProgram lp(J + 2 * d);
    for (std::size_t k = 0; k < d; ++k) {
      lp.objective[J + k] = 1;
      lp.objective[J + d + k] = 1;
    }
    for (std::size_t k = 0; k < d; ++k) {
      RationalVector row(J + 2 * d, Rational(0));
      for (std::size_t j = 0; j < J; ++j) row[j] = gens_[j].output[k];
      row[J + k] = -1;
      row[J + d + k] = 1;
      lp.add(std::move(row), Relation::eq, y[k]);
    }
    RationalVector sum(J + 2 * d, Rational(0));
    for (std::size_t j = 0; j < J; ++j) sum[j] = 1;
    lp.add(std::move(sum), Relation::eq, 1);
    return lp_solve(lp);
  }

  /// Same projection in double precision; returns (value, direction w) for screening.
  std::pair<double, std::vector<double>> l1_projection_double(const RationalVector& y) const {
    const std::size_t d = y.size();
    const std::size_t J = gens_.size();
    BasicLinearProgram<double> lp(J + 2 * d);
    for (std::size_t k = 0; k < d; ++k) {
      lp.objective[J + k] = 1;
      lp.objective[J + d + k] = 1;
    }
    for (std::size_t k = 0; k < d; ++k) {
      std::vector<double> row(J + 2 * d, 0.0);
      for (std::size_t j = 0; j < J; ++j) row[j] = gens_[j].output[k].get_d();
      row[J + k] = -1;
      row[J + d + k] = 1;
      lp.add(std::move(row), Relation::eq, y[k].get_d());
    }
    std::vector<double> sum(J + 2 * d, 0.0);
    for (std::size_t j = 0; j < J; ++j) sum[j] = 1;
    lp.add(std::move(sum), Relation::eq, 1.0);
    auto r = lp_solve(lp);
    if (!r.optimal()) return {0.0, {}};
    std::vector<double> w(d);
    for (std::size_t k = 0; k < d; ++k) w[k] = -r.duals[k];
    return {r.value, w};
  }

  std::optional<WsoOutcome> decompose(const RationalVector& y, const Rational& tol) const {
    auto r = l1_projection(y);
    if (!r.optimal() || r.value >= tol) return std::nullopt;
    return accept_from(y, r);
  }

  WsoOutcome accept_from(const RationalVector& y, const LpResult& r) const {
    const std::size_t d = y.size();
    const std::size_t J = gens_.size();
    std::vector<RationalVector> support_out;
    std::vector<std::size_t> support_idx;
    RationalVector hull_point(d, Rational(0));
    for (std::size_t j = 0; j < J; ++j) {
      if (sgn(r.point[j]) == 0) continue;
      support_idx.push_back(j);
      support_out.push_back(gens_[j].output);
      for (std::size_t k = 0; k < d; ++k) hull_point[k] += r.point[j] * gens_[j].output[k];
    }
    RationalVector lam = caratheodory(hull_point, support_out);
    WsoOutcome out;
    out.accepted = true;
    for (std::size_t s = 0; s < lam.size(); ++s) {
      if (sgn(lam[s]) == 0) continue;
      out.directions.push_back(gens_[support_idx[s]].direction);
      out.outputs.push_back(gens_[support_idx[s]].output);
      out.weights.push_back(lam[s]);
    }
    out.residual = r.value;
    return out;
  }

  /// Cutting-plane screening over the cache: either a verdict or nullopt to continue the ellipsoid.
  template <class Budget>
  std::optional<WsoOutcome> screen(const RationalVector& y, const Rational& delta, const Rational& tol,
                                   std::size_t& queries, Budget&& budget) {
    const std::size_t d = y.size();
    const unsigned bits = cfg_.effective_grid_bits();
    for (;;) {
      budget();
      std::optional<RationalVector> cand;
      auto [s, wd] = l1_projection_double(y);
      if (!wd.empty() && s > 1e-7) {
        RationalVector w(d);
        for (std::size_t k = 0; k < d; ++k) {
          double v = std::max(-1.0, std::min(1.0, wd[k]));
          w[k] = round_dyadic(mpf_class(v, 64), std::min(bits, 40u));
        }
        Rational tmin = dot(gens_[0].output, w);
        for (const auto& g : gens_) tmin = std::min(tmin, dot(g.output, w));
        if (tmin >= dot(y, w) + delta) cand = std::move(w);
      }
      if (!cand) {
        auto r = l1_projection(y);
        if (!r.optimal()) throw InvariantError("l1 projection onto a nonempty hull failed");
        if (r.value < delta) {
          if (r.value >= tol) return std::nullopt;
          if (log_) log_->record(queries, y, "wso-accept");
          return accept_from(y, r);
        }
        RationalVector w(d);
        for (std::size_t k = 0; k < d; ++k) w[k] = -r.duals[k];
        cand = std::move(w);
      }
      std::size_t before = gens_.size();
      const RationalVector a = output(*cand, &queries);
      Rational value = dot(a, *cand);
      if (value >= dot(y, *cand) + delta) {
        if (log_) log_->record(queries, y, "wso-reject");
        return reject(*cand, value);
      }
      if (gens_.size() == before) return std::nullopt;
    }
  }

  OptimizationAlgorithm alg_;
  EllipsoidConfig cfg_;
  QueryLog* log_;
  std::vector<Generator> gens_;
  std::unordered_map<std::string, std::size_t> by_dir_;
  std::unordered_map<std::string, std::size_t> by_out_;
  std::size_t total_queries_ = 0;
};

/// Single WSO call with a fresh cache.
inline WsoOutcome wso(const RationalVector& y, const OptimizationAlgorithm& A, const EllipsoidConfig& cfg,
                      QueryLog* log = nullptr) {
  WeirdSeparationOracle oracle(A, cfg, log);
  return oracle(y);
}

using WsoHandle = std::function<WsoOutcome(const RationalVector&)>;

struct OptimizeResult {
  RationalVector z;
  Rational value = 0;
  WsoOutcome decomposition;
  std::size_t probes = 0;
  std::size_t iterations = 0;
};

/// Binary search on C over [lo, hi]: minimizes c·x over Q ∩ {WSO-accepted points}.
inline OptimizeResult ellipsoid_optimize_with_wso(const RationalVector& c, const SeparationOracle& Q, const WsoHandle& W,
                                                  std::size_t dim, const EllipsoidConfig& cfg, Rational lo, Rational hi,
                                                  const Rational& tol, QueryLog* log = nullptr,
                                                  std::size_t probe_iterations = 0) {
  if (c.size() != dim) throw StructuralError("objective has the wrong dimension");
  if (hi < lo) throw DomainError("empty value range");
  if (sgn(tol) <= 0) throw DomainError("tolerance must be positive");
  const unsigned bits = cfg.effective_grid_bits();
  const std::size_t N = probe_iterations ? probe_iterations : (cfg.N ? cfg.N : default_iterations(dim, bits, cfg.R));

  OptimizeResult best;
  std::optional<WsoOutcome> last_decomp;
  auto probe = [&](const Rational& C, const std::optional<Ellipsoid>& start) {
    WsoOutcome decomp;
    SeparationOracle oracle = [&](const RationalVector& x) -> std::optional<Halfspace> {
      if (auto h = Q(x)) return h;
      if (dot(c, x) > C) {
        RationalVector w(dim);
        for (std::size_t k = 0; k < dim; ++k) w[k] = -c[k];
        return Halfspace{w, -C};
      }
      WsoOutcome o = W(x);
      if (!o.accepted) return o.halfspace;
      decomp = std::move(o);
      return std::nullopt;
    };
    auto res = ellipsoid_feasibility(oracle, dim, cfg, log, start, N);
    ++best.probes;
    best.iterations += res.iterations;
    return std::make_pair(std::move(res), std::move(decomp));
  };

  auto [first, first_decomp] = probe(hi, std::nullopt);
  if (!first.feasible) throw InfeasibleError("no feasible point with objective at most the upper end of the range");
  best.z = first.point;
  best.value = dot(c, first.point);
  best.decomposition = std::move(first_decomp);
  Ellipsoid warm = first.ellipsoid;
  hi = std::min(hi, best.value);
  while (hi - lo > tol) {
    Rational mid = (lo + hi) / 2;
    auto [res, decomp] = probe(mid, warm);
    if (res.feasible) {
      best.z = res.point;
      best.value = dot(c, res.point);
      best.decomposition = std::move(decomp);
      warm = res.ellipsoid;
      hi = std::min(mid, best.value);
    } else {
      lo = mid;
    }
  }
  return best;
}

}  // namespace bimech
