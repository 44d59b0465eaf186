#pragma once

#include <vector>

#include "bimech/generate.hpp"
#include "bimech/geometry.hpp"

namespace bimech::testing {

/// Polytope given by its vertex list.
struct VertexPolytope {
  std::vector<RationalVector> vertices;

  std::size_t dim() const { return vertices.front().size(); }

  /// First vertex minimizing w·v.
  const RationalVector& argmin(const RationalVector& w) const {
    std::size_t best = 0;
    Rational bv = dot(vertices[0], w);
    for (std::size_t i = 1; i < vertices.size(); ++i) {
      Rational v = dot(vertices[i], w);
      if (v < bv) {
        bv = v;
        best = i;
      }
    }
    return vertices[best];
  }

  Rational min_value(const RationalVector& w) const { return dot(argmin(w), w); }
};

inline VertexPolytope unit_square() {
  return {{{Rational(0), Rational(0)}, {Rational(1), Rational(0)}, {Rational(0), Rational(1)}, {Rational(1), Rational(1)}}};
}

inline VertexPolytope simplex3() {
  return {{{Rational(0), Rational(0), Rational(0)},
           {Rational(1), Rational(0), Rational(0)},
           {Rational(0), Rational(1), Rational(0)},
           {Rational(0), Rational(0), Rational(1)}}};
}

/// Hull of random points; interior points are harmless for argmin and hull checks.
inline VertexPolytope random_polytope3(std::uint64_t seed, std::size_t n = 8) {
  Rng rng(seed);
  VertexPolytope p;
  for (std::size_t i = 0; i < n; ++i) {
    RationalVector v(3);
    for (auto& x : v) x = random_rational(rng, 0, 1, 8);
    p.vertices.push_back(v);
  }
  return p;
}

/// Exact minimizer (α = 1, β = 1, S = ∅).
inline OptimizationAlgorithm exact_algorithm(const VertexPolytope& P) {
  OptimizationAlgorithm A;
  A.dim = P.dim();
  A.output_bound = 2;
  A.evaluate = [P](const RationalVector& w) { return P.argmin(w); };
  return A;
}

/// Returns α·argmin, a vertex of αP.
inline OptimizationAlgorithm alpha_algorithm(const VertexPolytope& P, Rational alpha) {
  OptimizationAlgorithm A;
  A.dim = P.dim();
  A.alpha = alpha;
  A.output_bound = 2 * alpha;
  A.evaluate = [P, alpha](const RationalVector& w) {
    RationalVector v = P.argmin(w);
    for (auto& x : v) x *= alpha;
    return v;
  };
  return A;
}

/// β-discounted on coordinate set S: S-coordinates with negative weight are inflated by 1/β so the
/// discounted output still beats the minimum; the others are returned as is.
inline OptimizationAlgorithm beta_algorithm(const VertexPolytope& P, Rational beta, std::vector<std::size_t> S) {
  OptimizationAlgorithm A;
  A.dim = P.dim();
  A.beta = beta;
  A.S = S;
  A.output_bound = 2 / beta;
  A.evaluate = [P, beta, S](const RationalVector& w) {
    RationalVector v = P.argmin(w);
    for (auto k : S)
      if (sgn(w[k]) < 0) v[k] /= beta;
    return v;
  };
  return A;
}

}  // namespace bimech::testing
