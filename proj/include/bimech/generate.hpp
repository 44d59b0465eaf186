#pragma once

#include <cstdint>
#include <random>

#include "bimech/core.hpp"
#include "bimech/rational.hpp"

namespace bimech {

using Rng = std::mt19937_64;

/// Uniform integer in [lo, hi]. Engine output is reduced directly so results do not depend on the
/// standard library's distribution implementation.
inline std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
  auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::int64_t>(rng() % span);
}

/// Uniform draw in [0,1) with 53 bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Exact draw from [0,1) on the grid 2^-64, comparable against rationals without rounding.
inline Rational uniform_rational01(Rng& rng) {
  Rational q(mpz_class(std::to_string(rng())), mpz_class(1));
  mpq_div_2exp(q.get_mpq_t(), q.get_mpq_t(), 64);
  return q;
}

/// Random rational in [lo, hi] whose denominator is at most `max_den`.
inline Rational random_rational(Rng& rng, const Rational& lo, const Rational& hi, long max_den) {
  long den = static_cast<long>(uniform_int(rng, 1, max_den));
  // numerators n with lo <= n/den <= hi
  mpz_class nlo_z, nhi_z;
  Rational a = lo * den;
  Rational b = hi * den;
  mpz_cdiv_q(nlo_z.get_mpz_t(), a.get_num_mpz_t(), a.get_den_mpz_t());
  mpz_fdiv_q(nhi_z.get_mpz_t(), b.get_num_mpz_t(), b.get_den_mpz_t());
  long nlo = nlo_z.get_si();
  long nhi = nhi_z.get_si();
  if (nhi < nlo) return lo;
  return make_rational(static_cast<long>(uniform_int(rng, nlo, nhi)), den);
}

struct SchedulingGenParams {
  std::size_t k = 2;
  std::size_t m = 3;
  Rational p_lo = 0;
  Rational p_hi = 1;
  Rational c_lo = -1;
  Rational c_hi = 1;
  long max_den = 100;
};

inline SchedulingInstance random_scheduling_instance(const SchedulingGenParams& params, std::uint64_t seed) {
  if (params.k == 0 || params.m == 0) throw StructuralError("k and m must be positive");
  if (params.max_den < 1) throw DomainError("denominator bound must be at least 1");
  Rng rng(seed);
  RationalMatrix p(params.k, params.m), c(params.k, params.m);
  for (std::size_t i = 0; i < params.k; ++i)
    for (std::size_t j = 0; j < params.m; ++j) p(i, j) = random_rational(rng, params.p_lo, params.p_hi, params.max_den);
  for (std::size_t i = 0; i < params.k; ++i)
    for (std::size_t j = 0; j < params.m; ++j) c(i, j) = random_rational(rng, params.c_lo, params.c_hi, params.max_den);
  bool normalized = params.p_hi <= 1;
  return SchedulingInstance(std::move(p), std::move(c), normalized);
}

/// Mixes a seed with an index into an independent stream seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace bimech
