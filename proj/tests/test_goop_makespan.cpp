#include <gtest/gtest.h>

#include "bimech/generate.hpp"
#include "bimech/goop_makespan.hpp"
#include "bimech/oracle.hpp"

using namespace bimech;

namespace {

SchedulingInstance zero_cost(RationalMatrix p) {
  RationalMatrix c(p.rows(), p.cols(), Rational(0));
  return SchedulingInstance(std::move(p), std::move(c));
}

SchedulingGenParams small_params(std::uint64_t seed) {
  SchedulingGenParams g;
  g.k = 1 + seed % 3;
  g.m = 1 + (seed / 3) % 6;
  return g;
}

void expect_lp_t_invariants(const SchedulingInstance& inst, const LpTSolution& s) {
  const auto& x = s.x.matrix();
  for (std::size_t j = 0; j < inst.m; ++j) {
    Rational col = 0;
    for (std::size_t i = 0; i < inst.k; ++i) col += x(i, j);
    EXPECT_EQ(col, Rational(1));
  }
  auto l = loads(inst, x);
  for (const auto& v : l) EXPECT_LE(v, s.T);
  for (std::size_t i = 0; i < inst.k; ++i)
    for (std::size_t j = 0; j < inst.m; ++j)
      if (inst.p(i, j) > s.t) EXPECT_EQ(x(i, j), 0);
  EXPECT_GE(s.T, s.t);
  EXPECT_EQ(s.value, cost(inst, s.x) + s.T);
}

}  // namespace

TEST(LpT, SingleJob) {
  auto inst = zero_cost(rational_matrix({{"1"}}));
  auto s = lp_t(inst, 1);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->x.matrix()(0, 0), Rational(1));
  EXPECT_EQ(s->T, Rational(1));
  EXPECT_EQ(s->value, Rational(1));
  EXPECT_FALSE(lp_t(inst, Rational(1, 2)));
  EXPECT_THROW(lp_t(inst, -1), DomainError);
}

TEST(LpT, BoundedByIntegralOptimum) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto inst = random_scheduling_instance({2, 3}, seed);
    auto ts = distinct_processing_times(inst);
    auto s = lp_t(inst, ts.back());
    ASSERT_TRUE(s);
    expect_lp_t_invariants(inst, *s);
    // the integral optimum y is feasible for LP(t) with T = max(M(y), t)
    auto y = brute_goop(inst, Objective::makespan);
    Rational My = makespan(inst, y.assignment).value();
    EXPECT_LE(s->value, std::max(My, s->t) + cost(inst, y.assignment));
    EXPECT_LE(best_lp_t(inst).value, y.value);
  }
}

TEST(StRound, IntegralInputUnchanged) {
  auto inst = random_scheduling_instance({2, 3}, 5);
  Assignment a = Assignment::from_owners(2, {0, 1, 1});
  LpTSolution s{FractionalAssignment(a), makespan(inst, a).value(), Rational(1), Rational(0)};
  EXPECT_EQ(st_round(inst, s), a);
}

TEST(StRound, HalfEverywhere) {
  auto inst = zero_cost(rational_matrix({{"1", "1"}, {"1", "1"}}));
  LpTSolution s{FractionalAssignment(rational_matrix({{"1/2", "1/2"}, {"1/2", "1/2"}})), 1, 1, 1};
  auto a = st_round(inst, s);
  auto M = makespan(inst, a);
  ASSERT_TRUE(M.is_finite());
  EXPECT_LE(M.value(), Rational(2));
  EXPECT_LE(cost(inst, a), cost(inst, s.x));
}

TEST(StRound, ContractOnSeededLpSolutions) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SchedulingGenParams g;
    g.k = 2 + seed % 2;
    g.m = 3 + seed % 4;
    auto inst = random_scheduling_instance(g, seed + 1000);
    for (const auto& t : distinct_processing_times(inst)) {
      auto s = lp_t(inst, t);
      if (!s) continue;
      auto a = st_round(inst, *s);
      auto M = makespan(inst, a);
      ASSERT_TRUE(M.is_finite());
      EXPECT_LE(M.value(), s->T + s->t);
      EXPECT_LE(cost(inst, a), cost(inst, s->x));
    }
  }
}

TEST(Solve, SingleMachine) {
  auto inst = SchedulingInstance(rational_matrix({{"1/2", "1/3"}}), rational_matrix({{"1", "-1/4"}}));
  auto a = solve_makespan_with_costs(inst);
  EXPECT_EQ(a, Assignment(rational_matrix({{"1", "1"}})));
}

TEST(Solve, SymmetricTwoByTwo) {
  auto inst = zero_cost(rational_matrix({{"1", "1"}, {"1", "1"}}));
  auto a = solve_makespan_with_costs(inst);
  auto M = makespan(inst, a);
  ASSERT_TRUE(M.is_finite());
  EXPECT_LE(M.value() / 2, Rational(1));
}

TEST(Solve, DiscountedGuaranteeAgainstBruteForce) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto inst = random_scheduling_instance(small_params(seed), seed);
    auto r = solve_makespan_with_costs_report(inst);
    auto opt = brute_goop(inst, Objective::makespan);
    ASSERT_TRUE(r.makespan.is_finite());
    EXPECT_LE(r.makespan.value() / 2 + r.cost, opt.value) << "seed " << seed;
    // the selected fractional solution beats the integral optimum in modified makespan plus cost
    auto mh = modified_makespan(inst, r.fractional.x);
    ASSERT_TRUE(mh.is_finite());
    EXPECT_LE(mh.value() + cost(inst, r.fractional.x), opt.value);
    EXPECT_LE(r.makespan.value(), r.fractional.T + r.fractional.t);
  }
}

TEST(Solve, TiesPreferSmallerThreshold) {
  auto inst = zero_cost(rational_matrix({{"1/4", "1/2"}}));
  auto s = best_lp_t(inst);
  // t = 1/2 is the only feasible threshold (both jobs must use the single machine)
  EXPECT_EQ(s.t, Rational(1, 2));
  auto inst2 = zero_cost(rational_matrix({{"1/4"}, {"1/4"}}));
  EXPECT_EQ(best_lp_t(inst2).t, Rational(1, 4));
}

TEST(BruteGoop, Examples) {
  auto one = SchedulingInstance(rational_matrix({{"1/2", "1/3"}}), rational_matrix({{"1", "2"}}));
  EXPECT_EQ(brute_goop(one, Objective::makespan).value, Rational(1, 2) + Rational(1, 3) + 3);
  auto sym = zero_cost(rational_matrix({{"1", "1"}, {"1", "1"}}));
  EXPECT_EQ(brute_goop(sym, Objective::makespan).value, Rational(1));
  SchedulingGenParams big;
  big.k = 10;
  big.m = 8;
  EXPECT_THROW(brute_goop(random_scheduling_instance(big, 1), Objective::makespan), CapacityError);
}

TEST(BruteGoop, PermutationEquivariant) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto inst = random_scheduling_instance({3, 4}, seed);
    std::vector<std::size_t> perm{1, 2, 0};
    RationalMatrix p(3, 4), c(3, 4);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 4; ++j) {
        p(perm[i], j) = inst.p(i, j);
        c(perm[i], j) = inst.c(i, j);
      }
    SchedulingInstance q(p, c);
    for (auto obj : {Objective::makespan, Objective::fairness}) {
      auto a = brute_goop(inst, obj);
      auto b = brute_goop(q, obj);
      EXPECT_EQ(a.value, b.value);
      // the permuted argmin is optimal for the permuted instance
      RationalMatrix x(3, 4);
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 4; ++j) x(perm[i], j) = a.assignment.matrix()(i, j);
      auto o = obj == Objective::makespan ? makespan(q, x) : fairness(q, x);
      EXPECT_EQ(o.value() + cost(q, x), b.value);
    }
  }
}
