#include <gtest/gtest.h>

#include <numeric>

#include "bimech/core.hpp"
#include "bimech/generate.hpp"

using namespace bimech;

namespace {

SchedulingInstance zero_cost(RationalMatrix p) {
  RationalMatrix c(p.rows(), p.cols(), Rational(0));
  return SchedulingInstance(std::move(p), std::move(c));
}

Assignment random_valid_assignment(const SchedulingInstance& inst, Rng& rng) {
  std::vector<std::optional<std::size_t>> owner(inst.m);
  for (auto& o : owner) o = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(inst.k) - 1));
  return Assignment::from_owners(inst.k, owner);
}

}  // namespace

TEST(Rational, ParsesFractionsIntegersAndDecimals) {
  EXPECT_EQ(parse_rational("3/6"), Rational(1, 2));
  EXPECT_EQ(parse_rational("-4"), Rational(-4));
  EXPECT_EQ(parse_rational("0.25"), Rational(1, 4));
  EXPECT_EQ(parse_rational("-.5"), Rational(-1, 2));
  EXPECT_EQ(to_string(Rational(6, 4)), "3/2");
  EXPECT_EQ(to_string(Rational(4, 2)), "2");
  EXPECT_THROW(parse_rational("1/0"), StructuralError);
  EXPECT_THROW(parse_rational("abc"), StructuralError);
  EXPECT_THROW(parse_rational(""), StructuralError);
}

TEST(Rational, ExtendedOrdering) {
  EXPECT_LT(ExtRational::neg_inf(), ExtRational(Rational(-100)));
  EXPECT_LT(ExtRational(Rational(100)), ExtRational::pos_inf());
  EXPECT_EQ(ExtRational::pos_inf(), ExtRational::pos_inf());
  EXPECT_THROW(ExtRational::pos_inf().value(), DomainError);
}

TEST(Rational, RoundDyadic) {
  mpf_class v(0.3, 256);
  Rational r = round_dyadic(v, 10);
  EXPECT_EQ(r, Rational(307, 1024));
  EXPECT_EQ(pow2(-3), Rational(1, 8));
  EXPECT_EQ(pow2(4), Rational(16));
}

TEST(Instance, RejectsNegativeAndBadShapes) {
  EXPECT_THROW(SchedulingInstance(rational_matrix({{"-1"}}), rational_matrix({{"0"}})), DomainError);
  EXPECT_THROW(SchedulingInstance(rational_matrix({{"1", "1"}}), rational_matrix({{"0"}})), StructuralError);
  EXPECT_THROW(SchedulingInstance(rational_matrix({{"2"}}), rational_matrix({{"0"}}), true), DomainError);
}

TEST(Instance, NormalizeKeepsScale) {
  auto inst = zero_cost(rational_matrix({{"2", "4"}}));
  auto n = inst.normalize();
  EXPECT_TRUE(n.normalized);
  EXPECT_EQ(n.scale, Rational(4));
  EXPECT_EQ(n.p(0, 0), Rational(1, 2));
  EXPECT_EQ(n.p(0, 1), Rational(1));
}

TEST(Makespan, SingleMachineSumsLoads) {
  auto inst = zero_cost(rational_matrix({{"1/2", "1/2"}}));
  EXPECT_EQ(makespan(inst, Assignment(rational_matrix({{"1", "1"}}))), ExtRational(Rational(1)));
}

TEST(Makespan, UnassignedJobIsInfinite) {
  auto inst = zero_cost(rational_matrix({{"1"}, {"1"}}));
  EXPECT_TRUE(makespan(inst, Assignment(rational_matrix({{"0"}, {"0"}}))).is_pos_inf());
}

TEST(Makespan, DimensionMismatchThrows) {
  auto inst = zero_cost(rational_matrix({{"1"}, {"1"}}));
  EXPECT_THROW(makespan(inst, Assignment(rational_matrix({{"1"}}))), StructuralError);
  EXPECT_THROW(fairness(inst, Assignment(rational_matrix({{"1", "0"}}))), StructuralError);
  EXPECT_THROW(cost(inst, Assignment(rational_matrix({{"1"}}))), StructuralError);
}

TEST(Makespan, RandomMatchesRowSums) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto inst = random_scheduling_instance({2, 3}, seed);
    Rng rng(seed + 1000);
    auto a = random_valid_assignment(inst, rng);
    Rational r0 = 0, r1 = 0;
    for (std::size_t j = 0; j < 3; ++j) {
      if (a(0, j)) r0 += inst.p(0, j);
      if (a(1, j)) r1 += inst.p(1, j);
    }
    EXPECT_EQ(makespan(inst, a), ExtRational(std::max(r0, r1)));
  }
}

TEST(Fairness, Examples) {
  auto inst = zero_cost(rational_matrix({{"1", "0"}, {"0", "1"}}));
  EXPECT_EQ(fairness(inst, Assignment(rational_matrix({{"1", "0"}, {"0", "1"}}))), ExtRational(Rational(1)));
  auto one = zero_cost(rational_matrix({{"1"}}));
  EXPECT_EQ(fairness(one, Assignment(rational_matrix({{"0"}}))), ExtRational(Rational(0)));
  auto two = zero_cost(rational_matrix({{"1"}, {"1"}}));
  EXPECT_TRUE(fairness(two, Assignment(rational_matrix({{"1"}, {"1"}}))).is_neg_inf());
}

TEST(Cost, Examples) {
  auto inst = SchedulingInstance(rational_matrix({{"1", "1"}}), rational_matrix({{"1", "-1"}}));
  EXPECT_EQ(cost(inst, Assignment(rational_matrix({{"1", "1"}}))), Rational(0));
  auto z = zero_cost(rational_matrix({{"1", "2"}}));
  EXPECT_EQ(cost(z, Assignment(rational_matrix({{"1", "1"}}))), Rational(0));
}

TEST(Cost, RandomMatchesDotProduct) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto inst = random_scheduling_instance({3, 4}, seed);
    Rng rng(seed * 7 + 3);
    RationalMatrix x(3, 4);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 4; ++j) x(i, j) = random_rational(rng, 0, 1, 10);
    Rational expect = 0;
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t i = 0; i < 3; ++i) expect += inst.c(i, j) * x(i, j);
    EXPECT_EQ(cost(inst, FractionalAssignment(x)), expect);
  }
}

TEST(ModifiedMakespan, Examples) {
  auto inst = zero_cost(rational_matrix({{"1"}, {"1/10"}}));
  EXPECT_EQ(modified_makespan(inst, FractionalAssignment(rational_matrix({{"1/10"}, {"9/10"}}))), ExtRational(Rational(1)));
  auto z = zero_cost(rational_matrix({{"1", "1"}}));
  EXPECT_TRUE(modified_makespan(z, FractionalAssignment(rational_matrix({{"0", "0"}}))).is_pos_inf());
}

TEST(ModifiedMakespan, EqualsMakespanOnIntegral) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto inst = random_scheduling_instance({3, 5}, seed);
    Rng rng(seed);
    auto a = random_valid_assignment(inst, rng);
    EXPECT_EQ(modified_makespan(inst, a), makespan(inst, a));
  }
}

TEST(Properties, MonotoneUnderAddingToExtremeMachine) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto inst = random_scheduling_instance({3, 6}, seed);
    // assign the first five jobs, then drop job 5 on the busiest / least busy machine
    Rng rng(seed + 99);
    std::vector<std::optional<std::size_t>> owner(6);
    for (std::size_t j = 0; j < 5; ++j) owner[j] = static_cast<std::size_t>(uniform_int(rng, 0, 2));
    auto partial = Assignment::from_owners(3, owner);
    auto l = loads(inst, partial.matrix());
    std::size_t busiest = static_cast<std::size_t>(std::max_element(l.begin(), l.end()) - l.begin());
    std::size_t idlest = static_cast<std::size_t>(std::min_element(l.begin(), l.end()) - l.begin());
    auto before_f = fairness(inst, partial);
    owner[5] = busiest;
    auto full = Assignment::from_owners(3, owner);
    EXPECT_EQ(makespan(inst, full), ExtRational(l[busiest] + inst.p(busiest, 5)));
    owner[5] = idlest;
    auto fair = Assignment::from_owners(3, owner);
    EXPECT_GE(fairness(inst, fair), before_f);
  }
}

TEST(Properties, PermutationInvariance) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto inst = random_scheduling_instance({3, 4}, seed);
    Rng rng(seed);
    auto a = random_valid_assignment(inst, rng);
    std::vector<std::size_t> perm{2, 0, 1};
    RationalMatrix pp(3, 4), cc(3, 4), xx(3, 4);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 4; ++j) {
        pp(perm[i], j) = inst.p(i, j);
        cc(perm[i], j) = inst.c(i, j);
        xx(perm[i], j) = a.matrix()(i, j);
      }
    SchedulingInstance permuted(pp, cc);
    EXPECT_EQ(makespan(permuted, xx), makespan(inst, a));
    EXPECT_EQ(fairness(permuted, xx), fairness(inst, a));
    EXPECT_EQ(cost(permuted, xx), cost(inst, a));
    EXPECT_EQ(makespan(inst, a), makespan(inst, a));
  }
}

TEST(Assignment, OwnersRoundTrip) {
  std::vector<std::optional<std::size_t>> owner{0, std::nullopt, 2};
  auto a = Assignment::from_owners(3, owner);
  EXPECT_EQ(a.owners(), owner);
  EXPECT_THROW(Assignment(rational_matrix({{"1/2"}})), DomainError);
  EXPECT_THROW(FractionalAssignment(rational_matrix({{"2"}})), DomainError);
}
