#include <gtest/gtest.h>

#include "bimech/bmed.hpp"
#include "bimech/oracle.hpp"

using namespace bimech;

namespace {

Rational R(const char* s) { return parse_rational(s); }

BmedInstance tiny(Objective obj) {
  return BmedInstance({{{R("1/2"), R("1/4")}, {R("1/4"), R("1/2")}}, {{R("1/3"), R("1/3")}, {R("1/2"), R("1/5")}}},
                      {{R("1/2"), R("1/2")}, {R("1/3"), R("2/3")}}, obj);
}

/// Random lottery over valid outcomes with random expected prices in [-1,1].
AllocationRule random_rule(const BmedInstance& inst, std::uint64_t seed, bool with_prices) {
  auto outcomes = std::make_shared<std::vector<Assignment>>(valid_outcomes(inst));
  return [inst, outcomes, seed, with_prices](const Profile& prof) {
    RationalVector key;
    for (auto t : prof) key.push_back(Rational(static_cast<long>(t)));
    Rng rng(derive_seed(seed, digest(key)));
    std::vector<std::pair<Rational, Assignment>> l;
    Rational left = 1;
    for (int s = 0; s < 3; ++s) {
      Rational q = s == 2 ? left : random_rational(rng, 0, left, 10);
      left -= q;
      l.emplace_back(q, (*outcomes)[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(outcomes->size()) - 1))]);
    }
    RationalVector prices;
    if (with_prices)
      for (std::size_t i = 0; i < inst.k; ++i) prices.push_back(random_rational(rng, -1, 1, 8));
    return RuleOutcome(std::move(l), std::move(prices));
  };
}

/// Direct BIC/IR check: conditional expectations summed profile by profile.
bool directly_truthful(const BmedInstance& inst, const ProfileDistribution& d, const AllocationRule& rule) {
  for (std::size_t i = 0; i < inst.k; ++i) {
    for (std::size_t t = 0; t < inst.num_types(i); ++t) {
      if (sgn(d.marginals[i][t]) == 0) continue;
      // util[r] = E[t(x) − P_i | report r]
      std::vector<Rational> util(inst.num_types(i), Rational(0));
      for (std::size_t a = 0; a < d.size(); ++a) {
        std::size_t r = d.profiles[a][i];
        auto out = rule(d.profiles[a]);
        Rational v = 0;
        for (const auto& [q, x] : out.lottery) v += q * type_value(inst, i, t, x);
        if (!out.prices.empty()) v -= out.prices[i];
        util[r] += d.weights[a] * v / d.marginals[i][r];
      }
      if (sgn(util[t]) < 0) return false;
      for (std::size_t r = 0; r < util.size(); ++r)
        if (r != t && sgn(d.marginals[i][r]) > 0 && util[r] > util[t]) return false;
    }
  }
  return true;
}

/// Prices making the interim values BIC and IR, if any exist.
std::optional<RationalVector> implementable(const BmedInstance& inst, const ImplicitForm& f) {
  ImplicitLayout L(inst);
  const std::size_t np = L.dim - L.pi_dim;
  LinearProgram lp(np);
  for (std::size_t j = 0; j < np; ++j) lp.set_bounds(j, std::nullopt, std::nullopt);
  for (std::size_t i = 0; i < inst.k; ++i)
    for (std::size_t t = 0; t < inst.num_types(i); ++t) {
      std::size_t pt = L.p(i, t) - L.pi_dim;
      lp.add_sparse({{pt, Rational(1)}}, Relation::le, f.pi[i](t, t));
      for (std::size_t tp = 0; tp < inst.num_types(i); ++tp) {
        if (tp == t) continue;
        std::size_t ptp = L.p(i, tp) - L.pi_dim;
        lp.add_sparse({{pt, Rational(1)}, {ptp, Rational(-1)}}, Relation::le, f.pi[i](t, t) - f.pi[i](t, tp));
      }
    }
  auto r = lp_solve(lp);
  if (!r.optimal()) return std::nullopt;
  return r.point;
}

}  // namespace

TEST(BruteGoop, SingleMachineTakesEverything) {
  SchedulingInstance one(rational_matrix({{"1/5", "1/2", "1/3"}}), rational_matrix({{"1/4", "-1/2", "0"}}));
  auto r = brute_goop(one, Objective::makespan);
  EXPECT_EQ(r.value, R("1/5") + R("1/2") + R("1/3") + R("1/4") - R("1/2"));
  EXPECT_EQ(r.assignment, Assignment(rational_matrix({{"1", "1", "1"}})));
}

TEST(BruteGoop, FairnessMayDiscard) {
  // keeping job 1 costs more than the fairness it adds
  SchedulingInstance s(rational_matrix({{"1/2", "1/4"}}), rational_matrix({{"0", "-1"}}));
  auto r = brute_goop(s, Objective::fairness);
  EXPECT_EQ(r.value, R("1/2"));
  EXPECT_FALSE(r.assignment(0, 1));
}

TEST(ImplicitFormOf, ConstantRule) {
  auto inst = tiny(Objective::makespan);
  auto D = full_distribution(inst);
  Assignment x0 = Assignment::from_owners(2, {0, 1});
  auto f = implicit_form_of(inst, D, [&](const Profile&) { return RuleOutcome(x0); });
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t t = 0; t < 2; ++t)
      for (std::size_t tp = 0; tp < 2; ++tp) EXPECT_EQ(f.pi[i](t, tp), type_value(inst, i, t, x0));
  EXPECT_FALSE(truthfulness_oracle(inst, f));
}

TEST(ImplicitFormOf, SingleProfileSupport) {
  auto inst = tiny(Objective::makespan);
  auto d = make_distribution(inst, {{Profile{1, 0}, Rational(1)}});
  Assignment x = Assignment::from_owners(2, {1, 0});
  auto f = implicit_form_of(inst, d, [&](const Profile&) { return RuleOutcome(x, {R("1/7"), R("-1/3")}); });
  EXPECT_EQ(f.O, objective_value(inst, {1, 0}, x));
  for (std::size_t t = 0; t < 2; ++t) {
    EXPECT_EQ(f.pi[0](t, 1), type_value(inst, 0, t, x));
    EXPECT_EQ(f.pi[0](t, 0), 0);
    EXPECT_EQ(f.pi[1](t, 0), type_value(inst, 1, t, x));
  }
  EXPECT_EQ(f.p[0][1], R("1/7"));
  EXPECT_EQ(f.p[1][0], R("-1/3"));
}

TEST(ImplicitFormOf, VirtualObjectiveIdentity) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    BmedGenParams g;
    g.objective = seed % 2 ? Objective::fairness : Objective::makespan;
    auto inst = random_bmed_instance(g, seed);
    auto d = sample_dprime(inst, 7, seed);
    auto rule = random_rule(inst, seed, false);
    auto f = implicit_form_of(inst, d, rule);
    ImplicitLayout L(inst);
    Rng rng(seed);
    RationalVector w(L.pi_dim);
    for (auto& v : w) v = random_rational(rng, -1, 1, 20);
    Rational expected = 0;
    for (std::size_t a = 0; a < d.size(); ++a)
      for (const auto& [q, x] : rule(d.profiles[a]).lottery)
        expected += d.weights[a] * q * virtual_objective(inst, d, w, d.profiles[a], x);
    EXPECT_EQ(dot(w, f.feasibility_vector(L)), expected) << "seed " << seed;
  }
}

TEST(ImplicitFormOf, TruthfulnessOracleMatchesDirectCheck) {
  int truthful = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    auto inst = random_bmed_instance({2, 2, 2}, seed);
    auto D = full_distribution(inst);
    AllocationRule rule = random_rule(inst, seed, true);
    if (seed % 3 == 0) {
      // report-independent outcome with a constant nonpositive price is always truthful
      Assignment x = valid_outcomes(inst)[seed % 4];
      rule = [x](const Profile&) { return RuleOutcome(x, {R("-1/10"), R("0")}); };
    }
    auto f = implicit_form_of(inst, D, rule);
    bool direct = directly_truthful(inst, D, rule);
    truthful += direct;
    EXPECT_EQ(!truthfulness_oracle(inst, f), direct) << "seed " << seed;
  }
  EXPECT_GT(truthful, 0);
  EXPECT_LT(truthful, 60);
}

TEST(BruteBmed, OneBidderOneTypeEqualsGoopOptimum) {
  for (auto obj : {Objective::makespan, Objective::fairness}) {
    BmedInstance inst({{{R("1/5"), R("1/3"), R("1/4")}}}, {{R("1")}}, obj);
    auto r = brute_bmed(inst);
    EXPECT_EQ(r.value, brute_goop(inst.scheduling({0}), obj).value);
  }
}

TEST(BruteBmed, BoundedByImplementableDeterministicRules) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    for (auto obj : {Objective::makespan, Objective::fairness}) {
      BmedGenParams g;
      g.objective = obj;
      auto base = random_bmed_instance(g, seed);
      // identical bidders
      BmedInstance inst({base.types[0], base.types[0]}, {base.probs[0], base.probs[0]}, obj);
      auto D = full_distribution(inst);
      auto outs = valid_outcomes(inst);
      auto opt = brute_bmed(inst);
      EXPECT_FALSE(truthfulness_oracle(inst, opt.form));
      EXPECT_EQ(opt.form.O, opt.value);
      std::optional<Rational> best;
      std::optional<Rational> best_symmetric;
      const std::size_t P = D.size();
      std::vector<std::size_t> choice(P, 0);
      for (;;) {
        std::map<Profile, std::size_t> pick;
        for (std::size_t a = 0; a < P; ++a) pick[D.profiles[a]] = choice[a];
        auto f = implicit_form_of(inst, D, [&](const Profile& p) { return RuleOutcome(outs[pick.at(p)]); });
        if (implementable(inst, f)) {
          auto better = [&](const std::optional<Rational>& b) { return !b || (obj == Objective::makespan ? f.O < *b : f.O > *b); };
          if (better(best)) best = f.O;
          bool symmetric = true;
          for (std::size_t t = 0; t < 2 && symmetric; ++t)
            for (std::size_t tp = 0; tp < 2; ++tp)
              if (f.pi[0](t, tp) != f.pi[1](t, tp)) symmetric = false;
          if (symmetric && better(best_symmetric)) best_symmetric = f.O;
        }
        std::size_t a = 0;
        while (a < P && ++choice[a] == outs.size()) choice[a++] = 0;
        if (a == P) break;
      }
      ASSERT_TRUE(best);
      if (obj == Objective::makespan) {
        EXPECT_LE(opt.value, *best);
        if (best_symmetric) EXPECT_LE(opt.value, *best_symmetric);
      } else {
        EXPECT_GE(opt.value, *best);
        if (best_symmetric) EXPECT_GE(opt.value, *best_symmetric);
      }
    }
  }
}

TEST(BruteBmed, TinyInstanceBetweenRelaxationAndConstantRule) {
  for (auto obj : {Objective::makespan, Objective::fairness}) {
    auto inst = tiny(obj);
    auto D = full_distribution(inst);
    auto r = brute_bmed(inst);
    Rational relaxed = 0;
    for (std::size_t a = 0; a < D.size(); ++a) relaxed += D.weights[a] * brute_goop(inst.scheduling(D.profiles[a]), obj).value;
    Assignment x = Assignment::from_owners(2, {0, 1});
    auto constant = implicit_form_of(inst, D, [&](const Profile&) { return RuleOutcome(x); });
    if (obj == Objective::makespan) {
      EXPECT_GE(r.value, relaxed);
      EXPECT_LE(r.value, constant.O);
    } else {
      EXPECT_LE(r.value, relaxed);
      EXPECT_GE(r.value, constant.O);
    }
    EXPECT_FALSE(truthfulness_oracle(inst, r.form));
  }
}

TEST(BruteBmed, MonotoneUnderDominance) {
  // bidder 0's type 1 has pointwise larger processing times than type 0
  std::vector<std::vector<RationalVector>> types = {{{R("1/4"), R("1/5")}, {R("1/2"), R("2/5")}},
                                                    {{R("1/3"), R("1/3")}, {R("1/5"), R("1/2")}}};
  for (auto obj : {Objective::makespan, Objective::fairness}) {
    std::optional<Rational> prev;
    for (const char* q : {"0", "1/4", "1/2", "3/4", "1"}) {
      BmedInstance inst(types, {{1 - R(q), R(q)}, {R("1/2"), R("1/2")}}, obj);
      Rational v = brute_bmed(inst).value;
      // larger times never help makespan and never hurt fairness
      if (prev) EXPECT_GE(v, *prev) << q;
      prev = v;
    }
  }
}

TEST(BruteBmed, CapacityError) {
  BmedGenParams g;
  g.k = 3;
  g.m = 8;
  g.types = 10;
  EXPECT_THROW(brute_bmed(random_bmed_instance(g, 1)), CapacityError);
}
