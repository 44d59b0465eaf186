#include <gtest/gtest.h>

#include "bimech/io.hpp"

using namespace bimech;

namespace {

Rational R(const char* s) { return parse_rational(s); }

bool all_rationals_are_strings(const Json& j) {
  if (j.is_number_float()) return false;
  if (j.is_array() || j.is_object())
    for (const auto& e : j)
      if (!all_rationals_are_strings(e)) return false;
  return true;
}

}  // namespace

TEST(Io, SchedulingRoundTrip) {
  auto inst = random_scheduling_instance({3, 4}, 12);
  Json j = to_json(inst);
  EXPECT_EQ(j["p"][0][0].get<std::string>(), to_string(inst.p(0, 0)));
  auto back = scheduling_from_json(Json::parse(j.dump()));
  EXPECT_EQ(back.p, inst.p);
  EXPECT_EQ(back.c, inst.c);
  EXPECT_TRUE(all_rationals_are_strings(j));
}

TEST(Io, BmedRoundTrip) {
  BmedGenParams g;
  g.objective = Objective::fairness;
  g.m = 3;
  auto inst = random_bmed_instance(g, 4);
  auto back = bmed_from_json(Json::parse(to_json(inst).dump()));
  EXPECT_EQ(back.types, inst.types);
  EXPECT_EQ(back.probs, inst.probs);
  EXPECT_EQ(back.objective, Objective::fairness);
}

TEST(Io, MechanismRoundTrip) {
  auto inst = random_bmed_instance({2, 2, 2}, 3);
  BmedConfig cfg;
  cfg.samples = 500;
  auto r = bmed_reduce(inst, make_goop_handle(GoopKind::makespan, inst), R("1/10"), 5, cfg);
  Json j = to_json(r.mechanism);
  EXPECT_TRUE(all_rationals_are_strings(j));
  auto m = mechanism_from_json(Json::parse(j.dump()));
  EXPECT_EQ(m.directions, r.mechanism.directions);
  EXPECT_EQ(m.weights, r.mechanism.weights);
  EXPECT_EQ(m.dprime.profiles, r.mechanism.dprime.profiles);
  EXPECT_EQ(m.dprime.weights, r.mechanism.dprime.weights);
  EXPECT_EQ(m.form.O, r.form.O);
  EXPECT_EQ(m.form.p, r.form.p);
  EXPECT_EQ(m.goop.beta, R("1/2"));
  // a reloaded mechanism runs identically
  Rng a(1), b(1);
  for (int s = 0; s < 10; ++s) {
    Profile prof{static_cast<std::size_t>(s % 2), static_cast<std::size_t>(s / 2 % 2)};
    EXPECT_EQ(run_mechanism(m, prof, a).prices, run_mechanism(r.mechanism, prof, b).prices);
  }
  EXPECT_EQ(to_json(m).dump(), j.dump());
}

TEST(Io, ReportUsesExactStrings) {
  VerificationReport rep;
  rep.runs = 3;
  rep.objective_mean = 0.375;
  rep.regrets.push_back({0, 1, 0, -0.25, 0.5, 3});
  Json j = to_json(rep);
  EXPECT_EQ(j["objective_mean"], "3/8");
  EXPECT_EQ(j["regrets"][0]["mean"], "-1/4");
  EXPECT_TRUE(all_rationals_are_strings(j));
}

TEST(Io, MalformedInputs) {
  EXPECT_THROW(rational_from_json(Json(0.5)), StructuralError);
  EXPECT_EQ(rational_from_json(Json(3)), 3);
  EXPECT_THROW(scheduling_from_json(Json{{"kind", "bmed"}}), StructuralError);
  EXPECT_THROW(scheduling_from_json(Json{{"kind", "scheduling"}, {"p", Json::array({Json::array({"1"})})}}), StructuralError);
  Json ragged = Json::array({Json::array({"1", "2"}), Json::array({"1"})});
  EXPECT_THROW(matrix_from_json(ragged), StructuralError);
  Json bad = to_json(random_bmed_instance({1, 2, 2}, 1));
  bad["bidders"][0]["probs"] = Json::array({"1/2", "1/3"});
  EXPECT_THROW(bmed_from_json(bad), DomainError);
}
