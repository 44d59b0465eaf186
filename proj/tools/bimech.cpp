#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "bimech/bmed.hpp"
#include "bimech/io.hpp"
#include "bimech/oracle.hpp"

using namespace bimech;

namespace {

#ifndef BIMECH_BUILD_ID
#define BIMECH_BUILD_ID "unknown"
#endif

enum ExitCode { kOk = 0, kUsage = 1, kCapacity = 2, kNonconvergence = 3 };

struct RunConfig {
  std::string command;
  std::string input;
  std::string output = "-";
  std::optional<std::uint64_t> seed;
  std::string eps = "1/20";
  std::size_t samples = 0;
  unsigned precision = default_precision();
  std::size_t threads = 1;

  Json to_json() const {
    Json j{{"command", command},
           {"input", input},
           {"output", output},
           {"eps", eps},
           {"samples", samples},
           {"precision", precision},
           {"threads", threads},
           {"caps", {{"brute_goop", to_string(Rational(static_cast<long>(kBruteGoopCap)))},
                     {"brute_bmed", to_string(Rational(static_cast<long>(kBruteBmedCap)))}}}};
    j["seed"] = seed ? Json(*seed) : Json(nullptr);
    return j;
  }
};

class UsageError : public Error {
 public:
  using Error::Error;
};

Json report(const RunConfig& cfg, const std::string& kind) {
  return Json{{"kind", kind}, {"build", BIMECH_BUILD_ID}, {"config", cfg.to_json()}};
}

std::uint64_t require_seed(const RunConfig& cfg) {
  if (!cfg.seed) throw UsageError(cfg.command + " is randomized and needs --seed");
  return *cfg.seed;
}

Rational parse_eps(const std::string& s) {
  Rational e = parse_rational(s);
  if (sgn(e) <= 0) throw UsageError("--eps must be positive");
  return e;
}

Profile parse_profile(const std::string& s, const BmedInstance& inst) {
  Profile p;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) p.push_back(static_cast<std::size_t>(std::stoul(item)));
  check_profile(inst, p);
  return p;
}

/// Scheduling instance from a scheduling file, or from a BMeD file at a profile (default: all type 0).
SchedulingInstance load_scheduling(const Json& j, const std::string& profile) {
  if (j.value("kind", "") == "scheduling") return scheduling_from_json(j);
  auto inst = bmed_from_json(j);
  Profile p(inst.k, 0);
  if (!profile.empty()) p = parse_profile(profile, inst);
  return inst.scheduling(p);
}

Json solve_one(const std::string& goop, const SchedulingInstance& s, std::uint64_t seed, bool verify) {
  Json out;
  if (goop == "makespan") {
    auto r = solve_makespan_with_costs_report(s);
    out = to_json(r);
    if (verify) {
      auto opt = brute_goop(s, Objective::makespan);
      Rational lhs = r.makespan.value() / 2 + r.cost;
      out["certificate"] = Json{{"opt", to_json(opt.value)}, {"lhs", to_json(lhs)}, {"rule", "M/2 + C <= OPT"}, {"passed", lhs <= opt.value}};
    }
  } else if (goop == "fairness-bd" || goop == "fairness-as") {
    FairnessResult r;
    if (goop == "fairness-bd") {
      r = bd_solve(s);
    } else {
      Rng rng(seed);
      r = as_solve(s, rng);
    }
    out = to_json(r);
    if (verify) {
      auto opt = brute_goop(s, Objective::fairness);
      Json cert{{"opt", to_json(opt.value)}};
      if (goop == "fairness-bd") {
        Rational factor = s.m > s.k ? Rational(static_cast<long>(s.m - s.k + 1)) : Rational(1);
        Rational lhs = factor * r.fairness + r.cost;
        cert["lhs"] = to_json(lhs);
        cert["rule"] = "(m-k+1) F + C >= OPT";
        cert["passed"] = lhs >= opt.value;
      } else {
        cert["value"] = to_json(r.fairness + r.cost);
      }
      out["certificate"] = std::move(cert);
    }
  } else {
    throw UsageError("unknown --goop " + goop);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mechanism synthesis from approximate scheduling solvers"};
  app.require_subcommand(1);
  RunConfig cfg;
  app.add_option("--precision", cfg.precision, "Ellipsoid mantissa bits (default BIMECH_PRECISION or 256)")->check(CLI::Range(64u, 65536u));
  app.add_option("--threads", cfg.threads, "Worker threads")->check(CLI::Range(std::size_t{1}, std::size_t{1024}));

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a seeded instance");
  std::string gen_kind;
  std::size_t gk = 2, gm = 3, gtypes = 2;
  long max_den = 100;
  std::string gobj = "makespan";
  gen->add_option("kind", gen_kind, "scheduling or bmed")->required()->check(CLI::IsMember({"scheduling", "bmed"}));
  gen->add_option("--k", gk, "Machines / bidders")->check(CLI::PositiveNumber);
  gen->add_option("--m", gm, "Jobs")->check(CLI::PositiveNumber);
  gen->add_option("--types", gtypes, "Types per bidder (bmed)")->check(CLI::PositiveNumber);
  gen->add_option("--objective", gobj, "makespan or fairness (bmed)")->check(CLI::IsMember({"makespan", "fairness"}));
  gen->add_option("--max-den", max_den, "Denominator bound")->check(CLI::PositiveNumber);
  gen->add_option("--seed", cfg.seed, "Seed")->required();
  gen->add_option("-o,--output", cfg.output, "Output path (- for stdout)");

  // solve
  auto* solve = app.add_subcommand("solve", "Run a GOOP solver on one instance");
  std::string goop = "makespan";
  std::string profile;
  bool verify_flag = false;
  solve->add_option("--goop", goop, "makespan, fairness-as or fairness-bd")
      ->check(CLI::IsMember({"makespan", "fairness-as", "fairness-bd"}));
  solve->add_option("-i,--input", cfg.input, "Instance file")->required();
  solve->add_option("--profile", profile, "Type profile when the input is a BMeD instance, e.g. 0,1");
  solve->add_option("--seed", cfg.seed, "Seed (required for fairness-as)");
  solve->add_flag("--verify", verify_flag, "Certify against brute force");
  solve->add_option("-o,--output", cfg.output, "Output path");

  // mechanism
  auto* mech_cmd = app.add_subcommand("mechanism", "Synthesize a truthful mechanism");
  std::string mgoop = "makespan";
  std::size_t probe_iterations = BmedConfig{}.probe_iterations;
  std::string diagnostics;
  mech_cmd->add_option("-i,--input", cfg.input, "BMeD instance file")->required();
  mech_cmd->add_option("--goop", mgoop, "makespan, fairness-bd, fairness-as or exact")
      ->check(CLI::IsMember({"makespan", "fairness-bd", "fairness-as", "exact"}));
  mech_cmd->add_option("--eps", cfg.eps, "Accuracy (rational)");
  mech_cmd->add_option("--samples", cfg.samples, "D' sample count (0: 64 k max|T| / eps^2)");
  mech_cmd->add_option("--probe-iterations", probe_iterations, "Ellipsoid iterations per probe (0 skips the ellipsoid)");
  mech_cmd->add_option("--diagnostics", diagnostics, "Query log path");
  mech_cmd->add_option("--seed", cfg.seed, "Seed")->required();
  mech_cmd->add_option("-o,--output", cfg.output, "Output path");

  // verify
  auto* ver = app.add_subcommand("verify", "Monte Carlo verification of a mechanism");
  std::size_t runs = 100000;
  ver->add_option("-i,--input", cfg.input, "Mechanism file")->required();
  ver->add_option("--runs", runs, "Replications")->check(CLI::PositiveNumber);
  ver->add_option("--seed", cfg.seed, "Seed")->required();
  ver->add_option("-o,--output", cfg.output, "Output path");

  // brute
  auto* brute = app.add_subcommand("brute", "Exact optimum by enumeration");
  std::string bobj = "makespan";
  brute->add_option("-i,--input", cfg.input, "Scheduling or BMeD instance file")->required();
  brute->add_option("--objective", bobj, "Objective for scheduling instances")->check(CLI::IsMember({"makespan", "fairness"}));
  brute->add_option("-o,--output", cfg.output, "Output path");

  // bench
  auto* bench = app.add_subcommand("bench", "Table of solver values against brute force on seeded instances");
  std::size_t count = 10;
  std::string bgoop = "makespan";
  bench->add_option("--goop", bgoop, "makespan, fairness-as or fairness-bd")
      ->check(CLI::IsMember({"makespan", "fairness-as", "fairness-bd"}));
  bench->add_option("--count", count, "Instances")->check(CLI::PositiveNumber);
  bench->add_option("--k", gk, "Machines")->check(CLI::PositiveNumber);
  bench->add_option("--m", gm, "Jobs")->check(CLI::PositiveNumber);
  bench->add_option("--seed", cfg.seed, "Seed")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (gen->parsed()) {
      cfg.command = "gen";
      if (gen_kind == "scheduling") {
        SchedulingGenParams g;
        g.k = gk;
        g.m = gm;
        g.max_den = max_den;
        write_json_file(cfg.output, to_json(random_scheduling_instance(g, *cfg.seed)));
      } else {
        BmedGenParams g;
        g.k = gk;
        g.m = gm;
        g.types = gtypes;
        g.objective = parse_objective(gobj);
        g.max_den = max_den;
        write_json_file(cfg.output, to_json(random_bmed_instance(g, *cfg.seed)));
      }
    } else if (solve->parsed()) {
      cfg.command = "solve";
      std::uint64_t seed = goop == "fairness-as" ? require_seed(cfg) : cfg.seed.value_or(0);
      auto s = load_scheduling(read_json_file(cfg.input), profile);
      Json r = report(cfg, "solve-report");
      r["goop"] = goop;
      r["result"] = solve_one(goop, s, seed, verify_flag);
      write_json_file(cfg.output, r);
      if (verify_flag && r["result"]["certificate"].value("passed", true) == false) return kUsage;
    } else if (mech_cmd->parsed()) {
      cfg.command = "mechanism";
      auto inst = bmed_from_json(read_json_file(cfg.input));
      Rational eps = parse_eps(cfg.eps);
      auto handle = make_goop_handle(parse_goop_kind(mgoop), inst, require_seed(cfg));
      BmedConfig bc;
      bc.samples = cfg.samples;
      bc.probe_iterations = probe_iterations;
      bc.ellipsoid.precision = cfg.precision;
      bc.ellipsoid.diagnostics_path = diagnostics;
      auto res = bmed_reduce(inst, handle, eps, *cfg.seed, bc);
      Json j = to_json(res.mechanism);
      j["build"] = BIMECH_BUILD_ID;
      j["config"] = cfg.to_json();
      j["stats"] = Json{{"samples", res.stats.samples},
                        {"probes", res.stats.probes},
                        {"ellipsoid_iterations", res.stats.ellipsoid_iterations},
                        {"ellipsoid_feasible", res.stats.ellipsoid_feasible},
                        {"rounds", res.stats.rounds},
                        {"algorithm_queries", res.stats.algorithm_queries},
                        {"generators", res.stats.generators},
                        {"master_value", to_json(res.stats.master_value)},
                        {"dual_bound", to_json(res.stats.dual_bound)}};
      write_json_file(cfg.output, j);
    } else if (ver->parsed()) {
      cfg.command = "verify";
      auto mech = mechanism_from_json(read_json_file(cfg.input));
      auto rep = verify_mechanism(mech, runs, require_seed(cfg));
      Json r = report(cfg, "verify-report");
      r["verification"] = to_json(rep);
      try {
        auto opt = brute_bmed(mech.inst);
        Rational target = mech.goop.alpha / mech.goop.beta * opt.value;
        double slack = to_double(mech.eps) + 3 * rep.objective_stderr;
        bool minimize = mech.inst.objective == Objective::makespan;
        double mean = rep.objective_mean;
        bool passed = minimize ? mean <= to_double(target) + slack : mean >= to_double(target) - slack;
        r["comparison"] = Json{{"opt", to_json(opt.value)},
                               {"target", to_json(target)},
                               {"rule", minimize ? "E[O] <= (alpha/beta) OPT + eps + 3 sigma" : "E[O] >= (alpha/beta) OPT - eps - 3 sigma"},
                               {"passed", passed}};
      } catch (const CapacityError&) {
        r["comparison"] = nullptr;
      }
      write_json_file(cfg.output, r);
    } else if (brute->parsed()) {
      cfg.command = "brute";
      Json in = read_json_file(cfg.input);
      Json r = report(cfg, "brute-report");
      if (in.value("kind", "") == "scheduling") {
        auto s = scheduling_from_json(in);
        auto b = brute_goop(s, parse_objective(bobj));
        r["objective"] = bobj;
        r["result"] = Json{{"value", to_json(b.value)}, {"assignment", to_json(b.assignment)}};
      } else {
        auto inst = bmed_from_json(in);
        auto b = brute_bmed(inst);
        r["objective"] = to_string(inst.objective);
        r["result"] = Json{{"value", to_json(b.value)}, {"form", to_json(b.form)}};
      }
      write_json_file(cfg.output, r);
    } else if (bench->parsed()) {
      cfg.command = "bench";
      std::printf("%-6s %-14s %-14s %-8s %-10s\n", "index", "solver", "brute", "passed", "ms");
      for (std::size_t n = 0; n < count; ++n) {
        SchedulingGenParams g;
        g.k = gk;
        g.m = gm;
        auto s = random_scheduling_instance(g, derive_seed(*cfg.seed, n));
        auto t0 = std::chrono::steady_clock::now();
        Json r = solve_one(bgoop, s, derive_seed(*cfg.seed, n + count), true);
        double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        const Json& c = r["certificate"];
        std::string lhs = c.contains("lhs") ? c["lhs"].get<std::string>() : c["value"].get<std::string>();
        std::string passed = c.contains("passed") ? (c["passed"].get<bool>() ? "yes" : "no") : "n/a";
        std::printf("%-6zu %-14.6f %-14.6f %-8s %-10.1f\n", n, to_double(parse_rational(lhs)),
                    to_double(parse_rational(c["opt"].get<std::string>())), passed.c_str(), ms);
      }
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return kCapacity;
  } catch (const NonconvergenceError& e) {
    std::cerr << "nonconvergence: " << e.what() << "\n";
    if (!e.diagnostics_path().empty()) std::cerr << "diagnostics: " << e.diagnostics_path() << "\n";
    return kNonconvergence;
  } catch (const PrecisionError& e) {
    std::cerr << "nonconvergence: " << e.what() << "\n";
    return kNonconvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kOk;
}
