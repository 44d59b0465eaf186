#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "bimech/bmed.hpp"
#include "bimech/core.hpp"
#include "bimech/goop_fairness.hpp"
#include "bimech/goop_makespan.hpp"

namespace bimech {

using Json = nlohmann::json;

inline Json to_json(const Rational& q) { return to_string(q); }

inline Rational rational_from_json(const Json& j) {
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_integer()) return Rational(j.get<long>());
  throw StructuralError("expected a rational string such as \"3/4\"");
}

inline Json to_json(const RationalVector& v) {
  Json a = Json::array();
  for (const auto& q : v) a.push_back(to_json(q));
  return a;
}

inline RationalVector vector_from_json(const Json& j) {
  if (!j.is_array()) throw StructuralError("expected an array of rationals");
  RationalVector v;
  for (const auto& e : j) v.push_back(rational_from_json(e));
  return v;
}

inline Json to_json(const RationalMatrix& m) {
  Json a = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(to_json(m(i, j)));
    a.push_back(std::move(row));
  }
  return a;
}

inline RationalMatrix matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw StructuralError("expected a nonempty matrix");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].size();
  RationalMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw StructuralError("matrix rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = rational_from_json(j[i][c]);
  }
  return m;
}

/// Doubles are written as the exact rational they represent.
inline Json exact_double(double v) {
  if (!std::isfinite(v)) throw NumericalError("non-finite estimate");
  return to_string(Rational(v));
}

inline const Json& field(const Json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) throw StructuralError(std::string("missing field \"") + name + "\"");
  return j.at(name);
}

inline void expect_kind(const Json& j, const std::string& kind) {
  if (!j.is_object() || !j.contains("kind") || j.at("kind") != kind)
    throw StructuralError("expected a \"" + kind + "\" document");
}

inline Json to_json(const SchedulingInstance& s) {
  return Json{{"kind", "scheduling"}, {"k", s.k}, {"m", s.m}, {"p", to_json(s.p)}, {"c", to_json(s.c)}};
}

inline SchedulingInstance scheduling_from_json(const Json& j) {
  expect_kind(j, "scheduling");
  auto p = matrix_from_json(field(j, "p"));
  auto c = matrix_from_json(field(j, "c"));
  bool normalized = true;
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (std::size_t k = 0; k < p.cols(); ++k)
      if (p(i, k) > 1) normalized = false;
  return SchedulingInstance(std::move(p), std::move(c), normalized);
}

inline Json to_json(const BmedInstance& inst) {
  Json bidders = Json::array();
  for (std::size_t i = 0; i < inst.k; ++i) {
    Json types = Json::array();
    for (const auto& t : inst.types[i]) types.push_back(to_json(t));
    bidders.push_back(Json{{"types", std::move(types)}, {"probs", to_json(inst.probs[i])}});
  }
  return Json{{"kind", "bmed"}, {"objective", to_string(inst.objective)}, {"m", inst.m}, {"bidders", std::move(bidders)}};
}

inline BmedInstance bmed_from_json(const Json& j) {
  expect_kind(j, "bmed");
  std::vector<std::vector<RationalVector>> types;
  std::vector<RationalVector> probs;
  for (const auto& b : field(j, "bidders")) {
    std::vector<RationalVector> ts;
    for (const auto& t : field(b, "types")) ts.push_back(vector_from_json(t));
    types.push_back(std::move(ts));
    probs.push_back(vector_from_json(field(b, "probs")));
  }
  BmedInstance inst(std::move(types), std::move(probs), parse_objective(field(j, "objective").get<std::string>()));
  if (j.contains("m") && j.at("m").get<std::size_t>() != inst.m) throw StructuralError("job count does not match the type vectors");
  return inst;
}

inline Json to_json(const Assignment& a) {
  Json owners = Json::array();
  for (const auto& o : a.owners()) owners.push_back(o ? Json(*o) : Json(nullptr));
  return owners;
}

inline Assignment assignment_from_json(const Json& j, std::size_t k) {
  std::vector<std::optional<std::size_t>> owners;
  for (const auto& e : j) owners.push_back(e.is_null() ? std::nullopt : std::optional<std::size_t>(e.get<std::size_t>()));
  return Assignment::from_owners(k, owners);
}

inline Json to_json(const ImplicitForm& f) {
  Json pi = Json::array();
  Json p = Json::array();
  for (std::size_t i = 0; i < f.pi.size(); ++i) {
    pi.push_back(to_json(f.pi[i]));
    p.push_back(to_json(f.p[i]));
  }
  return Json{{"O", to_json(f.O)}, {"pi", std::move(pi)}, {"p", std::move(p)}};
}

inline ImplicitForm implicit_form_from_json(const Json& j) {
  ImplicitForm f;
  f.O = rational_from_json(field(j, "O"));
  for (const auto& m : field(j, "pi")) f.pi.push_back(matrix_from_json(m));
  for (const auto& v : field(j, "p")) f.p.push_back(vector_from_json(v));
  if (f.pi.size() != f.p.size()) throw StructuralError("implicit form lists π and p for different bidder counts");
  return f;
}

inline Json to_json(const ProfileDistribution& d) {
  Json profiles = Json::array();
  for (const auto& p : d.profiles) profiles.push_back(p);
  return Json{{"profiles", std::move(profiles)}, {"weights", to_json(d.weights)}};
}

inline ProfileDistribution distribution_from_json(const Json& j, const BmedInstance& inst) {
  const auto& profiles = field(j, "profiles");
  auto weights = vector_from_json(field(j, "weights"));
  if (profiles.size() != weights.size()) throw StructuralError("one weight per profile is required");
  std::map<Profile, Rational> mass;
  for (std::size_t a = 0; a < weights.size(); ++a) {
    Profile p = profiles[a].get<Profile>();
    check_profile(inst, p);
    mass[p] += weights[a];
  }
  return make_distribution(inst, std::move(mass));
}

inline Json to_json(const GoopHandle& h) {
  return Json{{"solver", to_string(h.kind)}, {"objective", to_string(h.objective)}, {"alpha", to_json(h.alpha)},
              {"beta", to_json(h.beta)}, {"seed", h.seed}};
}

inline GoopHandle goop_from_json(const Json& j) {
  GoopHandle h;
  h.kind = parse_goop_kind(field(j, "solver").get<std::string>());
  h.objective = parse_objective(field(j, "objective").get<std::string>());
  h.alpha = rational_from_json(field(j, "alpha"));
  h.beta = rational_from_json(field(j, "beta"));
  h.seed = field(j, "seed").get<std::uint64_t>();
  return h;
}

inline Json to_json(const Mechanism& m) {
  Json dirs = Json::array();
  for (const auto& d : m.directions) dirs.push_back(to_json(d));
  return Json{{"kind", "mechanism"},       {"instance", to_json(m.inst)}, {"goop", to_json(m.goop)},
              {"dprime", to_json(m.dprime)}, {"directions", std::move(dirs)}, {"weights", to_json(m.weights)},
              {"form", to_json(m.form)},    {"seed", m.seed},              {"eps", to_json(m.eps)}};
}

inline Mechanism mechanism_from_json(const Json& j) {
  expect_kind(j, "mechanism");
  Mechanism m;
  m.inst = bmed_from_json(field(j, "instance"));
  m.goop = goop_from_json(field(j, "goop"));
  m.dprime = distribution_from_json(field(j, "dprime"), m.inst);
  ImplicitLayout L(m.inst);
  for (const auto& d : field(j, "directions")) {
    m.directions.push_back(vector_from_json(d));
    if (m.directions.back().size() != L.pi_dim) throw StructuralError("direction has the wrong length");
  }
  m.weights = vector_from_json(field(j, "weights"));
  if (m.weights.size() != m.directions.size()) throw StructuralError("one weight per direction is required");
  Rational total = 0;
  for (const auto& w : m.weights) {
    if (sgn(w) < 0) throw DomainError("mechanism weights must be nonnegative");
    total += w;
  }
  if (total != 1) throw DomainError("mechanism weights must sum to 1");
  m.form = implicit_form_from_json(field(j, "form"));
  if (m.form.pi.size() != m.inst.k) throw StructuralError("implicit form does not match the instance");
  for (std::size_t i = 0; i < m.inst.k; ++i)
    if (m.form.pi[i].rows() != m.inst.num_types(i) || m.form.p[i].size() != m.inst.num_types(i))
      throw StructuralError("implicit form does not match the instance");
  m.seed = field(j, "seed").get<std::uint64_t>();
  m.eps = rational_from_json(field(j, "eps"));
  return m;
}

inline Json to_json(const VerificationReport& r) {
  Json regrets = Json::array();
  for (const auto& g : r.regrets)
    regrets.push_back(Json{{"bidder", g.bidder}, {"type", g.type}, {"report", g.report}, {"mean", exact_double(g.mean)},
                           {"stderr", exact_double(g.stderr_)}, {"samples", g.samples}});
  Json out{{"runs", r.runs},
           {"objective_mean", exact_double(r.objective_mean)},
           {"objective_stderr", exact_double(r.objective_stderr)},
           {"max_regret", exact_double(r.max_regret)},
           {"max_regret_stderr", exact_double(r.max_regret_stderr)},
           {"ir_violations", r.ir_violations},
           {"regrets", std::move(regrets)}};
  if (r.exact)
    out["exact"] = Json{{"objective", to_json(r.exact->objective)},
                        {"max_regret", to_json(r.exact->max_regret)},
                        {"objective_dprime", to_json(r.exact->objective_dprime)},
                        {"max_regret_dprime", to_json(r.exact->max_regret_dprime)}};
  return out;
}

inline Json to_json(const MakespanResult& r) {
  return Json{{"assignment", to_json(r.assignment)},
              {"makespan", r.makespan.is_finite() ? to_json(r.makespan.value()) : Json("inf")},
              {"cost", to_json(r.cost)},
              {"T", to_json(r.fractional.T)},
              {"t", to_json(r.fractional.t)},
              {"lp_value", to_json(r.fractional.value)},
              {"fractional", to_json(r.fractional.x.matrix())}};
}

inline Json to_json(const FairnessResult& r) {
  return Json{{"assignment", to_json(r.assignment)}, {"branch", to_string(r.branch)}, {"T", to_json(r.T)},
              {"clp_objective", to_json(r.clp_objective)}, {"fairness", to_json(r.fairness)}, {"cost", to_json(r.cost)}};
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StructuralError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw StructuralError("malformed JSON in " + path + ": " + e.what());
  }
}

/// Writes pretty JSON with a trailing newline; "-" or empty means stdout.
inline void write_json_file(const std::string& path, const Json& j) {
  std::string text = j.dump(2) + "\n";
  if (path.empty() || path == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw StructuralError("cannot write " + path);
  out << text;
}

}  // namespace bimech
