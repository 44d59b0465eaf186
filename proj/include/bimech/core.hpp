#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "bimech/errors.hpp"
#include "bimech/rational.hpp"

namespace bimech {

/// Processing times and costs of one scheduling instance with k machines and m jobs.
struct SchedulingInstance {
  std::size_t k = 0;
  std::size_t m = 0;
  RationalMatrix p;
  RationalMatrix c;
  bool normalized = false;
  /// Factor by which the original processing times were divided.
  Rational scale = 1;

  SchedulingInstance() = default;

  SchedulingInstance(RationalMatrix p_, RationalMatrix c_, bool normalized_ = false, Rational scale_ = 1)
      : k(p_.rows()), m(p_.cols()), p(std::move(p_)), c(std::move(c_)), normalized(normalized_), scale(std::move(scale_)) {
    validate();
  }

  void validate() const {
    if (k == 0 || m == 0) throw StructuralError("instance needs at least one machine and one job");
    if (p.rows() != k || p.cols() != m) throw StructuralError("processing-time matrix has the wrong shape");
    if (c.rows() != k || c.cols() != m) throw StructuralError("cost matrix has the wrong shape");
    if (sgn(scale) <= 0) throw DomainError("instance scale must be positive");
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        if (sgn(p(i, j)) < 0) throw DomainError("negative processing time");
        if (normalized && p(i, j) > 1) throw DomainError("normalized instance has a processing time above 1");
      }
    }
  }

  /// Divides processing times by `factor`; costs are left alone.
  SchedulingInstance normalize(const Rational& factor) const {
    if (sgn(factor) <= 0) throw DomainError("normalization factor must be positive");
    RationalMatrix q = p;
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < m; ++j) q(i, j) /= factor;
    return SchedulingInstance(std::move(q), c, true, scale * factor);
  }

  /// Normalizes by the largest processing time (or 1 when every entry is zero).
  SchedulingInstance normalize() const {
    Rational mx = 0;
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < m; ++j) mx = std::max(mx, p(i, j));
    return normalize(sgn(mx) > 0 ? mx : Rational(1));
  }

  /// Same instance with cost matrix replaced.
  SchedulingInstance with_costs(RationalMatrix costs) const {
    SchedulingInstance out = *this;
    out.c = std::move(costs);
    out.validate();
    return out;
  }
};

/// 0/1 indicator matrix. Columns may sum to 0 (discarded job) or more than 1 (invalid).
class Assignment {
 public:
  Assignment() = default;
  Assignment(std::size_t k, std::size_t m) : x_(k, m, Rational(0)) {}
  explicit Assignment(RationalMatrix x) : x_(std::move(x)) {
    for (std::size_t i = 0; i < x_.rows(); ++i)
      for (std::size_t j = 0; j < x_.cols(); ++j)
        if (x_(i, j) != 0 && x_(i, j) != 1) throw DomainError("assignment entries must be 0 or 1");
  }

  /// owner[j] is the machine of job j, or nullopt when the job is discarded.
  static Assignment from_owners(std::size_t k, const std::vector<std::optional<std::size_t>>& owner) {
    Assignment a(k, owner.size());
    for (std::size_t j = 0; j < owner.size(); ++j) {
      if (!owner[j]) continue;
      if (*owner[j] >= k) throw StructuralError("owner index out of range");
      a.x_(*owner[j], j) = 1;
    }
    return a;
  }

  std::vector<std::optional<std::size_t>> owners() const {
    std::vector<std::optional<std::size_t>> out(x_.cols());
    for (std::size_t j = 0; j < x_.cols(); ++j) {
      for (std::size_t i = 0; i < x_.rows(); ++i) {
        if (x_(i, j) == 0) continue;
        if (out[j]) throw DomainError("job assigned to more than one machine");
        out[j] = i;
      }
    }
    return out;
  }

  void assign(std::size_t i, std::size_t j) {
    for (std::size_t r = 0; r < x_.rows(); ++r) x_(r, j) = 0;
    x_(i, j) = 1;
  }
  void discard(std::size_t j) {
    for (std::size_t r = 0; r < x_.rows(); ++r) x_(r, j) = 0;
  }

  const RationalMatrix& matrix() const noexcept { return x_; }
  std::size_t rows() const noexcept { return x_.rows(); }
  std::size_t cols() const noexcept { return x_.cols(); }
  bool operator()(std::size_t i, std::size_t j) const { return x_(i, j) != 0; }

  friend bool operator==(const Assignment& a, const Assignment& b) { return a.x_ == b.x_; }

 private:
  RationalMatrix x_;
};

/// Matrix with entries in [0,1].
class FractionalAssignment {
 public:
  FractionalAssignment() = default;
  FractionalAssignment(std::size_t k, std::size_t m) : x_(k, m, Rational(0)) {}
  explicit FractionalAssignment(RationalMatrix x) : x_(std::move(x)) {
    for (std::size_t i = 0; i < x_.rows(); ++i)
      for (std::size_t j = 0; j < x_.cols(); ++j)
        if (sgn(x_(i, j)) < 0 || x_(i, j) > 1) throw DomainError("fractional assignment entries must lie in [0,1]");
  }
  FractionalAssignment(const Assignment& a) : x_(a.matrix()) {}

  const RationalMatrix& matrix() const noexcept { return x_; }
  std::size_t rows() const noexcept { return x_.rows(); }
  std::size_t cols() const noexcept { return x_.cols(); }
  const Rational& operator()(std::size_t i, std::size_t j) const { return x_(i, j); }

  bool is_integral() const {
    for (std::size_t i = 0; i < x_.rows(); ++i)
      for (std::size_t j = 0; j < x_.cols(); ++j)
        if (x_(i, j) != 0 && x_(i, j) != 1) return false;
    return true;
  }

 private:
  RationalMatrix x_;
};

namespace detail {

inline void check_shape(const SchedulingInstance& inst, const RationalMatrix& x) {
  if (x.rows() != inst.k || x.cols() != inst.m) throw StructuralError("assignment shape does not match the instance");
}

inline Rational column_sum(const RationalMatrix& x, std::size_t j) {
  Rational s = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) s += x(i, j);
  return s;
}

}  // namespace detail

/// Load Σ_j x_ij p_ij of every machine.
inline RationalVector loads(const SchedulingInstance& inst, const RationalMatrix& x) {
  detail::check_shape(inst, x);
  RationalVector out(inst.k, Rational(0));
  for (std::size_t i = 0; i < inst.k; ++i)
    for (std::size_t j = 0; j < inst.m; ++j)
      if (sgn(x(i, j)) != 0) out[i] += x(i, j) * inst.p(i, j);
  return out;
}

inline ExtRational makespan(const SchedulingInstance& inst, const RationalMatrix& x) {
  detail::check_shape(inst, x);
  for (std::size_t j = 0; j < inst.m; ++j)
    if (detail::column_sum(x, j) != 1) return ExtRational::pos_inf();
  auto l = loads(inst, x);
  return *std::max_element(l.begin(), l.end());
}

inline ExtRational fairness(const SchedulingInstance& inst, const RationalMatrix& x) {
  detail::check_shape(inst, x);
  for (std::size_t j = 0; j < inst.m; ++j)
    if (detail::column_sum(x, j) > 1) return ExtRational::neg_inf();
  auto l = loads(inst, x);
  return *std::min_element(l.begin(), l.end());
}

inline Rational cost(const SchedulingInstance& inst, const RationalMatrix& x) {
  detail::check_shape(inst, x);
  Rational s = 0;
  for (std::size_t i = 0; i < inst.k; ++i)
    for (std::size_t j = 0; j < inst.m; ++j)
      if (sgn(x(i, j)) != 0) s += x(i, j) * inst.c(i, j);
  return s;
}

/// max(M(x), largest p_ij with x_ij > 0).
inline ExtRational modified_makespan(const SchedulingInstance& inst, const RationalMatrix& x) {
  ExtRational out = makespan(inst, x);
  if (!out.is_finite()) return out;
  Rational best = out.value();
  for (std::size_t i = 0; i < inst.k; ++i)
    for (std::size_t j = 0; j < inst.m; ++j)
      if (sgn(x(i, j)) > 0) best = std::max(best, inst.p(i, j));
  return best;
}

inline ExtRational makespan(const SchedulingInstance& inst, const Assignment& a) { return makespan(inst, a.matrix()); }
inline ExtRational makespan(const SchedulingInstance& inst, const FractionalAssignment& a) { return makespan(inst, a.matrix()); }
inline ExtRational fairness(const SchedulingInstance& inst, const Assignment& a) { return fairness(inst, a.matrix()); }
inline ExtRational fairness(const SchedulingInstance& inst, const FractionalAssignment& a) { return fairness(inst, a.matrix()); }
inline Rational cost(const SchedulingInstance& inst, const Assignment& a) { return cost(inst, a.matrix()); }
inline Rational cost(const SchedulingInstance& inst, const FractionalAssignment& a) { return cost(inst, a.matrix()); }
inline ExtRational modified_makespan(const SchedulingInstance& inst, const Assignment& a) {
  return modified_makespan(inst, a.matrix());
}
inline ExtRational modified_makespan(const SchedulingInstance& inst, const FractionalAssignment& a) {
  return modified_makespan(inst, a.matrix());
}

enum class Objective { makespan, fairness };

inline std::string to_string(Objective o) { return o == Objective::makespan ? "makespan" : "fairness"; }

inline Objective parse_objective(const std::string& s) {
  if (s == "makespan") return Objective::makespan;
  if (s == "fairness") return Objective::fairness;
  throw StructuralError("unknown objective tag: " + s);
}

}  // namespace bimech
