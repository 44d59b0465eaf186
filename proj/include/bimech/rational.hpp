#pragma once

#include <gmpxx.h>

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bimech/errors.hpp"

namespace bimech {

using Rational = mpq_class;
using RationalVector = std::vector<Rational>;

/// Parses "num/den", "num", or a plain decimal such as "0.25" into a canonical rational.
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char ch) { return std::isspace(ch); }), s.end());
  if (s.empty()) throw StructuralError("empty rational literal");
  Rational q;
  auto dot = s.find('.');
  if (dot != std::string::npos && s.find('/') == std::string::npos) {
    bool negative = s[0] == '-';
    std::string digits = s.substr(negative ? 1 : 0);
    dot = digits.find('.');
    std::string whole = digits.substr(0, dot);
    std::string frac = digits.substr(dot + 1);
    if (whole.empty()) whole = "0";
    std::string joined = whole + frac;
    mpz_class num, den;
    if (num.set_str(joined, 10) != 0) throw StructuralError("malformed rational literal: " + s);
    mpz_ui_pow_ui(den.get_mpz_t(), 10, frac.size());
    q = Rational(num, den);
    if (negative) q = -q;
  } else {
    if (q.set_str(s, 10) != 0) throw StructuralError("malformed rational literal: " + s);
    if (q.get_den() == 0) throw StructuralError("zero denominator in rational literal: " + s);
  }
  q.canonicalize();
  return q;
}

inline std::string to_string(const Rational& q) {
  Rational c(q);
  c.canonicalize();
  if (c.get_den() == 1) return c.get_num().get_str();
  return c.get_str();
}

inline Rational make_rational(long num, long den = 1) {
  Rational q(num, den);
  q.canonicalize();
  return q;
}

/// 2^exponent for any signed exponent.
inline Rational pow2(long exponent) {
  mpz_class p;
  mpz_ui_pow_ui(p.get_mpz_t(), 2, static_cast<unsigned long>(exponent < 0 ? -exponent : exponent));
  return exponent < 0 ? Rational(mpz_class(1), p) : Rational(p);
}

inline double to_double(const Rational& q) { return q.get_d(); }

/// Rounds a multiprecision float to the nearest multiple of 2^-bits.
inline Rational round_dyadic(const mpf_class& value, unsigned bits) {
  mpf_class scaled(value, value.get_prec());
  mpf_mul_2exp(scaled.get_mpf_t(), value.get_mpf_t(), bits);
  mpf_class half(0.5, value.get_prec());
  mpf_class shifted(scaled + half, value.get_prec());
  mpf_class floored(0, value.get_prec());
  mpf_floor(floored.get_mpf_t(), shifted.get_mpf_t());
  mpz_class num(floored);
  Rational q(num, mpz_class(1));
  mpq_div_2exp(q.get_mpq_t(), q.get_mpq_t(), bits);
  q.canonicalize();
  return q;
}

/// Exact conversion of a binary float.
inline Rational from_mpf(const mpf_class& value) {
  Rational q;
  mpq_set_f(q.get_mpq_t(), value.get_mpf_t());
  return q;
}

/// Number of bits needed to write the numerator and denominator.
inline std::size_t bit_size(const Rational& q) {
  return mpz_sizeinbase(q.get_num_mpz_t(), 2) + mpz_sizeinbase(q.get_den_mpz_t(), 2);
}

inline std::size_t bit_size(std::span<const Rational> v) {
  std::size_t out = 0;
  for (const auto& q : v) out = std::max(out, bit_size(q));
  return out;
}

inline Rational dot(std::span<const Rational> a, std::span<const Rational> b) {
  if (a.size() != b.size()) throw StructuralError("dot product of vectors with different lengths");
  Rational s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Rational extended with explicit +inf / -inf sentinels.
class ExtRational {
 public:
  enum class Kind { neg_inf, finite, pos_inf };

  ExtRational() = default;
  ExtRational(Rational v) : kind_(Kind::finite), value_(std::move(v)) {}
  ExtRational(int v) : kind_(Kind::finite), value_(v) {}

  static ExtRational pos_inf() { return ExtRational(Kind::pos_inf); }
  static ExtRational neg_inf() { return ExtRational(Kind::neg_inf); }

  Kind kind() const noexcept { return kind_; }
  bool is_finite() const noexcept { return kind_ == Kind::finite; }
  bool is_pos_inf() const noexcept { return kind_ == Kind::pos_inf; }
  bool is_neg_inf() const noexcept { return kind_ == Kind::neg_inf; }

  const Rational& value() const {
    if (!is_finite()) throw DomainError("value() of an infinite extended rational");
    return value_;
  }

  friend bool operator==(const ExtRational& a, const ExtRational& b) {
    if (a.kind_ != b.kind_) return false;
    return !a.is_finite() || a.value_ == b.value_;
  }

  friend std::strong_ordering operator<=>(const ExtRational& a, const ExtRational& b) {
    if (a.kind_ != b.kind_) return static_cast<int>(a.kind_) <=> static_cast<int>(b.kind_);
    if (!a.is_finite()) return std::strong_ordering::equal;
    int c = cmp(a.value_, b.value_);
    return c < 0 ? std::strong_ordering::less : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

  std::string str() const {
    switch (kind_) {
      case Kind::pos_inf: return "inf";
      case Kind::neg_inf: return "-inf";
      default: return to_string(value_);
    }
  }

  friend std::ostream& operator<<(std::ostream& os, const ExtRational& e) { return os << e.str(); }

 private:
  explicit ExtRational(Kind k) : kind_(k) {}

  Kind kind_ = Kind::finite;
  Rational value_ = 0;
};

/// Dense row-major matrix.
template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, const T& fill = T()) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<T>> init) {
    rows_ = init.size();
    cols_ = rows_ ? init.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& row : init) {
      if (row.size() != cols_) throw StructuralError("ragged matrix literal");
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<T> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const T> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using RationalMatrix = Matrix<Rational>;

/// Builds a rational matrix from "num/den" strings; handy in tests and fixtures.
inline RationalMatrix rational_matrix(std::initializer_list<std::initializer_list<const char*>> init) {
  std::size_t rows = init.size();
  std::size_t cols = rows ? init.begin()->size() : 0;
  RationalMatrix out(rows, cols);
  std::size_t i = 0;
  for (const auto& row : init) {
    if (row.size() != cols) throw StructuralError("ragged matrix literal");
    std::size_t j = 0;
    for (const char* s : row) out(i, j++) = parse_rational(s);
    ++i;
  }
  return out;
}

}  // namespace bimech
