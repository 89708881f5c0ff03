#pragma once

#include <mpfr.h>

#include <compare>
#include <string>

#include "qheun/rational.hpp"

namespace qheun {

/// Owning MPFR value with an explicit precision in bits.
///
/// Binary operations produce a result at the larger of the two operand
/// precisions, rounded to nearest. Mixed operations with integers and
/// rationals use the precision of the Real operand.
class Real {
 public:
  static constexpr mpfr_prec_t kDefaultBits = 512;

  explicit Real(mpfr_prec_t bits = kDefaultBits);
  Real(long value, mpfr_prec_t bits);
  Real(double value, mpfr_prec_t bits);
  Real(const Rational& value, mpfr_prec_t bits);
  /// Decimal or "p/s" text, rounded to the given precision.
  Real(const std::string& text, mpfr_prec_t bits);

  Real(const Real& other);
  Real(Real&& other) noexcept;
  Real& operator=(const Real& other);
  Real& operator=(Real&& other) noexcept;
  ~Real();

  mpfr_prec_t precision() const { return mpfr_get_prec(v_); }
  /// Copy rounded to a new precision.
  Real with_precision(mpfr_prec_t bits) const;

  mpfr_srcptr get() const { return v_; }
  mpfr_ptr get() { return v_; }

  int sign() const { return mpfr_sgn(v_); }
  bool is_zero() const { return mpfr_zero_p(v_) != 0; }
  bool is_finite() const { return mpfr_number_p(v_) != 0; }
  double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
  /// log2|x| as a double; finite for any nonzero finite value, even outside
  /// the double exponent range.
  double log2_abs() const;

  /// Scientific notation with the given number of significant digits.
  std::string to_string(int significant_digits = 40) const;

  Real operator-() const;
  Real& operator+=(const Real& rhs);
  Real& operator-=(const Real& rhs);
  Real& operator*=(const Real& rhs);
  Real& operator/=(const Real& rhs);

  friend Real operator+(const Real& a, const Real& b);
  friend Real operator-(const Real& a, const Real& b);
  friend Real operator*(const Real& a, const Real& b);
  friend Real operator/(const Real& a, const Real& b);
  friend Real operator*(const Real& a, long b);
  friend Real operator*(long a, const Real& b) { return b * a; }
  friend Real operator/(const Real& a, long b);
  friend Real operator+(const Real& a, long b);
  friend Real operator-(const Real& a, long b);

  friend bool operator==(const Real& a, const Real& b) { return mpfr_equal_p(a.v_, b.v_) != 0; }
  friend std::partial_ordering operator<=>(const Real& a, const Real& b);
  friend std::partial_ordering operator<=>(const Real& a, long b);
  friend bool operator==(const Real& a, long b) { return mpfr_cmp_si(a.v_, b) == 0; }
  // No silent double -> long conversion in mixed arithmetic.
  friend Real operator+(const Real&, double) = delete;
  friend Real operator-(const Real&, double) = delete;
  friend Real operator*(const Real&, double) = delete;
  friend Real operator/(const Real&, double) = delete;
  friend std::partial_ordering operator<=>(const Real&, double) = delete;
  friend bool operator==(const Real&, double) = delete;

 private:
  mpfr_t v_;
};

Real abs(const Real& x);
Real sqrt(const Real& x);
Real exp(const Real& x);
Real log(const Real& x);
Real log2(const Real& x);
Real exp2(const Real& x);
Real log10(const Real& x);

/// base^mu for base > 0 and rational mu, as exp2(mu * log2(base)).
Real pow(const Real& base, const Rational& mu);
Real pow(const Real& base, long n);

/// Geometric mean sqrt(a*b) for a, b of the same strict sign.
Real geometric_mean(const Real& a, const Real& b);

}  // namespace qheun
