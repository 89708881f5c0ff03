#include "qheun/real.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "qheun/errors.hpp"

namespace qheun {

namespace {

mpfr_prec_t wider(const Real& a, const Real& b) { return std::max(a.precision(), b.precision()); }

}  // namespace

Real::Real(mpfr_prec_t bits) {
  mpfr_init2(v_, bits);
  mpfr_set_zero(v_, 1);
}

Real::Real(long value, mpfr_prec_t bits) {
  mpfr_init2(v_, bits);
  mpfr_set_si(v_, value, MPFR_RNDN);
}

Real::Real(double value, mpfr_prec_t bits) {
  mpfr_init2(v_, bits);
  mpfr_set_d(v_, value, MPFR_RNDN);
}

Real::Real(const Rational& value, mpfr_prec_t bits) {
  mpfr_init2(v_, bits);
  mpfr_set_q(v_, value.get_mpq_t(), MPFR_RNDN);
}

Real::Real(const std::string& text, mpfr_prec_t bits) {
  mpfr_init2(v_, bits);
  if (text.find('/') != std::string::npos) {
    mpfr_set_q(v_, parse_rational(text).get_mpq_t(), MPFR_RNDN);
  } else if (mpfr_set_str(v_, text.c_str(), 10, MPFR_RNDN) != 0) {
    mpfr_clear(v_);
    throw ParseError("invalid real '" + text + "'", 1, 1);
  }
}

Real::Real(const Real& other) {
  mpfr_init2(v_, other.precision());
  mpfr_set(v_, other.v_, MPFR_RNDN);
}

Real::Real(Real&& other) noexcept {
  mpfr_init2(v_, MPFR_PREC_MIN);
  mpfr_swap(v_, other.v_);
}

Real& Real::operator=(const Real& other) {
  if (this != &other) {
    mpfr_set_prec(v_, other.precision());
    mpfr_set(v_, other.v_, MPFR_RNDN);
  }
  return *this;
}

Real& Real::operator=(Real&& other) noexcept {
  mpfr_swap(v_, other.v_);
  return *this;
}

Real::~Real() { mpfr_clear(v_); }

Real Real::with_precision(mpfr_prec_t bits) const {
  Real r(bits);
  mpfr_set(r.v_, v_, MPFR_RNDN);
  return r;
}

double Real::log2_abs() const {
  long exp = 0;
  const double mant = mpfr_get_d_2exp(&exp, v_, MPFR_RNDN);
  return std::log2(std::fabs(mant)) + static_cast<double>(exp);
}

std::string Real::to_string(int significant_digits) const {
  if (mpfr_zero_p(v_)) return "0";
  char* buf = nullptr;
  mpfr_asprintf(&buf, "%.*Re", significant_digits - 1, v_);
  std::string out(buf);
  mpfr_free_str(buf);
  return out;
}

Real Real::operator-() const {
  Real r(precision());
  mpfr_neg(r.v_, v_, MPFR_RNDN);
  return r;
}

Real& Real::operator+=(const Real& rhs) { return *this = *this + rhs; }
Real& Real::operator-=(const Real& rhs) { return *this = *this - rhs; }
Real& Real::operator*=(const Real& rhs) { return *this = *this * rhs; }
Real& Real::operator/=(const Real& rhs) { return *this = *this / rhs; }

Real operator+(const Real& a, const Real& b) {
  Real r(wider(a, b));
  mpfr_add(r.v_, a.v_, b.v_, MPFR_RNDN);
  return r;
}

Real operator-(const Real& a, const Real& b) {
  Real r(wider(a, b));
  mpfr_sub(r.v_, a.v_, b.v_, MPFR_RNDN);
  return r;
}

Real operator*(const Real& a, const Real& b) {
  Real r(wider(a, b));
  mpfr_mul(r.v_, a.v_, b.v_, MPFR_RNDN);
  return r;
}

Real operator/(const Real& a, const Real& b) {
  Real r(wider(a, b));
  mpfr_div(r.v_, a.v_, b.v_, MPFR_RNDN);
  return r;
}

Real operator*(const Real& a, long b) {
  Real r(a.precision());
  mpfr_mul_si(r.v_, a.v_, b, MPFR_RNDN);
  return r;
}

Real operator/(const Real& a, long b) {
  Real r(a.precision());
  mpfr_div_si(r.v_, a.v_, b, MPFR_RNDN);
  return r;
}

Real operator+(const Real& a, long b) {
  Real r(a.precision());
  mpfr_add_si(r.v_, a.v_, b, MPFR_RNDN);
  return r;
}

Real operator-(const Real& a, long b) {
  Real r(a.precision());
  mpfr_sub_si(r.v_, a.v_, b, MPFR_RNDN);
  return r;
}

std::partial_ordering operator<=>(const Real& a, const Real& b) {
  if (mpfr_unordered_p(a.v_, b.v_)) return std::partial_ordering::unordered;
  const int c = mpfr_cmp(a.v_, b.v_);
  return c < 0 ? std::partial_ordering::less
               : (c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent);
}

std::partial_ordering operator<=>(const Real& a, long b) {
  if (mpfr_nan_p(a.v_)) return std::partial_ordering::unordered;
  const int c = mpfr_cmp_si(a.v_, b);
  return c < 0 ? std::partial_ordering::less
               : (c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent);
}

#define QHEUN_UNARY(name, fn)          \
  Real name(const Real& x) {           \
    Real r(x.precision());             \
    fn(r.get(), x.get(), MPFR_RNDN);   \
    return r;                          \
  }

QHEUN_UNARY(abs, mpfr_abs)
QHEUN_UNARY(sqrt, mpfr_sqrt)
QHEUN_UNARY(exp, mpfr_exp)
QHEUN_UNARY(log, mpfr_log)
QHEUN_UNARY(log2, mpfr_log2)
QHEUN_UNARY(exp2, mpfr_exp2)
QHEUN_UNARY(log10, mpfr_log10)

#undef QHEUN_UNARY

Real pow(const Real& base, const Rational& mu) {
  if (base.sign() <= 0) throw DomainError("pow: base must be positive");
  if (mu == 0) return Real(1L, base.precision());
  return exp2(log2(base) * Real(mu, base.precision()));
}

Real pow(const Real& base, long n) {
  Real r(base.precision());
  mpfr_pow_si(r.get(), base.get(), n, MPFR_RNDN);
  return r;
}

Real geometric_mean(const Real& a, const Real& b) {
  Real r = sqrt(a * b);
  return a.sign() < 0 ? -r : r;
}

}  // namespace qheun
