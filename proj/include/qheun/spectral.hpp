#pragma once

// q-Heun parameters, the three-term recursion for the coefficients c_n(E)
// of the x^lambda1 series solution, and the spectral polynomial c_{N+1}(E).

#include <array>
#include <string>
#include <vector>

#include "qheun/qmono.hpp"
#include "qheun/rational.hpp"
#include "qheun/real.hpp"

namespace qheun {

/// The nine raw parameters, in file order.
struct RawParams {
  Rational h1, h2, l1, l2, alpha1, alpha2, beta, t1, t2;
};

inline constexpr std::array<const char*, 9> kParamNames = {"h1",     "h2",     "l1", "l2", "alpha1",
                                                           "alpha2", "beta",   "t1", "t2"};

/// Mutable access by name; throws DomainError for an unknown name.
Rational& param_by_name(RawParams& raw, std::string_view name);
const Rational& param_by_name(const RawParams& raw, std::string_view name);

/// Validated parameters with the derived exponent lambda1 and degree N.
struct HeunParams {
  RawParams raw;
  Rational lambda1;
  int N = 0;

  const Rational& h1() const { return raw.h1; }
  const Rational& h2() const { return raw.h2; }
  const Rational& l1() const { return raw.l1; }
  const Rational& l2() const { return raw.l2; }
  const Rational& alpha1() const { return raw.alpha1; }
  const Rational& alpha2() const { return raw.alpha2; }
  const Rational& beta() const { return raw.beta; }
  const Rational& t1() const { return raw.t1; }
  const Rational& t2() const { return raw.t2; }
};

/// lambda1 = (h1 + h2 - l1 - l2 - alpha1 - alpha2 - beta + 2) / 2.
Rational lambda1_of(const RawParams& raw);

/// Computes lambda1 and N = -lambda1 - alpha1 and checks every standing
/// assumption. All violations are reported together in a ParameterError.
HeunParams derive(const RawParams& raw);

/// Polynomial in E with QSum coefficients over a structured denominator:
///   (sum_j coeffs[j] E^j) / (denom_monomial * prod_e (1 - q^e)),  e > 0.
struct EPoly {
  std::vector<QSum> coeffs;
  QMonomial denom_monomial{Rational(1), 0, 0, Rational(0)};
  std::vector<Rational> denom_factors;
  std::vector<CancellationEvent> diagnostics;

  static EPoly constant(const QSum& c);
  /// a*E + b.
  static EPoly linear(const QSum& a, const QSum& b);

  /// Highest index with a nonzero coefficient; -1 for the zero polynomial.
  int degree() const;
  const QSum& coeff(int j) const;
};

/// Product of numerators and denominators.
EPoly operator*(const EPoly& a, const EPoly& b);
/// Requires identical denominators.
EPoly operator+(const EPoly& a, const EPoly& b);
EPoly operator-(const EPoly& a, const EPoly& b);

/// Coefficient-wise leading slices divided by the denominator monomial; the
/// (1 - q^e) factors tend to 1 and are dropped.
EPoly leading_form(const EPoly& p);

/// Coefficient-wise equivalences on leading forms. Zero coefficients must
/// be zero on both sides.
bool equiv_sim(const EPoly& a, const EPoly& b);
bool equiv_approx(const EPoly& a, const EPoly& b);

/// Numerator coefficients evaluated at (q, t1, t2).
std::vector<Real> numeric_numerator(const EPoly& p, const Real& q, const Rational& t1, const Rational& t2,
                                    mpfr_prec_t bits);
/// The full value at E, denominator included.
Real eval_numeric(const EPoly& p, const Real& E, const Real& q, const Rational& t1, const Rational& t2,
                  mpfr_prec_t bits);

std::string to_string(const EPoly& p);

/// A c_n = (B E + C) c_{n-1} - D c_{n-2}, each row exact. A is also kept as
/// monomial times (1 - q^e) factors.
struct RecursionRows {
  QSum A, B, C, D;
  QMonomial a_monomial;
  std::array<Rational, 2> a_factors;
};

/// Rows for 1 <= n <= N+1; throws DomainError otherwise.
RecursionRows recursion_coeff_rows(const HeunParams& p, int n);

/// Exact c_0 .. c_upTo (upTo <= N+1). Each EPoly carries the cancellation
/// events of the additions that produced it.
std::vector<EPoly> coefficients_exact(const HeunParams& p, int upTo);

/// c_{N+1}(E).
EPoly spectral_polynomial(const HeunParams& p);

struct SeriesSolution {
  Rational lambda1;
  std::vector<Real> coeffs;  ///< c_0 .. c_N at E0
  Real spectral_value;       ///< c_{N+1}(E0)
  Real E0;
  Real q;
  Rational t1, t2;
  mpfr_prec_t bits = 0;
};

/// Runs the recursion numerically at fixed q and E = E0.
SeriesSolution coefficients_numeric(const HeunParams& p, const Real& E0, const Real& q, mpfr_prec_t bits);

/// x in {t1 q^(1/2), t1, t1 q^(-1/2)}.
std::vector<Real> default_sample_points(const HeunParams& p, const Real& q, mpfr_prec_t bits);

/// Largest |LHS| of the q-Heun equation for f(x) = x^lambda1 sum c_n x^n over
/// the sample points (x > 0), each relative to the largest of its three terms
/// with every monomial taken in absolute value.
Real residual_check(const HeunParams& p, const SeriesSolution& sol, const std::vector<Real>& xs,
                    mpfr_prec_t bits);

}  // namespace qheun
