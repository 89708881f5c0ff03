#pragma once

// Real-root isolation (Sturm sequences + bisection) for polynomials whose
// coefficients span an extreme dynamic range, log-q slope estimation, and
// matching of numerical roots against ultradiscrete predictions.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qheun/spectral.hpp"
#include "qheun/ultra.hpp"

namespace qheun {

/// Numeric image of a polynomial in E, lowest degree first.
struct NumPoly {
  std::vector<Real> coeffs;
  Real q{64};
  Rational t1{1};
  Rational t2{1};
  mpfr_prec_t bits = Real::kDefaultBits;

  int degree() const;
  Real eval(const Real& x) const;
};

/// Numerator of `p` at (q, t1, t2). The denominator is positive for
/// q in (0,1) and does not move the roots.
NumPoly to_numpoly(const EPoly& p, const Rational& q, const Rational& t1, const Rational& t2, mpfr_prec_t bits);

/// Polynomial with the given coefficients at their common precision.
NumPoly to_numpoly(std::vector<Real> coeffs);

/// Signed remainder sequence p, p', -rem(p, p'), ...
std::vector<NumPoly> sturm_sequence(const NumPoly& p);

/// Number of distinct real roots in (a, b].
int sturm_count(const std::vector<NumPoly>& seq, const Real& a, const Real& b);

/// Distinct real roots on the whole line.
int count_real_roots(const NumPoly& p);

/// 1 + max |a_i / a_n|.
Real cauchy_bound(const NumPoly& p);

/// Bisection of a simple root in (lo, hi] to relative width 2^(-bits/2),
/// halving the bracket at every step. Requires 0 < lo < hi or lo < hi < 0.
/// When `widths` is given, the interval width after each step is appended.
Real refine_root(const NumPoly& p, Real lo, Real hi, std::vector<Real>* widths = nullptr);

/// All real roots counted with multiplicity, ascending. Zero roots are split
/// off exactly; the rest must be simple. `hints` are approximate root
/// locations used to seed the initial brackets. Throws PrecisionError when
/// the number of isolated roots differs from the degree.
std::vector<Real> find_real_roots(const NumPoly& p, std::span<const Real> hints = {});

struct RootSet {
  std::vector<Real> roots;
  mpfr_prec_t bits_used = 0;
};

/// Roots of the numerator of `p` at q, doubling precision from `bits` up to
/// `max_bits` on PrecisionError.
RootSet spectral_roots(const EPoly& p, const Rational& q, const Rational& t1, const Rational& t2,
                       mpfr_prec_t bits, std::span<const Real> hints = {}, mpfr_prec_t max_bits = 4096);

struct ExponentEstimate {
  Real root_q1;
  Real root_q2;
  double slope = 0;
};

/// Pairs two ascending root lists index by index and computes
/// (ln|E(q2)| - ln|E(q1)|) / (ln q2 - ln q1). Throws MatchError when the
/// sign patterns differ.
std::vector<ExponentEstimate> pair_roots(const std::vector<Real>& at_q1, const std::vector<Real>& at_q2,
                                         const Rational& q1, const Rational& q2);

std::vector<ExponentEstimate> estimate_exponents(const EPoly& p, const Rational& t1, const Rational& t2,
                                                 const Rational& q1, const Rational& q2, mpfr_prec_t bits);
std::vector<ExponentEstimate> estimate_exponents(const HeunParams& p, const Rational& q1, const Rational& q2,
                                                 mpfr_prec_t bits);

struct RootEstimate {
  Real value;
  Rational q;
  double est_exponent = 0;
  std::optional<std::size_t> matched;  ///< index into the prediction list
  double rel_err = 0;
};

/// Root values at q2 with their slopes.
std::vector<RootEstimate> to_root_estimates(const std::vector<ExponentEstimate>& est, const Rational& q2);

struct MatchEntry {
  std::size_t root_index = 0;
  std::optional<std::size_t> prediction_index;
  double pred_exponent = 0;
  int pred_sign = 0;
  double est_exponent = 0;
  double abs_exponent_err = 0;
  /// E / (sign * q^d * descriptor prefactor).
  std::optional<double> prefactor_ratio;
  /// Expected value of prefactor_ratio (explicit prefactor / descriptor).
  double expected_ratio = 1;
  bool prefactor_checked = false;
  bool ok = false;
  std::string note;
};

struct MatchReport {
  std::vector<MatchEntry> entries;
  bool pass = false;
};

/// Greedy pairing by sign, then nearest exponent, then nearest prefactor.
/// Prefactors are checked only for sharp predictions. Fills
/// RootEstimate::matched and rel_err. Throws MatchError unless the
/// prediction multiplicities add up to the number of estimates.
MatchReport match_predictions(std::vector<RootEstimate>& estimates, const std::vector<PredictedRoot>& predictions,
                              const Rational& t1, const Rational& t2, double tol_exponent, double tol_prefactor);

}  // namespace qheun
