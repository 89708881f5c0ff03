#pragma once

// Ultradiscrete (q -> +0) analysis of the spectral polynomial: regime
// classification, leading-term recursions, the product approximation of
// c_{N+1}(E), and root-asymptotics predictions E ~ sign * c * q^d.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qheun/spectral.hpp"

namespace qheun {

/// R31: 1+h2-l2-beta > 0. R32: 2N+1+h2-l2-beta < 0. R33: the band between
/// them with h2-l1+1 > 0.
enum class Regime { R31, R32, R33, Excluded, Unclassified };
enum class Subcase { None, I, II1, II2, III1, III2 };

std::string to_string(Regime r);
std::string to_string(Subcase s);

struct CaseTag {
  Regime regime = Regime::Unclassified;
  Subcase subcase = Subcase::None;
  int K = 0;  ///< R33 only
  int m = 0;  ///< III1 / III2 only
  /// Regime whose inequalities or exclusion set produced this tag; equal to
  /// `regime` except for Excluded and Unclassified.
  Regime family = Regime::Unclassified;
  /// Offending condition for Excluded / Unclassified.
  std::string reason;

  bool classified() const {
    return regime == Regime::R31 || regime == Regime::R32 || regime == Regime::R33;
  }
};

/// "regime=R31 subcase=i", "regime=R33 K=1", "regime=Excluded family=R31".
std::string to_string(const CaseTag& tag);

CaseTag classify(const HeunParams& p);

/// A governing quantity that lies close to one of its boundary values.
struct BoundaryProximity {
  std::string quantity;
  Rational value;
  Rational boundary;
  Rational distance;
};

/// Governing quantities within `within` of a boundary value.
std::vector<BoundaryProximity> boundary_proximity(const HeunParams& p, const Rational& within);

/// Leading forms of c_n = (p_n E + q_n) c_{n-1} - r_n c_{n-2}.
struct RecurrenceCoeffs {
  QSum p_n, q_n, r_n;
};

RecurrenceCoeffs recurrence_coeffs(const HeunParams& p, int n, const CaseTag& tag);

/// Leading forms of c_0 .. c_{N+1} from the regime's simplified recursion,
/// keeping only leading slices. Throws CancellationError when a step
/// produces a sign-indefinite or vanishing leading slice.
std::vector<EPoly> leading_recursion(const HeunParams& p, const CaseTag& tag);

/// Explicit product approximation of c_{N+1}(E) for the tag's regime.
EPoly tilde_cN1(const HeunParams& p, const CaseTag& tag);

/// (alpha1 + alpha2 + h1 + h2) / 2, the exponent of balanced root pairs.
Rational balanced_exponent(const HeunParams& p);

enum class PrefactorKind { T1, T2, SqrtT1T2 };
std::string to_string(PrefactorKind k);

struct PredictedRoot {
  int sign = -1;
  Rational d;
  PrefactorKind prefactor = PrefactorKind::T1;
  /// Resolved prefactor magnitude from the s-polynomial, replacing the
  /// descriptor value.
  std::optional<double> explicit_prefactor;
  int multiplicity = 1;
  /// True where the prefactor is asymptotically exact rather than
  /// indicative (only the exponent is exact otherwise).
  bool sharp = false;

  double descriptor_value(const Rational& t1, const Rational& t2) const;
  double prefactor_value(const Rational& t1, const Rational& t2) const;

  friend bool operator==(const PredictedRoot&, const PredictedRoot&) = default;
};

std::string to_string(const PredictedRoot& r);

/// Both roots of the n-th quadratic factor of the product approximation
/// (R31: p_n for n >= 1; R32: p_n for n >= 2). Throws ExcludedError on a
/// boundary equality.
std::pair<PredictedRoot, PredictedRoot> pn_root_pair(const HeunParams& p, int n, const CaseTag& tag);

/// Full multiset of N+1 root predictions, merged into multiplicities.
std::vector<PredictedRoot> predict_roots(const HeunParams& p, const CaseTag& tag);

/// Coefficients (lowest power first) of the prefactor polynomial obtained by
/// substituting E = s q^delta into c_{N+1} and keeping the minimal
/// q-exponent. Trailing powers of s that vanish identically are removed.
std::vector<Rational> s_polynomial(const HeunParams& p, const EPoly& spectral, const Rational& delta);

/// Signed prefactors, ascending, of every predicted root at the balanced
/// exponent; empty unless one of those predictions is multiple.
std::vector<Real> multiplicity_prefactors(const HeunParams& p, const CaseTag& tag);

/// Replaces the predictions at the balanced exponent by one simple, sharp
/// prediction per entry of `prefactors`.
std::vector<PredictedRoot> refine_predictions(const HeunParams& p, std::vector<PredictedRoot> predictions,
                                              const std::vector<Real>& prefactors);

struct Collision {
  int k = 0;
  int k2 = 0;
  int l = 0;
  friend bool operator==(const Collision&, const Collision&) = default;
};

/// q-exponent of the strongest term with k r-factors in the E^l coefficient
/// of c_M (family R31 or R32).
Rational collision_exponent(const HeunParams& p, Regime family, int M, int k, int l);

/// All (k < k2, l) with equal strongest exponents, 0 <= 2k+l, 2k2+l <= M.
/// Empty for R33.
std::vector<Collision> collision_check(const HeunParams& p, int M, const CaseTag& tag);

}  // namespace qheun
