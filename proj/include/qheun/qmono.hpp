#pragma once

// Exact arithmetic over finite sums of q-monomials r * t1^a * t2^b * q^mu,
// with t1, t2 kept as formal positive symbols, and the q -> +0 comparison
// machinery built on top of it.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qheun/rational.hpp"
#include "qheun/real.hpp"

namespace qheun {

struct QMonomial {
  Rational coeff{1};
  int t1pow = 0;
  int t2pow = 0;
  Rational qexp{0};

  /// Ordering key only; the coefficient is ignored.
  bool same_key(const QMonomial& other) const {
    return qexp == other.qexp && t1pow == other.t1pow && t2pow == other.t2pow;
  }
  int sign() const { return sgn(coeff); }

  friend bool operator==(const QMonomial& a, const QMonomial& b) {
    return a.same_key(b) && a.coeff == b.coeff;
  }
};

/// Key order used by QSum normalization: (qexp, t1pow, t2pow).
bool key_less(const QMonomial& a, const QMonomial& b);

QMonomial operator*(const QMonomial& a, const QMonomial& b);
/// Requires a nonzero coefficient in the divisor.
QMonomial operator/(const QMonomial& a, const QMonomial& b);

std::string to_string(const QMonomial& m);

/// Sorts by key, merges equal keys and drops zero coefficients.
std::vector<QMonomial> normalize(std::vector<QMonomial> terms);

class QSum {
 public:
  QSum() = default;
  explicit QSum(const QMonomial& m);
  /// Normalizes the given terms.
  explicit QSum(std::vector<QMonomial> terms);

  static QSum constant(const Rational& c);
  static QSum monomial(const Rational& c, const Rational& qexp, int t1pow = 0, int t2pow = 0);
  /// 1 - q^e.
  static QSum one_minus_q(const Rational& e);

  const std::vector<QMonomial>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  /// Minimum q-exponent; throws DomainError on zero.
  const Rational& leading_exponent() const;

  QSum operator-() const;
  QSum& operator+=(const QSum& rhs);
  QSum& operator-=(const QSum& rhs);
  QSum& operator*=(const QSum& rhs);

  QSum times(const QMonomial& m) const;
  QSum divided_by(const QMonomial& m) const;

  friend QSum operator+(const QSum& a, const QSum& b);
  friend QSum operator-(const QSum& a, const QSum& b);
  friend QSum operator*(const QSum& a, const QSum& b);
  friend bool operator==(const QSum& a, const QSum& b) = default;

 private:
  std::vector<QMonomial> terms_;
};

std::string to_string(const QSum& s);

enum class CancellationKind { ExactZero, SignConflict };

struct CancellationEvent {
  std::string site;
  Rational qexp;
  CancellationKind kind;
};

std::string to_string(const CancellationEvent& e);

struct SumResult {
  QSum sum;
  std::vector<CancellationEvent> events;
};

/// Exact sum with diagnostics: one ExactZero event per key whose merged
/// coefficient vanished, and one SignConflict event when the leading slice
/// of the result mixes signs.
SumResult qsum_add(const QSum& a, const QSum& b, std::string_view site = "add");

/// Same diagnostics for a sum of many operands, taken as one addition.
SumResult qsum_accumulate(std::span<const QSum> operands, std::string_view site);

QSum qsum_mul(const QSum& a, const QSum& b);

/// All terms at the minimal q-exponent; throws DomainError on zero.
QSum leading_part(const QSum& a);

/// Common sign (+1/-1) of all coefficients, or nullopt when mixed or zero.
std::optional<int> common_sign(const QSum& a);

/// lim a/b = 1 as q -> +0 for every admissible t1, t2 > 0.
bool equiv_sim(const QSum& a, const QSum& b);

/// lim a/b = C > 0 as q -> +0. Both leading slices must be sign-definite.
bool equiv_approx(const QSum& a, const QSum& b);

struct Ultradiscrete {
  Rational mu;
  int sign;
};

/// Leading exponent and the sign of the leading slice.
Ultradiscrete ultradiscretize(const QSum& a);

/// Numeric value at q in (0,1) and the given t1, t2, rounded to `bits`.
/// q^mu is exp2(mu * log2 q); the sum runs with guard bits.
Real eval_numeric(const QSum& a, const Real& q, const Rational& t1, const Rational& t2, mpfr_prec_t bits);

}  // namespace qheun
