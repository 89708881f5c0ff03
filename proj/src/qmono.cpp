#include "qheun/qmono.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <sstream>

#include "qheun/errors.hpp"

namespace qheun {

bool key_less(const QMonomial& a, const QMonomial& b) {
  if (a.qexp != b.qexp) return a.qexp < b.qexp;
  if (a.t1pow != b.t1pow) return a.t1pow < b.t1pow;
  return a.t2pow < b.t2pow;
}

QMonomial operator*(const QMonomial& a, const QMonomial& b) {
  return QMonomial{a.coeff * b.coeff, a.t1pow + b.t1pow, a.t2pow + b.t2pow, a.qexp + b.qexp};
}

QMonomial operator/(const QMonomial& a, const QMonomial& b) {
  if (b.coeff == 0) throw DomainError("division by a zero monomial");
  return QMonomial{a.coeff / b.coeff, a.t1pow - b.t1pow, a.t2pow - b.t2pow, a.qexp - b.qexp};
}

std::string to_string(const QMonomial& m) {
  std::ostringstream out;
  out << to_string(m.coeff);
  if (m.t1pow != 0) out << "*t1^" << m.t1pow;
  if (m.t2pow != 0) out << "*t2^" << m.t2pow;
  if (m.qexp != 0) out << "*q^(" << to_string(m.qexp) << ")";
  return out.str();
}

namespace {

// Merge a key-sorted vector in place; reports keys whose group cancelled.
std::vector<QMonomial> merge_sorted(std::vector<QMonomial> terms, std::vector<Rational>* annihilated) {
  std::vector<QMonomial> out;
  out.reserve(terms.size());
  std::size_t i = 0;
  while (i < terms.size()) {
    QMonomial acc = std::move(terms[i]);
    std::size_t j = i + 1;
    while (j < terms.size() && terms[j].same_key(acc)) {
      acc.coeff += terms[j].coeff;
      ++j;
    }
    if (acc.coeff != 0) {
      out.push_back(std::move(acc));
    } else if (annihilated != nullptr && j - i > 1) {
      annihilated->push_back(acc.qexp);
    }
    i = j;
  }
  return out;
}

std::vector<QMonomial> sort_and_merge(std::vector<QMonomial> terms, std::vector<Rational>* annihilated) {
  std::sort(terms.begin(), terms.end(), key_less);
  return merge_sorted(std::move(terms), annihilated);
}

}  // namespace

std::vector<QMonomial> normalize(std::vector<QMonomial> terms) {
  return sort_and_merge(std::move(terms), nullptr);
}

QSum::QSum(const QMonomial& m) {
  if (m.coeff != 0) terms_.push_back(m);
}

QSum::QSum(std::vector<QMonomial> terms) : terms_(normalize(std::move(terms))) {}

QSum QSum::constant(const Rational& c) { return QSum(QMonomial{c, 0, 0, Rational(0)}); }

QSum QSum::monomial(const Rational& c, const Rational& qexp, int t1pow, int t2pow) {
  return QSum(QMonomial{c, t1pow, t2pow, qexp});
}

QSum QSum::one_minus_q(const Rational& e) {
  return QSum(std::vector<QMonomial>{QMonomial{Rational(1), 0, 0, Rational(0)},
                                     QMonomial{Rational(-1), 0, 0, e}});
}

const Rational& QSum::leading_exponent() const {
  if (terms_.empty()) throw DomainError("zero has no leading exponent");
  return terms_.front().qexp;
}

QSum QSum::operator-() const {
  QSum r = *this;
  for (auto& t : r.terms_) t.coeff = -t.coeff;
  return r;
}

QSum& QSum::operator+=(const QSum& rhs) { return *this = *this + rhs; }
QSum& QSum::operator-=(const QSum& rhs) { return *this = *this - rhs; }
QSum& QSum::operator*=(const QSum& rhs) { return *this = *this * rhs; }

QSum QSum::times(const QMonomial& m) const {
  QSum r;
  if (m.coeff == 0) return r;
  r.terms_.reserve(terms_.size());
  // Multiplying every term by one monomial preserves key order.
  for (const auto& t : terms_) r.terms_.push_back(t * m);
  return r;
}

QSum QSum::divided_by(const QMonomial& m) const {
  QSum r;
  r.terms_.reserve(terms_.size());
  for (const auto& t : terms_) r.terms_.push_back(t / m);
  return r;
}

QSum operator+(const QSum& a, const QSum& b) {
  std::vector<QMonomial> all;
  all.reserve(a.size() + b.size());
  std::merge(a.terms_.begin(), a.terms_.end(), b.terms_.begin(), b.terms_.end(),
             std::back_inserter(all), key_less);
  QSum r;
  r.terms_ = merge_sorted(std::move(all), nullptr);
  return r;
}

QSum operator-(const QSum& a, const QSum& b) { return a + (-b); }

QSum operator*(const QSum& a, const QSum& b) {
  if (a.is_zero() || b.is_zero()) return QSum();
  std::vector<QMonomial> all;
  all.reserve(a.size() * b.size());
  for (const auto& x : a.terms_)
    for (const auto& y : b.terms_) all.push_back(x * y);
  QSum r;
  r.terms_ = sort_and_merge(std::move(all), nullptr);
  return r;
}

std::string to_string(const QSum& s) {
  if (s.is_zero()) return "0";
  std::string out;
  for (std::size_t i = 0; i < s.terms().size(); ++i) {
    if (i > 0) out += " + ";
    out += to_string(s.terms()[i]);
  }
  return out;
}

std::string to_string(const CancellationEvent& e) {
  const char* kind = e.kind == CancellationKind::ExactZero ? "exact-zero" : "sign-conflict-at-leading-exponent";
  return e.site + ": " + kind + " at q^(" + to_string(e.qexp) + ")";
}

SumResult qsum_accumulate(std::span<const QSum> operands, std::string_view site) {
  std::vector<QMonomial> all;
  std::size_t n = 0;
  for (const auto& op : operands) n += op.size();
  all.reserve(n);
  for (const auto& op : operands) all.insert(all.end(), op.terms().begin(), op.terms().end());

  std::vector<Rational> annihilated;
  SumResult result;
  result.sum = QSum(sort_and_merge(std::move(all), &annihilated));
  for (auto& e : annihilated) {
    result.events.push_back(CancellationEvent{std::string(site), std::move(e), CancellationKind::ExactZero});
  }
  if (!result.sum.is_zero() && !common_sign(leading_part(result.sum))) {
    result.events.push_back(
        CancellationEvent{std::string(site), result.sum.leading_exponent(), CancellationKind::SignConflict});
  }
  return result;
}

SumResult qsum_add(const QSum& a, const QSum& b, std::string_view site) {
  const QSum ops[2] = {a, b};
  return qsum_accumulate(ops, site);
}

QSum qsum_mul(const QSum& a, const QSum& b) { return a * b; }

QSum leading_part(const QSum& a) {
  if (a.is_zero()) throw DomainError("zero has no leading part");
  const Rational& mu = a.leading_exponent();
  std::vector<QMonomial> slice;
  for (const auto& t : a.terms()) {
    if (t.qexp != mu) break;
    slice.push_back(t);
  }
  return QSum(std::move(slice));
}

std::optional<int> common_sign(const QSum& a) {
  if (a.is_zero()) return std::nullopt;
  const int s = a.terms().front().sign();
  for (const auto& t : a.terms()) {
    if (t.sign() != s) return std::nullopt;
  }
  return s;
}

bool equiv_sim(const QSum& a, const QSum& b) {
  if (a.is_zero() || b.is_zero()) throw DomainError("equiv_sim: zero operand");
  return leading_part(a) == leading_part(b);
}

namespace {

int definite_sign(const QSum& slice) {
  const auto s = common_sign(slice);
  if (!s) throw DomainError("sign-indefinite leading part: " + to_string(slice));
  return *s;
}

}  // namespace

bool equiv_approx(const QSum& a, const QSum& b) {
  if (a.is_zero() || b.is_zero()) throw DomainError("equiv_approx: zero operand");
  const int sa = definite_sign(leading_part(a));
  const int sb = definite_sign(leading_part(b));
  return a.leading_exponent() == b.leading_exponent() && sa == sb;
}

Ultradiscrete ultradiscretize(const QSum& a) {
  if (a.is_zero()) throw DomainError("zero has no leading part");
  return Ultradiscrete{a.leading_exponent(), definite_sign(leading_part(a))};
}

Real eval_numeric(const QSum& a, const Real& q, const Rational& t1, const Rational& t2, mpfr_prec_t bits) {
  if (bits < 64) throw DomainError("eval_numeric: at least 64 bits required");
  if (!(q > 0L) || !(q < 1L)) throw DomainError("eval_numeric: q must lie in (0,1)");
  if (a.is_zero()) return Real(bits);

  const mpfr_prec_t work =
      bits + 32 + static_cast<mpfr_prec_t>(std::bit_width(a.size()));
  const Real log2q = log2(q.with_precision(work));

  std::map<int, Rational> t1_powers;
  std::map<int, Rational> t2_powers;
  auto tpow = [](std::map<int, Rational>& cache, const Rational& base, int e) -> const Rational& {
    auto it = cache.find(e);
    if (it == cache.end()) it = cache.emplace(e, pow(base, e)).first;
    return it->second;
  };

  Real total(work);
  std::size_t i = 0;
  const auto& terms = a.terms();
  while (i < terms.size()) {
    // Terms are sorted by qexp; one exp2 per distinct exponent.
    const Rational& mu = terms[i].qexp;
    Rational group(0);
    std::size_t j = i;
    for (; j < terms.size() && terms[j].qexp == mu; ++j) {
      group += terms[j].coeff * tpow(t1_powers, t1, terms[j].t1pow) * tpow(t2_powers, t2, terms[j].t2pow);
    }
    if (group != 0) {
      Real qmu = mu == 0 ? Real(1L, work) : exp2(log2q * Real(mu, work));
      total += qmu * Real(group, work);
    }
    i = j;
  }
  return total.with_precision(bits);
}

}  // namespace qheun
