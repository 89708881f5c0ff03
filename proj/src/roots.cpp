#include "qheun/roots.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "qheun/errors.hpp"

namespace qheun {

int NumPoly::degree() const {
  for (int j = static_cast<int>(coeffs.size()) - 1; j >= 0; --j) {
    if (!coeffs[j].is_zero()) return j;
  }
  return -1;
}

Real NumPoly::eval(const Real& x) const {
  Real acc(0L, bits);
  for (int j = degree(); j >= 0; --j) {
    acc *= x;
    acc += coeffs[j];
  }
  return acc;
}

NumPoly to_numpoly(const EPoly& p, const Rational& q, const Rational& t1, const Rational& t2, mpfr_prec_t bits) {
  NumPoly out;
  out.q = Real(q, bits);
  out.coeffs = numeric_numerator(p, out.q, t1, t2, bits);
  out.t1 = t1;
  out.t2 = t2;
  out.bits = bits;
  return out;
}

NumPoly to_numpoly(std::vector<Real> coeffs) {
  NumPoly out;
  out.bits = coeffs.empty() ? Real::kDefaultBits : coeffs.front().precision();
  for (const Real& c : coeffs) out.bits = std::max(out.bits, c.precision());
  out.coeffs = std::move(coeffs);
  return out;
}

namespace {

using Coeffs = std::vector<Real>;

void trim(Coeffs& c) {
  while (!c.empty() && c.back().is_zero()) c.pop_back();
}

// Values this close to the rounding noise of the operands are set to zero,
// so that an exact cancellation in the remainder sequence stays exact.
Real cancellation_floor(const Real& a, const Real& b, mpfr_prec_t bits) {
  Real scale = abs(a) + abs(b);
  mpfr_mul_2si(scale.get(), scale.get(), -static_cast<long>(bits - bits / 8), MPFR_RNDN);
  return scale;
}

Coeffs derivative(const Coeffs& c, mpfr_prec_t bits) {
  Coeffs d;
  for (std::size_t j = 1; j < c.size(); ++j) d.push_back((c[j] * static_cast<long>(j)).with_precision(bits));
  trim(d);
  return d;
}

Coeffs remainder(Coeffs a, const Coeffs& b, mpfr_prec_t bits) {
  const std::size_t db = b.size() - 1;
  while (a.size() > db && !a.empty()) {
    const std::size_t top = a.size() - 1;
    const Real f = a[top] / b[db];
    for (std::size_t k = 0; k < db; ++k) {
      Real& target = a[top - db + k];
      const Real sub = f * b[k];
      Real next = target - sub;
      if (abs(next) <= cancellation_floor(target, sub, bits)) next = Real(0L, bits);
      target = std::move(next);
    }
    a.pop_back();
    trim(a);
  }
  return a;
}

void normalize_leading(Coeffs& c) {
  const Real lead = abs(c.back());
  for (Real& x : c) x /= lead;
}

int sign_at(const NumPoly& p, const Real& x) { return p.eval(x).sign(); }

int sign_changes(const std::vector<int>& signs) {
  int changes = 0;
  int last = 0;
  for (int s : signs) {
    if (s == 0) continue;
    if (last != 0 && s != last) ++changes;
    last = s;
  }
  return changes;
}

int changes_at(const std::vector<NumPoly>& seq, const Real& x) {
  std::vector<int> s;
  s.reserve(seq.size());
  for (const NumPoly& p : seq) s.push_back(sign_at(p, x));
  return sign_changes(s);
}

int changes_at_infinity(const std::vector<NumPoly>& seq, bool negative) {
  std::vector<int> s;
  for (const NumPoly& p : seq) {
    const int d = p.degree();
    int sg = p.coeffs[d].sign();
    if (negative && d % 2 == 1) sg = -sg;
    s.push_back(sg);
  }
  return sign_changes(s);
}

Real lower_root_bound(const NumPoly& p) {
  // 1 / (1 + max |a_i / a_0|) for the reversed polynomial; requires a_0 != 0.
  Real m(0L, p.bits);
  const Real a0 = abs(p.coeffs[0]);
  for (int j = 1; j <= p.degree(); ++j) {
    Real r = abs(p.coeffs[j]) / a0;
    if (r > m) m = std::move(r);
  }
  return Real(1L, p.bits) / (m + 1L);
}

Real split_point(const Real& a, const Real& b) {
  if (b / a > 4L) return geometric_mean(a, b);
  return (a + b) / 2L;
}

bool narrow(const Real& a, const Real& b, mpfr_prec_t bits) {
  Real width = (b - a) / abs(a);
  return width.log2_abs() <= -static_cast<double>(bits) / 2;
}

// Positive roots of p (p(0) != 0), ascending.
std::vector<Real> positive_roots(const NumPoly& p, std::span<const Real> hints) {
  const std::vector<NumPoly> seq = sturm_sequence(p);
  Real lo = lower_root_bound(p) / 2L;
  Real hi = cauchy_bound(p) * 2L;

  std::vector<Real> cuts{lo};
  std::vector<Real> sorted;
  for (const Real& h : hints) {
    if (h > lo && h < hi) sorted.push_back(h.with_precision(p.bits));
  }
  std::sort(sorted.begin(), sorted.end(), [](const Real& a, const Real& b) { return a < b; });
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    if (sorted[i] < sorted[i + 1]) cuts.push_back(geometric_mean(sorted[i], sorted[i + 1]));
  }
  cuts.push_back(hi);

  struct Bracket {
    Real a, b;
    int count;
  };
  std::vector<Bracket> work;
  std::vector<int> at_cut;
  for (const Real& c : cuts) at_cut.push_back(changes_at(seq, c));
  for (std::size_t i = cuts.size() - 1; i >= 1; --i) {
    const int count = at_cut[i - 1] - at_cut[i];
    if (count > 0) work.push_back({cuts[i - 1], cuts[i], count});
  }

  std::vector<Real> roots;
  while (!work.empty()) {
    Bracket br = std::move(work.back());
    work.pop_back();
    if (br.count == 1) {
      roots.push_back(refine_root(p, br.a, br.b));
      continue;
    }
    if (narrow(br.a, br.b, p.bits)) {
      throw PrecisionError("root cluster near " + br.a.to_string(12) + " not separated at " +
                           std::to_string(p.bits) + " bits");
    }
    const Real mid = split_point(br.a, br.b);
    const int left = changes_at(seq, br.a) - changes_at(seq, mid);
    const int right = br.count - left;
    if (right > 0) work.push_back({mid, br.b, right});
    if (left > 0) work.push_back({br.a, mid, left});
  }
  std::sort(roots.begin(), roots.end(), [](const Real& a, const Real& b) { return a < b; });
  return roots;
}

NumPoly reflected(const NumPoly& p) {
  NumPoly r = p;
  for (std::size_t j = 1; j < r.coeffs.size(); j += 2) r.coeffs[j] = -r.coeffs[j];
  return r;
}

}  // namespace

std::vector<NumPoly> sturm_sequence(const NumPoly& p) {
  Coeffs a(p.coeffs.begin(), p.coeffs.end());
  trim(a);
  if (a.empty()) throw DomainError("sturm_sequence: zero polynomial");
  auto wrap = [&](Coeffs c) {
    NumPoly out = p;
    out.coeffs = std::move(c);
    return out;
  };
  std::vector<NumPoly> seq;
  normalize_leading(a);
  Coeffs b = derivative(a, p.bits);
  seq.push_back(wrap(a));
  while (!b.empty()) {
    normalize_leading(b);
    seq.push_back(wrap(b));
    Coeffs r = remainder(a, b, p.bits);
    for (Real& x : r) x = -x;
    a = std::move(b);
    b = std::move(r);
  }
  return seq;
}

int sturm_count(const std::vector<NumPoly>& seq, const Real& a, const Real& b) {
  return changes_at(seq, a) - changes_at(seq, b);
}

int count_real_roots(const NumPoly& p) {
  const std::vector<NumPoly> seq = sturm_sequence(p);
  return changes_at_infinity(seq, true) - changes_at_infinity(seq, false);
}

Real cauchy_bound(const NumPoly& p) {
  const int d = p.degree();
  if (d < 0) throw DomainError("cauchy_bound: zero polynomial");
  Real m(0L, p.bits);
  const Real lead = abs(p.coeffs[d]);
  for (int j = 0; j < d; ++j) {
    Real r = abs(p.coeffs[j]) / lead;
    if (r > m) m = std::move(r);
  }
  return m + 1L;
}

Real refine_root(const NumPoly& p, Real lo, Real hi, std::vector<Real>* widths) {
  if (sign_at(p, hi) == 0) return hi;
  int s_lo = sign_at(p, lo);
  if (s_lo == 0) {
    // Root at lo belongs to the neighbouring bracket; p takes the sign of
    // p'(lo) just to its right.
    NumPoly dp = p;
    dp.coeffs = derivative(Coeffs(p.coeffs.begin(), p.coeffs.end()), p.bits);
    s_lo = sign_at(dp, lo);
  }
  const bool negative = hi.sign() < 0;
  while (!narrow(negative ? hi : lo, negative ? lo : hi, p.bits)) {
    const Real mid = (lo + hi) / 2L;
    const int s = sign_at(p, mid);
    if (s == 0) return mid;
    if (s == s_lo) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (widths != nullptr) widths->push_back(hi - lo);
  }
  return (lo + hi) / 2L;
}

std::vector<Real> find_real_roots(const NumPoly& p, std::span<const Real> hints) {
  const int d = p.degree();
  if (d < 0) throw DomainError("find_real_roots: zero polynomial");
  int zeros = 0;
  while (zeros < d && p.coeffs[zeros].is_zero()) ++zeros;
  NumPoly core = p;
  core.coeffs.assign(p.coeffs.begin() + zeros, p.coeffs.begin() + d + 1);

  std::vector<Real> pos_hints, neg_hints;
  for (const Real& h : hints) {
    if (h.sign() > 0) pos_hints.push_back(h);
    if (h.sign() < 0) neg_hints.push_back(-h);
  }

  std::vector<Real> roots;
  if (core.degree() > 0) {
    const std::vector<NumPoly> seq = sturm_sequence(core);
    const int distinct = changes_at_infinity(seq, true) - changes_at_infinity(seq, false);
    if (distinct != core.degree()) {
      throw PrecisionError("isolated " + std::to_string(distinct) + " distinct real roots of a degree " +
                           std::to_string(core.degree()) + " polynomial at " + std::to_string(p.bits) + " bits");
    }
    for (Real& r : positive_roots(reflected(core), neg_hints)) roots.push_back(-r);
    for (Real& r : positive_roots(core, pos_hints)) roots.push_back(std::move(r));
  }
  for (int i = 0; i < zeros; ++i) roots.emplace_back(0L, p.bits);
  if (static_cast<int>(roots.size()) != d) {
    throw PrecisionError("found " + std::to_string(roots.size()) + " of " + std::to_string(d) + " roots at " +
                         std::to_string(p.bits) + " bits");
  }
  std::sort(roots.begin(), roots.end(), [](const Real& a, const Real& b) { return a < b; });
  return roots;
}

RootSet spectral_roots(const EPoly& p, const Rational& q, const Rational& t1, const Rational& t2, mpfr_prec_t bits,
                       std::span<const Real> hints, mpfr_prec_t max_bits) {
  for (mpfr_prec_t b = bits;; b = std::min(2 * b, max_bits)) {
    try {
      return {find_real_roots(to_numpoly(p, q, t1, t2, b), hints), b};
    } catch (const PrecisionError&) {
      if (b >= max_bits) throw;
    }
  }
}

std::vector<ExponentEstimate> pair_roots(const std::vector<Real>& at_q1, const std::vector<Real>& at_q2,
                                         const Rational& q1, const Rational& q2) {
  if (at_q1.size() != at_q2.size()) {
    throw MatchError("matching ambiguous: " + std::to_string(at_q1.size()) + " roots at q1 but " +
                     std::to_string(at_q2.size()) + " at q2");
  }
  if (q1 == q2) throw DomainError("pair_roots: q1 and q2 must differ");
  std::vector<ExponentEstimate> out;
  const mpfr_prec_t bits = at_q1.empty() ? Real::kDefaultBits : at_q1.front().precision();
  const Real dlogq = log(Real(q2, bits)) - log(Real(q1, bits));
  for (std::size_t i = 0; i < at_q1.size(); ++i) {
    if (at_q1[i].sign() != at_q2[i].sign()) {
      throw MatchError("matching ambiguous: sign patterns differ between q1 and q2 at root " + std::to_string(i));
    }
    if (at_q1[i].is_zero()) throw MatchError("matching ambiguous: zero root has no exponent");
    const Real slope = (log(abs(at_q2[i])) - log(abs(at_q1[i]))) / dlogq;
    out.push_back({at_q1[i], at_q2[i], slope.to_double()});
  }
  return out;
}

std::vector<ExponentEstimate> estimate_exponents(const EPoly& p, const Rational& t1, const Rational& t2,
                                                 const Rational& q1, const Rational& q2, mpfr_prec_t bits) {
  const RootSet r1 = spectral_roots(p, q1, t1, t2, bits);
  const RootSet r2 = spectral_roots(p, q2, t1, t2, bits);
  return pair_roots(r1.roots, r2.roots, q1, q2);
}

std::vector<ExponentEstimate> estimate_exponents(const HeunParams& p, const Rational& q1, const Rational& q2,
                                                 mpfr_prec_t bits) {
  return estimate_exponents(spectral_polynomial(p), p.t1(), p.t2(), q1, q2, bits);
}

std::vector<RootEstimate> to_root_estimates(const std::vector<ExponentEstimate>& est, const Rational& q2) {
  std::vector<RootEstimate> out;
  out.reserve(est.size());
  for (const ExponentEstimate& e : est) out.push_back({e.root_q2, q2, e.slope, std::nullopt, 0.0});
  return out;
}

MatchReport match_predictions(std::vector<RootEstimate>& estimates, const std::vector<PredictedRoot>& predictions,
                              const Rational& t1, const Rational& t2, double tol_exponent, double tol_prefactor) {
  std::vector<std::size_t> units;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    for (int k = 0; k < predictions[i].multiplicity; ++k) units.push_back(i);
  }
  if (units.size() != estimates.size()) {
    throw MatchError("matching ambiguous: " + std::to_string(estimates.size()) + " roots but " +
                     std::to_string(units.size()) + " predictions");
  }

  // ln(|E| / (q^d * c)) for each pair, with c the prediction's prefactor.
  auto log_ratio = [&](const RootEstimate& e, const PredictedRoot& r, double c) {
    const mpfr_prec_t bits = e.value.precision();
    const Real qd = pow(Real(e.q, bits), r.d);
    return log(abs(e.value) / qd).to_double() - std::log(c);
  };

  struct Candidate {
    double dexp;
    double dlog;
    std::size_t est;
    std::size_t unit;
  };
  std::vector<Candidate> cands;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    for (std::size_t u = 0; u < units.size(); ++u) {
      const PredictedRoot& r = predictions[units[u]];
      if (estimates[i].value.sign() != r.sign) continue;
      cands.push_back({std::abs(estimates[i].est_exponent - to_double(r.d)),
                       std::abs(log_ratio(estimates[i], r, r.prefactor_value(t1, t2))), i, u});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.dexp, a.dlog, a.est, a.unit) < std::tie(b.dexp, b.dlog, b.est, b.unit);
  });
  std::vector<std::optional<std::size_t>> est_unit(estimates.size());
  std::vector<bool> unit_used(units.size(), false);
  for (const Candidate& c : cands) {
    if (est_unit[c.est] || unit_used[c.unit]) continue;
    est_unit[c.est] = c.unit;
    unit_used[c.unit] = true;
  }

  MatchReport report;
  report.pass = true;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    RootEstimate& e = estimates[i];
    MatchEntry m;
    m.root_index = i;
    m.est_exponent = e.est_exponent;
    if (!est_unit[i]) {
      e.matched.reset();
      m.note = "no prediction with sign " + std::string(e.value.sign() < 0 ? "-" : "+");
      m.abs_exponent_err = std::numeric_limits<double>::infinity();
      report.pass = false;
      report.entries.push_back(std::move(m));
      continue;
    }
    const std::size_t pi = units[*est_unit[i]];
    const PredictedRoot& r = predictions[pi];
    e.matched = pi;
    m.prediction_index = pi;
    m.pred_exponent = to_double(r.d);
    m.pred_sign = r.sign;
    m.abs_exponent_err = std::abs(e.est_exponent - m.pred_exponent);
    const double descriptor = r.descriptor_value(t1, t2);
    m.prefactor_ratio = std::exp(log_ratio(e, r, descriptor));
    m.expected_ratio = r.explicit_prefactor ? *r.explicit_prefactor / descriptor : 1.0;
    e.rel_err = std::abs(*m.prefactor_ratio / m.expected_ratio - 1.0);
    m.prefactor_checked = r.sharp;
    const bool exp_ok = m.abs_exponent_err <= tol_exponent;
    const bool pref_ok = !r.sharp || e.rel_err <= tol_prefactor;
    m.ok = exp_ok && pref_ok;
    if (!exp_ok) m.note = "exponent off by " + std::to_string(m.abs_exponent_err);
    if (!pref_ok) m.note += (m.note.empty() ? "" : "; ") + std::string("prefactor off by ") + std::to_string(e.rel_err);
    report.pass = report.pass && m.ok;
    report.entries.push_back(std::move(m));
  }
  return report;
}

}  // namespace qheun
