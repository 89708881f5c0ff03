#include "qheun/spectral.hpp"

#include <algorithm>
#include <sstream>

#include "qheun/errors.hpp"

namespace qheun {

namespace {

const Rational kHalf(1, 2);

}  // namespace

Rational& param_by_name(RawParams& raw, std::string_view name) {
  if (name == "h1") return raw.h1;
  if (name == "h2") return raw.h2;
  if (name == "l1") return raw.l1;
  if (name == "l2") return raw.l2;
  if (name == "alpha1") return raw.alpha1;
  if (name == "alpha2") return raw.alpha2;
  if (name == "beta") return raw.beta;
  if (name == "t1") return raw.t1;
  if (name == "t2") return raw.t2;
  throw DomainError("unknown parameter '" + std::string(name) + "'");
}

const Rational& param_by_name(const RawParams& raw, std::string_view name) {
  return param_by_name(const_cast<RawParams&>(raw), name);
}

Rational lambda1_of(const RawParams& r) {
  return Rational((r.h1 + r.h2 - r.l1 - r.l2 - r.alpha1 - r.alpha2 - r.beta + 2) / 2);
}

HeunParams derive(const RawParams& raw) {
  std::vector<std::string> violations;
  HeunParams p;
  p.raw = raw;
  p.lambda1 = lambda1_of(raw);

  const Rational n_value = -p.lambda1 - raw.alpha1;
  const bool n_ok = is_integer(n_value) && n_value >= 0 && n_value.get_num().fits_sint_p();
  if (!n_ok) {
    violations.push_back("N = -lambda1 - alpha1 = " + to_string(n_value) + " is not a nonnegative integer");
  } else {
    p.N = static_cast<int>(n_value.get_num().get_si());
  }
  if (!(raw.beta < 1)) violations.push_back("beta < 1 violated (beta = " + to_string(raw.beta) + ")");
  if (!(raw.alpha2 - raw.alpha1 < 1)) {
    violations.push_back("alpha2 - alpha1 < 1 violated (alpha2 - alpha1 = " +
                         to_string(Rational(raw.alpha2 - raw.alpha1)) + ")");
  }
  if (!(raw.t1 > 0)) violations.push_back("t1 > 0 violated");
  if (!(raw.t2 > 0)) violations.push_back("t2 > 0 violated");
  if (!(raw.h1 < raw.h2)) violations.push_back("h1 < h2 violated");
  if (!(raw.l1 < raw.l2)) violations.push_back("l1 < l2 violated");
  if (n_ok && is_integer(raw.beta) && raw.beta >= 1 && raw.beta <= p.N + 1) {
    violations.push_back("beta in excluded set {1..N+1}");
  }
  if (!violations.empty()) throw ParameterError(std::move(violations));
  return p;
}

ParameterError::ParameterError(std::vector<std::string> violations)
    : Error([&] {
        std::string msg = "invalid parameters: ";
        for (std::size_t i = 0; i < violations.size(); ++i) {
          if (i > 0) msg += "; ";
          msg += violations[i];
        }
        return msg;
      }()),
      violations_(std::move(violations)) {}

// ---------------------------------------------------------------------------
// EPoly

EPoly EPoly::constant(const QSum& c) {
  EPoly p;
  p.coeffs = {c};
  return p;
}

EPoly EPoly::linear(const QSum& a, const QSum& b) {
  EPoly p;
  p.coeffs = {b, a};
  return p;
}

int EPoly::degree() const {
  for (int j = static_cast<int>(coeffs.size()) - 1; j >= 0; --j) {
    if (!coeffs[j].is_zero()) return j;
  }
  return -1;
}

const QSum& EPoly::coeff(int j) const {
  static const QSum zero;
  if (j < 0 || j >= static_cast<int>(coeffs.size())) return zero;
  return coeffs[j];
}

EPoly operator*(const EPoly& a, const EPoly& b) {
  EPoly r;
  const int da = a.degree();
  const int db = b.degree();
  if (da < 0 || db < 0) return r;
  r.coeffs.assign(da + db + 1, QSum());
  for (int i = 0; i <= da; ++i) {
    if (a.coeffs[i].is_zero()) continue;
    for (int j = 0; j <= db; ++j) r.coeffs[i + j] += a.coeffs[i] * b.coeffs[j];
  }
  r.denom_monomial = a.denom_monomial * b.denom_monomial;
  r.denom_factors = a.denom_factors;
  r.denom_factors.insert(r.denom_factors.end(), b.denom_factors.begin(), b.denom_factors.end());
  return r;
}

namespace {

EPoly add_scaled(const EPoly& a, const EPoly& b, int sign) {
  auto fa = a.denom_factors;
  auto fb = b.denom_factors;
  std::sort(fa.begin(), fa.end());
  std::sort(fb.begin(), fb.end());
  if (!(a.denom_monomial == b.denom_monomial) || fa != fb) {
    throw DomainError("EPoly addition requires identical denominators");
  }
  EPoly r;
  r.denom_monomial = a.denom_monomial;
  r.denom_factors = a.denom_factors;
  const std::size_t n = std::max(a.coeffs.size(), b.coeffs.size());
  r.coeffs.assign(n, QSum());
  for (std::size_t j = 0; j < n; ++j) {
    r.coeffs[j] = sign > 0 ? a.coeff(static_cast<int>(j)) + b.coeff(static_cast<int>(j))
                           : a.coeff(static_cast<int>(j)) - b.coeff(static_cast<int>(j));
  }
  return r;
}

}  // namespace

EPoly operator+(const EPoly& a, const EPoly& b) { return add_scaled(a, b, +1); }
EPoly operator-(const EPoly& a, const EPoly& b) { return add_scaled(a, b, -1); }

EPoly leading_form(const EPoly& p) {
  EPoly r;
  r.coeffs.reserve(p.coeffs.size());
  for (const auto& c : p.coeffs) {
    r.coeffs.push_back(c.is_zero() ? QSum() : leading_part(c).divided_by(p.denom_monomial));
  }
  r.coeffs.resize(static_cast<std::size_t>(std::max(p.degree() + 1, 0)));
  return r;
}

namespace {

template <typename Cmp>
bool coefficientwise(const EPoly& a, const EPoly& b, Cmp cmp) {
  const EPoly la = leading_form(a);
  const EPoly lb = leading_form(b);
  if (la.degree() != lb.degree()) return false;
  for (int j = 0; j <= la.degree(); ++j) {
    const bool za = la.coeffs[j].is_zero();
    const bool zb = lb.coeffs[j].is_zero();
    if (za != zb) return false;
    if (!za && !cmp(la.coeffs[j], lb.coeffs[j])) return false;
  }
  return true;
}

}  // namespace

bool equiv_sim(const EPoly& a, const EPoly& b) {
  return coefficientwise(a, b, [](const QSum& x, const QSum& y) { return equiv_sim(x, y); });
}

bool equiv_approx(const EPoly& a, const EPoly& b) {
  return coefficientwise(a, b, [](const QSum& x, const QSum& y) { return equiv_approx(x, y); });
}

std::vector<Real> numeric_numerator(const EPoly& p, const Real& q, const Rational& t1, const Rational& t2,
                                    mpfr_prec_t bits) {
  std::vector<Real> out;
  const int deg = p.degree();
  out.reserve(static_cast<std::size_t>(std::max(deg + 1, 0)));
  for (int j = 0; j <= deg; ++j) out.push_back(eval_numeric(p.coeffs[j], q, t1, t2, bits));
  return out;
}

Real eval_numeric(const EPoly& p, const Real& E, const Real& q, const Rational& t1, const Rational& t2,
                  mpfr_prec_t bits) {
  const mpfr_prec_t work = bits + 32;
  const auto num = numeric_numerator(p, q, t1, t2, work);
  const Real e = E.with_precision(work);
  Real acc(work);
  for (auto it = num.rbegin(); it != num.rend(); ++it) acc = acc * e + *it;
  Real den = eval_numeric(QSum(p.denom_monomial), q, t1, t2, work);
  const Real qw = q.with_precision(work);
  for (const auto& f : p.denom_factors) den *= Real(1L, work) - pow(qw, f);
  return (acc / den).with_precision(bits);
}

std::string to_string(const EPoly& p) {
  std::ostringstream out;
  out << "[";
  for (int j = 0; j <= p.degree(); ++j) {
    if (j > 0) out << ", ";
    out << "E^" << j << ": " << to_string(p.coeffs[j]);
  }
  out << "] / (" << to_string(p.denom_monomial);
  for (const auto& f : p.denom_factors) out << " (1-q^" << to_string(f) << ")";
  out << ")";
  return out.str();
}

// ---------------------------------------------------------------------------
// Recursion

RecursionRows recursion_coeff_rows(const HeunParams& p, int n) {
  if (n < 1 || n > p.N + 1) {
    throw DomainError("recursion row index " + std::to_string(n) + " outside 1.." + std::to_string(p.N + 1));
  }
  const Rational nr(n);
  RecursionRows rows;
  rows.a_monomial = QMonomial{Rational(1), 1, 1, Rational(p.h1() + p.h2())};
  rows.a_factors = {nr, Rational(nr - p.beta())};
  rows.A = QSum(rows.a_monomial) * QSum::one_minus_q(rows.a_factors[0]) * QSum::one_minus_q(rows.a_factors[1]);
  rows.B = QSum::monomial(Rational(1), Rational(nr - 1 + p.lambda1));
  const Rational tail = 2 * (nr + p.lambda1) + p.alpha1() + p.alpha2() - Rational(5, 2);
  rows.C = QSum(std::vector<QMonomial>{
      QMonomial{Rational(1), 1, 0, Rational(kHalf + p.h1())},
      QMonomial{Rational(1), 0, 1, Rational(kHalf + p.h2())},
      QMonomial{Rational(1), 1, 0, Rational(p.l1() + tail)},
      QMonomial{Rational(1), 0, 1, Rational(p.l2() + tail)},
  });
  rows.D = QSum::monomial(Rational(1), Rational(1)) *
           QSum::one_minus_q(Rational(nr - 2 + p.lambda1 + p.alpha1())) *
           QSum::one_minus_q(Rational(nr - 2 + p.lambda1 + p.alpha2()));
  return rows;
}

std::vector<EPoly> coefficients_exact(const HeunParams& p, int upTo) {
  if (upTo < 0 || upTo > p.N + 1) {
    throw DomainError("coefficients_exact: upTo must lie in 0..N+1");
  }
  std::vector<EPoly> out;
  out.reserve(static_cast<std::size_t>(upTo) + 1);
  out.push_back(EPoly::constant(QSum::constant(Rational(1))));

  std::vector<RecursionRows> rows;
  for (int n = 1; n <= upTo; ++n) rows.push_back(recursion_coeff_rows(p, n));

  // Numerators P_n of c_n = P_n / (A_1 ... A_n):
  //   P_n = (B_n E + C_n) P_{n-1} - D_n A_{n-1} P_{n-2}.
  for (int n = 1; n <= upTo; ++n) {
    const RecursionRows& r = rows[n - 1];
    const EPoly& prev = out[n - 1];
    const EPoly* prev2 = n >= 2 ? &out[n - 2] : nullptr;
    const QSum damped = n >= 2 ? r.D * rows[n - 2].A : QSum();

    EPoly next;
    next.coeffs.resize(static_cast<std::size_t>(n) + 1);
    for (int j = 0; j <= n; ++j) {
      std::vector<QSum> parts;
      if (j >= 1 && !prev.coeff(j - 1).is_zero()) parts.push_back(r.B * prev.coeff(j - 1));
      if (!prev.coeff(j).is_zero()) parts.push_back(r.C * prev.coeff(j));
      if (prev2 != nullptr && !prev2->coeff(j).is_zero()) parts.push_back(-(damped * prev2->coeff(j)));
      const std::string site = "c_" + std::to_string(n) + "[E^" + std::to_string(j) + "]";
      SumResult sum = qsum_accumulate(parts, site);
      next.coeffs[j] = std::move(sum.sum);
      next.diagnostics.insert(next.diagnostics.end(), sum.events.begin(), sum.events.end());
    }
    next.denom_monomial = prev.denom_monomial * r.a_monomial;
    next.denom_factors = prev.denom_factors;
    next.denom_factors.push_back(r.a_factors[0]);
    next.denom_factors.push_back(r.a_factors[1]);
    out.push_back(std::move(next));
  }
  return out;
}

EPoly spectral_polynomial(const HeunParams& p) { return std::move(coefficients_exact(p, p.N + 1).back()); }

// ---------------------------------------------------------------------------
// Numeric recursion and residual

namespace {

struct NumericContext {
  mpfr_prec_t work;
  Real q;
  Real t1;
  Real t2;
  Real one;

  NumericContext(const HeunParams& p, const Real& q_in, mpfr_prec_t bits)
      : work(bits + 32),
        q(q_in.with_precision(work)),
        t1(p.t1(), work),
        t2(p.t2(), work),
        one(1L, work) {}

  Real qp(const Rational& e) const { return pow(q, e); }
};

}  // namespace

SeriesSolution coefficients_numeric(const HeunParams& p, const Real& E0, const Real& q, mpfr_prec_t bits) {
  if (!(q > 0L) || !(q < 1L)) throw DomainError("coefficients_numeric: q must lie in (0,1)");
  const NumericContext c(p, q, bits);
  const Real E = E0.with_precision(c.work);

  std::vector<Real> cs;
  cs.reserve(static_cast<std::size_t>(p.N) + 2);
  cs.push_back(c.one);
  Real before(c.work);  // c_{n-2}, starting from c_{-1} = 0
  for (int n = 1; n <= p.N + 1; ++n) {
    const Rational nr(n);
    const Real A = c.t1 * c.t2 * c.qp(p.h1() + p.h2()) * (c.one - c.qp(nr)) * (c.one - c.qp(nr - p.beta()));
    const Real B = c.qp(nr - 1 + p.lambda1);
    const Real C = c.qp(kHalf) * (c.qp(p.h1()) * c.t1 + c.qp(p.h2()) * c.t2) +
                   (c.qp(p.l1()) * c.t1 + c.qp(p.l2()) * c.t2) *
                       c.qp(2 * (nr + p.lambda1) + p.alpha1() + p.alpha2() - Rational(5, 2));
    const Real D = c.q * (c.one - c.qp(nr - 2 + p.lambda1 + p.alpha1())) *
                   (c.one - c.qp(nr - 2 + p.lambda1 + p.alpha2()));
    if (A.is_zero()) throw DomainError("numerically zero recursion row A");
    Real next = ((B * E + C) * cs.back() - D * before) / A;
    before = cs.back();
    cs.push_back(std::move(next));
  }

  SeriesSolution sol;
  sol.lambda1 = p.lambda1;
  sol.spectral_value = cs.back().with_precision(bits);
  cs.pop_back();
  for (auto& v : cs) sol.coeffs.push_back(v.with_precision(bits));
  sol.E0 = E0.with_precision(bits);
  sol.q = q.with_precision(bits);
  sol.t1 = p.t1();
  sol.t2 = p.t2();
  sol.bits = bits;
  return sol;
}

std::vector<Real> default_sample_points(const HeunParams& p, const Real& q, mpfr_prec_t bits) {
  const Real t1(p.t1(), bits);
  const Real qb = q.with_precision(bits);
  return {t1 * pow(qb, kHalf), t1, t1 * pow(qb, Rational(-1, 2))};
}

Real residual_check(const HeunParams& p, const SeriesSolution& sol, const std::vector<Real>& xs,
                    mpfr_prec_t bits) {
  const NumericContext c(p, sol.q, bits);
  const Real E = sol.E0.with_precision(c.work);

  auto g = [&](const Real& x, bool magnitude) {
    Real acc(c.work);
    const Real y = magnitude ? abs(x) : x;
    for (auto it = sol.coeffs.rbegin(); it != sol.coeffs.rend(); ++it) {
      const Real cn = it->with_precision(c.work);
      acc = acc * y + (magnitude ? abs(cn) : cn);
    }
    return acc * pow(abs(x), p.lambda1);
  };

  const Real k_h1 = c.qp(p.h1() + kHalf) * c.t1;
  const Real k_h2 = c.qp(p.h2() + kHalf) * c.t2;
  const Real k_l1 = c.qp(p.l1() - kHalf) * c.t1;
  const Real k_l2 = c.qp(p.l2() - kHalf) * c.t2;
  const Real qa = c.qp(p.alpha1() + p.alpha2());
  const Real quad = c.qp(p.alpha1()) + c.qp(p.alpha2());
  const Real constant = c.qp(Rational((p.h1() + p.h2() + p.l1() + p.l2() + p.alpha1() + p.alpha2()) / 2)) *
                        (c.qp(Rational(p.beta() / 2)) + c.qp(Rational(-p.beta() / 2))) * c.t1 * c.t2;

  Real worst(0L, bits);
  for (const auto& x_in : xs) {
    const Real x = x_in.with_precision(c.work);
    const Real ax = abs(x);
    const Real term1 = (x - k_h1) * (x - k_h2) * g(x / c.q, false);
    const Real term2 = qa * (x - k_l1) * (x - k_l2) * g(c.q * x, false);
    const Real term3 = -((quad * x * x + E * x + constant) * g(x, false));
    // Magnitude of the same expression with every monomial made positive;
    // stays meaningful when all three terms vanish at x.
    const Real mag1 = (ax + k_h1) * (ax + k_h2) * g(x / c.q, true);
    const Real mag2 = qa * (ax + k_l1) * (ax + k_l2) * g(c.q * x, true);
    const Real mag3 = (quad * ax * ax + abs(E) * ax + constant) * g(x, true);
    Real scale = mag1;
    for (const Real* m : {&mag2, &mag3}) {
      if (*m > scale) scale = *m;
    }
    if (scale.is_zero()) continue;
    const Real rel = abs(term1 + term2 + term3) / scale;
    if (rel > worst) worst = rel.with_precision(bits);
  }
  return worst;
}

}  // namespace qheun
