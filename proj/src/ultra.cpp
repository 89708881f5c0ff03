#include "qheun/ultra.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qheun/errors.hpp"
#include "qheun/roots.hpp"

namespace qheun {

namespace {

const Rational kHalf(1, 2);

long floor_of(const Rational& r) {
  mpz_class f;
  mpz_fdiv_q(f.get_mpz_t(), r.get_num_mpz_t(), r.get_den_mpz_t());
  return f.get_si();
}

// 1 + h2 - l2 - beta: the sign of 2n - 2 + s1 decides which term of q_n leads.
Rational regime_gap(const HeunParams& p) { return 1 + p.h2() - p.l2() - p.beta(); }
Rational sigma_of(const HeunParams& p) { return 2 * p.h2() - p.l1() - p.l2() - p.beta(); }
Rational rho_of(const HeunParams& p) { return p.l1() - p.l2() - p.beta(); }
Rational band_gap(const HeunParams& p) { return p.h2() - p.l1() + 1; }

// lambda1 - h1 - h2
Rational p_shift(const HeunParams& p) { return p.lambda1 - p.h1() - p.h2(); }
// l1 + l2 + beta
Rational r_shift(const HeunParams& p) { return p.l1() + p.l2() + p.beta(); }

bool in_even_set(const Rational& v, int N) {
  if (!is_integer(v)) return false;
  const long x = to_long(v);
  return x <= -2 && x >= -2L * N && x % 2 == 0;
}

CaseTag excluded(Regime family, std::string reason) {
  CaseTag t;
  t.regime = Regime::Excluded;
  t.family = family;
  t.reason = std::move(reason);
  return t;
}

CaseTag classified(Regime r, Subcase s, int m = 0) {
  CaseTag t;
  t.regime = r;
  t.family = r;
  t.subcase = s;
  t.m = m;
  return t;
}

std::vector<int> r32_factor_indices(int N) {
  std::vector<int> out;
  for (int n = (N % 2 == 1) ? 2 : 3; n <= N + 1; n += 2) out.push_back(n);
  return out;
}

CaseTag classify_r31(const HeunParams& p) {
  const int N = p.N;
  const Rational sigma = sigma_of(p);
  const std::string s = to_string(sigma);
  if (in_even_set(sigma, N)) return excluded(Regime::R31, "boundary case: 2h2-l1-l2-beta = " + s);
  for (int n = 1; n <= (N + 1) / 2; ++n) {
    if (4 * n + sigma == 1) return excluded(Regime::R31, "boundary case: 2h2-l1-l2-beta = " + s);
  }
  if (sigma > -2) return classified(Regime::R31, Subcase::I);
  if (N == 0) return classified(Regime::R31, Subcase::II2);
  if (N % 2 == 1 && sigma < -2 * N - 1) return classified(Regime::R31, Subcase::II1);
  if (N % 2 == 0 && sigma < -2 * N + 1) return classified(Regime::R31, Subcase::II2);
  for (int m = 1; m <= (N + 1) / 2; ++m) {
    if (sigma > -4 * m + 1 && sigma < -4 * m + 2) return classified(Regime::R31, Subcase::III1, m);
  }
  for (int m = 1; m <= (N - 1) / 2; ++m) {
    if (sigma > -4 * m - 2 && sigma < -4 * m + 1) return classified(Regime::R31, Subcase::III2, m);
  }
  CaseTag t;
  t.family = Regime::R31;
  t.reason = "2h2-l1-l2-beta = " + s + " matches no subcase";
  return t;
}

CaseTag classify_r32(const HeunParams& p) {
  const int N = p.N;
  const Rational rho = rho_of(p);
  const std::string s = to_string(rho);
  if (in_even_set(rho, N)) return excluded(Regime::R32, "boundary case: l1-l2-beta = " + s);
  for (int n : r32_factor_indices(N)) {
    if (rho == 3 - 2 * n) return excluded(Regime::R32, "boundary case: l1-l2-beta = " + s);
  }
  if (rho < -2 * N) return classified(Regime::R32, Subcase::I);
  if (N == 0) return classified(Regime::R32, Subcase::II2);
  if (N % 2 == 1 && rho > -1) return classified(Regime::R32, Subcase::II1);
  if (N % 2 == 0 && rho > -3) return classified(Regime::R32, Subcase::II2);
  for (int m = 0; m <= (N - 1) / 2; ++m) {
    if (rho > -2 * N + 4 * m && rho < -2 * N + 4 * m + 1) return classified(Regime::R32, Subcase::III1, m);
  }
  for (int m = 1; m <= (N - 1) / 2; ++m) {
    if (rho > -2 * N + 4 * m - 3 && rho < -2 * N + 4 * m) return classified(Regime::R32, Subcase::III2, m);
  }
  CaseTag t;
  t.family = Regime::R32;
  t.reason = "l1-l2-beta = " + s + " matches no subcase";
  return t;
}

Regime family_of(const CaseTag& tag) {
  return tag.classified() ? tag.regime : tag.family;
}

QSum p_coeff(const HeunParams& p, int n) { return QSum::monomial(Rational(1), Rational(n - 1 + p_shift(p)), -1, -1); }

QSum q_coeff(const HeunParams& p, int n, bool r32_branch) {
  if (r32_branch) return QSum::monomial(Rational(1), Rational(2 * n - kHalf - p.l2() - p.beta()), 0, -1);
  return QSum::monomial(Rational(1), Rational(kHalf - p.h2()), 0, -1);
}

QSum r_coeff(const HeunParams& p, int n) { return QSum::monomial(Rational(1), Rational(2 * n - 1 - r_shift(p)), -1, -1); }

EPoly linear_factor(const HeunParams& p, int n, const CaseTag& tag) {
  const RecurrenceCoeffs c = recurrence_coeffs(p, n, tag);
  return EPoly::linear(c.p_n, c.q_n);
}

// (p_n E + q_n)(p_{n-1} E + q_{n-1}) - r_n
EPoly quadratic_factor(const HeunParams& p, int n, const CaseTag& tag) {
  return linear_factor(p, n, tag) * linear_factor(p, n - 1, tag) -
         EPoly::constant(recurrence_coeffs(p, n, tag).r_n);
}

PredictedRoot t1_root(const Rational& d, bool sharp) {
  PredictedRoot r;
  r.sign = -1;
  r.d = d;
  r.prefactor = PrefactorKind::T1;
  r.sharp = sharp;
  return r;
}

std::pair<PredictedRoot, PredictedRoot> balanced_pair(const HeunParams& p) {
  PredictedRoot minus;
  minus.sign = -1;
  minus.d = balanced_exponent(p);
  minus.prefactor = PrefactorKind::SqrtT1T2;
  PredictedRoot plus = minus;
  plus.sign = 1;
  return {minus, plus};
}

// X = lambda1 + l1 + alpha1 + alpha2
Rational r32_root_shift(const HeunParams& p) { return p.lambda1 + p.l1() + p.alpha1() + p.alpha2(); }

void require_classified(const CaseTag& tag, const char* what) {
  if (!tag.classified()) {
    throw ExcludedError(std::string(what) + ": " + (tag.reason.empty() ? to_string(tag) : tag.reason));
  }
}

}  // namespace

std::string to_string(Regime r) {
  switch (r) {
    case Regime::R31: return "R31";
    case Regime::R32: return "R32";
    case Regime::R33: return "R33";
    case Regime::Excluded: return "Excluded";
    case Regime::Unclassified: return "Unclassified";
  }
  return "?";
}

std::string to_string(Subcase s) {
  switch (s) {
    case Subcase::None: return "none";
    case Subcase::I: return "i";
    case Subcase::II1: return "ii1";
    case Subcase::II2: return "ii2";
    case Subcase::III1: return "iii1";
    case Subcase::III2: return "iii2";
  }
  return "?";
}

std::string to_string(const CaseTag& tag) {
  std::string out = "regime=" + to_string(tag.regime);
  switch (tag.regime) {
    case Regime::R31:
    case Regime::R32:
      out += " subcase=" + to_string(tag.subcase);
      if (tag.subcase == Subcase::III1 || tag.subcase == Subcase::III2) out += " m=" + std::to_string(tag.m);
      break;
    case Regime::R33:
      out += " K=" + std::to_string(tag.K);
      break;
    default:
      out += " family=" + to_string(tag.family);
  }
  return out;
}

CaseTag classify(const HeunParams& p) {
  const Rational s1 = regime_gap(p);
  if (s1 == 0) return excluded(Regime::R31, "boundary case: 1+h2-l2-beta = 0");
  if (s1 > 0) return classify_r31(p);
  if (s1 + 2 * p.N < 0) return classify_r32(p);
  if (s1 + 2 * p.N == 0) return excluded(Regime::R32, "boundary case: 2N+1+h2-l2-beta = 0");
  if (is_integer(s1) && to_long(s1) % 2 == 0) {
    CaseTag t = excluded(Regime::R33, "boundary case: 1+h2-l2-beta = " + to_string(s1));
    t.K = static_cast<int>(-to_long(s1) / 2);
    return t;
  }
  // -2K < s1 < -2K + 2
  const int K = static_cast<int>(floor_of(Rational(-s1 / 2))) + 1;
  if (band_gap(p) > 0) {
    CaseTag t = classified(Regime::R33, Subcase::None);
    t.K = K;
    return t;
  }
  CaseTag t;
  t.regime = Regime::Unclassified;
  t.family = Regime::R33;
  t.K = K;
  t.reason = "h2-l1+1 = " + to_string(band_gap(p)) + " is not positive";
  return t;
}

std::vector<BoundaryProximity> boundary_proximity(const HeunParams& p, const Rational& within) {
  std::vector<BoundaryProximity> out;
  auto check = [&](const std::string& name, const Rational& value, const Rational& boundary) {
    const Rational dist = abs(Rational(value - boundary));
    if (dist > 0 && dist <= within) out.push_back({name, value, boundary, dist});
  };
  const int N = p.N;
  const Rational s1 = regime_gap(p);
  for (int k = 0; k <= N; ++k) check("1+h2-l2-beta", s1, Rational(-2 * k));
  if (s1 > 0) {
    const Rational sigma = sigma_of(p);
    for (int k = 1; k <= N; ++k) check("2h2-l1-l2-beta", sigma, Rational(-2 * k));
    for (int n = 1; n <= (N + 1) / 2; ++n) check("2h2-l1-l2-beta", sigma, Rational(1 - 4 * n));
  } else if (s1 + 2 * N < 0) {
    const Rational rho = rho_of(p);
    for (int k = 1; k <= N; ++k) check("l1-l2-beta", rho, Rational(-2 * k));
    for (int n : r32_factor_indices(N)) check("l1-l2-beta", rho, Rational(3 - 2 * n));
  } else {
    check("h2-l1+1", band_gap(p), Rational(0));
  }
  return out;
}

RecurrenceCoeffs recurrence_coeffs(const HeunParams& p, int n, const CaseTag& tag) {
  const Regime fam = family_of(tag);
  bool r32_branch = false;
  switch (fam) {
    case Regime::R31: r32_branch = false; break;
    case Regime::R32: r32_branch = true; break;
    case Regime::R33: r32_branch = n <= tag.K; break;
    default: throw ExcludedError("recurrence_coeffs: no regime for " + to_string(tag));
  }
  return {p_coeff(p, n), q_coeff(p, n, r32_branch), r_coeff(p, n)};
}

std::vector<EPoly> leading_recursion(const HeunParams& p, const CaseTag& tag) {
  std::vector<EPoly> c;
  c.reserve(static_cast<std::size_t>(p.N) + 2);
  c.push_back(EPoly::constant(QSum::constant(Rational(1))));
  for (int n = 1; n <= p.N + 1; ++n) {
    const RecurrenceCoeffs rc = recurrence_coeffs(p, n, tag);
    const EPoly& prev = c[n - 1];
    EPoly next;
    next.coeffs.resize(static_cast<std::size_t>(n) + 1);
    for (int j = 0; j <= n; ++j) {
      QSum sum;
      if (j >= 1) sum += rc.p_n * prev.coeff(j - 1);
      sum += rc.q_n * prev.coeff(j);
      if (n >= 2) sum -= rc.r_n * c[n - 2].coeff(j);
      if (sum.is_zero()) {
        throw CancellationError("leading recursion: c_" + std::to_string(n) + "[E^" + std::to_string(j) +
                                "] vanishes identically");
      }
      QSum lead = leading_part(sum);
      if (!common_sign(lead)) {
        throw CancellationError("leading recursion: c_" + std::to_string(n) + "[E^" + std::to_string(j) +
                                "] has a sign-indefinite leading slice at q^" +
                                to_string(lead.leading_exponent()));
      }
      next.coeffs[j] = std::move(lead);
    }
    c.push_back(std::move(next));
  }
  return c;
}

EPoly tilde_cN1(const HeunParams& p, const CaseTag& tag) {
  require_classified(tag, "tilde_cN1");
  const int N = p.N;
  EPoly out = EPoly::constant(QSum::constant(Rational(1)));
  switch (tag.regime) {
    case Regime::R31:
      for (int n = 1; n <= (N + 1) / 2; ++n) out = out * quadratic_factor(p, 2 * n, tag);
      if (N % 2 == 0) out = out * linear_factor(p, N + 1, tag);
      break;
    case Regime::R32:
      if (N % 2 == 0) out = out * linear_factor(p, 1, tag);
      for (int n : r32_factor_indices(N)) out = out * quadratic_factor(p, n, tag);
      break;
    default:
      for (int n = 1; n <= N + 1; ++n) out = out * linear_factor(p, n, tag);
  }
  return out;
}

Rational balanced_exponent(const HeunParams& p) { return (p.alpha1() + p.alpha2() + p.h1() + p.h2()) / 2; }

std::string to_string(PrefactorKind k) {
  switch (k) {
    case PrefactorKind::T1: return "t1";
    case PrefactorKind::T2: return "t2";
    case PrefactorKind::SqrtT1T2: return "sqrt(t1*t2)";
  }
  return "?";
}

double PredictedRoot::descriptor_value(const Rational& t1, const Rational& t2) const {
  switch (prefactor) {
    case PrefactorKind::T1: return to_double(t1);
    case PrefactorKind::T2: return to_double(t2);
    case PrefactorKind::SqrtT1T2: return std::sqrt(to_double(t1) * to_double(t2));
  }
  return 1.0;
}

double PredictedRoot::prefactor_value(const Rational& t1, const Rational& t2) const {
  return explicit_prefactor ? *explicit_prefactor : descriptor_value(t1, t2);
}

std::string to_string(const PredictedRoot& r) {
  std::ostringstream os;
  os << (r.sign < 0 ? '-' : '+');
  if (r.explicit_prefactor) {
    os.precision(10);
    os << *r.explicit_prefactor;
  } else {
    os << to_string(r.prefactor);
  }
  os << " q^(" << to_string(r.d) << ")";
  if (r.multiplicity > 1) os << " x" << r.multiplicity;
  os << (r.sharp ? " sharp" : " indicative");
  return os.str();
}

std::pair<PredictedRoot, PredictedRoot> pn_root_pair(const HeunParams& p, int n, const CaseTag& tag) {
  require_classified(tag, "pn_root_pair");
  const bool sharp = tag.subcase == Subcase::I;
  if (tag.regime == Regime::R31) {
    if (n < 1 || n > (p.N + 1) / 2) throw DomainError("pn_root_pair: R31 factor index out of range");
    const Rational w = 4 * n + sigma_of(p);
    const Rational base = -p.lambda1 + p.h1();
    if (w == 1 || w == 2) throw ExcludedError("pn_root_pair: 4n+2h2-l1-l2-beta = " + to_string(w));
    if (w > 2) {
      return {t1_root(Rational(-2 * n + Rational(3, 2) + base), sharp),
              t1_root(Rational(-2 * n + Rational(5, 2) + base), sharp)};
    }
    if (w > 1) {
      PredictedRoot pos;
      pos.sign = 1;
      pos.d = 2 * n + kHalf + base - r_shift(p) + 2 * p.h2();
      pos.prefactor = PrefactorKind::T2;
      return {t1_root(Rational(-2 * n + Rational(3, 2) + base), false), pos};
    }
    return balanced_pair(p);
  }
  if (tag.regime == Regime::R32) {
    const auto idx = r32_factor_indices(p.N);
    if (std::find(idx.begin(), idx.end(), n) == idx.end()) {
      throw DomainError("pn_root_pair: " + std::to_string(n) + " is not an R32 factor index");
    }
    const Rational rho = rho_of(p);
    const Rational X = r32_root_shift(p);
    if (rho == 2 - 2 * n || rho == 3 - 2 * n) throw ExcludedError("pn_root_pair: l1-l2-beta = " + to_string(rho));
    if (rho < 2 - 2 * n) {
      return {t1_root(Rational(n - Rational(3, 2) + X), sharp), t1_root(Rational(n - Rational(5, 2) + X), sharp)};
    }
    if (rho < 3 - 2 * n) {
      PredictedRoot pos;
      pos.sign = 1;
      pos.d = -n + Rational(5, 2) - p.lambda1 - p.l1() + p.h1() + p.h2();
      pos.prefactor = PrefactorKind::T2;
      return {t1_root(Rational(n - Rational(5, 2) + X), false), pos};
    }
    return balanced_pair(p);
  }
  throw DomainError("pn_root_pair: R33 has no quadratic factors");
}

std::vector<PredictedRoot> predict_roots(const HeunParams& p, const CaseTag& tag) {
  require_classified(tag, "predict_roots");
  std::vector<PredictedRoot> flat;
  const int N = p.N;
  const bool sharp = tag.subcase == Subcase::I;
  auto push_pair = [&](int n) {
    auto [a, b] = pn_root_pair(p, n, tag);
    flat.push_back(a);
    flat.push_back(b);
  };
  switch (tag.regime) {
    case Regime::R31:
      for (int n = 1; n <= (N + 1) / 2; ++n) push_pair(n);
      if (N % 2 == 0) flat.push_back(t1_root(Rational(-N + kHalf - p.lambda1 + p.h1()), sharp));
      break;
    case Regime::R32:
      if (N % 2 == 0) flat.push_back(t1_root(Rational(-kHalf + r32_root_shift(p)), sharp));
      for (int n : r32_factor_indices(N)) push_pair(n);
      break;
    default:
      for (int j = 1; j <= N + 1; ++j) {
        const Rational d = j <= tag.K ? Rational(j - Rational(3, 2) + r32_root_shift(p))
                                      : Rational(-j + Rational(3, 2) + p.h1() - p.lambda1);
        flat.push_back(t1_root(d, true));
      }
  }
  std::vector<PredictedRoot> merged;
  for (const PredictedRoot& r : flat) {
    auto it = std::find_if(merged.begin(), merged.end(), [&](const PredictedRoot& m) {
      return m.sign == r.sign && m.d == r.d && m.prefactor == r.prefactor && m.sharp == r.sharp;
    });
    if (it != merged.end()) {
      it->multiplicity += r.multiplicity;
    } else {
      merged.push_back(r);
    }
  }
  std::sort(merged.begin(), merged.end(), [](const PredictedRoot& a, const PredictedRoot& b) {
    if (a.d != b.d) return a.d < b.d;
    return a.sign < b.sign;
  });
  return merged;
}

std::vector<Rational> s_polynomial(const HeunParams& p, const EPoly& spectral, const Rational& delta) {
  const int deg = spectral.degree();
  if (deg < 0) throw DomainError("s_polynomial: zero polynomial");
  std::optional<Rational> best;
  std::vector<std::optional<Rational>> weight(static_cast<std::size_t>(deg) + 1);
  for (int j = 0; j <= deg; ++j) {
    if (spectral.coeff(j).is_zero()) continue;
    weight[j] = spectral.coeff(j).leading_exponent() + j * delta;
    if (!best || *weight[j] < *best) best = weight[j];
  }
  int lo = -1;
  int hi = -1;
  std::vector<Rational> full(static_cast<std::size_t>(deg) + 1, Rational(0));
  for (int j = 0; j <= deg; ++j) {
    if (!weight[j] || *weight[j] != *best) continue;
    Rational value(0);
    const QSum lead = leading_part(spectral.coeff(j));
    for (const QMonomial& m : lead.terms()) {
      value += m.coeff * pow(p.t1(), m.t1pow) * pow(p.t2(), m.t2pow);
    }
    full[j] = value;
    if (value != 0) {
      if (lo < 0) lo = j;
      hi = j;
    }
  }
  if (lo < 0) throw DomainError("s_polynomial: leading slices vanish at the given t1, t2");
  return {full.begin() + lo, full.begin() + hi + 1};
}

std::vector<Real> multiplicity_prefactors(const HeunParams& p, const CaseTag& tag) {
  const std::vector<PredictedRoot> preds = predict_roots(p, tag);
  const Rational delta = balanced_exponent(p);
  int at_delta = 0;
  bool multiple = false;
  for (const PredictedRoot& r : preds) {
    if (r.d != delta) continue;
    at_delta += r.multiplicity;
    if (r.multiplicity > 1) multiple = true;
  }
  if (!multiple) return {};
  const std::vector<Rational> s = s_polynomial(p, spectral_polynomial(p), delta);
  constexpr mpfr_prec_t kBits = 256;
  std::vector<Real> coeffs;
  coeffs.reserve(s.size());
  for (const Rational& c : s) coeffs.emplace_back(c, kBits);
  std::vector<Real> roots = find_real_roots(to_numpoly(std::move(coeffs)));
  if (static_cast<int>(roots.size()) != at_delta) {
    throw MatchError("prefactor polynomial has " + std::to_string(roots.size()) + " real roots, expected " +
                     std::to_string(at_delta));
  }
  return roots;
}

std::vector<PredictedRoot> refine_predictions(const HeunParams& p, std::vector<PredictedRoot> predictions,
                                              const std::vector<Real>& prefactors) {
  if (prefactors.empty()) return predictions;
  const Rational delta = balanced_exponent(p);
  std::vector<PredictedRoot> out;
  std::vector<PredictedRoot> replaced;
  for (PredictedRoot& r : predictions) {
    if (r.d == delta) {
      for (int k = 0; k < r.multiplicity; ++k) replaced.push_back(r);
    } else {
      out.push_back(std::move(r));
    }
  }
  // Balanced descriptors first, so each prefactor keeps the descriptor of a
  // prediction with its sign where one exists.
  std::stable_partition(replaced.begin(), replaced.end(),
                        [](const PredictedRoot& r) { return r.prefactor == PrefactorKind::SqrtT1T2; });
  for (const Real& s : prefactors) {
    const int sign = s.sign() < 0 ? -1 : 1;
    auto it = std::find_if(replaced.begin(), replaced.end(), [&](const PredictedRoot& r) { return r.sign == sign; });
    PredictedRoot r;
    r.sign = sign;
    r.d = delta;
    r.prefactor = it != replaced.end() ? it->prefactor : PrefactorKind::SqrtT1T2;
    if (it != replaced.end()) replaced.erase(it);
    r.explicit_prefactor = abs(s).to_double();
    r.sharp = true;
    out.push_back(r);
  }
  std::stable_sort(out.begin(), out.end(), [](const PredictedRoot& a, const PredictedRoot& b) {
    if (a.d != b.d) return a.d < b.d;
    return a.sign < b.sign;
  });
  return out;
}

Rational collision_exponent(const HeunParams& p, Regime family, int M, int k, int l) {
  if (k < 0 || l < 0 || 2 * k + l > M) throw DomainError("collision_exponent: need 2k+l <= M");
  const Rational S = r_shift(p);
  const Rational L = p_shift(p);
  if (family == Regime::R31) {
    return k * (2 * k + 1 - S) + Rational(l * (l - 1) / 2) + l * (2 * k + L) + (M - 2 * k - l) * (kHalf - p.h2());
  }
  if (family == Regime::R32) {
    const int u = M - 2 * k - l;
    Rational d(0);
    for (int i = 1; i <= u; ++i) d += 2 * i - kHalf - p.l2() - p.beta();
    for (int i = u + 1; i <= u + l; ++i) d += i - 1 + L;
    for (int i = 1; i <= k; ++i) d += 2 * (M - 2 * k + 2 * i) - 1 - S;
    return d;
  }
  throw DomainError("collision_exponent: family must be R31 or R32");
}

std::vector<Collision> collision_check(const HeunParams& p, int M, const CaseTag& tag) {
  const Regime fam = family_of(tag);
  if (fam != Regime::R31 && fam != Regime::R32) return {};
  std::vector<Collision> out;
  for (int l = 0; l <= M; ++l) {
    for (int k2 = 1; 2 * k2 + l <= M; ++k2) {
      const Rational d2 = collision_exponent(p, fam, M, k2, l);
      for (int k = 0; k < k2; ++k) {
        if (collision_exponent(p, fam, M, k, l) == d2) out.push_back({k, k2, l});
      }
    }
  }
  return out;
}

}  // namespace qheun
