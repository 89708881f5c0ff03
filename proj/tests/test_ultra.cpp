#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "fixtures.hpp"
#include "case_oracle.hpp"
#include "qheun/errors.hpp"
#include "qheun/ultra.hpp"
#include "random_params.hpp"

using namespace qheun;
using namespace qheun::testing;

namespace {

HeunParams collision_params() { return derive(raw_params("-10", "0", "3", "4", "6", "0", "-5")); }

EPoly from_factor(const Factor& f) {
  EPoly out;
  out.coeffs = f;
  return out;
}

// Real roots of a linear or quadratic factor at q.
std::vector<Real> factor_roots(const Factor& f, const Real& q, mpfr_prec_t bits) {
  std::vector<Real> c;
  for (const QSum& s : f) c.push_back(eval_numeric(s, q, 1, 1, bits));
  if (c.size() == 2) return {-c[0] / c[1]};
  REQUIRE(c.size() == 3);
  const Real disc = c[1] * c[1] - Real(4L, bits) * c[2] * c[0];
  REQUIRE(disc.sign() > 0);
  const Real root = sqrt(disc);
  const Real big = (c[1].sign() >= 0 ? -(c[1] + root) : root - c[1]) / (Real(2L, bits) * c[2]);
  return {big, c[0] / (c[2] * big)};
}

struct NumericExponent {
  int sign;
  double d;
};

// Signed slopes of the factor roots between two tiny q values.
std::vector<NumericExponent> product_root_exponents(const std::vector<Factor>& factors) {
  constexpr mpfr_prec_t bits = 8192;
  const Real q1(Rational(1, mpz_class("1" + std::string(40, '0'))), bits);
  const Real q2(Rational(1, mpz_class("1" + std::string(50, '0'))), bits);
  std::vector<NumericExponent> out;
  for (const Factor& f : factors) {
    auto r1 = factor_roots(f, q1, bits);
    auto r2 = factor_roots(f, q2, bits);
    std::sort(r1.begin(), r1.end(), [](const Real& a, const Real& b) { return a < b; });
    std::sort(r2.begin(), r2.end(), [](const Real& a, const Real& b) { return a < b; });
    for (std::size_t i = 0; i < r1.size(); ++i) {
      REQUIRE(r1[i].sign() == r2[i].sign());
      const double slope = (r2[i].log2_abs() - r1[i].log2_abs()) / (q2.log2_abs() - q1.log2_abs());
      out.push_back({r1[i].sign(), slope});
    }
  }
  std::sort(out.begin(), out.end(), [](const NumericExponent& a, const NumericExponent& b) {
    return std::tie(a.sign, a.d) < std::tie(b.sign, b.d);
  });
  return out;
}

// Minimal exponent over every tiling of 1..M by single steps (p or q) and
// double steps (r), grouped by (number of r steps, number of p steps).
std::map<std::pair<int, int>, Rational> tiling_minima(const HeunParams& p, Regime family, int M) {
  const Rational half(1, 2);
  const Rational shift = p.lambda1 - p.h1() - p.h2();
  const Rational S = p.l1() + p.l2() + p.beta();
  auto p_exp = [&](int n) { return Rational(n - 1 + shift); };
  auto q_exp = [&](int n) {
    return family == Regime::R31 ? Rational(half - p.h2()) : Rational(2 * n - half - p.l2() - p.beta());
  };
  auto r_exp = [&](int n) { return Rational(2 * n - 1 - S); };
  std::map<std::pair<int, int>, Rational> best;
  auto walk = [&](auto&& self, int n, int k, int l, Rational acc) -> void {
    if (n > M) {
      auto it = best.find({k, l});
      if (it == best.end() || acc < it->second) best[{k, l}] = acc;
      return;
    }
    self(self, n + 1, k, l + 1, acc + p_exp(n));
    self(self, n + 1, k, l, acc + q_exp(n));
    if (n + 1 <= M) self(self, n + 2, k + 1, l, acc + r_exp(n + 1));
  };
  walk(walk, 1, 0, 0, Rational(0));
  return best;
}

}  // namespace

TEST_CASE("classify: worked parameter sets") {
  const CaseTag a = classify(p1());
  CHECK(a.regime == Regime::R31);
  CHECK(a.subcase == Subcase::I);
  CHECK(to_string(a) == "regime=R31 subcase=i");
  const CaseTag b = classify(p2());
  CHECK(b.regime == Regime::R32);
  CHECK(b.subcase == Subcase::I);
  const CaseTag c = classify(p3());
  CHECK(c.regime == Regime::R33);
  CHECK(c.K == 1);
  CHECK(to_string(c) == "regime=R33 K=1");
  const CaseTag d = classify(p4());
  CHECK(d.regime == Regime::R31);
  CHECK(d.subcase == Subcase::II1);
}

TEST_CASE("classify: boundary equalities are excluded with the condition named") {
  const CaseTag t = classify(collision_params());
  CHECK(t.regime == Regime::Excluded);
  CHECK(t.family == Regime::R31);
  CHECK(t.reason == "boundary case: 2h2-l1-l2-beta = -2");
  CHECK(to_string(t) == "regime=Excluded family=R31");
  CHECK_THROWS_WITH_AS(tilde_cN1(collision_params(), t), doctest::Contains("2h2-l1-l2-beta = -2"), ExcludedError);
  CHECK_THROWS_AS(predict_roots(collision_params(), t), ExcludedError);

  // 1 + h2 - l2 - beta = 0
  const CaseTag edge = classify(derive(raw_params("-5", "1", "0", "3/2", "0", "0", "1/2")));
  CHECK(edge.regime == Regime::Excluded);
  CHECK(edge.reason == "boundary case: 1+h2-l2-beta = 0");
}

TEST_CASE("classify: band without the extra condition is unclassified") {
  // 1 + h2 - l2 - beta = -3/2 (K = 1), h2 - l1 + 1 = 0.
  const HeunParams p = derive(raw_params("-6", "1", "2", "3", "13/2", "0", "1/2"));
  const CaseTag t = classify(p);
  CHECK(t.regime == Regime::Unclassified);
  CHECK(t.reason == "h2-l1+1 = 0 is not positive");
}

TEST_CASE("recurrence coefficients are leading rows divided by the leading A") {
  ParamSampler sampler(31);
  for (Regime regime : {Regime::R31, Regime::R32, Regime::R33}) {
    for (int N = 1; N <= 6; ++N) {
      const auto p = sampler.sample(regime, N);
      REQUIRE(p);
      const CaseTag tag = classify(*p);
      for (int n = 1; n <= N + 1; ++n) {
        const RecursionRows rows = recursion_coeff_rows(*p, n);
        const QMonomial a = leading_part(rows.A).terms().front();
        REQUIRE(leading_part(rows.A).size() == 1);
        const RecurrenceCoeffs rc = recurrence_coeffs(*p, n, tag);
        CHECK(rc.p_n == leading_part(rows.B).divided_by(a));
        CHECK(rc.q_n == leading_part(rows.C).divided_by(a));
        CHECK(rc.r_n == leading_part(rows.D).divided_by(a));
      }
    }
  }
}

TEST_CASE("leading recursion: branch choice for the worked sets") {
  const HeunParams a = p1();
  for (int n = 1; n <= 3; ++n) {
    CHECK(recurrence_coeffs(a, n, classify(a)).q_n == QSum::monomial(1, Rational(-1, 2), 0, -1));
  }
  const HeunParams b = p2();
  for (int n = 1; n <= 2; ++n) {
    CHECK(recurrence_coeffs(b, n, classify(b)).q_n == QSum::monomial(1, 2 * n - Rational(1, 2) - 4 - Rational(1, 2), 0, -1));
  }
  const HeunParams c = p3();
  const CaseTag tc = classify(c);
  CHECK(recurrence_coeffs(c, 1, tc).q_n == QSum::monomial(1, 2 - Rational(1, 2) - 3 - Rational(1, 2), 0, -1));
  CHECK(recurrence_coeffs(c, 2, tc).q_n == QSum::monomial(1, Rational(1, 2) - 1, 0, -1));
}

TEST_CASE("leading recursion agrees with the leading forms of the exact coefficients") {
  ParamSampler sampler(32);
  for (Regime regime : {Regime::R31, Regime::R32, Regime::R33}) {
    for (int N = regime == Regime::R33 ? 1 : 0; N <= 7; ++N) {
      const auto p = sampler.sample(regime, N);
      REQUIRE(p);
      const CaseTag tag = classify(*p);
      const auto lead = leading_recursion(*p, tag);
      const auto exact = coefficients_exact(*p, N + 1);
      for (int n = 0; n <= N + 1; ++n) {
        const EPoly lf = leading_form(exact[static_cast<std::size_t>(n)]);
        if (regime == Regime::R33) {
          CHECK(lead[static_cast<std::size_t>(n)].coeffs == lf.coeffs);
        } else {
          CHECK(equiv_approx(lead[static_cast<std::size_t>(n)], lf));
        }
      }
    }
  }
}

TEST_CASE("product approximation matches the reference factors") {
  ParamSampler sampler(33);
  for (Regime regime : {Regime::R31, Regime::R32, Regime::R33}) {
    for (int N = regime == Regime::R33 ? 1 : 0; N <= 7; ++N) {
      const auto p = sampler.sample(regime, N);
      REQUIRE(p);
      const CaseTag tag = classify(*p);
      EPoly oracle = EPoly::constant(QSum::constant(1));
      for (const Factor& f : product_factors(*p, regime, tag.K)) oracle = oracle * from_factor(f);
      const EPoly tilde = tilde_cN1(*p, tag);
      CHECK(tilde.degree() == N + 1);
      CHECK(equiv_approx(tilde, oracle));
      CHECK(equiv_approx(spectral_polynomial(*p), oracle));
    }
  }
}

TEST_CASE("P3 product form holds exactly in leading terms") {
  const HeunParams p = p3();
  const CaseTag tag = classify(p);
  // (t1 t2)^-2 (E q^(lambda1-h1-h2) + t1 q^(3/2-l2-beta)) (E q^(1+lambda1-h1-h2) + t1 q^(1/2-h2))
  const EPoly f1 = EPoly::linear(QSum::monomial(1, Rational(-2), -1, -1), QSum::monomial(1, Rational(-2), 0, -1));
  const EPoly f2 = EPoly::linear(QSum::monomial(1, Rational(-1), -1, -1), QSum::monomial(1, Rational(-1, 2), 0, -1));
  CHECK(equiv_sim(spectral_polynomial(p), f1 * f2));
  CHECK(equiv_sim(tilde_cN1(p, tag), f1 * f2));
}

TEST_CASE("P1 and P2 product forms") {
  const HeunParams a = p1();
  const EPoly t1 = tilde_cN1(a, classify(a));
  CHECK(t1.degree() == 3);
  // Linear factor E q^(N + lambda1 - h1 - h2) + q^(1/2 - h2) times p_1.
  const auto fa = product_factors(a, Regime::R31);
  REQUIRE(fa.size() == 2);
  CHECK(fa[1][1] == QSum::monomial(1, Rational(2 - 2 + 4)));
  CHECK(fa[1][0] == QSum::monomial(1, Rational(-1, 2)));
  const HeunParams b = p2();
  CHECK(tilde_cN1(b, classify(b)).degree() == 2);
  CHECK(product_factors(b, Regime::R32).size() == 1);
}

TEST_CASE("predictions for the worked sets") {
  auto exps = [](const HeunParams& p) {
    std::vector<SignedExponent> out = expand(predict_roots(p, classify(p)));
    return out;
  };
  CHECK(exps(p1()) == std::vector<SignedExponent>{{-1, Rational(-9, 2)}, {-1, Rational(-7, 2)}, {-1, Rational(-5, 2)}});
  CHECK(exps(p2()) == std::vector<SignedExponent>{{-1, Rational(-1)}, {-1, Rational(0)}});
  CHECK(exps(p3()) == std::vector<SignedExponent>{{-1, Rational(0)}, {-1, Rational(1, 2)}});
  for (const auto& r : predict_roots(p3(), classify(p3()))) {
    CHECK(r.prefactor == PrefactorKind::T1);
    CHECK(r.multiplicity == 1);
    CHECK(r.sharp);
  }
  const auto p4_preds = predict_roots(p4(), classify(p4()));
  REQUIRE(p4_preds.size() == 2);
  for (const auto& r : p4_preds) {
    CHECK(r.d == 0);
    CHECK(r.multiplicity == 2);
    CHECK(r.prefactor == PrefactorKind::SqrtT1T2);
  }
}

TEST_CASE("pn_root_pair trichotomy") {
  const HeunParams a = p1();
  const auto [r1, r2] = pn_root_pair(a, 1, classify(a));
  CHECK(r1.sign == -1);
  CHECK(r2.sign == -1);
  std::vector<Rational> ds{r1.d, r2.d};
  std::sort(ds.begin(), ds.end());
  CHECK(ds == std::vector<Rational>{Rational(-7, 2), Rational(-5, 2)});

  const HeunParams d = p4();
  const auto [b1, b2] = pn_root_pair(d, 1, classify(d));
  CHECK(b1.d == balanced_exponent(d));
  CHECK(b2.d == balanced_exponent(d));
  CHECK(b1.sign * b2.sign == -1);
  CHECK(b1.prefactor == PrefactorKind::SqrtT1T2);
}

TEST_CASE("case lists: implementation against the reference lists") {
  ParamSampler sampler(34);
  int checked = 0;
  for (Regime regime : {Regime::R31, Regime::R32, Regime::R33}) {
    for (int N = regime == Regime::R33 ? 1 : 0; N <= 8; ++N) {
      for (int rep = 0; rep < 3; ++rep) {
        const auto p = sampler.sample(regime, N);
        REQUIRE(p);
        const CaseTag tag = classify(*p);
        const auto preds = predict_roots(*p, tag);
        int total = 0;
        for (const auto& r : preds) total += r.multiplicity;
        CHECK(total == N + 1);
        if (regime == Regime::R33 || N == 0) continue;
        const auto oracle = case_list(*p, regime);
        REQUIRE(oracle);
        CHECK(oracle->subcase == tag.subcase);
        CHECK(oracle->m == tag.m);
        CHECK(expand(preds) == oracle->roots);
        ++checked;
      }
    }
  }
  CHECK(checked >= 40);
}

TEST_CASE("case lists: predictions are the roots of the reference product") {
  ParamSampler sampler(35);
  for (Regime regime : {Regime::R31, Regime::R32, Regime::R33}) {
    for (int N = regime == Regime::R33 ? 1 : 0; N <= 8; ++N) {
      const auto p = sampler.sample(regime, N);
      REQUIRE(p);
      const CaseTag tag = classify(*p);
      const auto predicted = expand(predict_roots(*p, tag));
      const auto numeric = product_root_exponents(product_factors(*p, regime, tag.K));
      REQUIRE(numeric.size() == predicted.size());
      for (std::size_t i = 0; i < numeric.size(); ++i) {
        CHECK(numeric[i].sign == predicted[i].sign);
        CHECK(std::abs(numeric[i].d - to_double(predicted[i].d)) < 0.01);
      }
    }
  }
}

TEST_CASE("prefactor polynomial for P4 is s^4 - 3 s^2 + 1") {
  const HeunParams p = p4();
  const auto s = s_polynomial(p, spectral_polynomial(p), balanced_exponent(p));
  REQUIRE(s.size() == 5);
  const Rational lead = s[4];
  std::vector<Rational> monic;
  for (const Rational& c : s) monic.push_back(c / lead);
  CHECK(monic == std::vector<Rational>{1, 0, -3, 0, 1});

  const auto pref = multiplicity_prefactors(p, classify(p));
  REQUIRE(pref.size() == 4);
  const double golden = (std::sqrt(5.0) + 1) / 2;
  const std::vector<double> want{-golden, -1 / golden, 1 / golden, golden};
  for (std::size_t i = 0; i < 4; ++i) CHECK(pref[i].to_double() == doctest::Approx(want[i]).epsilon(1e-12));

  const auto refined = refine_predictions(p, predict_roots(p, classify(p)), pref);
  REQUIRE(refined.size() == 4);
  for (const auto& r : refined) {
    CHECK(r.multiplicity == 1);
    CHECK(r.sharp);
    REQUIRE(r.explicit_prefactor);
  }
}

TEST_CASE("prefactor polynomial scales with t1 t2") {
  RawParams raw = p4().raw;
  raw.t1 = Rational(2);
  raw.t2 = Rational(9, 2);
  const HeunParams p = derive(raw);
  const auto pref = multiplicity_prefactors(p, classify(p));
  REQUIRE(pref.size() == 4);
  const double golden = (std::sqrt(5.0) + 1) / 2;
  CHECK(pref[3].to_double() == doctest::Approx(3 * golden).epsilon(1e-12));
  CHECK(pref[2].to_double() == doctest::Approx(3 / golden).epsilon(1e-12));
}

TEST_CASE("no multiple predictions means no prefactor refinement") {
  CHECK(multiplicity_prefactors(p1(), classify(p1())).empty());
  CHECK(multiplicity_prefactors(p3(), classify(p3())).empty());
}

TEST_CASE("collision exponent is the strongest tiling") {
  ParamSampler sampler(36);
  for (Regime regime : {Regime::R31, Regime::R32}) {
    for (int N = 1; N <= 7; ++N) {
      const auto p = sampler.sample(regime, N);
      REQUIRE(p);
      for (int M = 1; M <= N + 1; ++M) {
        for (const auto& [kl, d] : tiling_minima(*p, regime, M)) {
          CHECK(collision_exponent(*p, regime, M, kl.first, kl.second) == d);
        }
      }
    }
  }
}

TEST_CASE("collisions appear exactly on the exclusion set") {
  // Sweep the governing quantity across half-integers while keeping N fixed.
  for (int M = 1; M <= 4; ++M) {
    for (int twice = -20; twice <= 4; ++twice) {
      RawParams raw = collision_params().raw;
      const Rational value(twice, 2);
      // 2h2 - l1 - l2 - beta = value through l1; alpha1 keeps N.
      raw.l1 = 2 * raw.h2 - raw.l2 - raw.beta - value;
      raw.alpha1 = raw.alpha2 - (2 * 3 + raw.h1 + raw.h2 - raw.l1 - raw.l2 - raw.beta + 2);
      HeunParams p;
      try {
        p = derive(raw);
      } catch (const ParameterError&) {
        continue;
      }
      CaseTag tag;
      tag.family = Regime::R31;
      const bool in_set = is_integer(value) && to_long(value) % 2 == 0 && value <= -2 && value >= -2 * M + 2;
      CHECK_MESSAGE(collision_check(p, M, tag).empty() == !in_set, "M=" << M << " value=" << to_string(value));
      const auto minima = tiling_minima(p, Regime::R31, M);
      bool brute = false;
      for (const auto& [kl, d] : minima) {
        for (const auto& [kl2, d2] : minima) {
          if (kl.second == kl2.second && kl.first < kl2.first && d == d2) brute = true;
        }
      }
      CHECK(brute == in_set);
    }
  }
  const HeunParams p = collision_params();
  CHECK_FALSE(collision_check(p, 2, classify(p)).empty());
  CHECK(collision_check(p1(), 3, classify(p1())).empty());
  CHECK(collision_check(p, 1, classify(p)).empty());
}

TEST_CASE("approximate recursions of the first two regimes") {
  ParamSampler sampler(37);
  for (int N = 1; N <= 8; ++N) {
    const auto p = sampler.sample(Regime::R31, N);
    REQUIRE(p);
    const auto exact = coefficients_exact(*p, N + 1);
    const auto factors = product_factors(*p, Regime::R31);
    for (int n = 1; 2 * n < N + 1; ++n) {
      CHECK(equiv_approx(exact[2 * n], exact[2 * n - 2] * from_factor(factors[n - 1])));
    }
    for (int n = 1; 2 * n < N; ++n) {
      const Rational shift = p->lambda1 - p->h1() - p->h2();
      const EPoly lin = EPoly::linear(QSum::monomial(1, 2 * n + shift), QSum::monomial(1, Rational(1, 2) - p->h2()));
      CHECK(equiv_approx(exact[2 * n + 1], exact[2 * n] * lin));
    }
  }
  for (int N = 1; N <= 8; ++N) {
    const auto p = sampler.sample(Regime::R32, N);
    REQUIRE(p);
    const auto exact = coefficients_exact(*p, N + 1);
    const Rational shift = p->lambda1 - p->h1() - p->h2();
    const Rational S = p->l1() + p->l2() + p->beta();
    for (int n = 2; n <= N + 1; ++n) {
      const Rational b1 = 2 * n - Rational(1, 2) - p->l2() - p->beta();
      const Factor f{QSum::monomial(1, b1 + b1 - 2) - QSum::monomial(1, 2 * n - 1 - S),
                     QSum::monomial(1, n - 1 + shift + b1 - 2) + QSum::monomial(1, n - 2 + shift + b1),
                     QSum::monomial(1, 2 * n - 3 + 2 * shift)};
      CHECK(equiv_approx(exact[n], exact[n - 2] * from_factor(f)));
    }
  }
}

TEST_CASE("boundary proximity warnings") {
  const HeunParams a = p1();
  const auto warn = boundary_proximity(a, Rational(1, 2));
  CHECK_FALSE(warn.empty());
  CHECK(boundary_proximity(a, Rational(1, 4)).empty());
}
