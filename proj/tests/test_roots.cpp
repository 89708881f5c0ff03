#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "qheun/errors.hpp"
#include "qheun/roots.hpp"
#include "random_params.hpp"

using namespace qheun;
using namespace qheun::testing;

namespace {

constexpr mpfr_prec_t kBits = 512;

Real real(const Rational& r, mpfr_prec_t bits = kBits) { return Real(r, bits); }

NumPoly poly(std::initializer_list<Rational> coeffs, mpfr_prec_t bits = kBits) {
  std::vector<Real> c;
  for (const Rational& r : coeffs) c.push_back(real(r, bits));
  return to_numpoly(std::move(c));
}

bool close(const Real& a, const Real& b, const char* rel) {
  return abs(a - b) <= abs(b) * Real(std::string(rel), kBits);
}

// max |p'(x)| on [lo, hi] bounded by sum j |a_j| r^(j-1), r = max(|lo|, |hi|).
Real derivative_bound(const NumPoly& p, const Real& lo, const Real& hi) {
  const Real r = abs(lo) > abs(hi) ? abs(lo) : abs(hi);
  Real acc(0L, p.bits);
  for (int j = p.degree(); j >= 1; --j) acc = acc * r + abs(p.coeffs[j]) * static_cast<long>(j);
  return acc;
}

}  // namespace

TEST_CASE("find_real_roots: constructed polynomials") {
  const auto r = find_real_roots(poly({-1, 0, 1}));
  REQUIRE(r.size() == 2);
  CHECK(close(r[0], Real(-1L, kBits), "1e-70"));
  CHECK(close(r[1], Real(1L, kBits), "1e-70"));

  // E (E - q)(E - q^2) at q = 1/10 = E^3 - 11/100 E^2 + 1/1000 E
  const auto z = find_real_roots(poly({0, Rational(1, 1000), Rational(-11, 100), 1}));
  REQUIRE(z.size() == 3);
  CHECK(z[0].is_zero());
  CHECK(close(z[1], real(Rational(1, 100)), "1e-70"));
  CHECK(close(z[2], real(Rational(1, 10)), "1e-70"));

  CHECK_THROWS_AS(find_real_roots(poly({1, 0, 1})), PrecisionError);
  CHECK_THROWS_AS(find_real_roots(poly({0})), DomainError);
}

TEST_CASE("find_real_roots: P3 at q = 1e-6") {
  const HeunParams p = p3();
  const auto r = find_real_roots(to_numpoly(spectral_polynomial(p), Rational(1, 1000000), p.t1(), p.t2(), kBits));
  REQUIRE(r.size() == 2);
  CHECK(r[0].to_double() == doctest::Approx(-1).epsilon(0.01));
  CHECK(r[1].to_double() == doctest::Approx(-1e-3).epsilon(0.01));
}

TEST_CASE("Sturm count over the Cauchy interval equals the degree") {
  ParamSampler sampler(41);
  for (Regime regime : {Regime::R31, Regime::R32, Regime::R33}) {
    for (int N = regime == Regime::R33 ? 1 : 0; N <= 8; ++N) {
      const auto p = sampler.sample(regime, N);
      REQUIRE(p);
      const EPoly c = spectral_polynomial(*p);
      for (const char* q : {"1/1000", "1/100000"}) {
        const NumPoly np = to_numpoly(c, parse_rational(q), p->t1(), p->t2(), 1024);
        const auto seq = sturm_sequence(np);
        const Real bound = cauchy_bound(np);
        CHECK(sturm_count(seq, -bound, bound) == N + 1);
        CHECK(count_real_roots(np) == N + 1);
      }
    }
  }
}

TEST_CASE("bisection halves the bracket and ends within the derivative bound") {
  const HeunParams p = p1();
  const NumPoly np = to_numpoly(spectral_polynomial(p), Rational(1, 1000), p.t1(), p.t2(), kBits);
  const auto roots = find_real_roots(np);
  REQUIRE(roots.size() == 3);
  for (const Real& root : roots) {
    Real lo = root * 2L;
    Real hi = root / 2L;
    REQUIRE(np.eval(lo).sign() != np.eval(hi).sign());
    std::vector<Real> widths;
    const Real found = refine_root(np, lo, hi, &widths);
    REQUIRE(widths.size() > 100);
    Real previous = hi - lo;
    // Exact halving up to the rounding of the midpoint near the root.
    for (const Real& w : widths) {
      CHECK(close(w, previous / 2L, "1e-60"));
      previous = w;
    }
    const Real width = widths.back();
    CHECK(abs(np.eval(found)) <= derivative_bound(np, found - width, found + width) * width);
    CHECK(close(found, root, "1e-70"));
  }
}

TEST_CASE("slope of a synthetic power law is exact") {
  const Rational q1(1, 1000), q2(1, 10000);
  auto root = [](const Rational& q) { return Real(-3L, kBits) * pow(Real(q, kBits), Rational(-5, 2)); };
  const auto est = pair_roots({root(q1)}, {root(q2)}, q1, q2);
  REQUIRE(est.size() == 1);
  CHECK(std::abs(est[0].slope + 2.5) < 1e-12);
}

TEST_CASE("slopes of the worked sets") {
  const Rational q1(1, 1000), q2(1, 10000);
  auto slopes = [&](const HeunParams& p) {
    std::vector<double> out;
    for (const auto& e : estimate_exponents(p, q1, q2, kBits)) out.push_back(e.slope);
    std::sort(out.begin(), out.end());
    return out;
  };
  const auto s1 = slopes(p1());
  REQUIRE(s1.size() == 3);
  CHECK(std::abs(s1[0] + 4.5) < 0.05);
  CHECK(std::abs(s1[1] + 3.5) < 0.05);
  CHECK(std::abs(s1[2] + 2.5) < 0.05);
  const auto s2 = slopes(p2());
  REQUIRE(s2.size() == 2);
  CHECK(std::abs(s2[0] + 1) < 0.05);
  CHECK(std::abs(s2[1]) < 0.05);
}

TEST_CASE("pair_roots rejects differing sign patterns") {
  const Rational q1(1, 1000), q2(1, 10000);
  CHECK_THROWS_WITH_AS(pair_roots({Real(-1L, kBits), Real(1L, kBits)}, {Real(-1L, kBits), Real(-2L, kBits)}, q1, q2),
                       doctest::Contains("matching ambiguous"), MatchError);
  CHECK_THROWS_AS(pair_roots({Real(-1L, kBits)}, {}, q1, q2), MatchError);
}

TEST_CASE("roots move continuously with q") {
  for (const HeunParams& p : {p1(), p2(), p3(), p4()}) {
    const EPoly c = spectral_polynomial(p);
    const Rational q(1, 1000);
    const Rational q_near = q * Rational(1000001, 1000000);
    const auto a = find_real_roots(to_numpoly(c, q, p.t1(), p.t2(), kBits));
    const auto b = find_real_roots(to_numpoly(c, q_near, p.t1(), p.t2(), kBits));
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(close(b[i], a[i], "1e-4"));
  }
}

TEST_CASE("matching the worked sets") {
  // Sharp prefactors need the smaller q pair; the 1% gate sees the q^(1/2)
  // correction at 1e-4.
  const Rational q1(1, 10000), q2(1, 1000000);
  const HeunParams p = p1();
  const auto preds = predict_roots(p, classify(p));
  auto est = to_root_estimates(estimate_exponents(p, q1, q2, kBits), q2);
  const MatchReport report = match_predictions(est, preds, p.t1(), p.t2(), 0.05, 0.01);
  CHECK(report.pass);
  REQUIRE(report.entries.size() == 3);
  for (const auto& e : report.entries) {
    CHECK(e.ok);
    CHECK(e.abs_exponent_err <= 0.05);
    CHECK(e.pred_sign == -1);
  }
  for (const auto& e : est) CHECK(e.matched);
}

TEST_CASE("mismatched predictions are reported, never silently accepted") {
  const Rational q1(1, 1000), q2(1, 10000);
  const HeunParams p = p1();
  auto preds = predict_roots(p, classify(p));
  // Rotate the exponents by one so that every pairing is off by at least 1.
  const Rational first = preds.front().d;
  for (std::size_t i = 0; i + 1 < preds.size(); ++i) preds[i].d = preds[i + 1].d;
  preds.back().d = first - 1;
  auto est = to_root_estimates(estimate_exponents(p, q1, q2, kBits), q2);
  const MatchReport report = match_predictions(est, preds, p.t1(), p.t2(), 0.05, 0.01);
  CHECK_FALSE(report.pass);
  int failed = 0;
  for (const auto& e : report.entries) failed += e.ok ? 0 : 1;
  CHECK(failed >= 1);

  auto flipped = predict_roots(p, classify(p));
  for (auto& r : flipped) r.sign = 1;
  auto est2 = to_root_estimates(estimate_exponents(p, q1, q2, kBits), q2);
  const MatchReport none = match_predictions(est2, flipped, p.t1(), p.t2(), 0.05, 0.01);
  CHECK_FALSE(none.pass);
  for (const auto& e : none.entries) CHECK_FALSE(e.prediction_index);

  auto short_list = predict_roots(p, classify(p));
  short_list.pop_back();
  CHECK_THROWS_AS(match_predictions(est2, short_list, p.t1(), p.t2(), 0.05, 0.01), MatchError);
}

TEST_CASE("precision doubles until every root is isolated") {
  const HeunParams p = p4();
  const RootSet rs = spectral_roots(spectral_polynomial(p), Rational(1, 1000000), p.t1(), p.t2(), 64, {}, 4096);
  CHECK(rs.roots.size() == 4);
  CHECK(rs.bits_used >= 64);
  CHECK(rs.bits_used <= 4096);
}
