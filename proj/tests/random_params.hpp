#pragma once

// Seeded generator of admissible parameter sets inside a requested regime.

#include <optional>
#include <random>

#include "qheun/errors.hpp"
#include "qheun/ultra.hpp"

namespace qheun::testing {

class ParamSampler {
 public:
  explicit ParamSampler(std::uint64_t seed) : rng_(seed) {}

  /// Grid value in [lo, hi] with the given denominator.
  Rational grid(long lo, long hi, long den) {
    std::uniform_int_distribution<long> d(lo * den, hi * den);
    Rational r(d(rng_), den);
    r.canonicalize();
    return r;
  }

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  /// One admissible, classified parameter set in `regime` with the given N,
  /// or nullopt after `attempts` rejections.
  std::optional<HeunParams> sample(Regime regime, int N, int attempts = 20000) {
    for (int i = 0; i < attempts; ++i) {
      RawParams raw;
      const long den = 4 * uniform(1, 3);
      raw.h1 = grid(-6, 4, den);
      raw.h2 = raw.h1 + grid(0, 2 * N + 4, den) + Rational(1, den);
      raw.beta = -grid(0, 2 * N + 4, den) - Rational(1, 4);
      // Spread l1, l2 so that each regime is reachable for every N.
      switch (regime) {
        case Regime::R31: raw.l2 = raw.h2 + 1 - raw.beta - grid(0, 3, den) - Rational(1, den); break;
        case Regime::R32: raw.l2 = raw.h2 + 1 - raw.beta + 2 * N + grid(0, 4, den) + Rational(1, den); break;
        default: raw.l2 = raw.h2 + 1 - raw.beta + grid(0, 2 * N, den); break;
      }
      raw.l1 = raw.l2 - grid(0, regime == Regime::R31 ? 2 : 2 * N + 10, den) - Rational(1, den);
      raw.alpha2 = grid(-4, 4, den);
      // alpha1 fixes N = -lambda1 - alpha1.
      raw.alpha1 = raw.alpha2 - (2 * N + raw.h1 + raw.h2 - raw.l1 - raw.l2 - raw.beta + 2);
      raw.t1 = Rational(uniform(1, 9), uniform(1, 4));
      raw.t2 = Rational(uniform(1, 9), uniform(1, 4));
      raw.t1.canonicalize();
      raw.t2.canonicalize();
      try {
        HeunParams p = derive(raw);
        const CaseTag tag = classify(p);
        if (tag.regime == regime) return p;
      } catch (const ParameterError&) {
      }
    }
    return std::nullopt;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace qheun::testing
