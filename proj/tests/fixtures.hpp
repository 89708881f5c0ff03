#pragma once

// Worked parameter sets shared by the unit and acceptance tests.

#include <doctest.h>

#include <string>

#include "qheun/spectral.hpp"

namespace qheun::testing {

inline Rational R(const char* text) { return parse_rational(text); }

inline RawParams raw_params(const char* h1, const char* h2, const char* l1, const char* l2, const char* a1,
                            const char* a2, const char* beta, const char* t1 = "1", const char* t2 = "1") {
  return RawParams{R(h1), R(h2), R(l1), R(l2), R(a1), R(a2), R(beta), R(t1), R(t2)};
}

inline HeunParams p1() { return derive(raw_params("-5", "1", "0", "1", "0", "1/2", "1/2")); }
inline HeunParams p2() { return derive(raw_params("0", "1", "1", "4", "0", "-1/2", "1/2")); }
inline HeunParams p3() { return derive(raw_params("0", "1", "1", "3", "0", "1/2", "1/2")); }
inline HeunParams p4() { return derive(raw_params("-1", "0", "8", "10", "1", "0", "-10")); }

inline std::string params_file(const RawParams& r) {
  std::string out;
  for (const char* name : kParamNames) out += std::string(name) + " = " + to_string(param_by_name(r, name)) + "\n";
  return out;
}

}  // namespace qheun::testing

namespace doctest {
template <>
struct StringMaker<qheun::QSum> {
  static String convert(const qheun::QSum& s) { return qheun::to_string(s).c_str(); }
};
}  // namespace doctest
