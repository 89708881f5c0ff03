#include "qheun/rational.hpp"

#include <cctype>
#include <cstdlib>

#include "qheun/errors.hpp"

namespace qheun {

namespace {

[[noreturn]] void fail(std::string_view text, std::size_t pos, const std::string& why) {
  throw ParseError("invalid rational '" + std::string(text) + "': " + why, 1,
                   static_cast<int>(pos) + 1);
}

// Digits starting at pos; returns the end position.
std::size_t scan_digits(std::string_view s, std::size_t pos) {
  while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
  return pos;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  const std::string_view s = text.substr(begin, end - begin);
  if (s.empty()) fail(text, begin, "empty");

  std::size_t pos = 0;
  bool negative = false;
  if (s[pos] == '+' || s[pos] == '-') {
    negative = s[pos] == '-';
    ++pos;
  }
  const std::size_t int_begin = pos;
  pos = scan_digits(s, pos);
  std::string digits(s.substr(int_begin, pos - int_begin));

  if (pos < s.size() && s[pos] == '/') {
    if (digits.empty()) fail(text, begin + pos, "missing numerator");
    const std::size_t den_begin = pos + 1;
    const std::size_t den_end = scan_digits(s, den_begin);
    if (den_end == den_begin) fail(text, begin + den_begin, "missing denominator");
    if (den_end != s.size()) fail(text, begin + den_end, "unexpected character");
    mpz_class num(digits);
    mpz_class den(std::string(s.substr(den_begin, den_end - den_begin)));
    if (den == 0) fail(text, begin + den_begin, "zero denominator");
    Rational r(num, den);
    r.canonicalize();
    return negative ? Rational(-r) : r;
  }

  // Decimal with optional fraction and exponent.
  std::string frac;
  if (pos < s.size() && s[pos] == '.') {
    const std::size_t frac_begin = pos + 1;
    pos = scan_digits(s, frac_begin);
    frac = std::string(s.substr(frac_begin, pos - frac_begin));
  }
  if (digits.empty() && frac.empty()) fail(text, begin + int_begin, "expected digits");
  long exponent = 0;
  if (pos < s.size() && (s[pos] == 'e' || s[pos] == 'E')) {
    std::size_t epos = pos + 1;
    bool eneg = false;
    if (epos < s.size() && (s[epos] == '+' || s[epos] == '-')) {
      eneg = s[epos] == '-';
      ++epos;
    }
    const std::size_t eend = scan_digits(s, epos);
    if (eend == epos) fail(text, begin + epos, "missing exponent digits");
    if (eend - epos > 6) fail(text, begin + epos, "exponent too large");
    exponent = std::strtol(std::string(s.substr(epos, eend - epos)).c_str(), nullptr, 10);
    if (eneg) exponent = -exponent;
    pos = eend;
  }
  if (pos != s.size()) fail(text, begin + pos, "unexpected character");

  const std::string all_digits = digits + frac;
  mpz_class mantissa(all_digits.empty() ? std::string("0") : all_digits);
  exponent -= static_cast<long>(frac.size());
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(exponent < 0 ? -exponent : exponent));
  Rational r = exponent < 0 ? Rational(mantissa, scale) : Rational(mantissa * scale);
  r.canonicalize();
  return negative ? Rational(-r) : r;
}

std::string to_string(const Rational& r) {
  if (r.get_den() == 1) return r.get_num().get_str();
  return r.get_num().get_str() + "/" + r.get_den().get_str();
}

bool is_integer(const Rational& r) { return r.get_den() == 1; }

long to_long(const Rational& r) {
  if (!is_integer(r) || !r.get_num().fits_slong_p()) {
    throw DomainError("not a representable integer: " + to_string(r));
  }
  return r.get_num().get_si();
}

Rational pow(const Rational& base, int exponent) {
  if (exponent == 0) return Rational(1);
  if (base == 0 && exponent < 0) throw DomainError("zero to a negative power");
  const unsigned long e = static_cast<unsigned long>(exponent < 0 ? -exponent : exponent);
  mpz_class num;
  mpz_class den;
  mpz_pow_ui(num.get_mpz_t(), base.get_num_mpz_t(), e);
  mpz_pow_ui(den.get_mpz_t(), base.get_den_mpz_t(), e);
  Rational r = exponent < 0 ? Rational(den, num) : Rational(num, den);
  r.canonicalize();
  return r;
}

double to_double(const Rational& r) { return r.get_d(); }

}  // namespace qheun
