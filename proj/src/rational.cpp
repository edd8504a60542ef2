#include "ivmono/rational.hpp"

#include "ivmono/error.hpp"

#include <charconv>
#include <fmt/format.h>
#include <numeric>

namespace ivmono {

namespace {

__extension__ using wide = __int128;

Rational
make(wide num, wide den)
{
  if (den == 0)
    throw Error(ErrorKind::range_escape, "rational division by zero");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  wide a = num < 0 ? -num : num;
  wide b = den;
  while (b != 0) {
    wide r = a % b;
    a = b;
    b = r;
  }
  if (a > 1) {
    num /= a;
    den /= a;
  }
  constexpr wide lim = std::numeric_limits<std::int64_t>::max();
  if (num > lim || num < -lim || den > lim)
    throw Error(ErrorKind::range_escape, "rational arithmetic overflow");
  return Rational(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
}

std::int64_t
parse_int(std::string_view s)
{
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw Error(ErrorKind::config_invalid, fmt::format("'{}' is not an integer", s));
  return v;
}

} // namespace

Rational::Rational(std::int64_t num, std::int64_t den)
{
  if (den == 0)
    throw Error(ErrorKind::range_escape, "rational with zero denominator");
  std::int64_t g = std::gcd(num, den);
  if (g == 0)
    g = 1;
  num_ = num / g;
  den_ = den / g;
  if (den_ < 0) {
    num_ = -num_;
    den_ = -den_;
  }
}

Rational
Rational::parse(std::string_view text)
{
  if (auto slash = text.find('/'); slash != std::string_view::npos)
    return Rational(parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1)));

  bool negative = !text.empty() && text.front() == '-';
  if (negative || (!text.empty() && text.front() == '+'))
    text.remove_prefix(1);
  auto dot = text.find('.');
  std::string digits(text.substr(0, dot));
  std::int64_t den = 1;
  if (dot != std::string_view::npos) {
    auto frac = text.substr(dot + 1);
    if (frac.size() > 17)
      throw Error(ErrorKind::range_escape, fmt::format("'{}' has too many decimals", text));
    digits += frac;
    for (std::size_t i = 0; i < frac.size(); ++i)
      den *= 10;
  }
  if (digits.empty())
    throw Error(ErrorKind::config_invalid, "empty number");
  std::int64_t num = parse_int(digits);
  return Rational(negative ? -num : num, den);
}

std::string
Rational::to_string() const
{
  if (den_ == 1)
    return fmt::format("{}", num_);
  return fmt::format("{}/{}", num_, den_);
}

Rational
operator+(const Rational& a, const Rational& b)
{
  return make(wide(a.num_) * b.den_ + wide(b.num_) * a.den_, wide(a.den_) * b.den_);
}

Rational
operator-(const Rational& a, const Rational& b)
{
  return make(wide(a.num_) * b.den_ - wide(b.num_) * a.den_, wide(a.den_) * b.den_);
}

Rational
operator*(const Rational& a, const Rational& b)
{
  return make(wide(a.num_) * b.num_, wide(a.den_) * b.den_);
}

Rational
operator/(const Rational& a, const Rational& b)
{
  return make(wide(a.num_) * b.den_, wide(a.den_) * b.num_);
}

Rational
determinant(std::vector<std::vector<Rational>> m)
{
  const std::size_t n = m.size();
  for (const auto& row : m) {
    if (row.size() != n)
      throw Error(ErrorKind::not_square, "determinant of a non-square matrix");
  }
  Rational det(1);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    while (p < n && m[p][c].is_zero())
      ++p;
    if (p == n)
      return Rational(0);
    if (p != c) {
      std::swap(m[p], m[c]);
      det = -det;
    }
    det = det * m[c][c];
    for (std::size_t r = c + 1; r < n; ++r) {
      if (m[r][c].is_zero())
        continue;
      Rational f = m[r][c] / m[c][c];
      for (std::size_t k = c; k < n; ++k)
        m[r][k] = m[r][k] - f * m[c][k];
    }
  }
  return det;
}

} // namespace ivmono
